#pragma once

#include <credledger/cas.hpp>
#include <credledger/chainstate.hpp>
#include <credledger/identity.hpp>

#include <optional>
#include <string>
#include <variant>

namespace credledger
{
namespace query
{
	struct by_id
	{
		address issuer;
		std::string cert_id;
	};
	/// The "certificate hash": SHA-256 of the canonical metadata bytes.
	struct by_hash
	{
		hash256 metadata_hash;
	};
	struct by_cid
	{
		cid content;
	};
	struct by_qr
	{
		std::string uri;
	};
}

using verify_query = std::variant<query::by_id, query::by_hash, query::by_cid, query::by_qr>;

json query_to_json (verify_query const & q);

enum class report_status
{
	valid,
	revoked,
	unknown,
	integrity_failure
};

std::string_view to_string (report_status status);

/**
 * Signed, portable statement of what this node saw for a query at a given
 * ledger height. The signature covers the canonical encoding of every other
 * field, so the document can be checked offline (".scvr" files).
 */
struct verification_report
{
	static constexpr std::uint64_t current_version = 1;

	std::uint64_t version{ current_version };
	json query_echo;
	report_status status{ report_status::unknown };
	std::optional<address> issuer;
	std::optional<std::string> institution_name;
	std::optional<std::string> cert_id;
	std::optional<cid> content;
	std::optional<hash256> metadata_hash;
	std::optional<json> metadata;
	std::optional<std::int64_t> issued_at;
	std::optional<std::int64_t> revoked_at;
	std::optional<std::string> revocation_reason;
	std::uint64_t ledger_height{ 0 };
	std::int64_t checked_at{ 0 };
	public_key node_public_key{};
	signature sig{};

	json to_json (bool with_signature = true) const;
	/// Strict decode; throws error_code::malformed.
	static verification_report from_json (json const & value);
	std::string signing_bytes () const
	{
		return canonical_encode (to_json (false));
	}
};

/**
 * Resolve -> fetch metadata -> recompute hash and CID -> cross-check record.
 * Lookup failures and integrity problems are statuses; the only error is a
 * missing signing key (node_unconfigured). Reads state, never mutates it.
 */
verification_report verify (verify_query const & q, chain_state const & state, blob_store const & store, keypair const * signer, std::uint64_t ledger_height, std::int64_t now);

bool check_report (verification_report const & report, std::optional<public_key> const & expected_node_key = std::nullopt);
/// Parses a report document, which must be in canonical form; any parse failure yields false.
bool check_report (std::string_view document, std::optional<public_key> const & expected_node_key = std::nullopt);

struct qr_components
{
	address issuer;
	std::string cert_id;
	cid content;
	bool operator== (qr_components const &) const = default;
};

/// "shikkha:verify?v=1&i=<issuer>&c=<percent-encoded cert_id>&d=<cid>"
std::string encode_qr_payload (address const & issuer, std::string const & cert_id, cid const & content);
/// Throws bad_scheme, bad_version or malformed_component; never anything else.
qr_components decode_qr_payload (std::string_view uri);

std::string percent_encode (std::string_view text);
}
