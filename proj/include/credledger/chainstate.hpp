#pragma once

#include <credledger/identity.hpp>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace credledger
{
enum class role
{
	government,
	regulator,
	institution,
	public_
};

std::string_view to_string (role r);

enum class certificate_status
{
	valid,
	revoked
};

std::string_view to_string (certificate_status status);

struct regulator_entry
{
	bool active{ false };
	address authorized_by;
	std::int64_t since{ 0 };
	bool operator== (regulator_entry const &) const = default;
};

struct institution_entry
{
	std::string name;
	bool active{ false };
	address registered_by;
	std::int64_t since{ 0 };
	bool operator== (institution_entry const &) const = default;
};

struct certificate_record
{
	std::string cert_id;
	address issuer;
	cid content;
	hash256 metadata_hash{};
	std::int64_t issued_at{ 0 };
	certificate_status status{ certificate_status::valid };
	std::optional<std::int64_t> revoked_at;
	std::optional<std::string> revocation_reason;

	json to_json () const;
	static certificate_record from_json (json const & value);
	bool operator== (certificate_record const &) const = default;
};

enum class event_kind
{
	regulator_authorized,
	regulator_revoked,
	institution_registered,
	institution_deactivated,
	certificate_issued,
	certificate_revoked,
	rejected
};

enum class reject_reason
{
	unauthorized,
	role_conflict,
	bad_name,
	not_found,
	duplicate_id,
	cid_mismatch,
	bad_id,
	already_revoked,
	bad_reason
};

std::string_view to_string (event_kind kind);
std::string_view to_string (reject_reason reason);

struct event
{
	event_kind kind{ event_kind::rejected };
	hash256 tx_hash{};
	std::uint64_t height{ 0 };
	address sender;
	/// Regulator or institution the event is about.
	std::optional<address> subject;
	std::optional<std::string> cert_id;
	std::optional<cid> content;
	std::optional<reject_reason> reason;

	json to_json () const;
};

struct chain_stats
{
	std::uint64_t issued_total{ 0 };
	std::uint64_t revoked_total{ 0 };
	std::uint64_t institutions_active{ 0 };
	std::uint64_t regulators_active{ 0 };
	struct per_institution_counts
	{
		std::uint64_t issued{ 0 };
		std::uint64_t revoked{ 0 };
		bool operator== (per_institution_counts const &) const = default;
	};
	std::map<address, per_institution_counts> per_institution;

	json to_json () const;
	bool operator== (chain_stats const &) const = default;
};

struct verify_result
{
	enum class status
	{
		valid,
		revoked,
		unknown
	} status{ status::unknown };
	std::optional<certificate_record> record;
};

/// Certificate ids: 1 to 128 characters from [A-Za-z0-9._-].
bool valid_cert_id (std::string_view cert_id);

constexpr std::size_t max_institution_name = 256;
constexpr std::size_t max_revocation_reason = 1024;

/**
 * Deterministic registry and certificate state machine. State changes only
 * through apply(); every other member is a pure read.
 */
class chain_state
{
public:
	/// Throws already_initialized on a second call.
	void init_genesis (address const & government);
	bool initialized () const
	{
		return government_m.has_value ();
	}
	std::optional<address> const & government () const
	{
		return government_m;
	}

	/// Applies one ledger-accepted transaction. Rule violations yield a single
	/// Rejected event and leave state untouched.
	std::vector<event> apply (signed_transaction const & tx, std::uint64_t height);

	role role_of (address const & account) const;
	verify_result verify_certificate (address const & issuer, std::string const & cert_id) const;
	/// Certificate whose metadata hash (equivalently CID digest) matches; the
	/// lowest (issuer, cert_id) wins if several issuers committed the same bytes.
	std::optional<std::pair<address, std::string>> find_by_digest (hash256 const & digest) const;

	std::map<address, regulator_entry> const & regulators () const
	{
		return regulators_m;
	}
	std::map<address, institution_entry> const & institutions () const
	{
		return institutions_m;
	}
	std::map<std::pair<address, std::string>, certificate_record> const & certificates () const
	{
		return certificates_m;
	}

	chain_stats stats () const;

	/// Full state as canonical JSON (maps keyed and ordered by address / cert id).
	json to_json () const;
	static chain_state from_json (json const & value);
	hash256 state_root () const;

private:
	event authorize_regulator (event base, address const & regulator, std::int64_t now);
	event revoke_regulator (event base, address const & regulator);
	event register_institution (event base, address const & institution, std::string const & name, std::int64_t now);
	event deactivate_institution (event base, address const & institution);
	event issue_certificate (event base, payload::issue_certificate const & p, std::int64_t now);
	event revoke_certificate (event base, payload::revoke_certificate const & p, std::int64_t now);

	bool active_regulator (address const & account) const;
	bool active_institution (address const & account) const;

	std::optional<address> government_m;
	std::map<address, regulator_entry> regulators_m;
	std::map<address, institution_entry> institutions_m;
	std::map<std::pair<address, std::string>, certificate_record> certificates_m;
	std::map<hash256, std::set<std::pair<address, std::string>>> digest_index_m;
	std::map<std::string, std::size_t> cert_id_uses_m;
	chain_stats stats_m;
};
}
