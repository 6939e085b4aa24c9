#pragma once

#include <credledger/bytes.hpp>
#include <credledger/canonical.hpp>
#include <credledger/cid.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <variant>

namespace credledger
{
using public_key = std::array<std::uint8_t, 32>;
using signature = std::array<std::uint8_t, 64>;

/// 20-byte account identity: the last 20 bytes of SHA-256(public key).
class address
{
public:
	using bytes_type = std::array<std::uint8_t, 20>;

	address () = default;
	explicit address (bytes_type const & bytes_a) :
		bytes_m (bytes_a)
	{
	}

	static address from_public_key (std::span<std::uint8_t const> key);
	/// Accepts exactly "0x" followed by 40 lowercase hex characters.
	static address parse (std::string_view text);

	bytes_type const & bytes () const
	{
		return bytes_m;
	}
	std::string to_string () const;

	auto operator<=> (address const &) const = default;

private:
	bytes_type bytes_m{};
};

address derive_address (std::span<std::uint8_t const> key);

/// Ed25519 signing key. Secret material is libsodium's 64-byte seed||public form.
class keypair
{
public:
	/// Seeded generation is deterministic; `seed` must be exactly 32 bytes.
	static keypair generate (std::optional<std::span<std::uint8_t const>> seed = std::nullopt);
	static keypair from_secret (std::span<std::uint8_t const> secret);

	/// Key file: 128 hex characters (64 bytes), written with mode 0600.
	static keypair load (std::filesystem::path const & path);
	void save (std::filesystem::path const & path) const;

	public_key const & public_bytes () const
	{
		return public_m;
	}
	std::array<std::uint8_t, 64> const & secret_bytes () const
	{
		return secret_m;
	}
	address account () const
	{
		return derive_address (public_m);
	}

	signature sign (std::span<std::uint8_t const> message) const;

private:
	public_key public_m{};
	std::array<std::uint8_t, 64> secret_m{};
};

bool verify_signature (public_key const & key, std::span<std::uint8_t const> message, signature const & sig);

namespace payload
{
	struct authorize_regulator
	{
		address regulator;
		bool operator== (authorize_regulator const &) const = default;
	};
	struct revoke_regulator
	{
		address regulator;
		bool operator== (revoke_regulator const &) const = default;
	};
	struct register_institution
	{
		address institution;
		std::string name;
		bool operator== (register_institution const &) const = default;
	};
	struct deactivate_institution
	{
		address institution;
		bool operator== (deactivate_institution const &) const = default;
	};
	struct issue_certificate
	{
		std::string cert_id;
		cid content;
		hash256 metadata_hash;
		bool operator== (issue_certificate const &) const = default;
	};
	struct revoke_certificate
	{
		std::string cert_id;
		std::string reason;
		bool operator== (revoke_certificate const &) const = default;
	};
}

using tx_payload = std::variant<
payload::authorize_regulator,
payload::revoke_regulator,
payload::register_institution,
payload::deactivate_institution,
payload::issue_certificate,
payload::revoke_certificate>;

/// Value stored under "type": "AuthorizeRegulator", "IssueCertificate", ...
std::string_view payload_type (tx_payload const & payload);
json payload_to_json (tx_payload const & payload);
/// Strict: exact key set per type, well-formed addresses, hashes and CIDs.
tx_payload payload_from_json (json const & value);

/// Bytes that are hashed and signed: {"nonce","payload","sender","timestamp"}.
std::string canonical_encode (tx_payload const & payload, address const & sender, std::uint64_t nonce, std::int64_t timestamp);

struct signed_transaction
{
	tx_payload payload;
	address sender;
	std::uint64_t nonce{ 0 };
	std::int64_t timestamp{ 0 };
	signature sig{};
	public_key key{};

	std::string signing_bytes () const
	{
		return canonical_encode (payload, sender, nonce, timestamp);
	}
	hash256 hash () const
	{
		return sha256 (signing_bytes ());
	}

	json to_json () const;
	static signed_transaction from_json (json const & value);

	bool operator== (signed_transaction const &) const = default;
};

signed_transaction sign_transaction (keypair const & signer, tx_payload payload, std::uint64_t nonce, std::int64_t timestamp);

/// True iff the signature covers the canonical encoding and the key hashes to `sender`.
bool verify_transaction (signed_transaction const & tx);
}
