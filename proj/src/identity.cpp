#include <credledger/error.hpp>
#include <credledger/identity.hpp>

#include <sodium.h>

#include <fstream>
#include <sstream>

#include <sys/stat.h>

namespace credledger
{
address address::from_public_key (std::span<std::uint8_t const> key)
{
	if (key.size () != 32)
	{
		throw error (error_code::invalid_key_length, "public key must be 32 bytes");
	}
	auto digest = sha256 (key);
	bytes_type bytes;
	std::copy (digest.end () - bytes.size (), digest.end (), bytes.begin ());
	return address (bytes);
}

address address::parse (std::string_view text)
{
	if (text.size () != 42 || text.substr (0, 2) != "0x")
	{
		throw error (error_code::malformed, "address must be 0x followed by 40 lowercase hex characters");
	}
	return address (array_from_hex<20> (text.substr (2)));
}

std::string address::to_string () const
{
	return "0x" + to_hex (bytes_m);
}

address derive_address (std::span<std::uint8_t const> key)
{
	return address::from_public_key (key);
}

keypair keypair::generate (std::optional<std::span<std::uint8_t const>> seed)
{
	std::array<std::uint8_t, crypto_sign_SEEDBYTES> seed_bytes;
	if (seed)
	{
		if (seed->size () != seed_bytes.size ())
		{
			throw error (error_code::invalid_seed_length, "invalid seed length");
		}
		std::copy (seed->begin (), seed->end (), seed_bytes.begin ());
	}
	else
	{
		random_fill (seed_bytes);
	}
	keypair result;
	crypto_sign_seed_keypair (result.public_m.data (), result.secret_m.data (), seed_bytes.data ());
	sodium_memzero (seed_bytes.data (), seed_bytes.size ());
	return result;
}

keypair keypair::from_secret (std::span<std::uint8_t const> secret)
{
	if (secret.size () != 64)
	{
		throw error (error_code::invalid_key_length, "secret key must be 64 bytes");
	}
	auto result = generate (secret.subspan (0, 32));
	if (!std::equal (result.public_m.begin (), result.public_m.end (), secret.begin () + 32))
	{
		throw error (error_code::malformed, "secret key public half does not match its seed");
	}
	return result;
}

keypair keypair::load (std::filesystem::path const & path)
{
	std::ifstream in (path);
	if (!in)
	{
		throw error (error_code::not_found, "cannot read key file " + path.string ());
	}
	std::string text;
	in >> text;
	auto secret = array_from_hex<64> (text);
	auto result = from_secret (secret);
	sodium_memzero (secret.data (), secret.size ());
	return result;
}

void keypair::save (std::filesystem::path const & path) const
{
	auto tmp = path;
	tmp += ".tmp";
	{
		auto old_mask = ::umask (077);
		std::ofstream out (tmp, std::ios::trunc);
		::umask (old_mask);
		if (!out)
		{
			throw error (error_code::storage_failure, "cannot write key file " + path.string ());
		}
		out << to_hex (secret_m) << '\n';
		if (!out.flush ())
		{
			throw error (error_code::storage_failure, "cannot write key file " + path.string ());
		}
	}
	std::filesystem::permissions (tmp, std::filesystem::perms::owner_read | std::filesystem::perms::owner_write);
	std::filesystem::rename (tmp, path);
}

signature keypair::sign (std::span<std::uint8_t const> message) const
{
	signature result;
	crypto_sign_detached (result.data (), nullptr, message.data (), message.size (), secret_m.data ());
	return result;
}

bool verify_signature (public_key const & key, std::span<std::uint8_t const> message, signature const & sig)
{
	return crypto_sign_verify_detached (sig.data (), message.data (), message.size (), key.data ()) == 0;
}

std::string_view payload_type (tx_payload const & payload)
{
	struct visitor
	{
		std::string_view operator() (payload::authorize_regulator const &) const
		{
			return "AuthorizeRegulator";
		}
		std::string_view operator() (payload::revoke_regulator const &) const
		{
			return "RevokeRegulator";
		}
		std::string_view operator() (payload::register_institution const &) const
		{
			return "RegisterInstitution";
		}
		std::string_view operator() (payload::deactivate_institution const &) const
		{
			return "DeactivateInstitution";
		}
		std::string_view operator() (payload::issue_certificate const &) const
		{
			return "IssueCertificate";
		}
		std::string_view operator() (payload::revoke_certificate const &) const
		{
			return "RevokeCertificate";
		}
	};
	return std::visit (visitor{}, payload);
}

json payload_to_json (tx_payload const & payload)
{
	json result = json::object ();
	result["type"] = payload_type (payload);
	std::visit (
	[&result] (auto const & p) {
		using T = std::decay_t<decltype (p)>;
		if constexpr (std::is_same_v<T, payload::authorize_regulator> || std::is_same_v<T, payload::revoke_regulator>)
		{
			result["regulator"] = p.regulator.to_string ();
		}
		else if constexpr (std::is_same_v<T, payload::register_institution>)
		{
			result["institution"] = p.institution.to_string ();
			result["name"] = p.name;
		}
		else if constexpr (std::is_same_v<T, payload::deactivate_institution>)
		{
			result["institution"] = p.institution.to_string ();
		}
		else if constexpr (std::is_same_v<T, payload::issue_certificate>)
		{
			result["cert_id"] = p.cert_id;
			result["cid"] = p.content.to_string ();
			result["metadata_hash"] = to_hex (p.metadata_hash);
		}
		else if constexpr (std::is_same_v<T, payload::revoke_certificate>)
		{
			result["cert_id"] = p.cert_id;
			result["reason"] = p.reason;
		}
	},
	payload);
	return result;
}

tx_payload payload_from_json (json const & value)
{
	auto type = field::string (value, "type");
	if (type == "AuthorizeRegulator" || type == "RevokeRegulator")
	{
		field::only (value, { "type", "regulator" });
		auto regulator = address::parse (field::string (value, "regulator"));
		if (type == "AuthorizeRegulator")
		{
			return payload::authorize_regulator{ regulator };
		}
		return payload::revoke_regulator{ regulator };
	}
	if (type == "RegisterInstitution")
	{
		field::only (value, { "type", "institution", "name" });
		return payload::register_institution{ address::parse (field::string (value, "institution")), field::string (value, "name") };
	}
	if (type == "DeactivateInstitution")
	{
		field::only (value, { "type", "institution" });
		return payload::deactivate_institution{ address::parse (field::string (value, "institution")) };
	}
	if (type == "IssueCertificate")
	{
		field::only (value, { "type", "cert_id", "cid", "metadata_hash" });
		return payload::issue_certificate{
			field::string (value, "cert_id"),
			cid::parse (field::string (value, "cid")),
			array_from_hex<32> (field::string (value, "metadata_hash"))
		};
	}
	if (type == "RevokeCertificate")
	{
		field::only (value, { "type", "cert_id", "reason" });
		return payload::revoke_certificate{ field::string (value, "cert_id"), field::string (value, "reason") };
	}
	throw error (error_code::malformed, "unknown payload type \"" + type + "\"");
}

std::string canonical_encode (tx_payload const & payload, address const & sender, std::uint64_t nonce, std::int64_t timestamp)
{
	json body = json::object ();
	body["nonce"] = nonce;
	body["payload"] = payload_to_json (payload);
	body["sender"] = sender.to_string ();
	body["timestamp"] = timestamp;
	return canonical_encode (body);
}

json signed_transaction::to_json () const
{
	json result = json::object ();
	result["nonce"] = nonce;
	result["payload"] = payload_to_json (payload);
	result["public_key"] = to_hex (key);
	result["sender"] = sender.to_string ();
	result["signature"] = to_hex (sig);
	result["timestamp"] = timestamp;
	return result;
}

signed_transaction signed_transaction::from_json (json const & value)
{
	field::only (value, { "nonce", "payload", "public_key", "sender", "signature", "timestamp" });
	signed_transaction result;
	result.nonce = field::uint (value, "nonce");
	result.payload = payload_from_json (field::require (value, "payload"));
	result.key = array_from_hex<32> (field::string (value, "public_key"));
	result.sender = address::parse (field::string (value, "sender"));
	result.sig = array_from_hex<64> (field::string (value, "signature"));
	result.timestamp = field::sint (value, "timestamp");
	return result;
}

signed_transaction sign_transaction (keypair const & signer, tx_payload payload, std::uint64_t nonce, std::int64_t timestamp)
{
	signed_transaction result;
	result.payload = std::move (payload);
	result.sender = signer.account ();
	result.nonce = nonce;
	result.timestamp = timestamp;
	result.key = signer.public_bytes ();
	result.sig = signer.sign (as_bytes (result.signing_bytes ()));
	return result;
}

bool verify_transaction (signed_transaction const & tx)
{
	try
	{
		if (derive_address (tx.key) != tx.sender)
		{
			return false;
		}
		return verify_signature (tx.key, as_bytes (tx.signing_bytes ()), tx.sig);
	}
	catch (error const &)
	{
		return false;
	}
}
}
