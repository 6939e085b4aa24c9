#include <credledger/bytes.hpp>
#include <credledger/error.hpp>

#include <sodium.h>

namespace credledger
{
namespace
{
	struct sodium_init_guard
	{
		sodium_init_guard ()
		{
			if (sodium_init () < 0)
			{
				throw std::runtime_error ("libsodium initialisation failed");
			}
		}
	};

	sodium_init_guard const sodium_guard;

	int hex_value (char c)
	{
		if (c >= '0' && c <= '9')
		{
			return c - '0';
		}
		if (c >= 'a' && c <= 'f')
		{
			return c - 'a' + 10;
		}
		return -1;
	}
}

std::string_view to_string (error_code code)
{
	switch (code)
	{
		case error_code::malformed:
			return "Malformed";
		case error_code::invalid_seed_length:
			return "InvalidSeedLength";
		case error_code::invalid_key_length:
			return "InvalidKeyLength";
		case error_code::bad_signature:
			return "BadSignature";
		case error_code::nonce_replay:
			return "NonceReplay";
		case error_code::clock_skew:
			return "ClockSkew";
		case error_code::nothing_to_seal:
			return "NothingToSeal";
		case error_code::not_found:
			return "NotFound";
		case error_code::already_initialized:
			return "AlreadyInitialized";
		case error_code::too_large:
			return "TooLarge";
		case error_code::storage_failure:
			return "StorageFailure";
		case error_code::integrity_failure:
			return "IntegrityFailure";
		case error_code::schema_violation:
			return "SchemaViolation";
		case error_code::bad_component:
			return "BadComponent";
		case error_code::bad_scheme:
			return "BadScheme";
		case error_code::bad_version:
			return "BadVersion";
		case error_code::malformed_component:
			return "MalformedComponent";
		case error_code::node_unconfigured:
			return "NodeUnconfigured";
		case error_code::corrupt_ledger:
			return "CorruptLedger";
		case error_code::snapshot_mismatch:
			return "SnapshotMismatch";
		case error_code::config_invalid:
			return "ConfigInvalid";
	}
	return "Unknown";
}

error::error (error_code code_a, std::string const & message_a) :
	std::runtime_error (message_a),
	code_m (code_a)
{
}

std::string to_hex (std::span<std::uint8_t const> bytes)
{
	static char const digits[] = "0123456789abcdef";
	std::string result;
	result.reserve (bytes.size () * 2);
	for (auto b : bytes)
	{
		result.push_back (digits[b >> 4]);
		result.push_back (digits[b & 0x0f]);
	}
	return result;
}

byte_vector from_hex (std::string_view text)
{
	if (text.size () % 2 != 0)
	{
		throw error (error_code::malformed, "hex string has odd length");
	}
	byte_vector result;
	result.reserve (text.size () / 2);
	for (std::size_t i = 0; i < text.size (); i += 2)
	{
		auto hi = hex_value (text[i]);
		auto lo = hex_value (text[i + 1]);
		if (hi < 0 || lo < 0)
		{
			throw error (error_code::malformed, "invalid hex character");
		}
		result.push_back (static_cast<std::uint8_t> ((hi << 4) | lo));
	}
	return result;
}

template <std::size_t N>
std::array<std::uint8_t, N> array_from_hex (std::string_view text)
{
	if (text.size () != N * 2)
	{
		throw error (error_code::malformed, "expected " + std::to_string (N * 2) + " hex characters");
	}
	auto bytes = from_hex (text);
	std::array<std::uint8_t, N> result;
	std::copy (bytes.begin (), bytes.end (), result.begin ());
	return result;
}

template std::array<std::uint8_t, 20> array_from_hex<20> (std::string_view);
template std::array<std::uint8_t, 32> array_from_hex<32> (std::string_view);
template std::array<std::uint8_t, 64> array_from_hex<64> (std::string_view);

hash256 sha256 (std::span<std::uint8_t const> data)
{
	hash256 result;
	crypto_hash_sha256 (result.data (), data.data (), data.size ());
	return result;
}

hash256 sha256 (std::string_view data)
{
	return sha256 (as_bytes (data));
}

void random_fill (std::span<std::uint8_t> out)
{
	randombytes_buf (out.data (), out.size ());
}
}
