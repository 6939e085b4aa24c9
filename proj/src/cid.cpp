#include <credledger/cid.hpp>
#include <credledger/error.hpp>

#include <algorithm>

namespace credledger
{
namespace
{
	char const alphabet[] = "abcdefghijklmnopqrstuvwxyz234567";

	int symbol_value (char c)
	{
		if (c >= 'a' && c <= 'z')
		{
			return c - 'a';
		}
		if (c >= '2' && c <= '7')
		{
			return c - '2' + 26;
		}
		return -1;
	}
}

std::string base32::encode (std::span<std::uint8_t const> data)
{
	std::string result;
	result.reserve ((data.size () * 8 + 4) / 5);
	std::uint32_t buffer = 0;
	int bits = 0;
	for (auto b : data)
	{
		buffer = (buffer << 8) | b;
		bits += 8;
		while (bits >= 5)
		{
			result.push_back (alphabet[(buffer >> (bits - 5)) & 0x1f]);
			bits -= 5;
		}
	}
	if (bits > 0)
	{
		result.push_back (alphabet[(buffer << (5 - bits)) & 0x1f]);
	}
	return result;
}

byte_vector base32::decode (std::string_view text)
{
	byte_vector result;
	result.reserve (text.size () * 5 / 8);
	std::uint32_t buffer = 0;
	int bits = 0;
	for (auto c : text)
	{
		auto value = symbol_value (c);
		if (value < 0)
		{
			throw error (error_code::malformed, "invalid base32 character");
		}
		buffer = (buffer << 5) | static_cast<std::uint32_t> (value);
		bits += 5;
		if (bits >= 8)
		{
			result.push_back (static_cast<std::uint8_t> ((buffer >> (bits - 8)) & 0xff));
			bits -= 8;
		}
	}
	// Leftover bits must be padding zeros and fewer than one full symbol's worth,
	// otherwise two texts would decode to the same bytes.
	if (bits >= 5 || (buffer & ((1u << bits) - 1)) != 0)
	{
		throw error (error_code::malformed, "non-canonical base32 tail");
	}
	return result;
}

cid cid::of (std::span<std::uint8_t const> content)
{
	return cid (sha256 (content));
}

cid cid::parse (std::string_view text)
{
	if (text.empty () || text.front () != 'b')
	{
		throw error (error_code::malformed, "CID text must use the base32 'b' multibase prefix");
	}
	auto bytes = base32::decode (text.substr (1));
	if (bytes.size () != 36)
	{
		throw error (error_code::malformed, "CID must be 36 bytes");
	}
	if (bytes[0] != version || bytes[1] != codec_raw || bytes[2] != hash_sha2_256 || bytes[3] != digest_length)
	{
		throw error (error_code::malformed, "unsupported CID prefix (expected v1/raw/sha2-256)");
	}
	hash256 digest;
	std::copy (bytes.begin () + 4, bytes.end (), digest.begin ());
	return cid (digest);
}

byte_vector cid::to_bytes () const
{
	byte_vector result{ version, codec_raw, hash_sha2_256, digest_length };
	result.insert (result.end (), digest_m.begin (), digest_m.end ());
	return result;
}

std::string cid::to_string () const
{
	return "b" + base32::encode (to_bytes ());
}
}
