#pragma once

#include <credledger/bytes.hpp>

#include <compare>
#include <string>
#include <string_view>

namespace credledger
{
/**
 * Content identifier: CIDv1, multicodec `raw` (0x55), multihash sha2-256
 * (0x12, length 0x20). Text form is multibase base32 lowercase without
 * padding, prefixed with 'b'. Only this one shape exists, so the digest is
 * the whole value.
 */
class cid
{
public:
	static constexpr std::uint8_t version = 0x01;
	static constexpr std::uint8_t codec_raw = 0x55;
	static constexpr std::uint8_t hash_sha2_256 = 0x12;
	static constexpr std::uint8_t digest_length = 0x20;

	cid () = default;
	explicit cid (hash256 const & digest_a) :
		digest_m (digest_a)
	{
	}

	/// CID of exactly these bytes. No size limit here; the store enforces one.
	static cid of (std::span<std::uint8_t const> content);

	/// Strict parse of the text form. Throws error_code::malformed.
	static cid parse (std::string_view text);

	hash256 const & digest () const
	{
		return digest_m;
	}

	/// The 36 binary bytes: version, codec, hash code, length, digest.
	byte_vector to_bytes () const;
	std::string to_string () const;

	auto operator<=> (cid const &) const = default;

private:
	hash256 digest_m{};
};

namespace base32
{
	/// RFC 4648 alphabet, lowercase, no padding.
	std::string encode (std::span<std::uint8_t const> data);
	/// Rejects uppercase, padding, and non-zero trailing bits.
	byte_vector decode (std::string_view text);
}
}
