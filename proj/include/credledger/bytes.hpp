#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace credledger
{
using byte_vector = std::vector<std::uint8_t>;
using hash256 = std::array<std::uint8_t, 32>;

std::string to_hex (std::span<std::uint8_t const> bytes);

/** Strict lowercase hex decode; throws error_code::malformed on odd length,
 *  uppercase or non-hex characters. */
byte_vector from_hex (std::string_view text);

template <std::size_t N>
std::array<std::uint8_t, N> array_from_hex (std::string_view text);

hash256 sha256 (std::span<std::uint8_t const> data);
hash256 sha256 (std::string_view data);

inline std::span<std::uint8_t const> as_bytes (std::string_view text)
{
	return { reinterpret_cast<std::uint8_t const *> (text.data ()), text.size () };
}

/// Random bytes from the OS CSPRNG.
void random_fill (std::span<std::uint8_t> out);
}
