#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>

namespace credledger
{
using json = nlohmann::json;

/**
 * Canonical text form shared by transactions, ledger records, state
 * snapshots, metadata documents and reports:
 *  - objects with keys sorted by their UTF-8 bytes
 *  - no insignificant whitespace
 *  - integers in shortest decimal form, no floating point values
 *  - strings as raw UTF-8 (only mandatory JSON escapes)
 *
 * Throws error_code::malformed if the value contains a float or invalid UTF-8.
 */
std::string canonical_encode (json const & value);

/// Parses JSON text without requiring canonical form. Throws malformed.
json parse_json (std::string_view text);

/// Parses text and requires it to be byte-identical to its own canonical form.
json parse_canonical (std::string_view text);

/// Field helpers used by the strict decoders. All throw error_code::malformed.
namespace field
{
	json const & require (json const & object, char const * key);
	std::string string (json const & object, char const * key);
	std::uint64_t uint (json const & object, char const * key);
	std::int64_t sint (json const & object, char const * key);
	bool boolean (json const & object, char const * key);
	/// Rejects any key outside `allowed`.
	void only (json const & object, std::initializer_list<char const *> allowed);
}
}
