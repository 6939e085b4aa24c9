#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace credledger
{
/// Every failure the library reports through exceptions. The string form of
/// each code is what travels over the wire in `{"error": ...}` bodies.
enum class error_code
{
	malformed,
	invalid_seed_length,
	invalid_key_length,
	bad_signature,
	nonce_replay,
	clock_skew,
	nothing_to_seal,
	not_found,
	already_initialized,
	too_large,
	storage_failure,
	integrity_failure,
	schema_violation,
	bad_component,
	bad_scheme,
	bad_version,
	malformed_component,
	node_unconfigured,
	corrupt_ledger,
	snapshot_mismatch,
	config_invalid,
};

std::string_view to_string (error_code code);

class error : public std::runtime_error
{
public:
	error (error_code code_a, std::string const & message_a);

	error_code code () const noexcept
	{
		return code_m;
	}

private:
	error_code code_m;
};
}
