#pragma once

#include <credledger/cas.hpp>
#include <credledger/chainstate.hpp>
#include <credledger/identity.hpp>
#include <credledger/node.hpp>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace credledger::test
{
/// Fixed wall clock used wherever a test does not care about time.
constexpr std::int64_t t0 = 1736899200;

/// Deterministic key whose seed is 32 copies of `tag`.
keypair key (std::uint8_t tag);
/// Deterministic key from an arbitrary 64-bit value.
keypair key_from (std::uint64_t value);

/// Fresh directory under the system temp dir, removed on destruction.
class temp_dir
{
public:
	temp_dir ();
	~temp_dir ();
	temp_dir (temp_dir const &) = delete;
	temp_dir & operator= (temp_dir const &) = delete;

	std::filesystem::path const & path () const
	{
		return path_m;
	}
	std::filesystem::path operator/ (std::string const & child) const
	{
		return path_m / child;
	}

private:
	std::filesystem::path path_m;
};

/// A key plus the next nonce it will use.
struct actor
{
	explicit actor (keypair key_a) :
		key (std::move (key_a))
	{
	}
	keypair key;
	std::uint64_t next_nonce{ 0 };

	address account () const
	{
		return key.account ();
	}
	signed_transaction sign (tx_payload payload, std::int64_t timestamp = t0)
	{
		return sign_transaction (key, std::move (payload), next_nonce++, timestamp);
	}
};

metadata_document sample_metadata (address const & institution, std::string const & cert_id);
/// Issue payload whose cid and hash both commit to `canonical_bytes`.
payload::issue_certificate issue_payload (std::string const & cert_id, std::string const & canonical_bytes);

node_config config_for (std::filesystem::path const & dir, address const & government);

/**
 * A random but well-signed transaction sequence: every transaction has a
 * valid signature and a fresh nonce, while the payloads are a mix of
 * permitted and policy-violating actions over a small cast of actors.
 */
struct scenario
{
	address government;
	std::vector<signed_transaction> txs;
	/// Canonical metadata for every issue in `txs`.
	std::vector<std::string> blobs;
};

scenario make_scenario (std::uint64_t seed, std::size_t count);

/// Pairwise reduction written independently of the library.
hash256 reference_merkle_root (std::vector<hash256> level);

hash256 random_hash (std::mt19937_64 & rng);
std::string random_string (std::mt19937_64 & rng, std::size_t max_length);

/// Mutates exactly one field of a report document; the result never equals the input.
json mutate_report_field (json const & report, std::mt19937_64 & rng);

/// Reads a whole file as bytes.
std::string read_file (std::filesystem::path const & file);
void write_file (std::filesystem::path const & file, std::string const & bytes);
}
