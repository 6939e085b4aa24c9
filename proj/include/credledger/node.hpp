#pragma once

#include <credledger/cas.hpp>
#include <credledger/chainstate.hpp>
#include <credledger/ledger.hpp>
#include <credledger/verifier.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace credledger
{
struct node_config
{
	std::filesystem::path data_dir;
	std::string listen{ "127.0.0.1:8645" };
	/// Seal a block once this many transactions are pending.
	std::uint32_t block_interval{ 1 };
	/// Report signing key. Created on first boot if the file is missing.
	std::optional<std::filesystem::path> signing_key_path;
	/// Required for a fresh data directory; must match genesis otherwise.
	std::optional<address> government;
	std::int64_t max_clock_skew{ 86400 };
	/// Write a state snapshot every this many blocks (0 disables).
	std::uint64_t snapshot_every{ 100 };
	bool sync_writes{ true };
	/// Unix seconds; defaults to the system clock.
	std::function<std::int64_t ()> clock;

	/// Throws config_invalid.
	void validate () const;
};

std::int64_t system_clock_seconds ();

struct submit_result
{
	tx_receipt receipt;
	/// Events of every transaction applied by a block sealed during this submit.
	std::vector<event> events;

	json to_json () const;
};

struct head_summary
{
	std::uint64_t height{ 0 };
	hash256 block_hash{};
	std::int64_t sealed_at{ 0 };
	std::size_t pending{ 0 };

	json to_json () const;
};

struct state_snapshot
{
	std::uint64_t height{ 0 };
	chain_state state;
};

/// Canonical {"height","state","state_root"} document.
std::string encode_snapshot (std::uint64_t height, chain_state const & state);
/// Throws snapshot_mismatch when the file is unreadable, truncated, or its
/// recorded state_root disagrees with its content.
state_snapshot load_snapshot (std::filesystem::path const & file);

/**
 * One writer (submit, snapshot) and any number of concurrent readers. Boot
 * rebuilds all state by replaying the ledger; the snapshot, when present, is
 * only a cross-check of that replay.
 *
 * Data directory: genesis.json, ledger.bin, ledger.bin.head, state.snapshot, blobs/.
 */
class node
{
public:
	/// Throws config_invalid, corrupt_ledger or snapshot_mismatch.
	explicit node (node_config config);

	node (node const &) = delete;
	node & operator= (node const &) = delete;

	/// Throws bad_signature, nonce_replay or clock_skew; nothing is recorded then.
	submit_result submit (signed_transaction const & tx);
	/// Seals any pending transactions regardless of block_interval.
	std::vector<event> flush ();
	/// Atomically writes state.snapshot (temp file + rename).
	void snapshot ();

	role role_of (address const & account) const;
	verify_result certificate (address const & issuer, std::string const & cert_id) const;
	verification_report verify (verify_query const & q) const;
	cid put_metadata (std::span<std::uint8_t const> content);
	std::string get_metadata (cid const & id) const;
	std::optional<block_header> block (std::uint64_t height) const;
	std::optional<std::pair<signed_transaction, tx_receipt>> transaction (hash256 const & tx_hash) const;
	head_summary head () const;
	hash256 state_root () const;
	chain_stats stats () const;
	chain_audit audit () const;
	std::optional<std::uint64_t> last_nonce (address const & account) const;
	std::optional<public_key> node_key () const;
	/// Canonical JSON of the full chain state.
	std::string state_document () const;

	node_config const & config () const
	{
		return config_m;
	}
	/// Non-fatal observations made during boot (e.g. an ignored snapshot).
	std::vector<std::string> const & boot_notes () const
	{
		return boot_notes_m;
	}

	std::filesystem::path ledger_path () const
	{
		return config_m.data_dir / "ledger.bin";
	}
	std::filesystem::path snapshot_path () const
	{
		return config_m.data_dir / "state.snapshot";
	}
	std::filesystem::path genesis_path () const
	{
		return config_m.data_dir / "genesis.json";
	}

private:
	std::int64_t now () const;
	std::vector<event> seal_and_apply ();
	void snapshot_locked ();
	address load_genesis ();
	void replay ();

	node_config config_m;
	mutable std::shared_mutex mutex_m;
	std::optional<ledger> ledger_m;
	chain_state state_m;
	std::optional<blob_store> store_m;
	std::optional<keypair> signer_m;
	std::vector<std::string> boot_notes_m;
};
}
