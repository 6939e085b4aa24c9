#pragma once

#include <credledger/identity.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace credledger
{
/**
 * Binary Merkle root over an ordered list of 32-byte leaves. Each level
 * hashes concatenated pairs; a trailing odd node is paired with itself.
 * The empty list commits to SHA-256 of the empty string.
 */
hash256 merkle_root (std::span<hash256 const> leaves);

struct block_header
{
	std::uint64_t height{ 0 };
	hash256 prev_hash{};
	std::vector<hash256> tx_hashes;
	hash256 merkle_root{};
	std::int64_t sealed_at{ 0 };
	hash256 block_hash{};

	/// SHA-256 over canonical {height, merkle_root, prev_hash, sealed_at, tx_hashes}.
	hash256 compute_hash () const;
	json to_json () const;
	static block_header from_json (json const & value);

	bool operator== (block_header const &) const = default;
};

struct tx_receipt
{
	hash256 tx_hash{};
	/// Absent while the transaction is pending.
	std::optional<std::uint64_t> height;
	/// Position within the block, or within the pending set while pending.
	std::uint32_t index{ 0 };

	json to_json () const;
};

enum class audit_reason
{
	prev_hash_mismatch,
	merkle_mismatch,
	block_hash_mismatch,
	tx_hash_mismatch,
	bad_signature,
	nonce_replay,
	malformed,
};

std::string_view to_string (audit_reason reason);

struct chain_audit
{
	bool ok{ true };
	std::optional<std::uint64_t> first_bad_height;
	std::optional<audit_reason> reason;
	std::string detail;

	json to_json () const;
};

/**
 * Single-writer append-only log. Accepted transactions wait in a pending set
 * until seal_block drains them into a block; at that point the transaction
 * records followed by the block header are written to the backing file in a
 * single append, so the file only ever holds whole blocks.
 *
 * File format: a sequence of records, each a 4-byte big-endian length
 * followed by that many bytes of canonical JSON, either {"tx":{...}} or
 * {"block":{...}}. Transactions precede the header of the block that seals
 * them.
 */
class ledger
{
public:
	/// In-memory ledger with no backing file.
	ledger () = default;

	/**
	 * Opens (or creates) a ledger file. Existing content is audited first;
	 * any audit failure throws error_code::corrupt_ledger.
	 *
	 * A sidecar "<file>.head" records the size and head block of the last
	 * durable seal. Bytes past that size which do not audit are the remains
	 * of an interrupted write and are cut off; anything wrong inside the
	 * committed size is corruption.
	 */
	explicit ledger (std::filesystem::path const & file, bool sync_writes = true);

	ledger (ledger const &) = delete;
	ledger & operator= (ledger const &) = delete;
	ledger (ledger &&) = default;
	ledger & operator= (ledger &&) = default;

	/// Throws bad_signature or nonce_replay; nothing is stored on error.
	tx_receipt append (signed_transaction const & tx);

	/// Throws nothing_to_seal when the pending set is empty and a block exists.
	block_header const & seal_block (std::int64_t now);

	/// Re-derives every hash and link from the stored record bytes.
	chain_audit verify_chain () const;

	/// Audits a serialized ledger file image.
	static chain_audit audit_bytes (std::string_view file_bytes);

	std::optional<std::uint64_t> head_height () const;
	block_header const * block_at (std::uint64_t height) const;
	block_header const * head () const;

	struct located_tx
	{
		signed_transaction const * tx;
		tx_receipt receipt;
	};
	std::optional<located_tx> find_tx (hash256 const & tx_hash) const;

	/// Transactions sealed in the given block, in order.
	std::vector<signed_transaction> const & block_transactions (std::uint64_t height) const;

	std::optional<std::uint64_t> last_nonce (address const & sender) const;
	std::size_t pending_count () const
	{
		return pending_m.size ();
	}
	std::size_t block_count () const
	{
		return blocks_m.size ();
	}

	/// Raw record bytes in commit order (length prefixes excluded).
	std::vector<std::string> const & records () const
	{
		return records_m;
	}

	/// Encodes one length-prefixed record.
	static std::string frame (std::string_view record);

	/// Bytes of an interrupted write discarded while opening the file.
	std::uint64_t discarded_bytes () const
	{
		return discarded_bytes_m;
	}
	std::filesystem::path head_path () const;

private:
	struct sealed_block
	{
		block_header header;
		std::vector<signed_transaction> transactions;
	};

	void write_records (std::string const & bytes, block_header const & header);
	void write_head (block_header const & header, std::uint64_t size) const;
	void load (std::string_view file_bytes);

	std::optional<std::filesystem::path> file_m;
	bool sync_writes_m{ true };
	std::uint64_t committed_size_m{ 0 };
	std::uint64_t discarded_bytes_m{ 0 };
	std::vector<sealed_block> blocks_m;
	std::vector<signed_transaction> pending_m;
	std::vector<std::string> records_m;
	std::map<address, std::uint64_t> nonces_m;
	// tx hash -> (height, index); pending entries carry no height.
	std::map<hash256, std::pair<std::optional<std::uint64_t>, std::uint32_t>> tx_index_m;
};
}
