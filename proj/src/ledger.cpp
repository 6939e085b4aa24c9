#include <credledger/error.hpp>
#include <credledger/ledger.hpp>

#include <fstream>
#include <iterator>

#include <fcntl.h>
#include <unistd.h>

namespace credledger
{
hash256 merkle_root (std::span<hash256 const> leaves)
{
	if (leaves.empty ())
	{
		return sha256 (std::string_view{});
	}
	std::vector<hash256> level (leaves.begin (), leaves.end ());
	std::array<std::uint8_t, 64> pair;
	// A single leaf is still paired with itself: the root is never a raw leaf.
	do
	{
		std::vector<hash256> next;
		next.reserve ((level.size () + 1) / 2);
		for (std::size_t i = 0; i < level.size (); i += 2)
		{
			auto const & left = level[i];
			auto const & right = i + 1 < level.size () ? level[i + 1] : level[i];
			std::copy (left.begin (), left.end (), pair.begin ());
			std::copy (right.begin (), right.end (), pair.begin () + 32);
			next.push_back (sha256 (pair));
		}
		level = std::move (next);
	} while (level.size () > 1);
	return level.front ();
}

namespace
{
	json hash_list (std::vector<hash256> const & hashes)
	{
		json result = json::array ();
		for (auto const & h : hashes)
		{
			result.push_back (to_hex (h));
		}
		return result;
	}

	hash256 const zero_hash{};
}

hash256 block_header::compute_hash () const
{
	json body = json::object ();
	body["height"] = height;
	body["merkle_root"] = to_hex (merkle_root);
	body["prev_hash"] = to_hex (prev_hash);
	body["sealed_at"] = sealed_at;
	body["tx_hashes"] = hash_list (tx_hashes);
	return sha256 (canonical_encode (body));
}

json block_header::to_json () const
{
	json result = json::object ();
	result["block_hash"] = to_hex (block_hash);
	result["height"] = height;
	result["merkle_root"] = to_hex (merkle_root);
	result["prev_hash"] = to_hex (prev_hash);
	result["sealed_at"] = sealed_at;
	result["tx_hashes"] = hash_list (tx_hashes);
	return result;
}

block_header block_header::from_json (json const & value)
{
	field::only (value, { "block_hash", "height", "merkle_root", "prev_hash", "sealed_at", "tx_hashes" });
	block_header result;
	result.block_hash = array_from_hex<32> (field::string (value, "block_hash"));
	result.height = field::uint (value, "height");
	result.merkle_root = array_from_hex<32> (field::string (value, "merkle_root"));
	result.prev_hash = array_from_hex<32> (field::string (value, "prev_hash"));
	result.sealed_at = field::sint (value, "sealed_at");
	auto const & hashes = field::require (value, "tx_hashes");
	if (!hashes.is_array ())
	{
		throw error (error_code::malformed, "tx_hashes must be an array");
	}
	for (auto const & h : hashes)
	{
		if (!h.is_string ())
		{
			throw error (error_code::malformed, "tx_hashes entries must be strings");
		}
		result.tx_hashes.push_back (array_from_hex<32> (h.get<std::string> ()));
	}
	return result;
}

json tx_receipt::to_json () const
{
	json result = json::object ();
	result["tx_hash"] = to_hex (tx_hash);
	result["index"] = index;
	result["status"] = height ? "sealed" : "pending";
	if (height)
	{
		result["height"] = *height;
	}
	return result;
}

std::string_view to_string (audit_reason reason)
{
	switch (reason)
	{
		case audit_reason::prev_hash_mismatch:
			return "PrevHashMismatch";
		case audit_reason::merkle_mismatch:
			return "MerkleMismatch";
		case audit_reason::block_hash_mismatch:
			return "BlockHashMismatch";
		case audit_reason::tx_hash_mismatch:
			return "TxHashMismatch";
		case audit_reason::bad_signature:
			return "BadSignature";
		case audit_reason::nonce_replay:
			return "NonceReplay";
		case audit_reason::malformed:
			return "Malformed";
	}
	return "Malformed";
}

json chain_audit::to_json () const
{
	json result = json::object ();
	result["ok"] = ok;
	if (first_bad_height)
	{
		result["first_bad_height"] = *first_bad_height;
	}
	if (reason)
	{
		result["reason"] = to_string (*reason);
	}
	if (!detail.empty ())
	{
		result["detail"] = detail;
	}
	return result;
}

namespace
{
	std::vector<std::string_view> split_frames (std::string_view bytes, std::string & problem)
	{
		std::vector<std::string_view> result;
		std::size_t offset = 0;
		while (offset < bytes.size ())
		{
			if (bytes.size () - offset < 4)
			{
				problem = "truncated length prefix at offset " + std::to_string (offset);
				break;
			}
			std::uint32_t length = 0;
			for (int i = 0; i < 4; ++i)
			{
				length = (length << 8) | static_cast<std::uint8_t> (bytes[offset + i]);
			}
			offset += 4;
			if (length == 0 || length > bytes.size () - offset)
			{
				problem = "bad record length at offset " + std::to_string (offset - 4);
				break;
			}
			result.push_back (bytes.substr (offset, length));
			offset += length;
		}
		return result;
	}

	chain_audit fail (std::uint64_t height, audit_reason reason, std::string detail)
	{
		chain_audit result;
		result.ok = false;
		result.first_bad_height = height;
		result.reason = reason;
		result.detail = std::move (detail);
		return result;
	}

	// Walks records in commit order. Transactions accumulate until a block
	// header claims them; the header must then list exactly their hashes.
	chain_audit audit_records (std::span<std::string_view const> records, bool allow_pending_tail)
	{
		std::uint64_t height = 0;
		hash256 prev = zero_hash;
		std::vector<hash256> unsealed;
		std::map<address, std::uint64_t> nonces;
		for (auto raw : records)
		{
			json record;
			try
			{
				record = parse_canonical (raw);
				if (!record.is_object () || record.size () != 1)
				{
					throw error (error_code::malformed, "record must hold exactly one of tx/block");
				}
			}
			catch (error const & e)
			{
				return fail (height, audit_reason::malformed, e.what ());
			}
			if (record.contains ("tx"))
			{
				signed_transaction tx;
				try
				{
					tx = signed_transaction::from_json (record["tx"]);
				}
				catch (error const & e)
				{
					return fail (height, audit_reason::malformed, e.what ());
				}
				if (!verify_transaction (tx))
				{
					return fail (height, audit_reason::bad_signature, "transaction signature does not verify");
				}
				auto last = nonces.find (tx.sender);
				if (last != nonces.end () && tx.nonce <= last->second)
				{
					return fail (height, audit_reason::nonce_replay, "transaction nonce is not increasing");
				}
				nonces[tx.sender] = tx.nonce;
				unsealed.push_back (tx.hash ());
			}
			else if (record.contains ("block"))
			{
				block_header header;
				try
				{
					header = block_header::from_json (record["block"]);
				}
				catch (error const & e)
				{
					return fail (height, audit_reason::malformed, e.what ());
				}
				if (header.height != height || header.prev_hash != prev)
				{
					return fail (height, audit_reason::prev_hash_mismatch, "block does not link to its predecessor");
				}
				if (header.tx_hashes != unsealed)
				{
					return fail (height, audit_reason::tx_hash_mismatch, "block tx_hashes differ from the stored transactions");
				}
				if (header.merkle_root != merkle_root (header.tx_hashes))
				{
					return fail (height, audit_reason::merkle_mismatch, "merkle root does not match tx_hashes");
				}
				if (header.block_hash != header.compute_hash ())
				{
					return fail (height, audit_reason::block_hash_mismatch, "block hash does not match header");
				}
				prev = header.block_hash;
				unsealed.clear ();
				++height;
			}
			else
			{
				return fail (height, audit_reason::malformed, "unknown record kind");
			}
		}
		if (!unsealed.empty () && !allow_pending_tail)
		{
			return fail (height, audit_reason::malformed, "transactions after the last block header");
		}
		return {};
	}
}

std::string ledger::frame (std::string_view record)
{
	std::string result;
	auto length = static_cast<std::uint32_t> (record.size ());
	result.push_back (static_cast<char> ((length >> 24) & 0xff));
	result.push_back (static_cast<char> ((length >> 16) & 0xff));
	result.push_back (static_cast<char> ((length >> 8) & 0xff));
	result.push_back (static_cast<char> (length & 0xff));
	result.append (record);
	return result;
}

chain_audit ledger::audit_bytes (std::string_view file_bytes)
{
	std::string problem;
	auto frames = split_frames (file_bytes, problem);
	auto result = audit_records (frames, false);
	if (result.ok && !problem.empty ())
	{
		std::uint64_t height = 0;
		for (auto raw : frames)
		{
			if (raw.starts_with ("{\"block\""))
			{
				++height;
			}
		}
		return fail (height, audit_reason::malformed, problem);
	}
	return result;
}

chain_audit ledger::verify_chain () const
{
	std::vector<std::string_view> views (records_m.begin (), records_m.end ());
	return audit_records (views, false);
}

namespace
{
	[[noreturn]] void corrupt (chain_audit const & audit)
	{
		throw error (error_code::corrupt_ledger, "ledger audit failed at height " + std::to_string (audit.first_bad_height.value_or (0)) + ": " + std::string (to_string (*audit.reason)) + " (" + audit.detail + ")");
	}

	struct committed_head
	{
		std::uint64_t size;
		std::uint64_t height;
		hash256 block_hash;
	};

	std::optional<committed_head> read_head (std::filesystem::path const & file)
	{
		if (!std::filesystem::exists (file))
		{
			return std::nullopt;
		}
		std::ifstream in (file, std::ios::binary);
		std::string text{ std::istreambuf_iterator<char> (in), std::istreambuf_iterator<char> () };
		try
		{
			auto doc = parse_canonical (text);
			field::only (doc, { "block_hash", "height", "size" });
			return committed_head{ field::uint (doc, "size"), field::uint (doc, "height"), array_from_hex<32> (field::string (doc, "block_hash")) };
		}
		catch (error const & e)
		{
			throw error (error_code::corrupt_ledger, file.string () + ": " + e.what ());
		}
	}

	void sync_fd (int fd, std::string const & what)
	{
		if (::fsync (fd) != 0)
		{
			throw error (error_code::storage_failure, "cannot sync " + what);
		}
	}
}

ledger::ledger (std::filesystem::path const & file, bool sync_writes) :
	file_m (file),
	sync_writes_m (sync_writes)
{
	std::string bytes;
	if (std::filesystem::exists (file))
	{
		std::ifstream in (file, std::ios::binary);
		if (!in)
		{
			throw error (error_code::storage_failure, "cannot read ledger " + file.string ());
		}
		bytes.assign (std::istreambuf_iterator<char> (in), std::istreambuf_iterator<char> ());
	}
	auto head = read_head (head_path ());
	auto audit = audit_bytes (bytes);
	if (!audit.ok)
	{
		if (!head || bytes.size () <= head->size)
		{
			corrupt (audit);
		}
		// Only the part after the last durable seal may be discarded.
		auto committed = audit_bytes (std::string_view (bytes).substr (0, head->size));
		if (!committed.ok)
		{
			corrupt (committed);
		}
		discarded_bytes_m = bytes.size () - head->size;
		bytes.resize (head->size);
		if (::truncate (file.c_str (), static_cast<off_t> (head->size)) != 0)
		{
			throw error (error_code::storage_failure, "cannot truncate interrupted write in " + file.string ());
		}
	}
	if (head && bytes.size () < head->size)
	{
		throw error (error_code::corrupt_ledger, "ledger is " + std::to_string (bytes.size ()) + " bytes but " + std::to_string (head->size) + " were committed");
	}
	load (bytes);
	committed_size_m = bytes.size ();
	if (head)
	{
		auto const * at = block_at (head->height);
		if (at == nullptr || at->block_hash != head->block_hash)
		{
			throw error (error_code::corrupt_ledger, "committed head block " + std::to_string (head->height) + " not found in ledger");
		}
	}
	if (!blocks_m.empty () && (!head || head->size != committed_size_m))
	{
		write_head (blocks_m.back ().header, committed_size_m);
	}
}

std::filesystem::path ledger::head_path () const
{
	auto result = file_m.value_or ("ledger");
	result += ".head";
	return result;
}

void ledger::load (std::string_view file_bytes)
{
	std::string problem;
	std::vector<signed_transaction> unsealed;
	for (auto raw : split_frames (file_bytes, problem))
	{
		auto record = parse_canonical (raw);
		records_m.emplace_back (raw);
		if (record.contains ("tx"))
		{
			auto tx = signed_transaction::from_json (record["tx"]);
			nonces_m[tx.sender] = tx.nonce;
			unsealed.push_back (std::move (tx));
		}
		else
		{
			sealed_block block{ block_header::from_json (record["block"]), std::move (unsealed) };
			unsealed.clear ();
			for (std::uint32_t i = 0; i < block.header.tx_hashes.size (); ++i)
			{
				tx_index_m[block.header.tx_hashes[i]] = { block.header.height, i };
			}
			blocks_m.push_back (std::move (block));
		}
	}
}

tx_receipt ledger::append (signed_transaction const & tx)
{
	if (!verify_transaction (tx))
	{
		throw error (error_code::bad_signature, "transaction signature does not verify");
	}
	auto last = last_nonce (tx.sender);
	if (last && tx.nonce <= *last)
	{
		throw error (error_code::nonce_replay, "nonce " + std::to_string (tx.nonce) + " is not above last accepted nonce " + std::to_string (*last));
	}
	auto hash = tx.hash ();
	auto index = static_cast<std::uint32_t> (pending_m.size ());
	pending_m.push_back (tx);
	nonces_m[tx.sender] = tx.nonce;
	tx_index_m[hash] = { std::nullopt, index };
	return { hash, std::nullopt, index };
}

block_header const & ledger::seal_block (std::int64_t now)
{
	if (pending_m.empty () && !blocks_m.empty ())
	{
		throw error (error_code::nothing_to_seal, "no pending transactions");
	}
	block_header header;
	header.height = blocks_m.size ();
	header.prev_hash = blocks_m.empty () ? zero_hash : blocks_m.back ().header.block_hash;
	for (auto const & tx : pending_m)
	{
		header.tx_hashes.push_back (tx.hash ());
	}
	header.merkle_root = merkle_root (header.tx_hashes);
	header.sealed_at = now;
	header.block_hash = header.compute_hash ();

	std::vector<std::string> new_records;
	std::string bytes;
	for (auto const & tx : pending_m)
	{
		json record = json::object ();
		record["tx"] = tx.to_json ();
		new_records.push_back (canonical_encode (record));
		bytes += frame (new_records.back ());
	}
	json record = json::object ();
	record["block"] = header.to_json ();
	new_records.push_back (canonical_encode (record));
	bytes += frame (new_records.back ());

	write_records (bytes, header);

	for (std::uint32_t i = 0; i < header.tx_hashes.size (); ++i)
	{
		tx_index_m[header.tx_hashes[i]] = { header.height, i };
	}
	for (auto & r : new_records)
	{
		records_m.push_back (std::move (r));
	}
	blocks_m.push_back ({ std::move (header), std::move (pending_m) });
	pending_m.clear ();
	return blocks_m.back ().header;
}

void ledger::write_records (std::string const & bytes, block_header const & header)
{
	if (!file_m)
	{
		return;
	}
	auto fd = ::open (file_m->c_str (), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
	if (fd < 0)
	{
		throw error (error_code::storage_failure, "cannot open ledger " + file_m->string ());
	}
	// Any failure leaves the file at its last committed size.
	auto roll_back = [&] (std::string const & message) {
		auto ignored = ::ftruncate (fd, static_cast<off_t> (committed_size_m));
		(void)ignored;
		::close (fd);
		throw error (error_code::storage_failure, message);
	};
	std::size_t written = 0;
	while (written < bytes.size ())
	{
		auto n = ::write (fd, bytes.data () + written, bytes.size () - written);
		if (n < 0)
		{
			if (errno == EINTR)
			{
				continue;
			}
			roll_back ("ledger write failed");
		}
		written += static_cast<std::size_t> (n);
	}
	if (sync_writes_m && ::fdatasync (fd) != 0)
	{
		roll_back ("ledger sync failed");
	}
	try
	{
		write_head (header, committed_size_m + bytes.size ());
	}
	catch (error const & e)
	{
		roll_back (e.what ());
	}
	::close (fd);
	committed_size_m += bytes.size ();
}

void ledger::write_head (block_header const & header, std::uint64_t size) const
{
	auto target = head_path ();
	auto tmp = target;
	tmp += ".tmp";
	auto text = canonical_encode ({ { "block_hash", to_hex (header.block_hash) }, { "height", header.height }, { "size", size } });
	auto fd = ::open (tmp.c_str (), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
	if (fd < 0)
	{
		throw error (error_code::storage_failure, "cannot write " + tmp.string ());
	}
	auto n = ::write (fd, text.data (), text.size ());
	if (n != static_cast<ssize_t> (text.size ()))
	{
		::close (fd);
		throw error (error_code::storage_failure, "cannot write " + tmp.string ());
	}
	if (sync_writes_m)
	{
		try
		{
			sync_fd (fd, tmp.string ());
		}
		catch (...)
		{
			::close (fd);
			throw;
		}
	}
	::close (fd);
	if (::rename (tmp.c_str (), target.c_str ()) != 0)
	{
		throw error (error_code::storage_failure, "cannot rename " + tmp.string ());
	}
	if (sync_writes_m)
	{
		auto dir = ::open (target.parent_path ().empty () ? "." : target.parent_path ().c_str (), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
		if (dir >= 0)
		{
			::fsync (dir);
			::close (dir);
		}
	}
}

std::optional<std::uint64_t> ledger::head_height () const
{
	if (blocks_m.empty ())
	{
		return std::nullopt;
	}
	return blocks_m.back ().header.height;
}

block_header const * ledger::block_at (std::uint64_t height) const
{
	return height < blocks_m.size () ? &blocks_m[height].header : nullptr;
}

block_header const * ledger::head () const
{
	return blocks_m.empty () ? nullptr : &blocks_m.back ().header;
}

std::optional<ledger::located_tx> ledger::find_tx (hash256 const & tx_hash) const
{
	auto existing = tx_index_m.find (tx_hash);
	if (existing == tx_index_m.end ())
	{
		return std::nullopt;
	}
	auto [height, index] = existing->second;
	auto const * tx = height ? &blocks_m[*height].transactions[index] : &pending_m[index];
	return located_tx{ tx, { tx_hash, height, index } };
}

std::vector<signed_transaction> const & ledger::block_transactions (std::uint64_t height) const
{
	if (height >= blocks_m.size ())
	{
		throw error (error_code::not_found, "no block at height " + std::to_string (height));
	}
	return blocks_m[height].transactions;
}

std::optional<std::uint64_t> ledger::last_nonce (address const & sender) const
{
	auto existing = nonces_m.find (sender);
	if (existing == nonces_m.end ())
	{
		return std::nullopt;
	}
	return existing->second;
}
}
