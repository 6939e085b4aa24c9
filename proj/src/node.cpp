#include <credledger/error.hpp>
#include <credledger/node.hpp>

#include <chrono>
#include <fstream>
#include <iterator>
#include <mutex>

namespace credledger
{
std::int64_t system_clock_seconds ()
{
	return std::chrono::duration_cast<std::chrono::seconds> (std::chrono::system_clock::now ().time_since_epoch ()).count ();
}

void node_config::validate () const
{
	if (data_dir.empty ())
	{
		throw error (error_code::config_invalid, "data directory not set");
	}
	if (block_interval < 1)
	{
		throw error (error_code::config_invalid, "block interval must be at least 1");
	}
	if (max_clock_skew < 0)
	{
		throw error (error_code::config_invalid, "clock skew bound must be non-negative");
	}
}

json submit_result::to_json () const
{
	json list = json::array ();
	for (auto const & e : events)
	{
		list.push_back (e.to_json ());
	}
	return { { "events", list }, { "receipt", receipt.to_json () } };
}

json head_summary::to_json () const
{
	return {
		{ "block_hash", to_hex (block_hash) },
		{ "height", height },
		{ "pending", pending },
		{ "sealed_at", sealed_at }
	};
}

namespace
{
	std::string read_file (std::filesystem::path const & file)
	{
		std::ifstream in (file, std::ios::binary);
		if (!in)
		{
			throw error (error_code::storage_failure, "cannot read " + file.string ());
		}
		return { std::istreambuf_iterator<char> (in), std::istreambuf_iterator<char> () };
	}

	void write_atomically (std::filesystem::path const & file, std::string const & bytes)
	{
		auto tmp = file;
		tmp += ".tmp";
		{
			std::ofstream out (tmp, std::ios::binary | std::ios::trunc);
			out.write (bytes.data (), static_cast<std::streamsize> (bytes.size ()));
			if (!out.flush ())
			{
				throw error (error_code::storage_failure, "cannot write " + tmp.string ());
			}
		}
		std::error_code ec;
		std::filesystem::rename (tmp, file, ec);
		if (ec)
		{
			throw error (error_code::storage_failure, "cannot rename " + tmp.string () + ": " + ec.message ());
		}
	}
}

std::string encode_snapshot (std::uint64_t height, chain_state const & state)
{
	return canonical_encode ({ { "height", height }, { "state", state.to_json () }, { "state_root", to_hex (state.state_root ()) } });
}

state_snapshot load_snapshot (std::filesystem::path const & file)
{
	try
	{
		auto document = parse_canonical (read_file (file));
		field::only (document, { "height", "state", "state_root" });
		state_snapshot result;
		result.height = field::uint (document, "height");
		result.state = chain_state::from_json (field::require (document, "state"));
		if (to_hex (result.state.state_root ()) != field::string (document, "state_root"))
		{
			throw error (error_code::snapshot_mismatch, "snapshot state_root does not match its state");
		}
		return result;
	}
	catch (error const & e)
	{
		if (e.code () == error_code::snapshot_mismatch)
		{
			throw;
		}
		throw error (error_code::snapshot_mismatch, std::string ("unusable snapshot: ") + e.what ());
	}
}

node::node (node_config config) :
	config_m (std::move (config))
{
	config_m.validate ();
	if (!config_m.clock)
	{
		config_m.clock = system_clock_seconds;
	}
	std::error_code ec;
	std::filesystem::create_directories (config_m.data_dir, ec);
	if (ec || !std::filesystem::is_directory (config_m.data_dir))
	{
		throw error (error_code::config_invalid, "data directory " + config_m.data_dir.string () + " is not usable");
	}
	{
		auto probe = config_m.data_dir / ".write-probe";
		std::ofstream out (probe);
		if (!out)
		{
			throw error (error_code::config_invalid, "data directory " + config_m.data_dir.string () + " is not writable");
		}
		out.close ();
		std::filesystem::remove (probe, ec);
	}
	if (config_m.signing_key_path)
	{
		if (std::filesystem::exists (*config_m.signing_key_path))
		{
			try
			{
				signer_m = keypair::load (*config_m.signing_key_path);
			}
			catch (error const & e)
			{
				throw error (error_code::config_invalid, std::string ("signing key: ") + e.what ());
			}
		}
		else
		{
			signer_m = keypair::generate ();
			signer_m->save (*config_m.signing_key_path);
		}
	}

	auto government = load_genesis ();
	ledger_m.emplace (ledger_path (), config_m.sync_writes);
	if (ledger_m->discarded_bytes () != 0)
	{
		boot_notes_m.push_back ("discarded " + std::to_string (ledger_m->discarded_bytes ()) + " bytes of an interrupted ledger write");
	}
	store_m.emplace (config_m.data_dir / "blobs");
	state_m.init_genesis (government);
	if (ledger_m->block_count () == 0)
	{
		ledger_m->seal_block (now ());
	}
	else
	{
		replay ();
	}
}

address node::load_genesis ()
{
	auto file = genesis_path ();
	if (std::filesystem::exists (file))
	{
		address government;
		try
		{
			auto document = parse_canonical (read_file (file));
			field::only (document, { "government" });
			government = address::parse (field::string (document, "government"));
		}
		catch (error const & e)
		{
			throw error (error_code::corrupt_ledger, std::string ("genesis.json: ") + e.what ());
		}
		if (config_m.government && *config_m.government != government)
		{
			throw error (error_code::config_invalid, "configured government " + config_m.government->to_string () + " differs from genesis " + government.to_string ());
		}
		return government;
	}
	if (std::filesystem::exists (ledger_path ()) && std::filesystem::file_size (ledger_path ()) > 0)
	{
		throw error (error_code::corrupt_ledger, "ledger present but genesis.json missing");
	}
	if (!config_m.government)
	{
		throw error (error_code::config_invalid, "a government address is required to initialise a fresh data directory");
	}
	write_atomically (file, canonical_encode ({ { "government", config_m.government->to_string () } }));
	return *config_m.government;
}

void node::replay ()
{
	std::optional<state_snapshot> snap;
	if (std::filesystem::exists (snapshot_path ()))
	{
		try
		{
			snap = load_snapshot (snapshot_path ());
		}
		catch (error const & e)
		{
			boot_notes_m.push_back (std::string ("ignoring snapshot, replaying from genesis: ") + e.what ());
		}
	}
	auto head = *ledger_m->head_height ();
	if (snap && snap->height > head)
	{
		throw error (error_code::snapshot_mismatch, "snapshot height " + std::to_string (snap->height) + " is beyond ledger head " + std::to_string (head));
	}
	for (std::uint64_t height = 0; height <= head; ++height)
	{
		for (auto const & tx : ledger_m->block_transactions (height))
		{
			state_m.apply (tx, height);
		}
		if (snap && snap->height == height && snap->state.state_root () != state_m.state_root ())
		{
			throw error (error_code::snapshot_mismatch, "replayed state at height " + std::to_string (height) + " differs from snapshot");
		}
	}
}

std::int64_t node::now () const
{
	return config_m.clock ();
}

std::vector<event> node::seal_and_apply ()
{
	auto const & header = ledger_m->seal_block (now ());
	std::vector<event> events;
	for (auto const & tx : ledger_m->block_transactions (header.height))
	{
		auto produced = state_m.apply (tx, header.height);
		events.insert (events.end (), produced.begin (), produced.end ());
	}
	if (config_m.snapshot_every != 0 && header.height % config_m.snapshot_every == 0)
	{
		// The block is already durable; a failed snapshot only costs boot-time cross-checking.
		try
		{
			snapshot_locked ();
		}
		catch (error const &)
		{
		}
	}
	return events;
}

submit_result node::submit (signed_transaction const & tx)
{
	std::unique_lock lock (mutex_m);
	auto current = now ();
	auto skew = tx.timestamp > current ? tx.timestamp - current : current - tx.timestamp;
	if (skew > config_m.max_clock_skew)
	{
		throw error (error_code::clock_skew, "transaction timestamp is " + std::to_string (skew) + " s from node time");
	}
	submit_result result;
	result.receipt = ledger_m->append (tx);
	if (ledger_m->pending_count () >= config_m.block_interval)
	{
		result.events = seal_and_apply ();
		result.receipt = ledger_m->find_tx (result.receipt.tx_hash)->receipt;
	}
	return result;
}

std::vector<event> node::flush ()
{
	std::unique_lock lock (mutex_m);
	if (ledger_m->pending_count () == 0)
	{
		return {};
	}
	return seal_and_apply ();
}

void node::snapshot ()
{
	std::unique_lock lock (mutex_m);
	snapshot_locked ();
}

void node::snapshot_locked ()
{
	write_atomically (snapshot_path (), encode_snapshot (*ledger_m->head_height (), state_m));
}

role node::role_of (address const & account) const
{
	std::shared_lock lock (mutex_m);
	return state_m.role_of (account);
}

verify_result node::certificate (address const & issuer, std::string const & cert_id) const
{
	std::shared_lock lock (mutex_m);
	return state_m.verify_certificate (issuer, cert_id);
}

verification_report node::verify (verify_query const & q) const
{
	std::shared_lock lock (mutex_m);
	return credledger::verify (q, state_m, *store_m, signer_m ? &*signer_m : nullptr, *ledger_m->head_height (), now ());
}

cid node::put_metadata (std::span<std::uint8_t const> content)
{
	return store_m->put (content);
}

std::string node::get_metadata (cid const & id) const
{
	return store_m->get (id);
}

std::optional<block_header> node::block (std::uint64_t height) const
{
	std::shared_lock lock (mutex_m);
	auto const * header = ledger_m->block_at (height);
	if (header == nullptr)
	{
		return std::nullopt;
	}
	return *header;
}

std::optional<std::pair<signed_transaction, tx_receipt>> node::transaction (hash256 const & tx_hash) const
{
	std::shared_lock lock (mutex_m);
	auto found = ledger_m->find_tx (tx_hash);
	if (!found)
	{
		return std::nullopt;
	}
	return std::make_pair (*found->tx, found->receipt);
}

head_summary node::head () const
{
	std::shared_lock lock (mutex_m);
	auto const * header = ledger_m->head ();
	return { header->height, header->block_hash, header->sealed_at, ledger_m->pending_count () };
}

hash256 node::state_root () const
{
	std::shared_lock lock (mutex_m);
	return state_m.state_root ();
}

chain_stats node::stats () const
{
	std::shared_lock lock (mutex_m);
	return state_m.stats ();
}

chain_audit node::audit () const
{
	std::shared_lock lock (mutex_m);
	return ledger_m->verify_chain ();
}

std::optional<std::uint64_t> node::last_nonce (address const & account) const
{
	std::shared_lock lock (mutex_m);
	return ledger_m->last_nonce (account);
}

std::optional<public_key> node::node_key () const
{
	if (!signer_m)
	{
		return std::nullopt;
	}
	return signer_m->public_bytes ();
}

std::string node::state_document () const
{
	std::shared_lock lock (mutex_m);
	return canonical_encode (state_m.to_json ());
}
}
