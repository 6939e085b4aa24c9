#include "support.hpp"

#include <credledger/error.hpp>

#include <fstream>
#include <iterator>

namespace credledger::test
{
keypair key (std::uint8_t tag)
{
	std::array<std::uint8_t, 32> seed;
	seed.fill (tag);
	return keypair::generate (std::span<std::uint8_t const> (seed));
}

keypair key_from (std::uint64_t value)
{
	auto seed = sha256 ("key:" + std::to_string (value));
	return keypair::generate (std::span<std::uint8_t const> (seed));
}

temp_dir::temp_dir ()
{
	std::array<std::uint8_t, 8> tag;
	random_fill (tag);
	path_m = std::filesystem::temp_directory_path () / ("credledger-test-" + to_hex (tag));
	std::filesystem::create_directories (path_m);
}

temp_dir::~temp_dir ()
{
	std::error_code ec;
	std::filesystem::remove_all (path_m, ec);
}

metadata_document sample_metadata (address const & institution, std::string const & cert_id)
{
	metadata_document doc;
	doc.cert_id = cert_id;
	doc.student_name = "Rahim Uddin";
	doc.student_id_hash = hash_student_id ("salt", cert_id);
	doc.degree = "BSc";
	doc.field_of_study = "Computer Science";
	doc.institution_address = institution.to_string ();
	doc.institution_name = "Dhaka University";
	doc.issue_date = "2025-01-15";
	return doc;
}

payload::issue_certificate issue_payload (std::string const & cert_id, std::string const & canonical_bytes)
{
	auto content = compute_cid (as_bytes (canonical_bytes));
	return { cert_id, content, content.digest () };
}

node_config config_for (std::filesystem::path const & dir, address const & government)
{
	node_config config;
	config.data_dir = dir;
	config.government = government;
	config.signing_key_path = dir / "node.key";
	config.sync_writes = false;
	config.clock = [] { return t0; };
	return config;
}

scenario make_scenario (std::uint64_t seed, std::size_t count)
{
	std::mt19937_64 rng (seed);
	scenario result;
	std::vector<actor> cast;
	// 0: government, 1-3: regulator candidates, 4-8: institution candidates, 9-10: public.
	for (std::uint64_t i = 0; i < 11; ++i)
	{
		cast.emplace_back (key_from (seed * 100 + i));
	}
	result.government = cast[0].account ();
	std::vector<std::pair<std::size_t, std::string>> issued;
	// Issues that took effect, tracked on a shadow state so revocations mostly hit real certificates.
	std::vector<std::pair<std::size_t, std::string>> live;
	chain_state shadow;
	shadow.init_genesis (result.government);
	std::size_t serial = 0;
	auto pick = [&rng] (std::size_t lo, std::size_t hi) {
		return std::uniform_int_distribution<std::size_t> (lo, hi) (rng);
	};
	for (std::size_t step = 0; step < count; ++step)
	{
		auto timestamp = t0 + static_cast<std::int64_t> (step);
		auto roll = pick (0, 99);
		std::size_t who;
		tx_payload payload;
		if (roll < 10)
		{
			// Government mostly authorizes, sometimes revokes, sometimes misfires at an institution.
			who = pick (0, 9) == 0 ? pick (1, 10) : 0;
			auto target = cast[pick (1, 5)].account ();
			if (pick (0, 4) == 0)
			{
				payload = payload::revoke_regulator{ target };
			}
			else
			{
				payload = payload::authorize_regulator{ target };
			}
		}
		else if (roll < 25)
		{
			who = pick (0, 10) < 9 ? pick (1, 3) : pick (0, 10);
			auto target = cast[pick (3, 9)].account ();
			if (pick (0, 5) == 0)
			{
				payload = payload::deactivate_institution{ target };
			}
			else
			{
				payload = payload::register_institution{ target, "Institution " + std::to_string (pick (0, 9)) };
			}
		}
		else if (roll < 80 || issued.empty ())
		{
			who = pick (0, 10) < 9 ? pick (4, 8) : pick (0, 10);
			std::string cert_id;
			if (!issued.empty () && pick (0, 9) == 0)
			{
				cert_id = issued[pick (0, issued.size () - 1)].second;
			}
			else
			{
				cert_id = "C-" + std::to_string (serial++);
			}
			auto bytes = canonicalize_metadata (sample_metadata (cast[who].account (), cert_id));
			auto p = issue_payload (cert_id, bytes);
			if (pick (0, 19) == 0)
			{
				p.metadata_hash = sha256 ("wrong");
			}
			result.blobs.push_back (bytes);
			issued.emplace_back (who, cert_id);
			payload = p;
		}
		else
		{
			auto const & pool = !live.empty () && pick (0, 3) != 0 ? live : issued;
			auto const & [issuer, cert_id] = pool[pick (0, pool.size () - 1)];
			who = pick (0, 9) < 8 ? issuer : pick (0, 10);
			payload = payload::revoke_certificate{ cert_id, "reason " + std::to_string (step) };
		}
		result.txs.push_back (cast[who].sign (payload, timestamp));
		auto events = shadow.apply (result.txs.back (), step + 1);
		if (!events.empty () && events.front ().kind == event_kind::certificate_issued)
		{
			live.emplace_back (who, issued.back ().second);
		}
	}
	return result;
}

hash256 reference_merkle_root (std::vector<hash256> level)
{
	if (level.empty ())
	{
		return sha256 (std::string_view{});
	}
	do
	{
		if (level.size () % 2 == 1)
		{
			level.push_back (level.back ());
		}
		std::vector<hash256> next;
		for (std::size_t i = 0; i < level.size (); i += 2)
		{
			std::string joined;
			joined.append (reinterpret_cast<char const *> (level[i].data ()), 32);
			joined.append (reinterpret_cast<char const *> (level[i + 1].data ()), 32);
			next.push_back (sha256 (joined));
		}
		level = std::move (next);
	} while (level.size () > 1);
	return level[0];
}

hash256 random_hash (std::mt19937_64 & rng)
{
	hash256 out;
	for (auto & b : out)
	{
		b = static_cast<std::uint8_t> (rng ());
	}
	return out;
}

std::string random_string (std::mt19937_64 & rng, std::size_t max_length)
{
	auto length = std::uniform_int_distribution<std::size_t> (0, max_length) (rng);
	std::string out;
	for (std::size_t i = 0; i < length; ++i)
	{
		out.push_back (static_cast<char> (std::uniform_int_distribution<int> (0x20, 0x7e) (rng)));
	}
	return out;
}

namespace
{
	json mutate_value (json const & value, std::mt19937_64 & rng)
	{
		switch (value.type ())
		{
			case json::value_t::string:
			{
				auto text = value.get<std::string> ();
				if (text.empty () || rng () % 3 == 0)
				{
					return text + "x";
				}
				auto at = rng () % text.size ();
				text[at] = text[at] == 'a' ? 'b' : 'a';
				return text;
			}
			case json::value_t::number_unsigned:
				return value.get<std::uint64_t> () + 1 + rng () % 1000;
			case json::value_t::number_integer:
				return value.get<std::int64_t> () - 1 - static_cast<std::int64_t> (rng () % 1000);
			case json::value_t::boolean:
				return !value.get<bool> ();
			case json::value_t::object:
			{
				if (value.empty ())
				{
					return json{ { "k", "v" } };
				}
				auto copy = value;
				auto it = std::next (copy.begin (), static_cast<std::ptrdiff_t> (rng () % copy.size ()));
				*it = mutate_value (*it, rng);
				return copy;
			}
			default:
				return "mutated";
		}
	}
}

json mutate_report_field (json const & report, std::mt19937_64 & rng)
{
	auto copy = report;
	switch (rng () % 10)
	{
		case 0:
		{
			// Drop a field.
			auto it = std::next (copy.begin (), static_cast<std::ptrdiff_t> (rng () % copy.size ()));
			copy.erase (it.key ());
			return copy;
		}
		case 1:
		{
			static char const * optional_fields[] = { "issuer", "institution_name", "cert_id", "cid", "metadata_hash", "revocation_reason", "revoked_at", "issued_at", "extra" };
			auto name = optional_fields[rng () % std::size (optional_fields)];
			if (!copy.contains (name))
			{
				copy[name] = "injected";
				return copy;
			}
			copy[name] = mutate_value (copy[name], rng);
			return copy;
		}
		case 2:
		{
			static char const * statuses[] = { "Valid", "Revoked", "Unknown", "IntegrityFailure" };
			auto current = copy["status"].get<std::string> ();
			std::string next;
			do
			{
				next = statuses[rng () % 4];
			} while (next == current);
			copy["status"] = next;
			return copy;
		}
		default:
		{
			auto it = std::next (copy.begin (), static_cast<std::ptrdiff_t> (rng () % copy.size ()));
			*it = mutate_value (*it, rng);
			return copy;
		}
	}
}

std::string read_file (std::filesystem::path const & file)
{
	std::ifstream in (file, std::ios::binary);
	return { std::istreambuf_iterator<char> (in), std::istreambuf_iterator<char> () };
}

void write_file (std::filesystem::path const & file, std::string const & bytes)
{
	std::ofstream out (file, std::ios::binary | std::ios::trunc);
	out.write (bytes.data (), static_cast<std::streamsize> (bytes.size ()));
}
}
