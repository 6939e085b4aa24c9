#include "support.hpp"

#include <credledger/api.hpp>
#include <credledger/cas.hpp>
#include <credledger/error.hpp>
#include <credledger/ledger.hpp>
#include <credledger/verifier.hpp>

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

using namespace credledger;
using steady = std::chrono::steady_clock;

namespace
{
struct outcome
{
	bool pass{ false };
	std::string detail;
};

double elapsed_ms (steady::time_point since)
{
	return std::chrono::duration<double, std::milli> (steady::now () - since).count ();
}

struct command_result
{
	int code{ -1 };
	std::string out;
};

command_result run_command (std::vector<std::string> const & args)
{
	std::string line;
	for (auto const & a : args)
	{
		line += "'" + a + "' ";
	}
	line += "2>/dev/null";
	command_result result;
	auto * pipe = popen (line.c_str (), "r");
	if (pipe == nullptr)
	{
		return result;
	}
	char buffer[4096];
	std::size_t got;
	while ((got = fread (buffer, 1, sizeof buffer, pipe)) > 0)
	{
		result.out.append (buffer, got);
	}
	auto status = pclose (pipe);
	result.code = WIFEXITED (status) ? WEXITSTATUS (status) : -1;
	return result;
}

/// A credledger-node child process serving on an ephemeral port.
class node_process
{
public:
	node_process (std::filesystem::path const & data_dir, std::string const & government)
	{
		int fds[2];
		if (pipe (fds) != 0)
		{
			return;
		}
		pid_m = fork ();
		if (pid_m == 0)
		{
			dup2 (fds[1], STDOUT_FILENO);
			if (auto quiet = open ("/dev/null", O_WRONLY); quiet >= 0)
			{
				dup2 (quiet, STDERR_FILENO);
			}
			close (fds[0]);
			close (fds[1]);
			execl (CREDLEDGER_NODE_BIN, CREDLEDGER_NODE_BIN, "--data-dir", data_dir.c_str (), "--listen", "127.0.0.1:0", "--government", government.c_str (), static_cast<char *> (nullptr));
			_exit (127);
		}
		close (fds[1]);
		std::string line;
		char c;
		while (read (fds[0], &c, 1) == 1 && c != '\n')
		{
			line.push_back (c);
		}
		close (fds[0]);
		auto prefix = std::string ("listening ");
		if (line.starts_with (prefix))
		{
			url = "http://" + line.substr (prefix.size ());
		}
	}

	~node_process ()
	{
		if (pid_m > 0)
		{
			kill (pid_m, SIGTERM);
			int status = 0;
			waitpid (pid_m, &status, 0);
		}
	}

	node_process (node_process const &) = delete;
	node_process & operator= (node_process const &) = delete;

	std::string url;

private:
	pid_t pid_m{ -1 };
};

outcome cli_lifecycle ()
{
	test::temp_dir dir;
	auto start = steady::now ();
	std::string const cli = CREDLEDGER_CLI_BIN;
	std::vector<std::string> addresses;
	for (auto [name, seed] : { std::pair{ "gov", '1' }, { "reg", '2' }, { "inst", '4' } })
	{
		auto made = run_command ({ cli, "--json", "keygen", "--seed", std::string (64, seed), "--out", (dir / (std::string (name) + ".key")).string () });
		if (made.code != 0)
		{
			return { false, "keygen failed" };
		}
		addresses.push_back (parse_json (made.out)["address"].get<std::string> ());
	}
	node_process node (dir / "data", addresses[0]);
	if (node.url.empty ())
	{
		return { false, "node did not start" };
	}
	auto metadata = dir / "cert.json";
	test::write_file (metadata, test::sample_metadata (address::parse (addresses[2]), "BSC-2025-001").to_json ().dump (2));
	auto client = [&] (std::vector<std::string> args) {
		args.insert (args.begin (), { cli, "--url", node.url });
		return run_command (args);
	};
	auto key = [&] (char const * name) { return (dir / (std::string (name) + ".key")).string (); };
	auto id = addresses[2] + "/BSC-2025-001";
	struct step
	{
		char const * name;
		std::vector<std::string> args;
		std::string expect;
	};
	std::vector<step> steps{
		{ "authorize regulator", { "gov", "authorize-regulator", "--key", key ("gov"), "--address", addresses[1] }, "event RegulatorAuthorized" },
		{ "register institution", { "reg", "register-institution", "--key", key ("reg"), "--address", addresses[2], "--name", "Dhaka University" }, "event InstitutionRegistered" },
		{ "issue", { "inst", "issue", "--key", key ("inst"), "--metadata", metadata.string () }, "event CertificateIssued" },
		{ "verify valid", { "verify", "--id", id }, "status Valid" },
		{ "revoke", { "inst", "revoke", "--key", key ("inst"), "--cert-id", "BSC-2025-001", "--reason", "issued in error" }, "event CertificateRevoked" },
		{ "verify revoked", { "verify", "--id", id }, "status Revoked" },
		{ "verify unknown", { "verify", "--id", addresses[2] + "/NO-SUCH-ID" }, "status Unknown" },
	};
	for (auto const & s : steps)
	{
		auto r = client (s.args);
		if (r.code != 0 || r.out.find (s.expect) == std::string::npos)
		{
			return { false, std::string (s.name) + " gave exit " + std::to_string (r.code) + ": " + r.out };
		}
	}
	auto ms = elapsed_ms (start);
	return { ms < 5000, std::to_string (static_cast<int> (ms)) + " ms" };
}

outcome authorization_matrix ()
{
	auto government = test::key (1);
	auto regulator = test::key (2);
	auto regulator2 = test::key (3);
	auto institution = test::key (4);
	auto institution2 = test::key (5);
	auto outsider = test::key (6);
	chain_state base;
	base.init_genesis (government.account ());
	std::map<address, std::uint64_t> nonces;
	std::uint64_t height = 1;
	auto apply = [&] (chain_state & state, keypair const & sender, tx_payload payload) {
		auto tx = sign_transaction (sender, std::move (payload), nonces[sender.account ()]++, test::t0);
		return state.apply (tx, height++).at (0);
	};
	auto issue = [] (keypair const & sender, std::string const & cert_id) -> tx_payload {
		return test::issue_payload (cert_id, canonicalize_metadata (test::sample_metadata (sender.account (), cert_id)));
	};
	apply (base, government, payload::authorize_regulator{ regulator.account () });
	apply (base, government, payload::authorize_regulator{ regulator2.account () });
	apply (base, regulator, payload::register_institution{ institution.account (), "Dhaka University" });
	apply (base, regulator, payload::register_institution{ institution2.account (), "BUET" });
	apply (base, institution, issue (institution, "OWN"));

	struct type_case
	{
		std::function<tx_payload (keypair const &)> make;
		event_kind allowed;
	};
	std::vector<type_case> types{
		{ [&] (keypair const &) -> tx_payload { return payload::authorize_regulator{ outsider.account () }; }, event_kind::regulator_authorized },
		{ [&] (keypair const &) -> tx_payload { return payload::revoke_regulator{ regulator2.account () }; }, event_kind::regulator_revoked },
		{ [&] (keypair const &) -> tx_payload { return payload::register_institution{ outsider.account (), "New College" }; }, event_kind::institution_registered },
		{ [&] (keypair const &) -> tx_payload { return payload::deactivate_institution{ institution2.account () }; }, event_kind::institution_deactivated },
		{ [&] (keypair const & sender) { return issue (sender, "NEW-1"); }, event_kind::certificate_issued },
		{ [&] (keypair const &) -> tx_payload { return payload::revoke_certificate{ "OWN", "error" }; }, event_kind::certificate_revoked },
	};
	std::vector<std::pair<keypair const *, std::set<std::size_t>>> roles{
		{ &government, { 0, 1 } },
		{ &regulator, { 2, 3 } },
		{ &institution, { 4, 5 } },
		{ &outsider, {} },
	};
	int matched = 0;
	int cells = 0;
	for (auto const & [sender, permitted] : roles)
	{
		for (std::size_t t = 0; t < types.size (); ++t)
		{
			auto state = base;
			auto saved = nonces;
			auto e = apply (state, *sender, types[t].make (*sender));
			nonces = saved;
			bool ok = permitted.contains (t) ? e.kind == types[t].allowed : (e.kind == event_kind::rejected && e.reason == reject_reason::unauthorized);
			matched += ok ? 1 : 0;
			++cells;
		}
	}
	return { matched == 24 && cells == 24, std::to_string (matched) + "/" + std::to_string (cells) + " cells match" };
}

outcome tamper_evidence ()
{
	test::temp_dir dir;
	auto government = test::key (1).account ();
	auto config = test::config_for (dir.path (), government);
	{
		node n (config);
		for (auto const & blob : test::make_scenario (7, 0).blobs)
		{
			n.put_metadata (as_bytes (blob));
		}
		auto s = test::make_scenario (7, 50);
		for (auto const & tx : s.txs)
		{
			n.submit (tx);
		}
	}
	auto ledger_file = dir / "ledger.bin";
	auto head_file = dir / "ledger.bin.head";
	auto original = test::read_file (ledger_file);
	auto original_head = test::read_file (head_file);
	if (!ledger::audit_bytes (original).ok)
	{
		return { false, "clean ledger does not audit" };
	}
	std::mt19937_64 rng (99);
	int audit_failures = 0;
	int boot_failures = 0;
	int const trials = 1000;
	for (int i = 0; i < trials; ++i)
	{
		auto mutated = original;
		auto at = rng () % mutated.size ();
		mutated[at] = static_cast<char> (mutated[at] ^ static_cast<char> (1 + rng () % 255));
		if (!ledger::audit_bytes (mutated).ok)
		{
			++audit_failures;
		}
		test::write_file (ledger_file, mutated);
		test::write_file (head_file, original_head);
		try
		{
			node n (config);
		}
		catch (error const & e)
		{
			boot_failures += e.code () == error_code::corrupt_ledger ? 1 : 0;
		}
	}
	test::write_file (ledger_file, original);
	std::ostringstream detail;
	detail << audit_failures << "/" << trials << " audits failed, " << boot_failures << "/" << trials << " boots CorruptLedger";
	return { audit_failures == trials && boot_failures == trials, detail.str () };
}

outcome replay_determinism ()
{
	int identical = 0;
	int const trials = 20;
	for (int trial = 0; trial < trials; ++trial)
	{
		auto s = test::make_scenario (1000 + trial, 200);
		std::vector<std::string> roots;
		for (int copy = 0; copy < 2; ++copy)
		{
			test::temp_dir dir;
			node n (test::config_for (dir.path (), s.government));
			api routes (n);
			for (auto const & blob : s.blobs)
			{
				routes.handle ("POST", "/v1/metadata", {}, blob);
			}
			for (auto const & tx : s.txs)
			{
				routes.handle ("POST", "/v1/tx", {}, canonical_encode (tx.to_json ()));
			}
			roots.push_back (routes.handle ("GET", "/v1/state-root", {}, "").body);
		}
		identical += roots[0] == roots[1] ? 1 : 0;
	}
	return { identical == trials, std::to_string (identical) + "/" + std::to_string (trials) + " trials byte-identical" };
}

outcome cid_conformance ()
{
	// Goldens from the Python multiformats package.
	std::vector<std::pair<std::string, std::string>> goldens{
		{ "", "bafkreihdwdcefgh4dqkjv67uzcmw7ojee6xedzdetojuzjevtenxquvyku" },
		{ "hello", "bafkreibm6jg3ux5qumhcn2b3flc3tyu6dmlb4xa7u5bf44yegnrjhc4yeq" },
		{ R"({"cert_id":"BSC-2025-001","degree":"BSc","extra":{},"field_of_study":"Computer Science","institution_address":"0x2222222222222222222222222222222222222222","institution_name":"Dhaka University","issue_date":"2025-01-15","schema":"shikkhachain/cert/v1","student_id_hash":"9be46381b30566fd61277386b9b163d3061ff4fad066328d4bf3028a811753e8","student_name":"Rahim Uddin"})",
		"bafkreid7jprucos2bpllp2zerjvrs3cdzqzkhbnrkprph33sn3b5e7hcci" },
		{ R"({"cert_id":"MSC/2024/17","degree":"BSc","extra":{"credits":160,"honours":true,"minor":"Mathematics"},"field_of_study":"Computer Science","grade":"A+","institution_address":"0x2222222222222222222222222222222222222222","institution_name":"Dhaka University","issue_date":"2025-01-15","schema":"shikkhachain/cert/v1","student_id_hash":"9be46381b30566fd61277386b9b163d3061ff4fad066328d4bf3028a811753e8","student_name":"রহিম উদ্দিন"})",
		"bafkreiet6xj5bwodktzkfj374pd37uuk34sadgqlbsaarq4j7u35pn522i" },
		{ R"({"cert_id":"PHD-0001","degree":"PhD","extra":{"tags":["a","b"],"thesis":{"pages":212,"title":"On \"quoted\" ledgers\\"}},"field_of_study":"Computer Science","institution_address":"0x2222222222222222222222222222222222222222","institution_name":"Dhaka University","issue_date":"2024-02-29","schema":"shikkhachain/cert/v1","student_id_hash":"9be46381b30566fd61277386b9b163d3061ff4fad066328d4bf3028a811753e8","student_name":"Rahim Uddin"})",
		"bafkreia2tfm4cgb26g27um5enxmc7erofw534ysgv6czazfrb3fo3bxzsi" },
	};
	int matched = 0;
	for (auto const & [bytes, expected] : goldens)
	{
		auto id = compute_cid (as_bytes (bytes));
		matched += id.to_string () == expected && cid::parse (expected) == id ? 1 : 0;
	}
	return { matched == static_cast<int> (goldens.size ()), std::to_string (matched) + "/" + std::to_string (goldens.size ()) + " goldens" };
}

outcome merkle_equivalence ()
{
	std::mt19937_64 rng (5);
	int agreed = 0;
	int total = 0;
	for (std::size_t n = 0; n <= 16; ++n)
	{
		for (int trial = 0; trial < 100; ++trial)
		{
			std::vector<hash256> leaves;
			for (std::size_t i = 0; i < n; ++i)
			{
				leaves.push_back (test::random_hash (rng));
			}
			agreed += merkle_root (leaves) == test::reference_merkle_root (leaves) ? 1 : 0;
			++total;
		}
	}
	return { agreed == total, std::to_string (agreed) + "/" + std::to_string (total) + " roots agree" };
}

outcome report_integrity ()
{
	test::temp_dir dir;
	test::actor government (test::key (1));
	test::actor regulator (test::key (2));
	test::actor institution (test::key (4));
	node n (test::config_for (dir.path (), government.account ()));
	n.submit (government.sign (payload::authorize_regulator{ regulator.account () }));
	n.submit (regulator.sign (payload::register_institution{ institution.account (), "Dhaka University" }));
	for (auto id : { "A-1", "A-2" })
	{
		auto bytes = canonicalize_metadata (test::sample_metadata (institution.account (), id));
		n.put_metadata (as_bytes (bytes));
		n.submit (institution.sign (test::issue_payload (id, bytes)));
	}
	n.submit (institution.sign (payload::revoke_certificate{ "A-2", "r" }));
	std::vector<json> reports;
	for (auto id : { "A-1", "A-2", "A-3" })
	{
		reports.push_back (n.verify (query::by_id{ institution.account (), id }).to_json ());
	}
	auto key = n.node_key ();
	int originals_ok = 0;
	int rejected = 0;
	int const trials = 500;
	std::mt19937_64 rng (17);
	for (int i = 0; i < trials; ++i)
	{
		auto const & original = reports[i % reports.size ()];
		originals_ok += check_report (canonical_encode (original), key) ? 1 : 0;
		auto mutated = test::mutate_report_field (original, rng);
		rejected += mutated != original && !check_report (canonical_encode (mutated), key) ? 1 : 0;
	}
	std::ostringstream detail;
	detail << rejected << "/" << trials << " mutations rejected, " << originals_ok << "/" << trials << " originals accepted";
	return { rejected == trials && originals_ok == trials, detail.str () };
}

outcome issue_latency ()
{
	test::temp_dir dir;
	test::actor government (test::key (1));
	test::actor regulator (test::key (2));
	test::actor institution (test::key (4));
	auto config = test::config_for (dir.path (), government.account ());
	config.sync_writes = true;
	config.clock = {};
	node n (config);
	http_server server (n);
	auto port = server.start ("127.0.0.1", 0);
	httplib::Client client ("127.0.0.1", port);
	auto post = [&] (std::string const & path, std::string const & body) {
		auto r = client.Post (path, body, "application/json");
		return r ? r->status : -1;
	};
	auto now = [] { return std::chrono::duration_cast<std::chrono::seconds> (std::chrono::system_clock::now ().time_since_epoch ()).count (); };
	post ("/v1/tx", canonical_encode (government.sign (payload::authorize_regulator{ regulator.account () }, now ()).to_json ()));
	post ("/v1/tx", canonical_encode (regulator.sign (payload::register_institution{ institution.account (), "Dhaka University" }, now ()).to_json ()));
	std::vector<double> samples;
	int const count = 1000;
	for (int i = 0; i < count; ++i)
	{
		auto cert_id = "LAT-" + std::to_string (i);
		auto bytes = canonicalize_metadata (test::sample_metadata (institution.account (), cert_id));
		if (post ("/v1/metadata", bytes) != 200)
		{
			return { false, "metadata upload failed" };
		}
		auto tx = canonical_encode (institution.sign (test::issue_payload (cert_id, bytes), now ()).to_json ());
		auto start = steady::now ();
		if (post ("/v1/tx", tx) != 200)
		{
			return { false, "submit failed at " + cert_id };
		}
		while (true)
		{
			auto r = client.Get ("/v1/verify?i=" + institution.account ().to_string () + "&c=" + cert_id);
			if (r && r->status == 200 && parse_json (r->body)["status"] == "Valid")
			{
				break;
			}
			if (elapsed_ms (start) > 10000)
			{
				return { false, cert_id + " never became verifiable" };
			}
		}
		samples.push_back (elapsed_ms (start));
	}
	server.stop ();
	std::sort (samples.begin (), samples.end ());
	auto median = samples[samples.size () / 2];
	auto p99 = samples[samples.size () * 99 / 100];
	std::ostringstream detail;
	detail.precision (2);
	detail << std::fixed << "median " << median << " ms, p99 " << p99 << " ms over " << count << " issues";
	return { median < 100 && p99 < 500, detail.str () };
}
}

int main ()
{
	std::vector<std::pair<char const *, std::function<outcome ()>>> criteria{
		{ "cli_lifecycle", cli_lifecycle },
		{ "authorization_matrix", authorization_matrix },
		{ "tamper_evidence", tamper_evidence },
		{ "replay_determinism", replay_determinism },
		{ "cid_conformance", cid_conformance },
		{ "merkle_equivalence", merkle_equivalence },
		{ "report_integrity", report_integrity },
		{ "issue_latency", issue_latency },
	};
	int failed = 0;
	for (auto const & [name, check] : criteria)
	{
		outcome result;
		try
		{
			result = check ();
		}
		catch (std::exception const & e)
		{
			result = { false, std::string ("exception: ") + e.what () };
		}
		failed += result.pass ? 0 : 1;
		std::cout << (result.pass ? "PASS " : "FAIL ") << name << ": " << result.detail << std::endl;
	}
	return failed == 0 ? 0 : 1;
}
