#include "support.hpp"

#include <credledger/api.hpp>
#include <credledger/cli.hpp>

#include <gtest/gtest.h>

#include <httplib.h>

#include <sstream>

using namespace credledger;

namespace
{
struct result
{
	int code;
	std::string out;
	std::string err;
};

// The client stamps transactions with wall-clock time.
node_config live_clock (node_config config)
{
	config.clock = {};
	return config;
}

struct fixture
{
	fixture () :
		n (live_clock (test::config_for (dir / "data", test::key (1).account ()))),
		server (n)
	{
		port = server.start ("127.0.0.1", 0);
		url = "http://127.0.0.1:" + std::to_string (port);
		for (auto [name, tag] : { std::pair{ "gov", 1 }, { "reg", 2 }, { "inst", 4 }, { "pub", 6 } })
		{
			test::key (static_cast<std::uint8_t> (tag)).save (dir / (std::string (name) + ".key"));
		}
	}

	result run (std::vector<std::string> args)
	{
		args.insert (args.begin (), { "--url", url });
		std::ostringstream out;
		std::ostringstream err;
		auto code = cli::run (args, out, err);
		return { code, out.str (), err.str () };
	}

	std::string key (char const * name) const
	{
		return (dir / (std::string (name) + ".key")).string ();
	}

	std::string http_get (std::string const & path)
	{
		httplib::Client client ("127.0.0.1", port);
		return client.Get (path)->body;
	}

	/// Writes a metadata document for the institution key and returns its path.
	std::string metadata (std::string const & cert_id, address const & institution)
	{
		auto path = dir / (cert_id + ".json");
		test::write_file (path, test::sample_metadata (institution, cert_id).to_json ().dump (2));
		return path.string ();
	}

	void setup ()
	{
		ASSERT_EQ (run ({ "gov", "authorize-regulator", "--key", key ("gov"), "--address", test::key (2).account ().to_string () }).code, 0);
		ASSERT_EQ (run ({ "reg", "register-institution", "--key", key ("reg"), "--address", test::key (4).account ().to_string (), "--name", "Dhaka University" }).code, 0);
	}

	test::temp_dir dir;
	node n;
	http_server server;
	int port{ 0 };
	std::string url;
};
}

TEST (cli, keygen_and_address)
{
	fixture f;
	auto seed = std::string (64, '0');
	auto made = f.run ({ "--json", "keygen", "--seed", seed, "--out", (f.dir / "new.key").string () });
	ASSERT_EQ (made.code, 0) << made.err;
	EXPECT_EQ (made.out, R"({"address":"0xa0d741628fc826e09475d341a780acde3c4b8070","public_key":"3b6a27bcceb6a42d62a3a8d02a6f0d73653215771de243a63ac048a18b59da29"})");
	EXPECT_EQ (f.run ({ "address", "--key", (f.dir / "new.key").string () }).out, "0xa0d741628fc826e09475d341a780acde3c4b8070\n");
	EXPECT_EQ (f.run ({ "keygen", "--out", (f.dir / "new.key").string () }).code, 2);
	EXPECT_EQ (f.run ({ "keygen", "--seed", "00", "--out", (f.dir / "short.key").string () }).code, 2);
}

TEST (cli, usage_errors)
{
	fixture f;
	EXPECT_EQ (f.run ({}).code, 2);
	EXPECT_EQ (f.run ({ "bogus" }).code, 2);
	EXPECT_EQ (f.run ({ "gov", "authorize-regulator", "--key", f.key ("gov") }).code, 2);
	EXPECT_EQ (f.run ({ "gov", "authorize-regulator", "--key", f.key ("gov"), "--address", "0xABC" }).code, 2);
	EXPECT_EQ (f.run ({ "gov", "authorize-regulator", "--key", (f.dir / "missing.key").string (), "--address", test::key (2).account ().to_string () }).code, 2);
	EXPECT_EQ (f.run ({ "verify" }).code, 2);
	EXPECT_EQ (f.run ({ "verify", "--id", "no-slash" }).code, 2);
	EXPECT_EQ (f.run ({ "verify", "--hash", "zz" }).code, 2);
}

TEST (cli, transport_error)
{
	fixture f;
	std::ostringstream out, err;
	auto code = cli::run ({ "--url", "http://127.0.0.1:1", "node", "head" }, out, err);
	EXPECT_EQ (code, 3);
	code = cli::run ({ "--url", "http://127.0.0.1:1", "verify", "--hash", std::string (64, 'a') }, out, err);
	EXPECT_EQ (code, 3);
}

TEST (cli, lifecycle_and_exit_codes)
{
	fixture f;
	f.setup ();
	auto inst = test::key (4).account ();
	auto issued = f.run ({ "inst", "issue", "--key", f.key ("inst"), "--metadata", f.metadata ("BSC-2025-001", inst) });
	ASSERT_EQ (issued.code, 0) << issued.err;
	EXPECT_NE (issued.out.find ("cert_id BSC-2025-001\n"), std::string::npos);
	EXPECT_NE (issued.out.find ("cid bafkrei"), std::string::npos);
	EXPECT_NE (issued.out.find ("tx "), std::string::npos);
	EXPECT_NE (issued.out.find ("event CertificateIssued"), std::string::npos);

	auto id = inst.to_string () + "/BSC-2025-001";
	auto valid = f.run ({ "verify", "--id", id, "--out", (f.dir / "r.scvr").string () });
	EXPECT_EQ (valid.code, 0);
	EXPECT_NE (valid.out.find ("status Valid"), std::string::npos);
	EXPECT_EQ (f.run ({ "report", "check", "--file", (f.dir / "r.scvr").string () }).code, 0);
	auto node_key = to_hex (*f.n.node_key ());
	EXPECT_EQ (f.run ({ "report", "check", "--file", (f.dir / "r.scvr").string (), "--node-key", node_key }).code, 0);
	EXPECT_EQ (f.run ({ "report", "check", "--file", (f.dir / "r.scvr").string (), "--node-key", std::string (64, '1') }).code, 1);
	auto tampered = test::read_file (f.dir / "r.scvr");
	tampered.replace (tampered.find ("\"Valid\""), 7, "\"Revoked\"");
	test::write_file (f.dir / "bad.scvr", tampered);
	EXPECT_EQ (f.run ({ "report", "check", "--file", (f.dir / "bad.scvr").string () }).code, 1);

	// Public key: recorded and rejected, exit 1.
	auto pub_issue = f.run ({ "inst", "issue", "--key", f.key ("pub"), "--metadata", f.metadata ("P-1", test::key (6).account ()) });
	EXPECT_EQ (pub_issue.code, 1);
	EXPECT_NE (pub_issue.out.find ("event Rejected Unauthorized"), std::string::npos);
	// Metadata naming another institution is refused locally.
	EXPECT_EQ (f.run ({ "inst", "issue", "--key", f.key ("pub"), "--metadata", f.metadata ("P-2", inst) }).code, 2);

	EXPECT_EQ (f.run ({ "inst", "revoke", "--key", f.key ("inst"), "--cert-id", "BSC-2025-001", "--reason", "fraud" }).code, 0);
	auto revoked = f.run ({ "--json", "verify", "--id", id });
	EXPECT_EQ (revoked.code, 0);
	EXPECT_EQ (parse_json (revoked.out)["status"], "Revoked");
	auto unknown = f.run ({ "verify", "--id", inst.to_string () + "/NOPE" });
	EXPECT_EQ (unknown.code, 0);
	EXPECT_NE (unknown.out.find ("status Unknown"), std::string::npos);

	// Replayed nonce: node answers 409, exit 1.
	EXPECT_EQ (f.run ({ "inst", "revoke", "--key", f.key ("inst"), "--cert-id", "BSC-2025-001", "--nonce", "0" }).code, 1);
	auto audit = f.run ({ "node", "audit" });
	EXPECT_EQ (audit.code, 0);
	EXPECT_EQ (audit.out, "ok true\n");
}

TEST (cli, json_output_matches_http_bodies)
{
	fixture f;
	f.setup ();
	auto inst = test::key (4).account ();
	f.run ({ "inst", "issue", "--key", f.key ("inst"), "--metadata", f.metadata ("BSC-2025-001", inst) });
	for (auto [command, path] : { std::pair{ "head", "/v1/head" }, { "stats", "/v1/stats" }, { "audit", "/v1/audit" }, { "state-root", "/v1/state-root" } })
	{
		EXPECT_EQ (f.run ({ "--json", "node", command }).out, f.http_get (path)) << command;
	}
	auto verify = f.run ({ "--json", "verify", "--id", inst.to_string () + "/BSC-2025-001" });
	auto fresh = f.http_get ("/v1/verify?i=" + inst.to_string () + "&c=BSC-2025-001");
	// checked_at may tick between the two calls; compare with it aligned.
	auto a = parse_json (verify.out);
	auto b = parse_json (fresh);
	EXPECT_EQ (canonical_encode (a), verify.out);
	EXPECT_EQ (a["status"], b["status"]);
	EXPECT_EQ (a["metadata"], b["metadata"]);

	auto tx = f.run ({ "--json", "inst", "revoke", "--key", f.key ("inst"), "--cert-id", "BSC-2025-001", "--reason", "r" });
	auto doc = parse_canonical (tx.out);
	EXPECT_EQ (f.http_get ("/v1/tx/" + doc["receipt"]["tx_hash"].get<std::string> ()).find ("RevokeCertificate") != std::string::npos, true);
	auto rejected = f.run ({ "--json", "inst", "revoke", "--key", f.key ("inst"), "--cert-id", "BSC-2025-001", "--nonce", "0" });
	EXPECT_EQ (parse_canonical (rejected.out)["error"], "NonceReplay");
}

TEST (cli, qr_commands)
{
	fixture f;
	auto issuer = test::key (4).account ().to_string ();
	auto cid_text = std::string ("bafkreibm6jg3ux5qumhcn2b3flc3tyu6dmlb4xa7u5bf44yegnrjhc4yeq");
	auto encoded = f.run ({ "qr", "encode", "--issuer", issuer, "--cert-id", "BSC 1", "--cid", cid_text });
	ASSERT_EQ (encoded.code, 0);
	auto uri = encoded.out.substr (0, encoded.out.size () - 1);
	EXPECT_EQ (uri, "shikkha:verify?v=1&i=" + issuer + "&c=BSC%201&d=" + cid_text);
	auto decoded = f.run ({ "--json", "qr", "decode", uri });
	EXPECT_EQ (decoded.out, R"({"cert_id":"BSC 1","cid":")" + cid_text + R"(","issuer":")" + issuer + "\"}");
	EXPECT_EQ (f.run ({ "qr", "decode", "https://x" }).code, 2);
	EXPECT_EQ (f.run ({ "verify", "--qr", uri }).code, 0);
}
