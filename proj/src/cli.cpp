#include <credledger/cas.hpp>
#include <credledger/cli.hpp>
#include <credledger/error.hpp>
#include <credledger/node.hpp>
#include <credledger/verifier.hpp>

#include <CLI11.hpp>
#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>

namespace credledger::cli
{
namespace
{
	struct usage_error : std::runtime_error
	{
		using std::runtime_error::runtime_error;
	};

	struct transport_error : std::runtime_error
	{
		using std::runtime_error::runtime_error;
	};

	/// A node answered with a non-2xx status.
	struct node_rejection : std::runtime_error
	{
		node_rejection (int status_a, std::string body_a) :
			std::runtime_error ("node rejected request"),
			status (status_a),
			body (std::move (body_a))
		{
		}
		int status;
		std::string body;
	};

	std::string read_text (std::string const & path)
	{
		std::ifstream in (path, std::ios::binary);
		if (!in)
		{
			throw usage_error ("cannot read " + path);
		}
		return { std::istreambuf_iterator<char> (in), std::istreambuf_iterator<char> () };
	}

	class client
	{
	public:
		explicit client (std::string url) :
			url_m (std::move (url)),
			http_m (url_m)
		{
			if (!http_m.is_valid ())
			{
				throw usage_error ("invalid node URL " + url_m);
			}
			http_m.set_connection_timeout (5, 0);
			http_m.set_read_timeout (30, 0);
		}

		std::string get (std::string const & path)
		{
			return check (http_m.Get (path));
		}

		std::string get (std::string const & path, httplib::Params const & params)
		{
			return check (http_m.Get (path, params, httplib::Headers{}));
		}

		std::string post (std::string const & path, std::string const & body, char const * content_type)
		{
			return check (http_m.Post (path, body, content_type));
		}

	private:
		std::string check (httplib::Result const & result)
		{
			if (!result)
			{
				throw transport_error ("cannot reach node at " + url_m + ": " + httplib::to_string (result.error ()));
			}
			if (result->status < 200 || result->status >= 300)
			{
				throw node_rejection (result->status, result->body);
			}
			return result->body;
		}

		std::string url_m;
		httplib::Client http_m;
	};

	struct options
	{
		std::string url;
		bool json_output{ false };
	};

	struct mutation_options
	{
		std::string key_file;
		std::optional<std::uint64_t> nonce;
	};

	keypair load_key (std::string const & path)
	{
		try
		{
			return keypair::load (path);
		}
		catch (error const & e)
		{
			throw usage_error ("key file " + path + ": " + e.what ());
		}
	}

	address parse_address_arg (std::string const & text)
	{
		try
		{
			return address::parse (text);
		}
		catch (error const &)
		{
			throw usage_error ("invalid address " + text + " (expected 0x + 40 lowercase hex)");
		}
	}

	// Signs and submits; prints the node's answer. Returns rejected when the
	// transaction was recorded but refused by policy.
	int submit (options const & opts, mutation_options const & m, tx_payload payload, std::ostream & out)
	{
		auto signer = load_key (m.key_file);
		client node (opts.url);
		std::uint64_t nonce;
		if (m.nonce)
		{
			nonce = *m.nonce;
		}
		else
		{
			auto reply = parse_json (node.get ("/v1/nonce/" + signer.account ().to_string ()));
			nonce = field::uint (reply, "next_nonce");
		}
		auto tx = sign_transaction (signer, std::move (payload), nonce, system_clock_seconds ());
		auto body = node.post ("/v1/tx", canonical_encode (tx.to_json ()), "application/json");
		auto reply = parse_json (body);
		auto tx_hash = to_hex (tx.hash ());
		bool refused = false;
		std::vector<json> mine;
		for (auto const & e : reply["events"])
		{
			if (e["tx_hash"] == tx_hash)
			{
				mine.push_back (e);
				refused = refused || e["type"] == "Rejected";
			}
		}
		if (opts.json_output)
		{
			out << body;
		}
		else
		{
			auto const & receipt = reply["receipt"];
			out << "tx " << tx_hash << '\n';
			if (receipt.contains ("height"))
			{
				out << "height " << receipt["height"].get<std::uint64_t> () << '\n';
			}
			else
			{
				out << "status pending\n";
			}
			for (auto const & e : mine)
			{
				out << "event " << e["type"].get<std::string> ();
				if (e.contains ("reason"))
				{
					out << ' ' << e["reason"].get<std::string> ();
				}
				out << '\n';
			}
		}
		return refused ? rejected : success;
	}

	void add_mutation_flags (CLI::App * command, mutation_options & m)
	{
		command->add_option ("--key", m.key_file, "Signing key file")->required ();
		command->add_option ("--nonce", m.nonce, "Override the nonce fetched from the node");
	}

	std::string fetch_report (options const & opts, httplib::Params const & params)
	{
		client node (opts.url);
		return node.get ("/v1/verify", params);
	}
}

int run (std::vector<std::string> const & args, std::ostream & out, std::ostream & err)
{
	CLI::App app{ "credledger: client for a credential ledger node", "credledger" };
	app.require_subcommand (1);
	options opts;
	if (auto const * env = std::getenv ("CREDLEDGER_URL"))
	{
		opts.url = env;
	}
	else
	{
		opts.url = "http://127.0.0.1:8645";
	}
	app.add_option ("--url", opts.url, "Node base URL (default $CREDLEDGER_URL)");
	app.add_flag ("--json", opts.json_output, "Print canonical JSON, byte-identical to the node's response");

	std::function<int ()> action;

	// keygen
	std::optional<std::string> seed_hex;
	std::string key_out;
	auto * keygen = app.add_subcommand ("keygen", "Create a key file");
	keygen->add_option ("--seed", seed_hex, "32-byte seed as 64 hex chars (deterministic)");
	keygen->add_option ("--out", key_out, "Key file to write (mode 0600)")->required ();
	keygen->callback ([&] {
		action = [&] {
			keypair key;
			try
			{
				if (seed_hex)
				{
					auto seed = from_hex (*seed_hex);
					key = keypair::generate (std::span<std::uint8_t const> (seed));
				}
				else
				{
					key = keypair::generate ();
				}
			}
			catch (error const & e)
			{
				throw usage_error (e.what ());
			}
			if (std::filesystem::exists (key_out))
			{
				throw usage_error ("refusing to overwrite " + key_out);
			}
			key.save (key_out);
			if (opts.json_output)
			{
				out << canonical_encode ({ { "address", key.account ().to_string () }, { "public_key", to_hex (key.public_bytes ()) } });
			}
			else
			{
				out << "address " << key.account ().to_string () << '\n'
					<< "public_key " << to_hex (key.public_bytes ()) << '\n';
			}
			return success;
		};
	});

	std::string show_key;
	auto * address_cmd = app.add_subcommand ("address", "Print the address of a key file");
	address_cmd->add_option ("--key", show_key, "Key file")->required ();
	address_cmd->callback ([&] {
		action = [&] {
			auto key = load_key (show_key);
			if (opts.json_output)
			{
				out << canonical_encode ({ { "address", key.account ().to_string () }, { "public_key", to_hex (key.public_bytes ()) } });
			}
			else
			{
				out << key.account ().to_string () << '\n';
			}
			return success;
		};
	});

	mutation_options m;
	std::string target;
	std::string name;

	auto * gov = app.add_subcommand ("gov", "Government actions");
	gov->require_subcommand (1);
	auto * authorize = gov->add_subcommand ("authorize-regulator", "Authorize a regulator");
	add_mutation_flags (authorize, m);
	authorize->add_option ("--address", target, "Regulator address")->required ();
	authorize->callback ([&] { action = [&] { return submit (opts, m, payload::authorize_regulator{ parse_address_arg (target) }, out); }; });
	auto * revoke_reg = gov->add_subcommand ("revoke-regulator", "Deactivate a regulator");
	add_mutation_flags (revoke_reg, m);
	revoke_reg->add_option ("--address", target, "Regulator address")->required ();
	revoke_reg->callback ([&] { action = [&] { return submit (opts, m, payload::revoke_regulator{ parse_address_arg (target) }, out); }; });

	auto * reg = app.add_subcommand ("reg", "Regulator actions");
	reg->require_subcommand (1);
	auto * register_cmd = reg->add_subcommand ("register-institution", "Register an institution");
	add_mutation_flags (register_cmd, m);
	register_cmd->add_option ("--address", target, "Institution address")->required ();
	register_cmd->add_option ("--name", name, "Institution name")->required ();
	register_cmd->callback ([&] { action = [&] { return submit (opts, m, payload::register_institution{ parse_address_arg (target), name }, out); }; });
	auto * deactivate = reg->add_subcommand ("deactivate-institution", "Deactivate an institution");
	add_mutation_flags (deactivate, m);
	deactivate->add_option ("--address", target, "Institution address")->required ();
	deactivate->callback ([&] { action = [&] { return submit (opts, m, payload::deactivate_institution{ parse_address_arg (target) }, out); }; });

	auto * inst = app.add_subcommand ("inst", "Institution actions");
	inst->require_subcommand (1);
	std::string metadata_file;
	auto * issue = inst->add_subcommand ("issue", "Store metadata and issue a certificate");
	add_mutation_flags (issue, m);
	issue->add_option ("--metadata", metadata_file, "Metadata JSON document")->required ();
	issue->callback ([&] {
		action = [&] {
			metadata_document doc;
			std::string bytes;
			try
			{
				doc = metadata_document::from_json (parse_json (read_text (metadata_file)));
				bytes = canonicalize_metadata (doc);
			}
			catch (error const & e)
			{
				throw usage_error (metadata_file + ": " + e.what ());
			}
			auto signer = load_key (m.key_file);
			if (doc.institution_address != signer.account ().to_string ())
			{
				throw usage_error ("metadata institution_address " + doc.institution_address + " is not the signing key's address " + signer.account ().to_string ());
			}
			auto local = compute_cid (as_bytes (bytes));
			client node (opts.url);
			auto stored = parse_json (node.post ("/v1/metadata", bytes, "application/json"));
			if (field::string (stored, "cid") != local.to_string ())
			{
				throw transport_error ("node returned CID " + field::string (stored, "cid") + ", expected " + local.to_string ());
			}
			if (!opts.json_output)
			{
				out << "cert_id " << doc.cert_id << '\n'
					<< "cid " << local.to_string () << '\n';
			}
			return submit (opts, m, payload::issue_certificate{ doc.cert_id, local, local.digest () }, out);
		};
	});
	std::string cert_id;
	std::string reason;
	auto * revoke = inst->add_subcommand ("revoke", "Revoke a certificate");
	add_mutation_flags (revoke, m);
	revoke->add_option ("--cert-id", cert_id, "Certificate id")->required ();
	revoke->add_option ("--reason", reason, "Revocation reason");
	revoke->callback ([&] { action = [&] { return submit (opts, m, payload::revoke_certificate{ cert_id, reason }, out); }; });

	// verify
	std::optional<std::string> by_id, by_hash, by_cid, by_qr, report_out;
	auto * verify_cmd = app.add_subcommand ("verify", "Verify a certificate and fetch a signed report");
	auto * id_opt = verify_cmd->add_option ("--id", by_id, "ISSUER/CERT_ID");
	auto * hash_opt = verify_cmd->add_option ("--hash", by_hash, "Metadata hash (hex)");
	auto * cid_opt = verify_cmd->add_option ("--cid", by_cid, "Metadata CID");
	auto * qr_opt = verify_cmd->add_option ("--qr", by_qr, "QR payload URI");
	id_opt->excludes (hash_opt)->excludes (cid_opt)->excludes (qr_opt);
	hash_opt->excludes (cid_opt)->excludes (qr_opt);
	cid_opt->excludes (qr_opt);
	verify_cmd->add_option ("--out", report_out, "Write the signed report (.scvr)");
	verify_cmd->callback ([&] {
		action = [&] {
			httplib::Params params;
			if (by_id)
			{
				auto slash = by_id->find ('/');
				if (slash == std::string::npos)
				{
					throw usage_error ("--id takes ISSUER/CERT_ID");
				}
				params.emplace ("i", by_id->substr (0, slash));
				params.emplace ("c", by_id->substr (slash + 1));
			}
			else if (by_hash)
			{
				params.emplace ("h", *by_hash);
			}
			else if (by_cid)
			{
				params.emplace ("d", *by_cid);
			}
			else if (by_qr)
			{
				params.emplace ("q", *by_qr);
			}
			else
			{
				throw usage_error ("one of --id, --hash, --cid or --qr is required");
			}
			auto body = fetch_report (opts, params);
			if (report_out)
			{
				std::ofstream file (*report_out, std::ios::binary | std::ios::trunc);
				file << body;
				if (!file.flush ())
				{
					throw usage_error ("cannot write " + *report_out);
				}
			}
			if (opts.json_output)
			{
				out << body;
			}
			else
			{
				auto report = parse_json (body);
				out << "status " << report["status"].get<std::string> () << '\n';
				for (auto key : { "issuer", "institution_name", "cert_id", "cid", "revocation_reason" })
				{
					if (report.contains (key))
					{
						out << key << ' ' << report[key].get<std::string> () << '\n';
					}
				}
				out << "ledger_height " << report["ledger_height"].get<std::uint64_t> () << '\n';
			}
			return success;
		};
	});

	// report check
	std::string report_file;
	std::optional<std::string> node_key_hex;
	auto * report = app.add_subcommand ("report", "Signed report tools");
	report->require_subcommand (1);
	auto * check = report->add_subcommand ("check", "Check a report's signature offline");
	check->add_option ("--file", report_file, "Report file (.scvr)")->required ();
	check->add_option ("--node-key", node_key_hex, "Expected node public key (hex)");
	check->callback ([&] {
		action = [&] {
			std::optional<public_key> expected;
			if (node_key_hex)
			{
				try
				{
					expected = array_from_hex<32> (*node_key_hex);
				}
				catch (error const &)
				{
					throw usage_error ("--node-key must be 64 hex characters");
				}
			}
			auto valid = check_report (read_text (report_file), expected);
			if (opts.json_output)
			{
				out << canonical_encode ({ { "valid", valid } });
			}
			else
			{
				out << (valid ? "valid" : "invalid") << '\n';
			}
			return valid ? success : rejected;
		};
	});

	// qr
	std::string qr_issuer, qr_cert, qr_cid, qr_uri;
	auto * qr = app.add_subcommand ("qr", "QR payload codec");
	qr->require_subcommand (1);
	auto * encode = qr->add_subcommand ("encode", "Build a verification URI");
	encode->add_option ("--issuer", qr_issuer)->required ();
	encode->add_option ("--cert-id", qr_cert)->required ();
	encode->add_option ("--cid", qr_cid)->required ();
	encode->callback ([&] {
		action = [&] {
			std::string uri;
			try
			{
				uri = encode_qr_payload (address::parse (qr_issuer), qr_cert, cid::parse (qr_cid));
			}
			catch (error const & e)
			{
				throw usage_error (e.what ());
			}
			if (opts.json_output)
			{
				out << canonical_encode ({ { "uri", uri } });
			}
			else
			{
				out << uri << '\n';
			}
			return success;
		};
	});
	auto * decode = qr->add_subcommand ("decode", "Parse a verification URI");
	decode->add_option ("uri", qr_uri)->required ();
	decode->callback ([&] {
		action = [&] {
			qr_components parts;
			try
			{
				parts = decode_qr_payload (qr_uri);
			}
			catch (error const & e)
			{
				throw usage_error (std::string (to_string (e.code ())) + ": " + e.what ());
			}
			if (opts.json_output)
			{
				out << canonical_encode ({ { "cert_id", parts.cert_id }, { "cid", parts.content.to_string () }, { "issuer", parts.issuer.to_string () } });
			}
			else
			{
				out << "issuer " << parts.issuer.to_string () << '\n'
					<< "cert_id " << parts.cert_id << '\n'
					<< "cid " << parts.content.to_string () << '\n';
			}
			return success;
		};
	});

	// node queries
	auto * node_cmd = app.add_subcommand ("node", "Node queries");
	node_cmd->require_subcommand (1);
	for (auto [command, path] : { std::pair{ "audit", "/v1/audit" }, { "head", "/v1/head" }, { "stats", "/v1/stats" }, { "state-root", "/v1/state-root" } })
	{
		auto * sub = node_cmd->add_subcommand (command, std::string ("GET ") + path);
		sub->callback ([&, path = std::string (path), command = std::string (command)] {
			action = [&, path, command] {
				client node (opts.url);
				auto body = node.get (path);
				auto reply = parse_json (body);
				if (opts.json_output)
				{
					out << body;
				}
				else
				{
					for (auto const & [key, value] : reply.items ())
					{
						out << key << ' ' << (value.is_string () ? value.get<std::string> () : value.dump ()) << '\n';
					}
				}
				if (command == "audit" && !reply["ok"].get<bool> ())
				{
					return static_cast<int> (rejected);
				}
				return static_cast<int> (success);
			};
		});
	}

	std::vector<std::string> reversed (args.rbegin (), args.rend ());
	try
	{
		app.parse (reversed);
	}
	catch (CLI::CallForHelp const &)
	{
		out << app.help ();
		return success;
	}
	catch (CLI::CallForAllHelp const &)
	{
		out << app.help ("", CLI::AppFormatMode::All);
		return success;
	}
	catch (CLI::ParseError const & e)
	{
		err << "error: " << e.what () << '\n';
		return usage;
	}

	try
	{
		return action ? action () : usage;
	}
	catch (usage_error const & e)
	{
		err << "error: " << e.what () << '\n';
		return usage;
	}
	catch (transport_error const & e)
	{
		err << "error: " << e.what () << '\n';
		return transport;
	}
	catch (node_rejection const & e)
	{
		if (opts.json_output)
		{
			out << e.body;
		}
		else
		{
			err << "node rejected request (HTTP " << e.status << "): " << e.body << '\n';
		}
		if (e.status >= 500)
		{
			return transport;
		}
		return e.status == 400 || e.status == 413 ? usage : rejected;
	}
	catch (error const & e)
	{
		err << "error: " << to_string (e.code ()) << ": " << e.what () << '\n';
		return usage;
	}
}
}
