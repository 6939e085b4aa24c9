#include <credledger/api.hpp>
#include <credledger/cas.hpp>
#include <credledger/error.hpp>
#include <credledger/ledger.hpp>
#include <credledger/node.hpp>
#include <credledger/verifier.hpp>

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace credledger;

namespace
{
std::span<std::uint8_t const> view (std::string_view bytes)
{
	return as_bytes (bytes);
}

py::bytes to_py (std::span<std::uint8_t const> bytes)
{
	return { reinterpret_cast<char const *> (bytes.data ()), bytes.size () };
}

py::dict key_info (keypair const & key)
{
	py::dict info;
	info["address"] = key.account ().to_string ();
	info["public_key"] = to_hex (key.public_bytes ());
	info["secret_key"] = to_hex (key.secret_bytes ());
	return info;
}

keypair key_from_hex (std::string const & secret_hex)
{
	auto secret = from_hex (secret_hex);
	return keypair::from_secret (secret);
}

std::optional<public_key> optional_key (std::optional<std::string> const & hex)
{
	if (!hex)
	{
		return std::nullopt;
	}
	return array_from_hex<32> (*hex);
}

/// In-process node plus the HTTP routing layer, without a socket.
class py_node
{
public:
	py_node (std::string const & data_dir, std::optional<std::string> const & government, std::uint32_t block_interval, std::optional<std::string> const & signing_key, std::uint64_t snapshot_every, bool sync_writes, std::function<std::int64_t ()> clock)
	{
		node_config config;
		config.data_dir = data_dir;
		if (government)
		{
			config.government = address::parse (*government);
		}
		config.block_interval = block_interval;
		config.signing_key_path = signing_key ? std::filesystem::path (*signing_key) : config.data_dir / "node.key";
		config.snapshot_every = snapshot_every;
		config.sync_writes = sync_writes;
		if (clock)
		{
			config.clock = std::move (clock);
		}
		node_m = std::make_unique<node> (std::move (config));
		api_m = std::make_unique<api> (*node_m);
	}

	py::tuple request (std::string const & method, std::string const & path, std::vector<std::pair<std::string, std::string>> const & params, std::string const & body)
	{
		query_params query (params.begin (), params.end ());
		auto response = api_m->handle (method, path, query, body);
		return py::make_tuple (response.status, py::bytes (response.body), response.content_type);
	}

	node & inner ()
	{
		return *node_m;
	}

private:
	std::unique_ptr<node> node_m;
	std::unique_ptr<api> api_m;
};
}

PYBIND11_MODULE (_credledger, m)
{
	m.doc () = "Bindings for the credledger core library.";

	static py::exception<error> exc (m, "Error", PyExc_ValueError);
	py::register_exception_translator ([] (std::exception_ptr p) {
		try
		{
			if (p)
			{
				std::rethrow_exception (p);
			}
		}
		catch (error const & e)
		{
			auto args = py::make_tuple (std::string (to_string (e.code ())), e.what ());
			PyErr_SetObject (exc.ptr (), args.ptr ());
		}
	});

	m.def (
	"generate_keypair", [] (std::optional<py::bytes> seed) {
		if (seed)
		{
			std::string raw = *seed;
			return key_info (keypair::generate (view (raw)));
		}
		return key_info (keypair::generate ());
	},
	py::arg ("seed") = py::none (), "Returns {address, public_key, secret_key} as hex strings.");
	m.def (
	"derive_address", [] (py::bytes public_key) {
		std::string raw = public_key;
		return derive_address (view (raw)).to_string ();
	});
	m.def (
	"sign_transaction", [] (std::string const & secret_hex, std::string const & payload_json, std::uint64_t nonce, std::int64_t timestamp) {
		auto key = key_from_hex (secret_hex);
		auto tx = sign_transaction (key, payload_from_json (parse_json (payload_json)), nonce, timestamp);
		return canonical_encode (tx.to_json ());
	},
	py::arg ("secret_key"), py::arg ("payload"), py::arg ("nonce"), py::arg ("timestamp"), "Signs a payload document; returns the canonical transaction JSON.");
	m.def (
	"verify_transaction", [] (std::string const & tx_json) {
		try
		{
			return verify_transaction (signed_transaction::from_json (parse_json (tx_json)));
		}
		catch (error const &)
		{
			return false;
		}
	});
	m.def (
	"transaction_hash", [] (std::string const & tx_json) {
		return to_hex (signed_transaction::from_json (parse_json (tx_json)).hash ());
	});
	m.def (
	"merkle_root", [] (std::vector<py::bytes> const & leaves) {
		std::vector<hash256> hashes;
		for (auto const & leaf : leaves)
		{
			std::string raw = leaf;
			if (raw.size () != 32)
			{
				throw error (error_code::malformed, "leaves must be 32 bytes");
			}
			hash256 h;
			std::copy (raw.begin (), raw.end (), h.begin ());
			hashes.push_back (h);
		}
		return to_py (merkle_root (hashes));
	});
	m.def (
	"compute_cid", [] (py::bytes content) {
		std::string raw = content;
		return compute_cid (view (raw)).to_string ();
	});
	m.def (
	"canonicalize_metadata", [] (std::string const & document) {
		return canonicalize_metadata (metadata_document::from_json (parse_json (document)));
	},
	"Validates a metadata document and returns its canonical encoding.");
	m.def ("hash_student_id", &hash_student_id);
	m.def (
	"encode_qr", [] (std::string const & issuer, std::string const & cert_id, std::string const & content) {
		return encode_qr_payload (address::parse (issuer), cert_id, cid::parse (content));
	});
	m.def (
	"decode_qr", [] (std::string const & uri) {
		auto parts = decode_qr_payload (uri);
		return py::make_tuple (parts.issuer.to_string (), parts.cert_id, parts.content.to_string ());
	});
	m.def (
	"check_report", [] (std::string const & document, std::optional<std::string> const & node_key) {
		return check_report (std::string_view (document), optional_key (node_key));
	},
	py::arg ("document"), py::arg ("node_key") = py::none ());
	m.def (
	"audit_ledger_bytes", [] (py::bytes file) {
		std::string raw = file;
		return canonical_encode (ledger::audit_bytes (raw).to_json ());
	});

	py::class_<py_node> (m, "Node")
	.def (py::init<std::string const &, std::optional<std::string> const &, std::uint32_t, std::optional<std::string> const &, std::uint64_t, bool, std::function<std::int64_t ()>> (),
	py::arg ("data_dir"), py::arg ("government") = py::none (), py::arg ("block_interval") = 1, py::arg ("signing_key") = py::none (), py::arg ("snapshot_every") = 100, py::arg ("sync_writes") = true, py::arg ("clock") = py::none ())
	.def ("request", &py_node::request, py::arg ("method"), py::arg ("path"), py::arg ("params") = std::vector<std::pair<std::string, std::string>>{}, py::arg ("body") = std::string{},
	"Routes one API call; returns (status, body, content_type).")
	.def ("flush", [] (py_node & self) {
		return self.inner ().flush ().size ();
	})
	.def ("snapshot", [] (py_node & self) { self.inner ().snapshot (); })
	.def ("state_root", [] (py_node & self) { return to_hex (self.inner ().state_root ()); })
	.def ("boot_notes", [] (py_node & self) { return self.inner ().boot_notes (); });
}
