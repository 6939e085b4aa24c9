#include <credledger/api.hpp>
#include <credledger/error.hpp>

#include <httplib.h>

#include <charconv>

namespace credledger
{
std::string error_body (std::string_view code, std::string_view message)
{
	json body = json::object ();
	body["error"] = code;
	// Messages may echo client input; keep them encodable.
	std::string clean;
	for (auto c : message)
	{
		clean.push_back (static_cast<unsigned char> (c) < 0x80 ? c : '?');
	}
	body["message"] = clean;
	return canonical_encode (body);
}

int http_status_for (error_code code)
{
	switch (code)
	{
		case error_code::not_found:
			return 404;
		case error_code::bad_signature:
		case error_code::nonce_replay:
		case error_code::clock_skew:
			return 409;
		case error_code::too_large:
			return 413;
		case error_code::node_unconfigured:
			return 503;
		case error_code::integrity_failure:
		case error_code::storage_failure:
		case error_code::corrupt_ledger:
		case error_code::snapshot_mismatch:
			return 500;
		default:
			return 400;
	}
}

namespace
{
	http_response ok (json const & body)
	{
		return { 200, canonical_encode (body) };
	}

	http_response failure (int status, std::string_view code, std::string_view message)
	{
		return { status, error_body (code, message) };
	}

	http_response failure (error const & e)
	{
		return failure (http_status_for (e.code ()), to_string (e.code ()), e.what ());
	}

	std::vector<std::string_view> split_path (std::string_view path)
	{
		std::vector<std::string_view> parts;
		while (!path.empty ())
		{
			if (path.front () == '/')
			{
				path.remove_prefix (1);
				continue;
			}
			auto slash = path.find ('/');
			parts.push_back (path.substr (0, slash));
			if (slash == std::string_view::npos)
			{
				break;
			}
			path.remove_prefix (slash);
		}
		return parts;
	}

	std::optional<std::string> single (query_params const & params, std::string const & key)
	{
		auto [begin, end] = params.equal_range (key);
		if (begin == end)
		{
			return std::nullopt;
		}
		if (std::next (begin) != end)
		{
			throw error (error_code::malformed, "query parameter \"" + key + "\" given more than once");
		}
		return begin->second;
	}

	std::uint64_t parse_height (std::string_view text)
	{
		std::uint64_t value = 0;
		auto [end, ec] = std::from_chars (text.data (), text.data () + text.size (), value);
		if (ec != std::errc{} || end != text.data () + text.size () || text.empty ())
		{
			throw error (error_code::malformed, "height must be a non-negative integer");
		}
		return value;
	}
}

http_response api::handle (std::string_view method, std::string_view path, query_params const & params, std::string_view body)
{
	try
	{
		if (method == "GET")
		{
			return get (path, params);
		}
		if (method == "POST")
		{
			return post (path, body);
		}
		return failure (405, "MethodNotAllowed", "unsupported method");
	}
	catch (error const & e)
	{
		return failure (e);
	}
	catch (std::exception const & e)
	{
		return failure (500, "Internal", e.what ());
	}
}

http_response api::post (std::string_view path, std::string_view body)
{
	auto parts = split_path (path);
	if (parts.size () == 2 && parts[0] == "v1" && parts[1] == "tx")
	{
		auto tx = signed_transaction::from_json (parse_json (body));
		return ok (node_m.submit (tx).to_json ());
	}
	if (parts.size () == 2 && parts[0] == "v1" && parts[1] == "metadata")
	{
		auto id = node_m.put_metadata (as_bytes (body));
		return ok ({ { "cid", id.to_string () }, { "size", body.size () } });
	}
	return failure (404, "NotFound", "no such route");
}

http_response api::get (std::string_view path, query_params const & params)
{
	auto parts = split_path (path);
	if (parts.empty () || parts[0] != "v1")
	{
		return failure (404, "NotFound", "no such route");
	}
	parts.erase (parts.begin ());
	auto route = [&parts] (std::string_view name, std::size_t arity) {
		return parts.size () == arity + 1 && parts[0] == name;
	};

	if (route ("roles", 1))
	{
		auto account = address::parse (parts[1]);
		return ok ({ { "address", account.to_string () }, { "role", to_string (node_m.role_of (account)) } });
	}
	if (route ("nonce", 1))
	{
		auto account = address::parse (parts[1]);
		auto last = node_m.last_nonce (account);
		json body = { { "address", account.to_string () }, { "next_nonce", last ? *last + 1 : 0 } };
		if (last)
		{
			body["last_nonce"] = *last;
		}
		return ok (body);
	}
	if (route ("certificates", 2))
	{
		auto issuer = address::parse (parts[1]);
		auto result = node_m.certificate (issuer, std::string (parts[2]));
		if (!result.record)
		{
			return failure (404, "NotFound", "no certificate " + std::string (parts[2]) + " from " + issuer.to_string ());
		}
		return ok ({ { "record", result.record->to_json () }, { "status", to_string (result.record->status) } });
	}
	if (route ("verify", 0))
	{
		return verify (params);
	}
	if (route ("metadata", 1))
	{
		auto bytes = node_m.get_metadata (cid::parse (parts[1]));
		return { 200, std::move (bytes), "application/octet-stream" };
	}
	if (route ("blocks", 1))
	{
		auto header = node_m.block (parse_height (parts[1]));
		if (!header)
		{
			return failure (404, "NotFound", "no block at that height");
		}
		return ok (header->to_json ());
	}
	if (route ("tx", 1))
	{
		auto found = node_m.transaction (array_from_hex<32> (parts[1]));
		if (!found)
		{
			return failure (404, "NotFound", "unknown transaction");
		}
		return ok ({ { "receipt", found->second.to_json () }, { "tx", found->first.to_json () } });
	}
	if (route ("head", 0))
	{
		return ok (node_m.head ().to_json ());
	}
	if (route ("state-root", 0))
	{
		auto head = node_m.head ();
		return ok ({ { "height", head.height }, { "state_root", to_hex (node_m.state_root ()) } });
	}
	if (route ("stats", 0))
	{
		return ok (node_m.stats ().to_json ());
	}
	if (route ("audit", 0))
	{
		return ok (node_m.audit ().to_json ());
	}
	if (route ("node", 0))
	{
		auto key = node_m.node_key ();
		json body = json::object ();
		if (key)
		{
			body["node_public_key"] = to_hex (*key);
		}
		return ok (body);
	}
	return failure (404, "NotFound", "no such route");
}

http_response api::verify (query_params const & params)
{
	auto issuer = single (params, "i");
	auto cert_id = single (params, "c");
	auto hash = single (params, "h");
	auto content = single (params, "d");
	auto qr = single (params, "q");
	auto selectors = (issuer || cert_id ? 1 : 0) + (hash ? 1 : 0) + (content ? 1 : 0) + (qr ? 1 : 0);
	if (selectors != 1 || (issuer.has_value () != cert_id.has_value ()))
	{
		return failure (400, "Malformed", "give exactly one of i&c, h, d or q");
	}
	verify_query q;
	if (issuer)
	{
		q = query::by_id{ address::parse (*issuer), *cert_id };
	}
	else if (hash)
	{
		q = query::by_hash{ array_from_hex<32> (*hash) };
	}
	else if (content)
	{
		q = query::by_cid{ cid::parse (*content) };
	}
	else
	{
		q = query::by_qr{ *qr };
	}
	return ok (node_m.verify (q).to_json ());
}

std::pair<std::string, int> split_listen_address (std::string const & listen)
{
	auto colon = listen.rfind (':');
	if (colon == std::string::npos || colon == 0)
	{
		throw error (error_code::config_invalid, "listen address must be host:port");
	}
	int port = 0;
	auto text = std::string_view (listen).substr (colon + 1);
	auto [end, ec] = std::from_chars (text.data (), text.data () + text.size (), port);
	if (ec != std::errc{} || end != text.data () + text.size () || port < 0 || port > 65535)
	{
		throw error (error_code::config_invalid, "invalid port in listen address");
	}
	return { listen.substr (0, colon), port };
}

http_server::http_server (node & node_a) :
	api_m (node_a),
	server_m (std::make_unique<httplib::Server> ())
{
	auto handler = [this] (httplib::Request const & request, httplib::Response & response) {
		query_params params (request.params.begin (), request.params.end ());
		auto result = api_m.handle (request.method, request.path, params, request.body);
		response.status = result.status;
		response.set_content (result.body, result.content_type);
	};
	server_m->Get (R"(/v1/.*)", handler);
	server_m->Post (R"(/v1/.*)", handler);
	server_m->set_payload_max_length (max_blob_size + 64 * 1024);
}

http_server::~http_server ()
{
	stop ();
}

int http_server::start (std::string const & host, int port)
{
	int bound = port;
	if (port == 0)
	{
		bound = server_m->bind_to_any_port (host);
	}
	else if (!server_m->bind_to_port (host, port))
	{
		bound = -1;
	}
	if (bound < 0)
	{
		throw error (error_code::config_invalid, "cannot listen on " + host + ":" + std::to_string (port));
	}
	thread_m = std::thread ([this] { server_m->listen_after_bind (); });
	server_m->wait_until_ready ();
	return bound;
}

void http_server::run (std::string const & host, int port)
{
	start (host, port);
	if (thread_m.joinable ())
	{
		thread_m.join ();
	}
}

void http_server::stop ()
{
	if (server_m)
	{
		server_m->stop ();
	}
	if (thread_m.joinable () && thread_m.get_id () != std::this_thread::get_id ())
	{
		thread_m.join ();
	}
}
}
