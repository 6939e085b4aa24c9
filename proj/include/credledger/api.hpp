#pragma once

#include <credledger/error.hpp>
#include <credledger/node.hpp>

#include <atomic>
#include <map>
#include <memory>
#include <string>
#include <thread>

namespace httplib
{
class Server;
}

namespace credledger
{
struct http_response
{
	int status{ 200 };
	std::string body;
	std::string content_type{ "application/json" };
};

using query_params = std::multimap<std::string, std::string>;

/// Canonical {"error": <code>, "message": ...} body.
std::string error_body (std::string_view code, std::string_view message);
int http_status_for (error_code code);

/**
 * Routes of the /v1 HTTP API, independent of any socket library. Every JSON
 * body is in canonical form so that clients can compare or sign it byte for
 * byte.
 */
class api
{
public:
	explicit api (node & node_a) :
		node_m (node_a)
	{
	}

	http_response handle (std::string_view method, std::string_view path, query_params const & params, std::string_view body);

private:
	http_response get (std::string_view path, query_params const & params);
	http_response post (std::string_view path, std::string_view body);
	http_response verify (query_params const & params);

	node & node_m;
};

/// Serves an api over HTTP/1.1 on a background thread.
class http_server
{
public:
	explicit http_server (node & node_a);
	~http_server ();

	http_server (http_server const &) = delete;
	http_server & operator= (http_server const &) = delete;

	/// Binds and starts serving. Port 0 picks a free port. Throws config_invalid.
	int start (std::string const & host, int port);
	/// Blocks until stop() is called from another thread or a signal handler.
	void run (std::string const & host, int port);
	void stop ();

private:
	api api_m;
	std::unique_ptr<httplib::Server> server_m;
	std::thread thread_m;
};

/// Splits "host:port"; throws config_invalid.
std::pair<std::string, int> split_listen_address (std::string const & listen);
}
