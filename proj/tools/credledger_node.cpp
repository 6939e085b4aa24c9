#include <credledger/api.hpp>
#include <credledger/error.hpp>
#include <credledger/node.hpp>

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <pthread.h>

namespace
{
enum exit_status : int
{
	clean = 0,
	config_error = 2,
	corrupt = 3
};

std::optional<std::string> env (char const * name)
{
	if (auto const * value = std::getenv (name))
	{
		return std::string (value);
	}
	return std::nullopt;
}
}

int main (int argc, char ** argv)
{
	CLI::App app{ "credledger-node: permissioned credential ledger node", "credledger-node" };
	std::string data_dir = env ("CREDLEDGER_DATA_DIR").value_or ("");
	std::string listen = env ("CREDLEDGER_LISTEN").value_or ("127.0.0.1:8645");
	std::string signing_key = env ("CREDLEDGER_SIGNING_KEY").value_or ("");
	std::string government;
	std::uint32_t block_interval = 1;
	std::int64_t max_skew = 86400;
	std::uint64_t snapshot_every = 100;
	bool no_sync = false;
	app.add_option ("--data-dir", data_dir, "Data directory (CREDLEDGER_DATA_DIR)");
	app.add_option ("--listen", listen, "host:port, port 0 picks one (CREDLEDGER_LISTEN)");
	app.add_option ("--signing-key", signing_key, "Report signing key file, created if missing (CREDLEDGER_SIGNING_KEY; default <data-dir>/node.key)");
	app.add_option ("--government", government, "Government address for a fresh data directory");
	app.add_option ("--block-interval", block_interval, "Transactions per block");
	app.add_option ("--max-clock-skew", max_skew, "Accepted |tx timestamp - node time| in seconds");
	app.add_option ("--snapshot-every", snapshot_every, "Blocks between state snapshots (0 disables)");
	app.add_flag ("--no-sync", no_sync, "Skip fdatasync after each block");
	try
	{
		app.parse (argc, argv);
	}
	catch (CLI::ParseError const & e)
	{
		auto code = app.exit (e);
		return code == 0 ? clean : config_error;
	}

	// Signals are consumed by a dedicated thread; block them before any other thread starts.
	sigset_t signals;
	sigemptyset (&signals);
	sigaddset (&signals, SIGINT);
	sigaddset (&signals, SIGTERM);
	pthread_sigmask (SIG_BLOCK, &signals, nullptr);

	credledger::node_config config;
	config.data_dir = data_dir;
	config.listen = listen;
	config.block_interval = block_interval;
	config.max_clock_skew = max_skew;
	config.snapshot_every = snapshot_every;
	config.sync_writes = !no_sync;
	config.signing_key_path = signing_key.empty () ? config.data_dir / "node.key" : std::filesystem::path (signing_key);

	std::unique_ptr<credledger::node> node;
	std::pair<std::string, int> endpoint;
	try
	{
		if (!government.empty ())
		{
			config.government = credledger::address::parse (government);
		}
		endpoint = credledger::split_listen_address (config.listen);
		node = std::make_unique<credledger::node> (config);
	}
	catch (credledger::error const & e)
	{
		std::cerr << "credledger-node: " << credledger::to_string (e.code ()) << ": " << e.what () << '\n';
		switch (e.code ())
		{
			case credledger::error_code::corrupt_ledger:
			case credledger::error_code::snapshot_mismatch:
				return corrupt;
			default:
				return config_error;
		}
	}
	for (auto const & note : node->boot_notes ())
	{
		std::cerr << "credledger-node: " << note << '\n';
	}

	credledger::http_server server (*node);
	int port = 0;
	try
	{
		port = server.start (endpoint.first, endpoint.second);
	}
	catch (credledger::error const & e)
	{
		std::cerr << "credledger-node: " << e.what () << '\n';
		return config_error;
	}
	auto head = node->head ();
	std::cout << "listening " << endpoint.first << ':' << port << std::endl;
	std::cerr << "credledger-node: height " << head.height << ", node key " << credledger::to_hex (*node->node_key ()) << '\n';

	int received = 0;
	sigwait (&signals, &received);
	server.stop ();
	try
	{
		node->flush ();
		node->snapshot ();
	}
	catch (credledger::error const & e)
	{
		std::cerr << "credledger-node: shutdown: " << e.what () << '\n';
	}
	return clean;
}
