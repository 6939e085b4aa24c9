#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace credledger::cli
{
/// Process exit codes.
enum exit_status : int
{
	success = 0,
	rejected = 1,
	usage = 2,
	transport = 3
};

/**
 * Entry point of the `credledger` client. `args` excludes the program name.
 * The node URL comes from --url, else CREDLEDGER_URL, else
 * http://127.0.0.1:8645.
 */
int run (std::vector<std::string> const & args, std::ostream & out, std::ostream & err);
}
