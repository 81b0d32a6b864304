#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace spinesim::cli {

enum ExitCode
{
    ok = 0,
    usage_error = 1,
    assertion_failure = 2
};

//! Runs `spinesim <args...>` (args exclude the program name). The report goes
//! to `out` unless --out is given; diagnostics go to `err`.
int run(std::vector<std::string> const& args, std::ostream& out, std::ostream& err);

int run(int argc, char const* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spinesim::cli
