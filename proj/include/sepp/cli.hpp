#pragma once

#include <string>
#include <vector>

namespace sepp {

// Command-line front end. Subcommands: simulate, fit, decluster, misd,
// bootstrap, diagnose, select. Returns 0 on success, 1 on validation
// errors, 2 on numerical failures.
int run_cli(const std::vector<std::string>& args);

}  // namespace sepp
