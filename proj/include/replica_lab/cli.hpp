#pragma once

#include <string>
#include <vector>

namespace replica_lab::cli {

// Runs one subcommand. Exit codes: 0 success, 1 usage error, 2 capacity
// error, 3 internal assertion failure.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args without the program name

}  // namespace replica_lab::cli
