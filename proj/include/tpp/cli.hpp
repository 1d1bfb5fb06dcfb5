#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tpp::cli {

enum ExitCode { Ok = 0, Invariant = 1, ConfigFailure = 2, NumericalFailure = 3 };

/// Entry point shared by the executable and the tests. args excludes argv[0].
/// A one-line JSON record goes to `out` on success and to `err` on failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace tpp::cli
