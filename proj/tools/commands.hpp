#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace llae::cli {

enum ExitCode : int { ok = 0, usage = 2, data = 3, numeric = 4 };

// Runs one command line (without the program name); returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace llae::cli
