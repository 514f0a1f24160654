#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace timesynth {

// Entry point of the `timesynth` tool: generate, run, stats, plot-data.
// Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace timesynth
