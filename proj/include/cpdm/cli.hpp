#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cpdm {

/// Entry point for the `cpdm` tool. `args` excludes the program name.
/// Subcommands: simulate, train, despeckle, evaluate.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cli_main(int argc, const char* const* argv);

}  // namespace cpdm
