#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace netsumm {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs one `netsumm <subcommand> ...` invocation. args[0] is the program
/// name. Human-readable progress goes to `out`, errors to `err`.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

}  // namespace netsumm
