#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace stacktag {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;  // UnknownSubcommand, InvalidFlag

// Runs one invocation; `args` excludes the program name. Failures print a
// single line "error<TAB>Kind<TAB>message" to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

const std::vector<std::string>& subcommands();

}  // namespace stacktag
