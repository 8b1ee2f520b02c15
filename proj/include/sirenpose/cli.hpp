#pragma once

#include <ostream>
#include <span>
#include <string>

namespace sirenpose {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitIo = 2,
    kExitNumeric = 3,
};

// Entry point of the `sirenpose` tool. args[0] is the program name.
// Subcommands: generate, train, eval, gradcheck, export-plot.
int cli_main(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace sirenpose
