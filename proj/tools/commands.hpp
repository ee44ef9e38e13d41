#pragma once

namespace visa::cli {

/// Parses arguments, runs one subcommand and returns the process exit code.
int run(int argc, char** argv);

}  // namespace visa::cli
