#pragma once

namespace lpforge::cli {

/// Entry point behind the lpforge binary. Subcommands: train, attack,
/// metrics, verify, dataset, plot. Exit codes: 0 success, 1 verification or
/// run failure, 2 usage/config errors.
int run_cli(int argc, const char* const* argv);

}  // namespace lpforge::cli
