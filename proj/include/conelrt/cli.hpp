#ifndef CONELRT_CLI_HPP
#define CONELRT_CLI_HPP

#include <iosfwd>

namespace conelrt::cli {

// sysexits-style codes.
constexpr int kOk = 0;
constexpr int kUsage = 64;       // unknown flag, missing or conflicting flags
constexpr int kData = 65;        // malformed config or input file
constexpr int kInternal = 70;    // numerical failure during a run
constexpr int kCantCreate = 73;  // output path not writable

/// Parses argv, runs the subcommand and returns the exit code.  Results go
/// to `out`, diagnostics to `err`.
int parse_and_run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int parse_and_run(int argc, const char* const* argv);

}  // namespace conelrt::cli

#endif  // CONELRT_CLI_HPP
