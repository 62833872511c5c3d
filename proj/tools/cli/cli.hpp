#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace stepfill::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitBackendUnreachable = 3;

/// Runs one subcommand: decompose, build-fim, expand, gen-synth, stats, compare.
/// `args` excludes the program name. Data goes to files or `out`; progress
/// and diagnostics go to `err` as JSON lines.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

/// Parses a flat `key = value` config file (`#` comments, optional quotes)
/// into `--key=value` tokens. Throws Error{InvalidConfig} on a bad line.
std::vector<std::string> config_file_tokens(const std::string& path);

}  // namespace stepfill::cli
