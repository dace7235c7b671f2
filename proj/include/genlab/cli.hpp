#pragma once

// gen-lab command-line interface. Every subcommand reads an optional JSON
// config (--config) whose keys are the long option names without dashes;
// flags given on the command line override it. The resolved config is written
// to the output location as config.json and can be passed back via --config.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace genlab::cli {

/// Runs the CLI; returns the process exit code (0 success, 1 runtime failure,
/// 2 usage error).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// "2..7" (inclusive range), "2,3,5" or "4". Throws std::invalid_argument.
std::vector<std::size_t> parse_sizes(const std::string& text);
std::vector<std::uint64_t> parse_seeds(const std::string& text);

/// 64-bit FNV-1a, printed as the manifest hash.
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace genlab::cli
