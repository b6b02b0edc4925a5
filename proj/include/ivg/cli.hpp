#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ivg {

// Exit codes: 0 success, 1 validation error (bad flags, bad input, missing
// binding), 2 runtime error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

// Subcommands: gen-scenes, selfplay, polish, select-variants, merge,
// eval {mt-vg|mt-vqa|mt-vqg|ivg}, report, serve. Each takes --seed,
// --config and --out.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ivg
