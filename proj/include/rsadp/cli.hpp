#pragma once

// Command-line front end, kept in the library so tests can drive it.
//
//   run --preset <name> | --config <path> [--out <dir>] [--seed N] [--workers K]
//       [--starts <json>] [--emit csv,summary,plot] [--dump-config]
//   list
//   buffer-build --model <id> --region <json> (--counts <list> | --mesh <list>) --out <path>
//
// Exit codes: 0 ok, 1 I/O or internal failure, 2 configuration error,
// 3 constraint violation, 4 learning or integration divergence.

#include <iosfwd>
#include <string>
#include <vector>

namespace rsadp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitConstraint = 3;
inline constexpr int kExitDiverged = 4;

/// Default output root when --out is absent.
inline constexpr const char* kOutRootEnv = "RSADP_OUT_ROOT";

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rsadp
