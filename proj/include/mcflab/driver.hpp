#pragma once

#include <iosfwd>

#include "mcflab/config.hpp"
#include "mcflab/error.hpp"

namespace mcflab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitNumericalFailure = 3;
inline constexpr int kExitVerificationFailed = 4;

/// 2 for problems with the inputs (config, files, arguments), 3 otherwise.
int exit_code_for(ErrorCode code);

/// Runs one command and writes its artifacts under cfg.out. manifest.json is
/// written before any computation and rewritten with the final status.
/// Progress goes to `log`.
int execute(const RunConfig& cfg, std::ostream& log);

}  // namespace mcflab
