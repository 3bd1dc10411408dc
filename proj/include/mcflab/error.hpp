#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mcflab {

enum class ErrorCode {
  // geometry
  NonManifoldMesh,
  DegenerateTriangle,
  NotNormalField,
  DegenerateResult,
  // ambient
  OutsideTube,
  BasisNotTangent,
  NotOnSurface,
  EmptyRegion,
  GraphDoesNotExist,
  // flow
  LinearSolveFailure,
  ProjectionFailure,
  QualityCollapse,
  EmptyWindow,
  BoundarySnapshot,
  // functionals / harness
  TimeNonPositive,
  TimeOrder,
  WrongAmbient,
  NotExtinct,
  ConnectivityMismatch,
  PerturbationRejected,
  OptimizerDiverged,
  // io / config
  ParseError,
  ValidationError,
  IoError,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code; the message holds the detail.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace mcflab
