#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mcflab/ambient.hpp"
#include "mcflab/mesh.hpp"

namespace mcflab {

enum class Scheme { Explicit, SemiImplicit };

/// Treatment of the displacement component tangent to the mesh.
///  full:   keep it (plain cotangent scheme)
///  none:   drop it (purely normal motion)
///  scaled: multiply it per vertex by |(H + P)^perp| / |H^perp|, i.e. keep the mesh
///          redistribution in proportion to how much of H survives the forcing.
///          Identical to `full` in Euclidean space.
enum class Tangential { Full, None, Scaled };

std::string_view to_string(Scheme scheme);
Scheme scheme_from_string(std::string_view name);
std::string_view to_string(Tangential mode);
Tangential tangential_from_string(std::string_view name);

struct FlowConfig {
  double dt_initial = 1e-4;
  /// dt = min(dt_initial, c_stab / max|A|^2)
  double c_stab = 0.01;
  int max_steps = 200000;
  double stop_area = 1e-3;
  double stop_quality = 0.05;
  Scheme scheme = Scheme::SemiImplicit;
  int snapshot_stride = 1;
  /// Number of trailing integration steps in the linear area fit for the extinction time.
  int extinction_fit_window = 20;
  Tangential tangential = Tangential::Scaled;
  /// Tangential umbrella smoothing rate omega: each step moves vertex i by
  /// min(1/2, omega dt / h^2) times the tangent part of (neighbour mean - x_i),
  /// h the mean edge length. Invariant under parabolic rescaling; 0 disables it.
  double redistribution = 0.5;

  void validate() const;
};

/// One integration step. The velocity is H + P, H the discrete mean curvature
/// vector and P the ambient forcing term; curved ambients are re-projected.
TriMesh step(const TriMesh& mesh, const AmbientSpace& ambient, double dt, Scheme scheme,
             Tangential tangential = Tangential::Scaled, double redistribution = 0);

struct Snapshot {
  double t = 0;
  TriMesh mesh;
  double area = 0;
  double max_A = 0;  // max vertex |A|
};

struct Termination {
  enum class Kind { Extinct, QualityStop, StepLimit, Blowup, NumericalFailure };
  Kind kind = Kind::StepLimit;
  double t_est = 0;  // extinction time estimate, meaningful for Extinct (and Blowup)
  std::string detail;
};

std::string_view to_string(Termination::Kind kind);
Termination::Kind termination_from_string(std::string_view name);

struct FlowTrajectory {
  std::vector<Snapshot> snapshots;
  AmbientSpace ambient = AmbientSpace::euclidean(3);
  double K_used = 0;
  Termination termination;
  /// Where the surface disappears (last centroid, on N for curved ambients).
  Vec extinction_point;
  int steps = 0;
  FlowConfig config;

  const Snapshot& front() const { return snapshots.front(); }
  const Snapshot& back() const { return snapshots.back(); }
  std::vector<double> times() const;
  std::vector<double> max_A_series() const;
};

FlowTrajectory run_flow(const TriMesh& mesh, const AmbientSpace& ambient, const FlowConfig& config);

/// Least-squares line through the last `window` (t, area) samples; returns its
/// zero crossing, never earlier than the last sample.
double extrapolate_extinction(const std::vector<double>& t, const std::vector<double>& area, int window);

/// Parabolic rescaling (t, M) -> (c^2 (t - t0), c (M - x0)). Snapshots outside
/// [s_lo, s_hi] are dropped.
FlowTrajectory rescale_trajectory(const FlowTrajectory& traj, const Vec& x0, double t0, double c,
                                  double s_lo = -std::numeric_limits<double>::infinity(),
                                  double s_hi = std::numeric_limits<double>::infinity());

/// Snapshot whose time is nearest to t.
const Snapshot& slice_at(const FlowTrajectory& traj, double t);

struct DerivativeCheck {
  double lhs = 0;
  double rhs = 0;
  double gap = 0;
};

/// Compares d/dt of the integral of psi over M_t (centred difference across the
/// neighbouring snapshots) with the first-variation quadrature at snapshot `index`.
/// psi is the backward heat kernel centred at (x0, t0), frozen at the snapshot time.
DerivativeCheck flow_derivative_check(const FlowTrajectory& traj, const Vec& x0, double t0, int index);

/// Numbered OFF files, manifest.json and series.csv in `dir`.
void write_trajectory(const FlowTrajectory& traj, const std::filesystem::path& dir);
FlowTrajectory read_trajectory(const std::filesystem::path& dir);

}  // namespace mcflab
