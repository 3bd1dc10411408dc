#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcflab/flow.hpp"
#include "mcflab/functionals.hpp"
#include "mcflab/geometry.hpp"

namespace mcflab {

struct NamedSeries {
  std::string name;
  std::vector<double> t;
  std::vector<double> value;
};

/// Outcome of one verification suite. `tolerance` is absolute; suites that take a
/// relative tolerance multiply it by the largest |value| of the checked series.
struct VerificationReport {
  std::string check_name;
  nlohmann::json params = nlohmann::json::object();
  std::vector<NamedSeries> series;
  double worst_violation = 0;
  double tolerance = 0;
  bool passed = true;
  nlohmann::json details = nlohmann::json::object();

  void finish();  // sets passed from worst_violation and tolerance
};

nlohmann::json to_json(const VerificationReport& report);
/// CSV header: check,params_hash,worst_violation,tolerance,passed
void write_summary_csv(std::ostream& out, const std::vector<VerificationReport>& reports);
std::string params_hash(const nlohmann::json& params);

/// Gaussian densities u_{y,s}(t) for every grid point; violation is the largest
/// increment. Each increment is also compared with minus the trapezoidal integral of
/// the dissipation  integral of Phi |(H + (x - y) / (2 (s - t)))^perp|^2; that mismatch
/// counts against 10 x tolerance.
VerificationReport verify_huisken(const FlowTrajectory& traj, const std::vector<SpacetimePoint>& grid,
                                  double rel_tol);

/// J(t) = exp(K^2 (s - t) / 2) u_{y,s}(t) with K = traj.K_used unless overridden.
VerificationReport verify_J_monotone(const FlowTrajectory& traj, const SpacetimePoint& ys, double rel_tol,
                                     std::optional<double> K_override = {});

/// u(t2) - u(t1) - C K^2 (t2 - t1) over snapshot pairs with t2 - t1 < tau.
VerificationReport verify_almost_mono_u(const FlowTrajectory& traj, const SpacetimePoint& ys, double C, double tau,
                                        double rel_tol, bool adjacent_only = false);

struct EntropySeriesOptions {
  int stride = 1;  // every stride-th snapshot, plus the last
  EntropyOptions entropy;
};

/// lambda(t2) - lambda(t1) - epsilon0 over pairs with 0 < t2 - t1 < tau; tolerance 0.
VerificationReport verify_entropy_almost_mono(const FlowTrajectory& traj, double epsilon0, double tau,
                                              const EntropySeriesOptions& opt = {});

/// Area of M intersected with the closed ball B_r(c).
double ball_intersection_area(const TriMesh& mesh, const Vec& centre, double r);

/// Vol(B_r(c) cap M_t) / r^2 - (V + 2S) over snapshots with t > T, V = e^(1/4) Vol(M_0) / T.
VerificationReport volume_ratio_bound(const FlowTrajectory& traj, const std::vector<double>& radii,
                                      const std::vector<Vec>& centres, double S, double T);

enum class Verdict { RoundPoint, NonRound, Inconclusive };
std::string_view to_string(Verdict v);

struct ClassifyOptions {
  int window = 20;
  double residual_threshold = 0.1;
  double fit_threshold = 0.02;
};

struct ExtinctionClassification {
  Verdict verdict = Verdict::Inconclusive;
  std::vector<double> times;  // flow times of the classified snapshots
  std::vector<double> residuals;
  std::vector<double> sphere_fit_errors;
  std::vector<int> snapshot_indices;
};

/// Relative RMS deviation of the points from their least-squares round sphere,
/// fitted inside the best 3-dimensional affine subspace.
double sphere_fit_error(const Points& points);

/// Rescales the final snapshots by 1/sqrt(t_est - t) about the extinction point
/// and checks them against the radius-2 shrinking sphere.
ExtinctionClassification classify_extinction(const FlowTrajectory& traj, const ClassifyOptions& opt = {});

struct ContinuityProbe {
  std::vector<double> s;
  std::vector<double> lambda;
  double lipschitz_estimate = 0;  // max |d lambda| / ds on the full grid
  double lipschitz_coarse = 0;    // same on every other sample
  bool stable = true;             // lipschitz_estimate <= 1.5 * lipschitz_coarse
};

/// Entropy along a family sampled at s_i = i / (n - 1).
ContinuityProbe entropy_continuity_probe(const std::vector<TriMesh>& family, const EntropyOptions& opt = {});

/// Rescaled slice handed to a perturbation provider: the mesh is c (M_t - x0) with
/// c = 1 / sqrt(t_est - t), i.e. the time -1 slice of the tangent flow.
struct RescaledSlice {
  TriMesh mesh;
  Vec centre;   // x0
  double c = 1;
  double flow_time = 0;
};

using PerturbationProvider = std::function<VertexField(const RescaledSlice&)>;

struct PiecewiseBudget {
  double epsilon = 0.05;
  int max_replacements = 8;
  double sigma = 0.05;  // entropy floor margin above 1
};

struct Replacement {
  double time = 0;  // absolute flow time of the replaced slice
  double entropy_before = 0;
  double entropy_after = 0;
  std::string perturbation_id;
  double scale = 1;
  bool accepted = false;
};

enum class PiecewiseOutcome { RoundPoint, NonRound, BudgetExhausted, Inconclusive };
std::string_view to_string(PiecewiseOutcome v);

struct PiecewiseFlowLog {
  std::vector<FlowTrajectory> segments;
  std::vector<double> segment_start_times;
  std::vector<Replacement> replacements;  // accepted and rejected attempts, in order
  PiecewiseOutcome final_classification = PiecewiseOutcome::Inconclusive;
  double initial_entropy = 0;
  int replacement_bound = 0;
  std::string detail;

  int accepted_count() const;
};

struct PiecewiseOptions {
  FlowConfig flow;
  ClassifyOptions classify;
  EntropyOptions entropy;
  PiecewiseBudget budget;
  NormalGraphOptions graph;
  std::string perturbation_id = "provider";
};

PiecewiseFlowLog piecewise_flow(const TriMesh& mesh, const AmbientSpace& ambient,
                                const PerturbationProvider& provider, const PiecewiseOptions& opt);

/// Providers used by the command line driver and the tests.
namespace providers {
PerturbationProvider zero();
/// amplitude * (x - centroid)^perp: an exact dilation on round spheres.
PerturbationProvider dilation(double amplitude);
/// amplitude * exp(-|x - x*|^2 / width^2) * unit normal, x* the vertex with the largest first coordinate.
PerturbationProvider bump(double amplitude, double width);
}  // namespace providers

}  // namespace mcflab
