#include "mcflab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <ostream>

#include <Eigen/Dense>

#include "mcflab/error.hpp"
#include "mcflab/geometry.hpp"
#include "mcflab/mesh_io.hpp"

namespace mcflab {

void VerificationReport::finish() { passed = std::isfinite(worst_violation) && worst_violation <= tolerance; }

nlohmann::json to_json(const VerificationReport& report) {
  nlohmann::json series = nlohmann::json::array();
  for (const auto& s : report.series) series.push_back({{"name", s.name}, {"t", s.t}, {"value", s.value}});
  return {{"check_name", report.check_name}, {"params", report.params},     {"series", series},
          {"worst_violation", report.worst_violation}, {"tolerance", report.tolerance},
          {"passed", report.passed},           {"details", report.details}};
}

std::string params_hash(const nlohmann::json& params) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : params.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_summary_csv(std::ostream& out, const std::vector<VerificationReport>& reports) {
  out << "check,params_hash,worst_violation,tolerance,passed\n";
  for (const auto& r : reports) {
    out << r.check_name << ',' << params_hash(r.params) << ',' << format_double(r.worst_violation) << ','
        << format_double(r.tolerance) << ',' << (r.passed ? "true" : "false") << '\n';
  }
}

namespace {

nlohmann::json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void check_kernel_point(const FlowTrajectory& traj, const SpacetimePoint& p) {
  if (traj.snapshots.empty()) fail(ErrorCode::InvalidArgument, "empty trajectory");
  if (p.x0.size() != traj.front().mesh.dim()) fail(ErrorCode::InvalidArgument, "kernel centre has wrong dimension");
}

/// u_{y,s}(t_i) for every snapshot with t_i < s.
NamedSeries u_series(const FlowTrajectory& traj, const SpacetimePoint& ys, const std::string& name) {
  NamedSeries out{name, {}, {}};
  for (const auto& snap : traj.snapshots) {
    if (snap.t >= ys.t0) break;
    out.t.push_back(snap.t);
    out.value.push_back(gaussian_density_u(snap, ys.x0, ys.t0));
  }
  return out;
}

double max_abs(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Largest value of series[j] - series[i] over adjacent pairs.
double max_increment(const std::vector<double>& v) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < v.size(); ++i) worst = std::max(worst, v[i] - v[i - 1]);
  return worst;
}

/// Per-snapshot data reused across kernel points.
struct DissipationData {
  Points x;
  Vec mass;
  Points H;
  std::vector<TangentBasis> bases;

  explicit DissipationData(const TriMesh& mesh)
      : x(mesh.vertices()), mass(vertex_areas(mesh)), H(mean_curvature_vector(mesh).values),
        bases(vertex_tangent_bases(mesh)) {}

  double operator()(const Vec& y, double tau) const {
    const int l = static_cast<int>(x.cols());
    const double norm = 1.0 / (4 * std::numbers::pi * tau);
    double sum = 0;
    for (int i = 0; i < x.rows(); ++i) {
      const Vec d = x.row(i).transpose() - y;
      const double phi = norm * std::exp(-d.squaredNorm() / (4 * tau));
      if (phi == 0) continue;
      const Vec v = H.row(i).transpose() + d / (2 * tau);
      sum += mass[i] * phi * normal_part(bases[i], v.head(l)).squaredNorm();
    }
    return sum;
  }
};

}  // namespace

VerificationReport verify_huisken(const FlowTrajectory& traj, const std::vector<SpacetimePoint>& grid,
                                  double rel_tol) {
  if (!traj.ambient.is_euclidean()) fail(ErrorCode::WrongAmbient, "verify_huisken requires a Euclidean trajectory");
  if (grid.empty()) fail(ErrorCode::InvalidArgument, "empty kernel grid");
  for (const auto& p : grid) check_kernel_point(traj, p);

  VerificationReport report;
  report.check_name = "huisken";
  report.params = {{"rel_tol", rel_tol}, {"grid_size", grid.size()}};

  std::vector<std::vector<double>> u(grid.size()), diss(grid.size());
  std::vector<std::vector<double>> t(grid.size());
  for (const auto& snap : traj.snapshots) {
    std::optional<DissipationData> data;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto& p = grid[g];
      if (snap.t >= p.t0) continue;
      if (!data) data.emplace(snap.mesh);
      t[g].push_back(snap.t);
      u[g].push_back(gaussian_density_u(snap, p.x0, p.t0));
      diss[g].push_back((*data)(p.x0, p.t0 - snap.t));
    }
  }

  double scale = 0;
  for (const auto& s : u) scale = std::max(scale, max_abs(s));
  double worst_increment = -std::numeric_limits<double>::infinity();
  double worst_mismatch = 0;
  nlohmann::json points = nlohmann::json::array();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double inc = max_increment(u[g]);
    double mismatch = 0;
    for (std::size_t i = 1; i < u[g].size(); ++i) {
      const double predicted = -0.5 * (t[g][i] - t[g][i - 1]) * (diss[g][i] + diss[g][i - 1]);
      mismatch = std::max(mismatch, std::abs((u[g][i] - u[g][i - 1]) - predicted));
    }
    worst_increment = std::max(worst_increment, inc);
    worst_mismatch = std::max(worst_mismatch, mismatch);
    points.push_back({{"y", vec_json(grid[g].x0)}, {"s", grid[g].t0}, {"max_increment", inc},
                      {"dissipation_mismatch", mismatch}, {"samples", u[g].size()}});
    report.series.push_back({"u[" + std::to_string(g) + "]", t[g], u[g]});
    report.series.push_back({"dissipation[" + std::to_string(g) + "]", t[g], diss[g]});
  }
  report.tolerance = rel_tol * scale;
  report.worst_violation = std::max(worst_increment, worst_mismatch / 10);
  report.details = {{"max_increment", worst_increment}, {"dissipation_mismatch", worst_mismatch},
                    {"u_scale", scale}, {"points", points}};
  report.finish();
  return report;
}

VerificationReport verify_J_monotone(const FlowTrajectory& traj, const SpacetimePoint& ys, double rel_tol,
                                     std::optional<double> K_override) {
  check_kernel_point(traj, ys);
  const double K = K_override.value_or(traj.K_used);
  VerificationReport report;
  report.check_name = "J_monotone";
  report.params = {{"y", vec_json(ys.x0)}, {"s", ys.t0}, {"K", K}, {"rel_tol", rel_tol}};

  NamedSeries u = u_series(traj, ys, "u");
  NamedSeries J{"J", u.t, {}};
  for (std::size_t i = 0; i < u.t.size(); ++i) J.value.push_back(J_quantity(u.value[i], K, ys.t0, u.t[i]));
  if (J.value.size() < 2) fail(ErrorCode::EmptyWindow, "fewer than two snapshots before the kernel time");

  report.tolerance = rel_tol * max_abs(J.value);
  report.worst_violation = max_increment(J.value);
  report.details = {{"u_max_increment", max_increment(u.value)}, {"samples", J.value.size()}};
  report.series = {u, J};
  report.finish();
  return report;
}

VerificationReport verify_almost_mono_u(const FlowTrajectory& traj, const SpacetimePoint& ys, double C, double tau,
                                        double rel_tol, bool adjacent_only) {
  check_kernel_point(traj, ys);
  if (!(tau > 0)) fail(ErrorCode::InvalidArgument, "tau must be positive");
  const double K = traj.K_used;
  VerificationReport report;
  report.check_name = "almost_mono_u";
  report.params = {{"y", vec_json(ys.x0)}, {"s", ys.t0}, {"C", C}, {"tau", tau}, {"K", K},
                   {"rel_tol", rel_tol}, {"adjacent_only", adjacent_only}};

  NamedSeries u = u_series(traj, ys, "u");
  const std::size_t n = u.t.size();
  double worst = -std::numeric_limits<double>::infinity();
  long pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double gap = u.t[j] - u.t[i];
      if (gap >= tau) break;
      worst = std::max(worst, u.value[j] - u.value[i] - C * K * K * gap);
      ++pairs;
      if (adjacent_only) break;
    }
  }
  if (pairs == 0) fail(ErrorCode::EmptyWindow, "no snapshot pairs closer than tau");
  report.tolerance = rel_tol * max_abs(u.value);
  report.worst_violation = worst;
  report.details = {{"pairs", pairs}};
  report.series = {u};
  report.finish();
  return report;
}

VerificationReport verify_entropy_almost_mono(const FlowTrajectory& traj, double epsilon0, double tau,
                                              const EntropySeriesOptions& opt) {
  if (traj.snapshots.empty()) fail(ErrorCode::InvalidArgument, "empty trajectory");
  if (opt.stride < 1) fail(ErrorCode::InvalidArgument, "stride must be at least 1");
  VerificationReport report;
  report.check_name = "entropy_almost_mono";
  report.params = {{"epsilon0", epsilon0}, {"tau", tau}, {"stride", opt.stride}};

  NamedSeries lambda{"lambda", {}, {}};
  const int n = static_cast<int>(traj.snapshots.size());
  for (int i = 0; i < n; ++i) {
    if (i % opt.stride != 0 && i != n - 1) continue;
    const auto& snap = traj.snapshots[i];
    const EntropyResult r = entropy(snap.mesh, opt.entropy);
    if (!r.converged) {
      fail(ErrorCode::OptimizerDiverged, "entropy ascent did not converge at t = " + format_double(snap.t));
    }
    lambda.t.push_back(snap.t);
    lambda.value.push_back(r.lambda);
  }
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lambda.t.size(); ++i) {
    for (std::size_t j = i + 1; j < lambda.t.size(); ++j) {
      if (lambda.t[j] - lambda.t[i] >= tau) break;
      worst = std::max(worst, lambda.value[j] - lambda.value[i] - epsilon0);
    }
  }
  if (!std::isfinite(worst)) worst = -epsilon0;
  report.tolerance = 0;
  report.worst_violation = worst;
  report.series = {lambda};
  report.finish();
  return report;
}

double ball_intersection_area(const TriMesh& mesh, const Vec& centre, double r) {
  if (!(r > 0)) fail(ErrorCode::InvalidArgument, "radius must be positive");
  const double r2 = r * r;
  double total = 0;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const auto& face = mesh.faces()[f];
    const Vec a = mesh.vertex(face[0]).transpose(), b = mesh.vertex(face[1]).transpose(),
              c = mesh.vertex(face[2]).transpose();
    const Vec g = (a + b + c) / 3;
    const double spread = std::max({(a - g).norm(), (b - g).norm(), (c - g).norm()});
    const double dist = (g - centre).norm();
    if (dist - spread > r) continue;
    const double area = face_area(mesh, f);
    if (dist + spread <= r) {
      total += area;
      continue;
    }
    // Uniform split into m^2 sub-triangles, each counted by its centroid.
    const int m = std::clamp(static_cast<int>(std::ceil(16 * spread / r)), 4, 256);
    const Vec e1 = (b - a) / m, e2 = (c - a) / m;
    long inside = 0;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; i + j < m; ++j) {
        const Vec base = a + i * e1 + j * e2;
        if ((base + (e1 + e2) / 3 - centre).squaredNorm() <= r2) ++inside;
        if (i + j + 1 < m && (base + 2 * (e1 + e2) / 3 - centre).squaredNorm() <= r2) ++inside;
      }
    }
    total += area * static_cast<double>(inside) / (static_cast<double>(m) * m);
  }
  return total;
}

VerificationReport volume_ratio_bound(const FlowTrajectory& traj, const std::vector<double>& radii,
                                      const std::vector<Vec>& centres, double S, double T) {
  if (traj.snapshots.empty()) fail(ErrorCode::InvalidArgument, "empty trajectory");
  if (!(S > 0) || !(T > 0)) fail(ErrorCode::InvalidArgument, "S and T must be positive");
  for (double r : radii) {
    if (!(r > 0) || r * r >= S) fail(ErrorCode::InvalidArgument, "radii must satisfy 0 < r < sqrt(S)");
  }
  const double V = std::exp(0.25) * traj.front().area / T;
  const double bound = V + 2 * S;
  VerificationReport report;
  report.check_name = "volume_ratio";
  report.params = {{"S", S}, {"T", T}, {"radii", radii}, {"centres", centres.size()}};

  NamedSeries ratio{"max_ratio", {}, {}};
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& snap : traj.snapshots) {
    if (snap.t <= T) continue;
    double best = 0;
    for (const auto& c : centres) {
      if (c.size() != snap.mesh.dim()) fail(ErrorCode::InvalidArgument, "centre has wrong dimension");
      for (double r : radii) best = std::max(best, ball_intersection_area(snap.mesh, c, r) / (r * r));
    }
    ratio.t.push_back(snap.t);
    ratio.value.push_back(best);
    worst = std::max(worst, best - bound);
  }
  if (ratio.t.empty()) fail(ErrorCode::EmptyWindow, "no snapshots after T");
  report.tolerance = 0;
  report.worst_violation = worst;
  report.details = {{"V", V}, {"bound", bound}};
  report.series = {ratio};
  report.finish();
  return report;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::RoundPoint: return "RoundPoint";
    case Verdict::NonRound: return "NonRound";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

double sphere_fit_error(const Points& points) {
  const int n = static_cast<int>(points.rows());
  if (n < 4) fail(ErrorCode::InvalidArgument, "sphere fit needs at least four points");
  const Eigen::RowVectorXd mean = points.colwise().mean();
  const Eigen::MatrixXd centred = points.rowwise() - mean;
  Eigen::MatrixXd y;
  Eigen::VectorXd out_of_plane = Eigen::VectorXd::Zero(n);
  if (points.cols() > 3) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(centred.transpose() * centred);
    const Eigen::MatrixXd frame = eig.eigenvectors().rightCols(3);
    y = centred * frame;
    out_of_plane = (centred - y * frame.transpose()).rowwise().norm();
  } else {
    y = centred;
  }
  Eigen::MatrixXd A(n, 4);
  A << 2 * y, Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd rhs = y.rowwise().squaredNorm();
  const Eigen::Vector4d sol = A.colPivHouseholderQr().solve(rhs);
  const Eigen::Vector3d c = sol.head<3>();
  const double R2 = sol[3] + c.squaredNorm();
  if (!(R2 > 0)) return std::numeric_limits<double>::infinity();
  const double R = std::sqrt(R2);
  double acc = 0;
  for (int i = 0; i < n; ++i) {
    const double radial = (y.row(i).transpose() - c).norm() - R;
    acc += radial * radial + out_of_plane[i] * out_of_plane[i];
  }
  return std::sqrt(acc / n) / R;
}

namespace {

/// Over values[from..]: all below `threshold`, or the last one below it with a
/// non-positive least-squares slope against the sample index.
bool trends_below(const std::vector<double>& values, std::size_t from, double threshold) {
  const std::size_t n = values.size() - from;
  if (std::all_of(values.begin() + from, values.end(), [&](double v) { return v < threshold; })) return true;
  if (!(values.back() < threshold) || n < 2) return false;
  double mean_k = 0, mean_v = 0;
  for (std::size_t k = 0; k < n; ++k) {
    mean_k += k;
    mean_v += values[from + k];
  }
  mean_k /= n;
  mean_v /= n;
  double cov = 0;
  for (std::size_t k = 0; k < n; ++k) cov += (k - mean_k) * (values[from + k] - mean_v);
  return cov <= 0;
}

}  // namespace

ExtinctionClassification classify_extinction(const FlowTrajectory& traj, const ClassifyOptions& opt) {
  using Kind = Termination::Kind;
  if (traj.termination.kind != Kind::Extinct && traj.termination.kind != Kind::Blowup) {
    fail(ErrorCode::NotExtinct, "trajectory ended with " + std::string(to_string(traj.termination.kind)));
  }
  if (opt.window < 2) fail(ErrorCode::InvalidArgument, "window must be at least 2");
  const double t_est = traj.termination.t_est;
  const Vec& x0 = traj.extinction_point;

  std::vector<int> picked;
  for (int i = static_cast<int>(traj.snapshots.size()) - 1; i >= 0 && static_cast<int>(picked.size()) < opt.window;
       --i) {
    if (traj.snapshots[i].t < t_est) picked.push_back(i);
  }
  std::reverse(picked.begin(), picked.end());
  if (picked.size() < 2) fail(ErrorCode::EmptyWindow, "fewer than two snapshots before the extinction time");

  ExtinctionClassification out;
  const SpacetimePoint unit = SpacetimePoint::make(Vec::Zero(x0.size()), 1.0);
  for (int i : picked) {
    const auto& snap = traj.snapshots[i];
    const double c = 1.0 / std::sqrt(t_est - snap.t);
    const Points moved = c * (snap.mesh.vertices().rowwise() - x0.transpose());
    const TriMesh rescaled = snap.mesh.with_vertices(moved);
    out.snapshot_indices.push_back(i);
    out.times.push_back(snap.t);
    out.residuals.push_back(shrinker_residual(rescaled, unit).l2);
    out.sphere_fit_errors.push_back(sphere_fit_error(moved));
  }

  const std::size_t half = out.residuals.size() / 2;
  const bool round = trends_below(out.residuals, half, opt.residual_threshold) &&
                     trends_below(out.sphere_fit_errors, half, opt.fit_threshold);
  bool high = true;
  for (std::size_t k = half; k < out.residuals.size(); ++k) high = high && out.residuals[k] > 2 * opt.residual_threshold;
  const bool plateau = out.residuals.back() >= 0.5 * out.residuals[half];
  if (round) {
    out.verdict = Verdict::RoundPoint;
  } else if (high && plateau) {
    out.verdict = Verdict::NonRound;
  } else {
    out.verdict = Verdict::Inconclusive;
  }
  return out;
}

ContinuityProbe entropy_continuity_probe(const std::vector<TriMesh>& family, const EntropyOptions& opt) {
  if (family.size() < 3) fail(ErrorCode::InvalidArgument, "continuity probe needs at least three members");
  for (const auto& m : family) {
    if (!m.shares_connectivity(family.front())) {
      fail(ErrorCode::ConnectivityMismatch, "family members must share connectivity");
    }
  }
  ContinuityProbe out;
  const int n = static_cast<int>(family.size());
  for (int i = 0; i < n; ++i) {
    out.s.push_back(static_cast<double>(i) / (n - 1));
    out.lambda.push_back(entropy(family[i], opt).lambda);
  }
  auto lipschitz = [&](int stride) {
    double best = 0;
    for (int i = stride; i < n; i += stride) {
      best = std::max(best, std::abs(out.lambda[i] - out.lambda[i - stride]) / (out.s[i] - out.s[i - stride]));
    }
    return best;
  };
  out.lipschitz_estimate = lipschitz(1);
  out.lipschitz_coarse = lipschitz(2);
  out.stable = out.lipschitz_estimate <= 1.5 * out.lipschitz_coarse || out.lipschitz_estimate < 1e-9;
  return out;
}

std::string_view to_string(PiecewiseOutcome v) {
  switch (v) {
    case PiecewiseOutcome::RoundPoint: return "RoundPoint";
    case PiecewiseOutcome::NonRound: return "NonRound";
    case PiecewiseOutcome::BudgetExhausted: return "BudgetExhausted";
    case PiecewiseOutcome::Inconclusive: return "Inconclusive";
  }
  return "?";
}

int PiecewiseFlowLog::accepted_count() const {
  return static_cast<int>(std::count_if(replacements.begin(), replacements.end(),
                                        [](const Replacement& r) { return r.accepted; }));
}

PiecewiseFlowLog piecewise_flow(const TriMesh& mesh, const AmbientSpace& ambient,
                                const PerturbationProvider& provider, const PiecewiseOptions& opt) {
  opt.flow.validate();
  opt.entropy.validate();
  const auto& budget = opt.budget;
  if (!(budget.epsilon > 0)) fail(ErrorCode::ValidationError, "epsilon: must be positive");
  if (budget.max_replacements < 0) fail(ErrorCode::ValidationError, "max_replacements: must be non-negative");

  PiecewiseFlowLog log;
  log.initial_entropy = entropy(mesh, opt.entropy).lambda;
  const double headroom = std::max(0.0, log.initial_entropy - 1 - budget.sigma);
  log.replacement_bound = static_cast<int>(std::floor(headroom / (budget.epsilon / 4))) + 1;
  const int limit = std::min(budget.max_replacements, log.replacement_bound);

  TriMesh current = mesh;
  double offset = 0;
  for (;;) {
    log.segments.push_back(run_flow(current, ambient, opt.flow));
    log.segment_start_times.push_back(offset);
    const FlowTrajectory& traj = log.segments.back();
    const auto kind = traj.termination.kind;
    if (kind != Termination::Kind::Extinct && kind != Termination::Kind::Blowup) {
      log.final_classification = PiecewiseOutcome::Inconclusive;
      log.detail = "segment ended with " + std::string(to_string(kind));
      return log;
    }
    const ExtinctionClassification cls = classify_extinction(traj, opt.classify);
    if (cls.verdict == Verdict::RoundPoint) {
      log.final_classification = PiecewiseOutcome::RoundPoint;
      return log;
    }
    if (cls.verdict == Verdict::Inconclusive) {
      log.final_classification = PiecewiseOutcome::Inconclusive;
      log.detail = "extinction classification inconclusive";
      return log;
    }
    if (log.accepted_count() >= limit) {
      log.final_classification = PiecewiseOutcome::BudgetExhausted;
      log.detail = "replacement limit " + std::to_string(limit) + " reached";
      return log;
    }

    // Time -1 slice of the tangent flow: first snapshot of the classified final half.
    const int idx = cls.snapshot_indices[cls.snapshot_indices.size() / 2];
    const Snapshot& snap = traj.snapshots[idx];
    RescaledSlice slice;
    slice.centre = traj.extinction_point;
    slice.c = 1.0 / std::sqrt(traj.termination.t_est - snap.t);
    slice.flow_time = offset + snap.t;
    slice.mesh = snap.mesh.with_vertices(slice.c * (snap.mesh.vertices().rowwise() - slice.centre.transpose()));

    const VertexField field = provider(slice);
    field.check_compatible(slice.mesh);
    const double before = entropy(slice.mesh, opt.entropy).lambda;

    std::optional<TriMesh> accepted_mesh;
    for (double scale : {1.0, 0.5}) {
      Replacement rec;
      rec.time = slice.flow_time;
      rec.entropy_before = before;
      rec.perturbation_id = opt.perturbation_id;
      rec.scale = scale;
      const TriMesh perturbed = apply_normal_graph(slice.mesh, field, scale, opt.graph);
      rec.entropy_after = entropy(perturbed, opt.entropy).lambda;
      rec.accepted = rec.entropy_after <= before - budget.epsilon / 2;
      log.replacements.push_back(rec);
      if (rec.accepted) {
        Points back = (perturbed.vertices() / slice.c).rowwise() + slice.centre.transpose();
        if (!ambient.is_euclidean()) {
          for (int i = 0; i < back.rows(); ++i) back.row(i) = project_to_ambient(ambient, back.row(i).transpose());
        }
        accepted_mesh = perturbed.with_vertices(std::move(back));
        break;
      }
    }
    if (!accepted_mesh) {
      log.final_classification = PiecewiseOutcome::NonRound;
      log.detail = "PerturbationRejected: entropy drop below epsilon / 2 at full and half scale";
      return log;
    }
    current = *accepted_mesh;
    offset = slice.flow_time;
  }
}

namespace providers {

namespace {
Vec outward(const TriMesh& mesh, const std::vector<TangentBasis>& bases, const Vec& centroid, int i) {
  return normal_part(bases[i], mesh.vertex(i).transpose() - centroid);
}
}  // namespace

PerturbationProvider zero() {
  return [](const RescaledSlice& s) { return VertexField::zeros(s.mesh); };
}

PerturbationProvider dilation(double amplitude) {
  return [amplitude](const RescaledSlice& s) {
    const auto bases = vertex_tangent_bases(s.mesh);
    const Vec centroid = vertex_centroid(s.mesh);
    VertexField out = VertexField::zeros(s.mesh);
    for (int i = 0; i < s.mesh.num_vertices(); ++i) out[i] = amplitude * outward(s.mesh, bases, centroid, i).transpose();
    return out;
  };
}

PerturbationProvider bump(double amplitude, double width) {
  if (!(width > 0)) fail(ErrorCode::InvalidArgument, "bump width must be positive");
  return [amplitude, width](const RescaledSlice& s) {
    const auto bases = vertex_tangent_bases(s.mesh);
    const Vec centroid = vertex_centroid(s.mesh);
    int peak = 0;
    s.mesh.vertices().col(0).maxCoeff(&peak);
    const Vec tip = s.mesh.vertex(peak).transpose();
    VertexField out = VertexField::zeros(s.mesh);
    for (int i = 0; i < s.mesh.num_vertices(); ++i) {
      const Vec n = outward(s.mesh, bases, centroid, i);
      const double len = n.norm();
      if (len == 0) continue;
      const double w = std::exp(-(s.mesh.vertex(i).transpose() - tip).squaredNorm() / (width * width));
      out[i] = (amplitude * w / len) * n.transpose();
    }
    return out;
  };
}

}  // namespace providers

}  // namespace mcflab
