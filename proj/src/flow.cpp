#include "mcflab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "mcflab/error.hpp"
#include "mcflab/geometry.hpp"

namespace mcflab {

std::string_view to_string(Scheme scheme) {
  return scheme == Scheme::Explicit ? "explicit" : "semi_implicit";
}

Scheme scheme_from_string(std::string_view name) {
  if (name == "explicit") return Scheme::Explicit;
  if (name == "semi_implicit") return Scheme::SemiImplicit;
  fail(ErrorCode::ValidationError, "scheme: must be 'explicit' or 'semi_implicit', got '" + std::string(name) + "'");
}

std::string_view to_string(Tangential mode) {
  switch (mode) {
    case Tangential::Full: return "full";
    case Tangential::None: return "none";
    case Tangential::Scaled: return "scaled";
  }
  return "?";
}

Tangential tangential_from_string(std::string_view name) {
  for (auto m : {Tangential::Full, Tangential::None, Tangential::Scaled}) {
    if (to_string(m) == name) return m;
  }
  fail(ErrorCode::ValidationError, "tangential: must be 'full', 'none' or 'scaled', got '" + std::string(name) + "'");
}

std::string_view to_string(Termination::Kind kind) {
  switch (kind) {
    case Termination::Kind::Extinct: return "Extinct";
    case Termination::Kind::QualityStop: return "QualityStop";
    case Termination::Kind::StepLimit: return "StepLimit";
    case Termination::Kind::Blowup: return "Blowup";
    case Termination::Kind::NumericalFailure: return "NumericalFailure";
  }
  return "?";
}

Termination::Kind termination_from_string(std::string_view name) {
  for (auto k : {Termination::Kind::Extinct, Termination::Kind::QualityStop, Termination::Kind::StepLimit,
                 Termination::Kind::Blowup, Termination::Kind::NumericalFailure}) {
    if (to_string(k) == name) return k;
  }
  fail(ErrorCode::ParseError, "unknown termination kind '" + std::string(name) + "'");
}

void FlowConfig::validate() const {
  auto bad = [](const char* field, const std::string& why) {
    fail(ErrorCode::ValidationError, std::string(field) + ": " + why);
  };
  if (!(dt_initial > 0)) bad("dt_initial", "must be positive");
  if (!(c_stab > 0 && c_stab <= 1)) bad("c_stab", "must lie in (0, 1]");
  if (max_steps < 0) bad("max_steps", "must be non-negative");
  if (!(stop_area > 0)) bad("stop_area", "must be positive");
  if (!(stop_quality >= 0 && stop_quality < 1)) bad("stop_quality", "must lie in [0, 1)");
  if (snapshot_stride < 1) bad("snapshot_stride", "must be at least 1");
  if (extinction_fit_window < 2) bad("extinction_fit_window", "must be at least 2");
  if (!(redistribution >= 0)) bad("redistribution", "must be non-negative");
}

namespace {

bool is_curved(const AmbientSpace& ambient) { return !ambient.is_euclidean(); }

Points forcing_field(const TriMesh& mesh, const AmbientSpace& ambient, const std::vector<TangentBasis>& bases) {
  Points p = Points::Zero(mesh.num_vertices(), mesh.dim());
  if (!is_curved(ambient)) return p;
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    const Vec x = mesh.vertex(i);
    const Eigen::MatrixXd frame = tangent_frame(ambient, x, bases[i]);
    p.row(i) = forcing_term(ambient, x, frame).transpose();
  }
  return p;
}

Points project_all(const AmbientSpace& ambient, Points x) {
  if (!is_curved(ambient)) return x;
  for (int i = 0; i < x.rows(); ++i) {
    try {
      x.row(i) = project_to_ambient(ambient, x.row(i).transpose()).transpose();
    } catch (const Error& e) {
      fail(ErrorCode::ProjectionFailure, "vertex " + std::to_string(i) + ": " + e.what());
    }
  }
  return x;
}

Points solve_semi_implicit(const CotanLaplacian& op, const Points& x, const Points& forcing, double dt) {
  const int n = static_cast<int>(x.rows());
  Eigen::SparseMatrix<double> system = -dt * op.stiffness;
  for (int i = 0; i < n; ++i) system.coeffRef(i, i) += op.mass[i];
  system.makeCompressed();

  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(1e-12);
  cg.setMaxIterations(std::max(200, 4 * n));
  cg.compute(system);

  Points out(x.rows(), x.cols());
  std::optional<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> direct;
  for (int k = 0; k < x.cols(); ++k) {
    const Vec rhs = op.mass.cwiseProduct(x.col(k) + dt * forcing.col(k));
    Vec sol = cg.solveWithGuess(rhs, x.col(k));
    if (cg.info() != Eigen::Success || !sol.allFinite()) {
      if (!direct) {
        direct.emplace(system);
        if (direct->info() != Eigen::Success) {
          fail(ErrorCode::LinearSolveFailure, "backward Euler system is not positive definite");
        }
      }
      sol = direct->solve(rhs);
      if (direct->info() != Eigen::Success || !sol.allFinite()) {
        fail(ErrorCode::LinearSolveFailure, "backward Euler solve failed");
      }
    }
    out.col(k) = sol;
  }
  return out;
}

}  // namespace

namespace {

TriMesh step_with_bases(const TriMesh& mesh, const AmbientSpace& ambient, double dt, Scheme scheme,
                        Tangential tangential, double redistribution, const std::vector<TangentBasis>& bases) {
  const CotanLaplacian op = cotan_laplacian(mesh);
  const Points forcing = forcing_field(mesh, ambient, bases);
  const Points& x = mesh.vertices();

  Points h = op.stiffness * x;
  for (int i = 0; i < h.rows(); ++i) h.row(i) /= op.mass[i];

  Points next;
  if (scheme == Scheme::Explicit) {
    next = x + dt * (h + forcing);
  } else {
    next = solve_semi_implicit(op, x, forcing, dt);
  }
  // Per-vertex weight on tangential motion, shared by the scheme's own drift and
  // the redistribution term.
  Vec keep = Vec::Ones(next.rows());
  if (tangential == Tangential::None) keep.setZero();
  if (tangential == Tangential::Scaled && is_curved(ambient)) {
    for (int i = 0; i < next.rows(); ++i) {
      const double hn = normal_part(bases[i], h.row(i).transpose()).norm();
      const double vn = normal_part(bases[i], (h.row(i) + forcing.row(i)).transpose()).norm();
      keep[i] = hn > 0 ? std::min(1.0, vn / hn) : 1.0;
    }
  }
  if (tangential != Tangential::Full) {
    for (int i = 0; i < next.rows(); ++i) {
      const Vec d = (next.row(i) - x.row(i)).transpose();
      const Vec dn = normal_part(bases[i], d);
      next.row(i) = x.row(i) + (dn + keep[i] * (d - dn)).transpose();
    }
  }
  if (redistribution > 0) {
    const double h_mean = mean_edge_length(mesh);
    const double w = std::min(0.5, redistribution * dt / (h_mean * h_mean));
    const auto& nbrs = mesh.topology().vertex_neighbors;
    for (int i = 0; i < next.rows(); ++i) {
      Vec u = -x.row(i).transpose();
      for (int j : nbrs[i]) u += x.row(j).transpose() / static_cast<double>(nbrs[i].size());
      next.row(i) += (w * keep[i]) * (u - normal_part(bases[i], u)).transpose();
    }
  }
  next = project_all(ambient, std::move(next));
  if (!next.allFinite()) fail(ErrorCode::LinearSolveFailure, "non-finite vertex positions");
  try {
    return mesh.with_vertices(std::move(next));
  } catch (const Error& e) {
    fail(ErrorCode::QualityCollapse, e.what());
  }
}

}  // namespace

TriMesh step(const TriMesh& mesh, const AmbientSpace& ambient, double dt, Scheme scheme, Tangential tangential,
             double redistribution) {
  if (!(dt >= 0)) fail(ErrorCode::InvalidArgument, "time step must be non-negative");
  if (ambient.dim() != mesh.dim()) fail(ErrorCode::InvalidArgument, "mesh and ambient dimensions differ");
  if (dt == 0) return mesh;
  return step_with_bases(mesh, ambient, dt, scheme, tangential, redistribution, vertex_tangent_bases(mesh));
}

std::vector<double> FlowTrajectory::times() const {
  std::vector<double> t;
  t.reserve(snapshots.size());
  for (const auto& s : snapshots) t.push_back(s.t);
  return t;
}

std::vector<double> FlowTrajectory::max_A_series() const {
  std::vector<double> a;
  a.reserve(snapshots.size());
  for (const auto& s : snapshots) a.push_back(s.max_A);
  return a;
}

double extrapolate_extinction(const std::vector<double>& times, const std::vector<double>& areas, int window) {
  if (times.size() != areas.size()) fail(ErrorCode::InvalidArgument, "time and area series differ in length");
  const int n = static_cast<int>(times.size());
  const int k = std::min(n, window);
  if (k < 2) fail(ErrorCode::EmptyWindow, "need two samples to extrapolate the extinction time");
  double st = 0, sa = 0, stt = 0, sta = 0;
  for (int i = n - k; i < n; ++i) {
    const double t = times[i];
    const double a = areas[i];
    st += t;
    sa += a;
    stt += t * t;
    sta += t * a;
  }
  const double denom = k * stt - st * st;
  const double slope = (k * sta - st * sa) / denom;
  const double intercept = (sa - slope * st) / k;
  if (!(slope < 0)) return times.back();
  return std::max(times.back(), -intercept / slope);
}

FlowTrajectory run_flow(const TriMesh& mesh, const AmbientSpace& ambient, const FlowConfig& config) {
  config.validate();
  if (ambient.dim() != mesh.dim()) fail(ErrorCode::InvalidArgument, "mesh and ambient dimensions differ");
  if (!mesh.is_closed()) fail(ErrorCode::NonManifoldMesh, "flow requires a closed mesh");

  FlowTrajectory traj;
  traj.ambient = ambient;
  traj.K_used = ambient.forcing_bound_K();
  traj.config = config;

  TriMesh current = is_curved(ambient) ? mesh.with_vertices(project_all(ambient, mesh.vertices())) : mesh;
  const double blowup_threshold = 1e3 / diameter(current);

  double t = 0;
  int steps = 0;
  std::vector<double> recent_t, recent_area;
  for (;;) {
    const double area = surface_area(current);
    recent_t.push_back(t);
    recent_area.push_back(area);
    if (static_cast<int>(recent_t.size()) > 2 * config.extinction_fit_window) {
      recent_t.erase(recent_t.begin(), recent_t.end() - config.extinction_fit_window);
      recent_area.erase(recent_area.begin(), recent_area.end() - config.extinction_fit_window);
    }
    const auto bases = vertex_tangent_bases(current);
    const double a2 = second_fundamental_norm_sq(current, bases).maxCoeff();
    const double max_A = std::sqrt(a2);

    std::optional<Termination> stop;
    if (area < config.stop_area) {
      stop = Termination{Termination::Kind::Extinct, 0, "area below stop_area"};
    } else if (min_face_quality(current) < config.stop_quality) {
      stop = Termination{Termination::Kind::QualityStop, 0, "triangle quality below stop_quality"};
    } else if (max_A > blowup_threshold) {
      stop = Termination{Termination::Kind::Blowup, t, "max |A| exceeded 1e3 / initial diameter"};
    } else if (steps >= config.max_steps) {
      stop = Termination{Termination::Kind::StepLimit, 0, "max_steps reached"};
    }

    if (stop || steps % config.snapshot_stride == 0) {
      traj.snapshots.push_back({t, current, area, max_A});
    }
    if (stop) {
      traj.termination = *stop;
      break;
    }

    const double dt = std::min(config.dt_initial, a2 > 0 ? config.c_stab / a2 : config.dt_initial);
    try {
      current = step_with_bases(current, ambient, dt, config.scheme, config.tangential, config.redistribution, bases);
    } catch (const Error& e) {
      traj.termination = {Termination::Kind::NumericalFailure, 0, e.what()};
      if (traj.snapshots.back().t != t) traj.snapshots.push_back({t, current, area, max_A});
      break;
    }
    t += dt;
    ++steps;
  }
  traj.steps = steps;

  if (traj.termination.kind == Termination::Kind::Extinct) {
    traj.termination.t_est = extrapolate_extinction(recent_t, recent_area, config.extinction_fit_window);
  }

  const TriMesh& last = traj.back().mesh;
  const Vec mass = vertex_areas(last);
  Vec centre = (last.vertices().transpose() * mass) / mass.sum();
  if (is_curved(ambient)) {
    try {
      centre = project_to_ambient(ambient, centre);
    } catch (const Error&) {
      // Centroid too deep inside N's tube; keep the Euclidean centroid.
    }
  }
  traj.extinction_point = centre;
  return traj;
}

FlowTrajectory rescale_trajectory(const FlowTrajectory& traj, const Vec& x0, double t0, double c, double s_lo,
                                  double s_hi) {
  if (!(c > 0)) fail(ErrorCode::InvalidArgument, "rescaling factor must be positive");
  if (x0.size() != traj.ambient.dim()) fail(ErrorCode::InvalidArgument, "rescaling centre has wrong dimension");
  if (traj.snapshots.empty() || t0 < traj.front().t) {
    fail(ErrorCode::InvalidArgument, "rescaling time precedes the trajectory");
  }
  FlowTrajectory out;
  out.ambient = traj.ambient.affine(c, Vec(-c * x0));
  out.K_used = traj.K_used / c;
  out.config = traj.config;
  out.steps = traj.steps;
  out.termination = traj.termination;
  out.termination.t_est = c * c * (traj.termination.t_est - t0);
  if (traj.extinction_point.size() == x0.size()) out.extinction_point = c * (traj.extinction_point - x0);

  for (const Snapshot& s : traj.snapshots) {
    const double time = c * c * (s.t - t0);
    if (time < s_lo || time > s_hi) continue;
    Points x = (c * (s.mesh.vertices().rowwise() - x0.transpose())).eval();
    out.snapshots.push_back({time, s.mesh.with_vertices(std::move(x)), c * c * s.area, s.max_A / c});
  }
  if (out.snapshots.empty()) fail(ErrorCode::EmptyWindow, "no snapshots inside the rescaled time window");
  return out;
}

const Snapshot& slice_at(const FlowTrajectory& traj, double t) {
  if (traj.snapshots.empty()) fail(ErrorCode::EmptyWindow, "trajectory has no snapshots");
  const auto it = std::min_element(traj.snapshots.begin(), traj.snapshots.end(),
                                   [t](const Snapshot& a, const Snapshot& b) {
                                     return std::abs(a.t - t) < std::abs(b.t - t);
                                   });
  return *it;
}

DerivativeCheck flow_derivative_check(const FlowTrajectory& traj, const Vec& x0, double t0, int index) {
  const int n = static_cast<int>(traj.snapshots.size());
  if (index <= 0 || index >= n - 1) {
    fail(ErrorCode::BoundarySnapshot, "derivative check needs neighbouring snapshots on both sides");
  }
  const Snapshot& here = traj.snapshots[index];
  const double tau = t0 - here.t;
  if (!(tau > 0)) fail(ErrorCode::TimeOrder, "kernel time must exceed the snapshot time");
  const double norm = 1.0 / (4 * std::numbers::pi * tau);

  auto psi = [&](const Eigen::Ref<const Vec>& x) { return norm * std::exp(-(x - x0).squaredNorm() / (4 * tau)); };
  auto integral = [&](const TriMesh& m) {
    const Vec a = vertex_areas(m);
    double sum = 0;
    for (int i = 0; i < m.num_vertices(); ++i) sum += a[i] * psi(m.vertices().row(i).transpose());
    return sum;
  };

  const Snapshot& prev = traj.snapshots[index - 1];
  const Snapshot& next = traj.snapshots[index + 1];
  DerivativeCheck out;
  out.lhs = (integral(next.mesh) - integral(prev.mesh)) / (next.t - prev.t);

  const TriMesh& m = here.mesh;
  const CotanLaplacian op = cotan_laplacian(m);
  const Points h = op.stiffness * m.vertices();
  const Points p = forcing_field(m, traj.ambient, vertex_tangent_bases(m));
  for (int i = 0; i < m.num_vertices(); ++i) {
    const Vec x = m.vertices().row(i).transpose();
    const Vec hi = h.row(i).transpose() / op.mass[i];
    const Vec pi = p.row(i).transpose();
    const double w = psi(x);
    const Vec grad = -w * (x - x0) / (2 * tau);
    out.rhs += op.mass[i] * (-w * hi.squaredNorm() + grad.dot(hi) + (grad - w * hi).dot(pi));
  }
  out.gap = std::abs(out.lhs - out.rhs);
  return out;
}

}  // namespace mcflab
