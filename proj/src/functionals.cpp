#include "mcflab/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <string>

#include "mcflab/error.hpp"
#include "mcflab/geometry.hpp"
#include "mcflab/mesh_io.hpp"

namespace mcflab {

SpacetimePoint SpacetimePoint::make(Vec x0, double t0) {
  if (!(t0 > 0)) fail(ErrorCode::TimeNonPositive, "t0 must be positive, got " + format_double(t0));
  return {std::move(x0), t0};
}

namespace {

void check_point(const SpacetimePoint& p, int dim) {
  if (!(p.t0 > 0)) fail(ErrorCode::TimeNonPositive, "t0 must be positive, got " + format_double(p.t0));
  if (p.x0.size() != dim) fail(ErrorCode::InvalidArgument, "x0 has the wrong dimension");
}

double normalisation(double t0, double k) { return std::pow(4 * std::numbers::pi * t0, -0.5 * k); }

}  // namespace

SurfaceQuadrature::SurfaceQuadrature(const TriMesh& mesh, int order) {
  if (order != 1 && order != 3) fail(ErrorCode::InvalidArgument, "quadrature order must be 1 or 3");
  const int nf = mesh.num_faces();
  const Points& x = mesh.vertices();
  points_.resize(static_cast<Eigen::Index>(nf) * order, mesh.dim());
  weights_.resize(static_cast<Eigen::Index>(nf) * order);
  for (int f = 0; f < nf; ++f) {
    const Face& face = mesh.faces()[f];
    const double area = face_area(mesh, f);
    if (order == 1) {
      points_.row(f) = (x.row(face[0]) + x.row(face[1]) + x.row(face[2])) / 3.0;
      weights_[f] = area;
      continue;
    }
    for (int k = 0; k < 3; ++k) {
      const Eigen::Index row = static_cast<Eigen::Index>(f) * 3 + k;
      points_.row(row) = (2.0 / 3.0) * x.row(face[k]) +
                         (1.0 / 6.0) * (x.row(face[(k + 1) % 3]) + x.row(face[(k + 2) % 3]));
      weights_[row] = area / 3.0;
    }
  }
}

double SurfaceQuadrature::F(const SpacetimePoint& p, double k) const {
  check_point(p, dim());
  const double inv = 1.0 / (4 * p.t0);
  const int l = dim();
  double sum = 0;
  for (Eigen::Index i = 0; i < points_.rows(); ++i) {
    double r2 = 0;
    for (int c = 0; c < l; ++c) {
      const double d = points_(i, c) - p.x0[c];
      r2 += d * d;
    }
    sum += weights_[i] * std::exp(-r2 * inv);
  }
  return normalisation(p.t0, k) * sum;
}

SurfaceQuadrature::Gradient SurfaceQuadrature::F_gradient(const SpacetimePoint& p, double k) const {
  check_point(p, dim());
  const int l = dim();
  const double t0 = p.t0;
  Gradient g;
  g.d_x0 = Vec::Zero(l);
  Vec d(l);
  for (Eigen::Index i = 0; i < points_.rows(); ++i) {
    d = points_.row(i).transpose() - p.x0;
    const double r2 = d.squaredNorm();
    const double w = weights_[i] * std::exp(-r2 / (4 * t0));
    g.value += w;
    g.d_x0 += w * d;
    g.d_t0 += w * (r2 / (4 * t0 * t0) - k / (2 * t0));
  }
  const double norm = normalisation(t0, k);
  g.value *= norm;
  g.d_x0 *= norm / (2 * t0);
  g.d_t0 *= norm;
  return g;
}

double F_functional(const TriMesh& mesh, const SpacetimePoint& p, const KernelOptions& opt) {
  return SurfaceQuadrature(mesh, opt.quadrature).F(p, opt.k);
}

SurfaceQuadrature::Gradient F_gradient(const TriMesh& mesh, const SpacetimePoint& p, const KernelOptions& opt) {
  return SurfaceQuadrature(mesh, opt.quadrature).F_gradient(p, opt.k);
}

double gaussian_density_u(const Snapshot& snapshot, const Vec& y, double s, const KernelOptions& opt) {
  if (!(snapshot.t < s)) {
    fail(ErrorCode::TimeOrder, "density time " + format_double(snapshot.t) + " is not before " + format_double(s));
  }
  return F_functional(snapshot.mesh, {y, s - snapshot.t}, opt);
}

double gaussian_density_u(const FlowTrajectory& traj, const Vec& y, double s, double t, const KernelOptions& opt) {
  if (!(t < s)) fail(ErrorCode::TimeOrder, "density time " + format_double(t) + " is not before " + format_double(s));
  const Snapshot& snap = slice_at(traj, t);
  if (std::abs(snap.t - t) > 1e-12 * std::max(1.0, std::abs(t))) {
    fail(ErrorCode::InvalidArgument, "t = " + format_double(t) + " is not a snapshot time");
  }
  return gaussian_density_u(snap, y, s, opt);
}

double J_quantity(double u_value, double K, double s, double t) {
  if (!(t < s)) fail(ErrorCode::TimeOrder, "J needs t < s");
  if (!(K >= 0)) fail(ErrorCode::InvalidArgument, "K must be non-negative");
  return std::exp(K * K * (s - t) / 2) * u_value;
}

void EntropyOptions::validate() const {
  auto bad = [](const char* field, const std::string& why) {
    fail(ErrorCode::ValidationError, std::string(field) + ": " + why);
  };
  if (grid_nx < 1) bad("grid_nx", "must be at least 1");
  if (grid_nt < 1) bad("grid_nt", "must be at least 1");
  if (n_starts < 1) bad("n_starts", "must be at least 1");
  if (!(ascent_tol > 0)) bad("ascent_tol", "must be positive");
  if (max_iters < 0) bad("max_iters", "must be non-negative");
  if (grid_quadrature != 1 && grid_quadrature != 3) bad("grid_quadrature", "must be 1 or 3");
  if (quadrature != 1 && quadrature != 3) bad("quadrature", "must be 1 or 3");
  if (!(box_inflation >= 0)) bad("box_inflation", "must be non-negative");
}

namespace {

struct Candidate {
  double value;
  SpacetimePoint p;
};

// Larger value first; ties go to the smaller scale, then the lexicographically smaller centre.
bool better(const Candidate& a, const Candidate& b) {
  if (a.value != b.value) return a.value > b.value;
  if (a.p.t0 != b.p.t0) return a.p.t0 < b.p.t0;
  return std::lexicographical_compare(a.p.x0.data(), a.p.x0.data() + a.p.x0.size(), b.p.x0.data(),
                                      b.p.x0.data() + b.p.x0.size());
}

struct AscentOutcome {
  Candidate best;
  bool converged = false;
  int evaluations = 0;
};

// Gradient ascent in (x0, log t0) with the dilation-invariant metric |dx|^2 / t0 + dtau^2.
AscentOutcome ascend(const SurfaceQuadrature& quad, SpacetimePoint p, const Box& box, double T1, double T2,
                     const EntropyOptions& opt) {
  AscentOutcome out;
  auto clamp = [&](SpacetimePoint q) {
    q.x0 = q.x0.cwiseMax(box.lo).cwiseMin(box.hi);
    q.t0 = std::clamp(q.t0, T1, T2);
    return q;
  };
  p = clamp(std::move(p));
  auto g = quad.F_gradient(p);
  ++out.evaluations;
  for (int it = 0; it < opt.max_iters; ++it) {
    const Vec dx = p.t0 * g.d_x0;
    const double dtau = p.t0 * g.d_t0;
    const double slope = dx.squaredNorm() / p.t0 + dtau * dtau;
    if (std::sqrt(slope) < opt.ascent_tol) {
      out.converged = true;
      break;
    }
    bool accepted = false;
    bool stalled = false;
    for (double alpha = 1.0; alpha > 1e-12; alpha *= 0.5) {
      SpacetimePoint q = clamp({p.x0 + alpha * dx, p.t0 * std::exp(alpha * dtau)});
      // Predicted first-order gain along the (possibly clamped) step.
      const double gain = g.d_x0.dot(q.x0 - p.x0) + g.d_t0 * p.t0 * std::log(q.t0 / p.t0);
      if (!(gain > 0)) {
        stalled = true;
        break;
      }
      const auto gq = quad.F_gradient(q);
      ++out.evaluations;
      if (gq.value >= g.value + 1e-4 * gain) {
        stalled = gq.value - g.value <= 1e-15 * std::abs(g.value);
        p = std::move(q);
        g = gq;
        accepted = true;
        break;
      }
    }
    if (!accepted || stalled) {
      // No representable progress: either pinned against the box or at the
      // floating-point resolution of F near a maximum.
      out.converged = !accepted && stalled ? true : std::sqrt(slope) < 1e-6;
      break;
    }
  }
  out.best = {g.value, p};
  return out;
}

}  // namespace

EntropyResult entropy(const TriMesh& mesh, const EntropyOptions& opt) {
  opt.validate();
  if (!mesh.is_closed()) fail(ErrorCode::NonManifoldMesh, "entropy requires a closed mesh");
  const int l = mesh.dim();

  EntropyResult result;
  const double diam = diameter(mesh);
  const double h = mean_edge_length(mesh);
  result.search_box = Box::around(mesh.vertices(), opt.box_inflation);
  result.T1 = std::max(4 * h * h, 1e-4 * diam * diam);
  result.T2 = 4 * diam * diam;
  const Box& box = result.search_box;

  const SurfaceQuadrature grid_quad(mesh, opt.grid_quadrature);
  const SurfaceQuadrature fine_quad = opt.quadrature == opt.grid_quadrature ? grid_quad
                                                                             : SurfaceQuadrature(mesh, opt.quadrature);

  // Axes of the coarse grid; flat axes collapse to one value.
  std::vector<std::vector<double>> axes(l);
  Vec cell = Vec::Zero(l);
  for (int k = 0; k < l; ++k) {
    const double lo = box.lo[k], hi = box.hi[k];
    if (hi - lo <= 1e-12 * diam || opt.grid_nx == 1) {
      axes[k].push_back(0.5 * (lo + hi));
      continue;
    }
    cell[k] = (hi - lo) / (opt.grid_nx - 1);
    for (int i = 0; i < opt.grid_nx; ++i) axes[k].push_back(i == opt.grid_nx - 1 ? hi : lo + i * cell[k]);
  }
  std::vector<double> scales;
  const double log_lo = std::log(result.T1), log_hi = std::log(result.T2);
  const double dlog = opt.grid_nt > 1 ? (log_hi - log_lo) / (opt.grid_nt - 1) : 0.0;
  if (opt.grid_nt == 1) {
    scales.push_back(std::exp(0.5 * (log_lo + log_hi)));
  } else {
    for (int i = 0; i < opt.grid_nt; ++i) scales.push_back(std::exp(log_lo + i * dlog));
  }

  std::vector<Candidate> grid;
  std::vector<std::size_t> idx(l, 0);
  for (;;) {
    Vec x0(l);
    for (int k = 0; k < l; ++k) x0[k] = axes[k][idx[k]];
    for (double t0 : scales) {
      SpacetimePoint p{x0, t0};
      grid.push_back({grid_quad.F(p), std::move(p)});
    }
    int k = 0;
    while (k < l && ++idx[k] == axes[k].size()) idx[k++] = 0;
    if (k == l) break;
  }
  result.evaluations = static_cast<int>(grid.size());
  std::sort(grid.begin(), grid.end(), better);
  result.grid_max = grid.front().value;

  std::mt19937_64 rng(opt.seed);
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5; };

  const int starts = std::min<int>(opt.n_starts, static_cast<int>(grid.size()));
  std::optional<Candidate> best;
  bool best_converged = false;
  for (int s = 0; s < starts; ++s) {
    // Jitter by a fraction of a grid cell; relative units keep the search covariant
    // under dilations and translations of the mesh.
    SpacetimePoint start = grid[s].p;
    for (int k = 0; k < l; ++k) start.x0[k] += 0.25 * cell[k] * uniform();
    start.t0 *= std::exp(0.25 * dlog * uniform());
    const AscentOutcome run = ascend(fine_quad, start, box, result.T1, result.T2, opt);
    result.evaluations += run.evaluations;
    if (!best || better(run.best, *best)) {
      best = run.best;
      best_converged = run.converged;
    }
  }
  result.starts_tried = starts;

  // The grid maximum competes only when it was evaluated with the same rule.
  if (opt.grid_quadrature == opt.quadrature && better(grid.front(), *best)) {
    best = grid.front();
    best_converged = false;
  }
  result.lambda = best->value;
  result.argmax = best->p;
  result.converged = best_converged;
  return result;
}

ShrinkerResidual shrinker_residual(const TriMesh& mesh, const SpacetimePoint& p) {
  check_point(p, mesh.dim());
  const VertexField h = mean_curvature_vector(mesh);
  const auto bases = vertex_tangent_bases(mesh);
  const Vec area = vertex_areas(mesh);
  ShrinkerResidual out;
  out.field = VertexField::zeros(mesh);
  double sum = 0;
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    const Vec x = mesh.vertex(i);
    // H is normal in the continuum; its discrete tangential part is an O(h) artefact.
    const Vec r = normal_part(bases[i], h[i].transpose() + (x - p.x0) / (2 * p.t0));
    out.field.values.row(i) = r.transpose();
    sum += area[i] * r.squaredNorm();
  }
  out.l2 = std::sqrt(sum / area.sum());
  return out;
}

void write_F_grid_csv(std::ostream& out, const TriMesh& mesh, const std::vector<Vec>& centres,
                      const std::vector<double>& scales, const KernelOptions& opt) {
  const SurfaceQuadrature quad(mesh, opt.quadrature);
  for (int k = 0; k < mesh.dim(); ++k) out << "x0_" << (k + 1) << ',';
  out << "t0,F\n";
  for (const Vec& c : centres) {
    for (double t0 : scales) {
      const double f = quad.F(SpacetimePoint::make(c, t0), opt.k);
      for (int k = 0; k < c.size(); ++k) out << format_double(c[k]) << ',';
      out << format_double(t0) << ',' << format_double(f) << '\n';
    }
  }
}

}  // namespace mcflab
