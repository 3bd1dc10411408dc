#include "mcflab/ambient.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mcflab/error.hpp"

namespace mcflab {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Box Box::around(const Points& points, double inflate) {
  Box b;
  b.lo = points.colwise().minCoeff().transpose();
  b.hi = points.colwise().maxCoeff().transpose();
  const Vec mid = 0.5 * (b.lo + b.hi);
  const Vec half = 0.5 * (b.hi - b.lo) * (1.0 + inflate);
  b.lo = mid - half;
  b.hi = mid + half;
  return b;
}

bool Box::contains(const Vec& x, double slack) const {
  for (int i = 0; i < dim(); ++i) {
    if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) return false;
  }
  return true;
}

namespace {

constexpr int kNewtonIterations = 50;

void check_dim(const AmbientSpace& a, const Vec& x) {
  if (x.size() != a.dim()) {
    fail(ErrorCode::InvalidArgument, "point has dimension " + std::to_string(x.size()) +
                                         ", ambient lives in R^" + std::to_string(a.dim()));
  }
}

// Embeds a 2-vector into R^4 at coordinates (k, k+1).
Vec pad4(const Eigen::Vector2d& v, int k) {
  Vec out = Vec::Zero(4);
  out.segment<2>(k) = v;
  return out;
}

// Columns codim.. of a full orthonormal basis whose leading columns span `normals`.
Eigen::MatrixXd tangent_complement(const Eigen::MatrixXd& normals, int dim) {
  if (normals.cols() == 0) return Eigen::MatrixXd::Identity(dim, dim);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(normals);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, dim);
  return q.rightCols(dim - normals.cols());
}

double closest_distance(const Eigen::VectorXd& c, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return (c.cwiseMax(lo).cwiseMin(hi) - c).norm();
}

double farthest_distance(const Eigen::VectorXd& c, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return (c - lo).cwiseAbs().cwiseMax((c - hi).cwiseAbs()).norm();
}

}  // namespace

AmbientSpace::AmbientSpace(int dim, Kind kind) : dim_(dim), kind_(std::move(kind)) {}

AmbientSpace AmbientSpace::euclidean(int dim) {
  if (dim < 3) fail(ErrorCode::InvalidArgument, "ambient dimension must be at least 3");
  AmbientSpace a(dim, Euclidean{});
  a.finalize({});
  return a;
}

AmbientSpace AmbientSpace::round_sphere(int dim, double radius, std::optional<Vec> center) {
  if (dim < 3) fail(ErrorCode::InvalidArgument, "sphere ambient needs l >= 3");
  if (!(radius > 0)) fail(ErrorCode::InvalidArgument, "sphere radius must be positive");
  Vec c = center.value_or(Vec::Zero(dim));
  if (c.size() != dim) fail(ErrorCode::InvalidArgument, "sphere center has wrong dimension");
  AmbientSpace a(dim, RoundSphere{radius, std::move(c)});
  a.finalize({});
  return a;
}

AmbientSpace AmbientSpace::clifford_torus(double r1, double r2, std::optional<Vec> center) {
  if (!(r1 > 0) || !(r2 > 0)) fail(ErrorCode::InvalidArgument, "torus radii must be positive");
  Vec c = center.value_or(Vec::Zero(4));
  if (c.size() != 4) fail(ErrorCode::InvalidArgument, "torus center must lie in R^4");
  AmbientSpace a(4, CliffordTorus{r1, r2, std::move(c)});
  a.finalize({});
  return a;
}

AmbientSpace AmbientSpace::implicit(Polynomial phi, const Box& region) {
  const int dim = phi.num_vars();
  if (dim < 3) fail(ErrorCode::InvalidArgument, "implicit ambient needs l >= 3");
  if (region.dim() != dim) fail(ErrorCode::InvalidArgument, "region dimension mismatch");
  if (phi.degree() < 1) fail(ErrorCode::InvalidArgument, "level function must be non-constant");
  AmbientSpace a(dim, Implicit{std::move(phi)});
  a.finalize(region);
  return a;
}

void AmbientSpace::finalize(std::optional<Box> region) {
  region_ = std::move(region);
  std::visit(overloaded{
                 [&](const Euclidean&) {
                   length_scale_ = 1.0;
                   forcing_bound_ = 0.0;
                 },
                 [&](const RoundSphere& s) {
                   length_scale_ = s.radius;
                   forcing_bound_ = 2.0 / s.radius;
                 },
                 [&](const CliffordTorus& t) {
                   length_scale_ = std::max(t.r1, t.r2);
                   forcing_bound_ = 2.0 / std::min(t.r1, t.r2);
                 },
                 [&](const Implicit&) {
                   length_scale_ = 0.5 * (region_->hi - region_->lo).norm();
                   if (!(length_scale_ > 0)) length_scale_ = 1.0;
                   forcing_bound_ = curvature_bound_K(*this, *region_, 2);
                 },
             },
             kind_);
}

std::string AmbientSpace::kind_name() const {
  return std::visit(overloaded{
                        [](const Euclidean&) { return std::string("euclidean"); },
                        [](const RoundSphere&) { return std::string("sphere"); },
                        [](const CliffordTorus&) { return std::string("clifford_torus"); },
                        [](const Implicit&) { return std::string("implicit"); },
                    },
                    kind_);
}

int AmbientSpace::codim() const {
  return std::visit(overloaded{
                        [](const Euclidean&) { return 0; },
                        [](const RoundSphere&) { return 1; },
                        [](const CliffordTorus&) { return 2; },
                        [](const Implicit&) { return 1; },
                    },
                    kind_);
}

Vec AmbientSpace::constraint_values(const Vec& x) const {
  check_dim(*this, x);
  return std::visit(overloaded{
                        [](const Euclidean&) { return Vec(0); },
                        [&](const RoundSphere& s) {
                          Vec g(1);
                          g[0] = ((x - s.center).squaredNorm() - s.radius * s.radius) / (2 * s.radius);
                          return g;
                        },
                        [&](const CliffordTorus& t) {
                          const Vec d = x - t.center;
                          Vec g(2);
                          g[0] = (d.head<2>().squaredNorm() - t.r1 * t.r1) / (2 * t.r1);
                          g[1] = (d.tail<2>().squaredNorm() - t.r2 * t.r2) / (2 * t.r2);
                          return g;
                        },
                        [&](const Implicit& im) {
                          Vec g(1);
                          g[0] = im.phi(x);
                          return g;
                        },
                    },
                    kind_);
}

Eigen::MatrixXd AmbientSpace::constraint_gradients(const Vec& x) const {
  check_dim(*this, x);
  return std::visit(overloaded{
                        [&](const Euclidean&) { return Eigen::MatrixXd(dim_, 0); },
                        [&](const RoundSphere& s) {
                          Eigen::MatrixXd g = (x - s.center) / s.radius;
                          return g;
                        },
                        [&](const CliffordTorus& t) {
                          const Vec d = x - t.center;
                          Eigen::MatrixXd g = Eigen::MatrixXd::Zero(4, 2);
                          g.block<2, 1>(0, 0) = d.head<2>() / t.r1;
                          g.block<2, 1>(2, 1) = d.tail<2>() / t.r2;
                          return g;
                        },
                        [&](const Implicit& im) {
                          Eigen::MatrixXd g = im.phi.gradient(x);
                          return g;
                        },
                    },
                    kind_);
}

double AmbientSpace::surface_residual(const Vec& x) const {
  check_dim(*this, x);
  return std::visit(overloaded{
                        [](const Euclidean&) { return 0.0; },
                        [&](const RoundSphere& s) { return std::abs((x - s.center).norm() - s.radius); },
                        [&](const CliffordTorus& t) {
                          const Vec d = x - t.center;
                          return std::hypot(d.head<2>().norm() - t.r1, d.tail<2>().norm() - t.r2);
                        },
                        [&](const Implicit& im) {
                          const double g = im.phi.gradient(x).norm();
                          if (g == 0) return std::numeric_limits<double>::infinity();
                          return std::abs(im.phi(x)) / g;
                        },
                    },
                    kind_);
}

Eigen::MatrixXd AmbientSpace::normal_basis(const Vec& x) const {
  Eigen::MatrixXd g = constraint_gradients(x);
  for (int k = 0; k < g.cols(); ++k) {
    const double n = g.col(k).norm();
    if (n == 0) fail(ErrorCode::OutsideTube, "normal direction undefined at this point");
    g.col(k) /= n;
  }
  return g;
}

Eigen::MatrixXd AmbientSpace::tangent_projector(const Vec& x) const {
  const Eigen::MatrixXd n = normal_basis(x);
  return Eigen::MatrixXd::Identity(dim_, dim_) - n * n.transpose();
}

Vec AmbientSpace::second_fundamental_form(const Vec& x, const Vec& v, const Vec& w) const {
  check_dim(*this, x);
  return std::visit(overloaded{
                        [&](const Euclidean&) { return Vec(Vec::Zero(dim_)); },
                        [&](const RoundSphere& s) {
                          const Vec n = (x - s.center).normalized();
                          return Vec(-v.dot(w) / s.radius * n);
                        },
                        [&](const CliffordTorus& t) {
                          const Vec d = x - t.center;
                          const Eigen::Vector2d n1 = d.head<2>().normalized();
                          const Eigen::Vector2d n2 = d.tail<2>().normalized();
                          const double b1 = v.head<2>().dot(w.head<2>()) / t.r1;
                          const double b2 = v.tail<2>().dot(w.tail<2>()) / t.r2;
                          return Vec(-b1 * pad4(n1, 0) - b2 * pad4(n2, 2));
                        },
                        [&](const Implicit& im) {
                          const Vec g = im.phi.gradient(x);
                          const double gn = g.norm();
                          const double h = v.dot(im.phi.hessian(x) * w);
                          return Vec(-h / gn * (g / gn));
                        },
                    },
                    kind_);
}

double AmbientSpace::max_normal_curvature(const Vec& x) const {
  check_dim(*this, x);
  return std::visit(overloaded{
                        [](const Euclidean&) { return 0.0; },
                        [](const RoundSphere& s) { return 1.0 / s.radius; },
                        [](const CliffordTorus& t) { return 1.0 / std::min(t.r1, t.r2); },
                        [&](const Implicit& im) {
                          const Vec g = im.phi.gradient(x);
                          const double gn = g.norm();
                          if (gn == 0) return std::numeric_limits<double>::infinity();
                          const Eigen::MatrixXd t = tangent_complement(g / gn, dim_);
                          const Eigen::MatrixXd m = t.transpose() * im.phi.hessian(x) * t / gn;
                          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
                          return eig.eigenvalues().cwiseAbs().maxCoeff();
                        },
                    },
                    kind_);
}

AmbientSpace AmbientSpace::affine(double scale, const Vec& shift) const {
  if (!(scale > 0)) fail(ErrorCode::InvalidArgument, "similarity scale must be positive");
  if (shift.size() != dim_) fail(ErrorCode::InvalidArgument, "shift has wrong dimension");
  return std::visit(overloaded{
                        [&](const Euclidean&) { return euclidean(dim_); },
                        [&](const RoundSphere& s) {
                          return round_sphere(dim_, scale * s.radius, Vec(scale * s.center + shift));
                        },
                        [&](const CliffordTorus& t) {
                          return clifford_torus(scale * t.r1, scale * t.r2, Vec(scale * t.center + shift));
                        },
                        [&](const Implicit& im) {
                          // phi'(y) = phi((y - shift) / scale)
                          Polynomial p = im.phi.substitute_affine(1.0 / scale, Vec(-shift / scale));
                          Box r{scale * region_->lo + shift, scale * region_->hi + shift};
                          return implicit(std::move(p), r);
                        },
                    },
                    kind_);
}

Vec project_to_ambient(const AmbientSpace& ambient, const Vec& x) {
  check_dim(ambient, x);
  return std::visit(
      overloaded{
          [&](const AmbientSpace::Euclidean&) { return x; },
          [&](const AmbientSpace::RoundSphere& s) {
            const Vec d = x - s.center;
            const double r = d.norm();
            // Radial projection is unique away from the centre.
            if (!(r > 1e-12 * s.radius)) fail(ErrorCode::OutsideTube, "point is at the centre of the sphere");
            return Vec(s.center + s.radius / r * d);
          },
          [&](const AmbientSpace::CliffordTorus& t) {
            const Vec d = x - t.center;
            const double a = d.head<2>().norm();
            const double b = d.tail<2>().norm();
            if (!(a > 1e-12 * t.r1) || !(b > 1e-12 * t.r2)) {
              fail(ErrorCode::OutsideTube, "point is on an axis of the torus");
            }
            Vec out = t.center;
            out.head<2>() += t.r1 / a * d.head<2>();
            out.tail<2>() += t.r2 / b * d.tail<2>();
            return out;
          },
          [&](const AmbientSpace::Implicit& im) {
            const double tol = 1e-12 * ambient.length_scale();
            Vec y = x;
            for (int it = 0; it < kNewtonIterations; ++it) {
              const double v = im.phi(y);
              const Vec g = im.phi.gradient(y);
              const double g2 = g.squaredNorm();
              if (g2 == 0) break;
              const double dist = std::abs(v) / std::sqrt(g2);
              if (dist <= tol) {
                const double kappa = ambient.max_normal_curvature(y);
                if ((y - x).norm() * kappa >= 0.5) break;
                return y;
              }
              y -= v / g2 * g;
            }
            fail(ErrorCode::OutsideTube, "Newton projection onto the level set did not converge");
          },
      },
      ambient.kind());
}

Eigen::MatrixXd tangent_frame(const AmbientSpace& ambient, const Vec& x, const Eigen::MatrixXd& approx) {
  Eigen::MatrixXd frame = approx;
  if (ambient.codim() > 0) frame = ambient.tangent_projector(x) * approx;
  for (int k = 0; k < frame.cols(); ++k) {
    for (int j = 0; j < k; ++j) frame.col(k) -= frame.col(j).dot(frame.col(k)) * frame.col(j);
    const double n = frame.col(k).norm();
    if (!(n > 1e-12)) fail(ErrorCode::BasisNotTangent, "tangent plane degenerates on projection to N");
    frame.col(k) /= n;
  }
  return frame;
}

Vec forcing_term(const AmbientSpace& ambient, const Vec& x, const Eigen::MatrixXd& basis) {
  check_dim(ambient, x);
  if (basis.rows() != ambient.dim()) fail(ErrorCode::InvalidArgument, "basis has wrong dimension");
  constexpr double kTol = 1e-8;
  const Eigen::MatrixXd gram = basis.transpose() * basis;
  if ((gram - Eigen::MatrixXd::Identity(basis.cols(), basis.cols())).cwiseAbs().maxCoeff() > kTol) {
    fail(ErrorCode::BasisNotTangent, "basis is not orthonormal");
  }
  if (ambient.is_euclidean()) return Vec::Zero(ambient.dim());
  if (ambient.surface_residual(x) > kTol * std::max(1.0, ambient.length_scale())) {
    fail(ErrorCode::NotOnSurface, "point is " + std::to_string(ambient.surface_residual(x)) + " away from N");
  }
  const Eigen::MatrixXd normals = ambient.normal_basis(x);
  if ((normals.transpose() * basis).cwiseAbs().maxCoeff() > kTol) {
    fail(ErrorCode::BasisNotTangent, "basis vectors have a component normal to N");
  }
  Vec p = Vec::Zero(ambient.dim());
  for (int i = 0; i < basis.cols(); ++i) {
    const Vec e = basis.col(i);
    p -= ambient.second_fundamental_form(x, e, e);
  }
  return p;
}

double curvature_bound_K(const AmbientSpace& ambient, const Box& region, int surface_dim) {
  if (region.dim() != ambient.dim()) fail(ErrorCode::InvalidArgument, "region dimension mismatch");
  if ((region.hi - region.lo).minCoeff() < 0) fail(ErrorCode::EmptyRegion, "region has negative extent");
  const double m = surface_dim;
  return std::visit(
      overloaded{
          [](const AmbientSpace::Euclidean&) { return 0.0; },
          [&](const AmbientSpace::RoundSphere& s) {
            if (closest_distance(s.center, region.lo, region.hi) > s.radius ||
                farthest_distance(s.center, region.lo, region.hi) < s.radius) {
              fail(ErrorCode::EmptyRegion, "region does not meet the sphere");
            }
            return m / s.radius;
          },
          [&](const AmbientSpace::CliffordTorus& t) {
            const Vec c1 = t.center.head<2>(), lo1 = region.lo.head<2>(), hi1 = region.hi.head<2>();
            const Vec c2 = t.center.tail<2>(), lo2 = region.lo.tail<2>(), hi2 = region.hi.tail<2>();
            if (closest_distance(c1, lo1, hi1) > t.r1 || farthest_distance(c1, lo1, hi1) < t.r1 ||
                closest_distance(c2, lo2, hi2) > t.r2 || farthest_distance(c2, lo2, hi2) < t.r2) {
              fail(ErrorCode::EmptyRegion, "region does not meet the torus");
            }
            return m / std::min(t.r1, t.r2);
          },
          [&](const AmbientSpace::Implicit&) {
            // Sample a lattice, project each sample, keep those landing in the region.
            const int l = ambient.dim();
            const int per_axis = std::clamp(static_cast<int>(std::pow(4000.0, 1.0 / l)), 3, 21);
            const double slack = 1e-9 * std::max(1.0, (region.hi - region.lo).norm());
            double sup = 0;
            bool found = false;
            std::vector<int> idx(l, 0);
            for (;;) {
              Vec p(l);
              for (int k = 0; k < l; ++k) {
                p[k] = region.lo[k] + (region.hi[k] - region.lo[k]) * idx[k] / (per_axis - 1);
              }
              try {
                const Vec q = project_to_ambient(ambient, p);
                if (region.contains(q, slack)) {
                  found = true;
                  sup = std::max(sup, ambient.max_normal_curvature(q));
                }
              } catch (const Error&) {
              }
              int k = 0;
              while (k < l && ++idx[k] == per_axis) idx[k++] = 0;
              if (k == l) break;
            }
            if (!found) fail(ErrorCode::EmptyRegion, "no sample of the level set inside the region");
            return 1.5 * m * sup;
          },
      },
      ambient.kind());
}

namespace {

struct GraphSolver {
  const AmbientSpace& ambient;
  Vec x;
  Eigen::MatrixXd tangent;
  Eigen::MatrixXd normal;
  double tol;

  // Height w with x + T u + N w on the ambient; false when Newton fails.
  bool solve(const Vec& u, Vec& w) const {
    w = Vec::Zero(normal.cols());
    for (int it = 0; it < kNewtonIterations; ++it) {
      const Vec p = x + tangent * u + normal * w;
      const Vec g = ambient.constraint_values(p);
      if (g.cwiseAbs().maxCoeff() <= tol) return true;
      const Eigen::MatrixXd j = ambient.constraint_gradients(p).transpose() * normal;
      const Vec step = j.fullPivLu().solve(-g);
      if (!step.allFinite()) return false;
      w += step;
      if (!w.allFinite() || w.norm() > 1e8) return false;
    }
    return false;
  }
};

}  // namespace

FlatnessEstimate rescaled_flatness_detail(const AmbientSpace& ambient, const Vec& x, double xi, double D) {
  check_dim(ambient, x);
  if (!(xi >= 1.0)) fail(ErrorCode::InvalidArgument, "dilation factor must be >= 1");
  if (!(D > 0)) fail(ErrorCode::InvalidArgument, "ball radius must be positive");
  FlatnessEstimate est;
  if (ambient.codim() == 0) return est;
  if (ambient.surface_residual(x) > 1e-8 * std::max(1.0, ambient.length_scale())) {
    fail(ErrorCode::NotOnSurface, "flatness base point is not on N");
  }

  // The image x + xi (N - x) has curvature radius xi / kappa; the part inside B_D is a
  // graph over the tangent plane exactly when D < sqrt(2) times that radius (round case).
  const double kappa = ambient.max_normal_curvature(x);
  if (kappa > 0 && !(D < std::sqrt(2.0) * xi / kappa)) {
    fail(ErrorCode::GraphDoesNotExist, "ball radius " + std::to_string(D) +
                                           " exceeds the graph radius of the dilated ambient");
  }
  const AmbientSpace dilated = ambient.affine(xi, Vec(x - xi * x));
  const Eigen::MatrixXd normal = dilated.normal_basis(x);
  const Eigen::MatrixXd tangent = tangent_complement(normal, ambient.dim());
  const GraphSolver solver{dilated, x, tangent, normal, 1e-13 * std::max(1.0, D)};

  const int n = static_cast<int>(tangent.cols());
  const int m = n <= 2 ? 8 : 4;  // lattice half-width in cells
  const double h = D / m;
  const double delta = 1e-3 * D;
  const int side = 2 * m + 1;

  auto height = [&](const Vec& u) {
    Vec w;
    if (!solver.solve(u, w)) fail(ErrorCode::GraphDoesNotExist, "no graph value near the base point");
    return w;
  };

  // Hessians stored per lattice index for the third-order probe.
  std::vector<std::optional<std::vector<Eigen::MatrixXd>>> hessians;
  int total = 1;
  for (int k = 0; k < n; ++k) total *= side;
  hessians.resize(total);

  auto lattice_point = [&](int flat) {
    Vec u(n);
    for (int k = 0; k < n; ++k) {
      u[k] = (flat % side - m) * h;
      flat /= side;
    }
    return u;
  };

  for (int flat = 0; flat < total; ++flat) {
    const Vec u = lattice_point(flat);
    if (u.norm() > D) continue;
    Vec f;
    if (!solver.solve(u, f)) continue;  // beyond the graph domain, hence outside the ball
    if (u.squaredNorm() + f.squaredNorm() > D * D) continue;
    ++est.samples;

    const int c = static_cast<int>(normal.cols());
    Eigen::MatrixXd df(c, n);
    std::vector<Eigen::MatrixXd> hess(c, Eigen::MatrixXd::Zero(n, n));
    for (int a = 0; a < n; ++a) {
      const Vec ea = Vec::Unit(n, a) * delta;
      const Vec fp = height(u + ea);
      const Vec fm = height(u - ea);
      df.col(a) = (fp - fm) / (2 * delta);
      for (int k = 0; k < c; ++k) hess[k](a, a) = (fp[k] - 2 * f[k] + fm[k]) / (delta * delta);
      for (int b = a + 1; b < n; ++b) {
        const Vec eb = Vec::Unit(n, b) * delta;
        const Vec fpp = height(u + ea + eb), fpm = height(u + ea - eb);
        const Vec fmp = height(u - ea + eb), fmm = height(u - ea - eb);
        for (int k = 0; k < c; ++k) {
          hess[k](a, b) = hess[k](b, a) = (fpp[k] - fpm[k] - fmp[k] + fmm[k]) / (4 * delta * delta);
        }
      }
    }
    if (df.norm() > 1e3) fail(ErrorCode::GraphDoesNotExist, "graph slope blows up inside the ball");
    double h2 = 0;
    for (const auto& hk : hess) h2 += hk.squaredNorm();
    est.c0 = std::max(est.c0, f.norm());
    est.c1 = std::max(est.c1, df.norm());
    est.c2 = std::max(est.c2, std::sqrt(h2));
    hessians[flat] = std::move(hess);
  }

  int stride = 1;
  for (int k = 0; k < n; ++k, stride *= side) {
    for (int flat = 0; flat < total; ++flat) {
      if (!hessians[flat] || (flat / stride) % side == side - 1) continue;
      const auto& other = hessians[flat + stride];
      if (!other) continue;
      double d2 = 0;
      for (std::size_t j = 0; j < other->size(); ++j) d2 += ((*other)[j] - (*hessians[flat])[j]).squaredNorm();
      est.c3_probe = std::max(est.c3_probe, std::sqrt(d2) / h);
    }
  }
  return est;
}

double rescaled_flatness(const AmbientSpace& ambient, const Vec& x, double xi, double D) {
  return rescaled_flatness_detail(ambient, x, xi, D).value();
}

}  // namespace mcflab
