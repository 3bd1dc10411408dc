#pragma once

#include <optional>
#include <variant>

#include <Eigen/Core>

#include "mcflab/mesh.hpp"
#include "mcflab/polynomial.hpp"

namespace mcflab {

/// Axis-aligned box in R^l.
struct Box {
  Vec lo;
  Vec hi;

  static Box around(const Points& points, double inflate = 0.0);
  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Vec& x, double slack = 0.0) const;
};

/// An analytically embedded ambient N in R^l.
///
/// Every kind is described by `codim` constraint functions g_k with N = {g = 0};
/// the analytic kinds additionally carry closed-form projection and second
/// fundamental form. The implicit kind is a polynomial level set {phi = 0}.
class AmbientSpace {
public:
  struct Euclidean {};
  struct RoundSphere {
    double radius;
    Vec center;
  };
  /// S^1(r1) x S^1(r2), the first circle in (x1, x2), the second in (x3, x4).
  struct CliffordTorus {
    double r1;
    double r2;
    Vec center;
  };
  struct Implicit {
    Polynomial phi;
  };
  using Kind = std::variant<Euclidean, RoundSphere, CliffordTorus, Implicit>;

  static AmbientSpace euclidean(int dim);
  static AmbientSpace round_sphere(int dim, double radius, std::optional<Vec> center = {});
  static AmbientSpace clifford_torus(double r1, double r2, std::optional<Vec> center = {});
  /// `region` is where the cached forcing bound is certified.
  static AmbientSpace implicit(Polynomial phi, const Box& region);

  const Kind& kind() const { return kind_; }
  std::string kind_name() const;
  int dim() const { return dim_; }
  int codim() const;
  bool is_euclidean() const { return std::holds_alternative<Euclidean>(kind_); }

  /// Typical length (sphere radius, larger torus radius, region size) for tolerances.
  double length_scale() const { return length_scale_; }

  /// Bound on |forcing_term| for 2-dimensional tangent planes over the catalog region.
  double forcing_bound_K() const { return forcing_bound_; }

  Vec constraint_values(const Vec& x) const;
  /// l x codim, column k = grad g_k.
  Eigen::MatrixXd constraint_gradients(const Vec& x) const;

  /// Distance-like measure of how far x is from N (0 on N).
  double surface_residual(const Vec& x) const;

  /// l x codim orthonormal basis of the normal space at (or near) x.
  Eigen::MatrixXd normal_basis(const Vec& x) const;
  Eigen::MatrixXd tangent_projector(const Vec& x) const;

  /// Second fundamental form B(v, w), a vector normal to N.
  Vec second_fundamental_form(const Vec& x, const Vec& v, const Vec& w) const;

  /// sup |B(v, v)| over unit tangent vectors v at x.
  double max_normal_curvature(const Vec& x) const;

  /// Box on which the implicit kind certified its forcing bound.
  const std::optional<Box>& region() const { return region_; }

  /// Image of N under y = scale * x + shift.
  AmbientSpace affine(double scale, const Vec& shift) const;

private:
  AmbientSpace(int dim, Kind kind);
  void finalize(std::optional<Box> region);

  int dim_ = 0;
  Kind kind_;
  double length_scale_ = 1.0;
  double forcing_bound_ = 0.0;
  std::optional<Box> region_;
};

/// Nearest point of N (Newton along grad phi for the implicit kind).
Vec project_to_ambient(const AmbientSpace& ambient, const Vec& x);

/// Orthonormal frame of the projection of `approx` (columns) onto T_xN.
Eigen::MatrixXd tangent_frame(const AmbientSpace& ambient, const Vec& x, const Eigen::MatrixXd& approx);

/// P = -sum_i B(e_i, e_i) for the orthonormal tangent vectors e_i (columns of `basis`).
Vec forcing_term(const AmbientSpace& ambient, const Vec& x, const Eigen::MatrixXd& basis);

/// Certified upper bound of |P| over m-dimensional tangent planes of N inside `region`.
double curvature_bound_K(const AmbientSpace& ambient, const Box& region, int surface_dim);

struct FlatnessEstimate {
  double c0 = 0;        // sup |f|
  double c1 = 0;        // sup |Df|
  double c2 = 0;        // sup |D^2 f|
  double c3_probe = 0;  // difference quotient of D^2 f between lattice neighbours
  int samples = 0;
  double value() const { return c0 + c1 + c2; }
};

/// Sampled C^2 size of the graph f over T_xN describing (x + xi (N - x)) inside B_D(x).
FlatnessEstimate rescaled_flatness_detail(const AmbientSpace& ambient, const Vec& x, double xi, double D);
double rescaled_flatness(const AmbientSpace& ambient, const Vec& x, double xi, double D);

}  // namespace mcflab
