#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "mcflab/ambient.hpp"
#include "mcflab/flow.hpp"
#include "mcflab/mesh.hpp"

namespace mcflab {

/// (x0, t0) with t0 > 0: centre and scale of a Gaussian weight.
struct SpacetimePoint {
  Vec x0;
  double t0 = 1;

  static SpacetimePoint make(Vec x0, double t0);
};

struct KernelOptions {
  int quadrature = 3;  // 1 (centroid) or 3 (symmetric interior rule, exact for quadratics)
  double k = 2;        // dimension in the normalisation (4 pi t0)^(-k/2)
};

/// Quadrature points of a mesh with area weights folded in; reusable across many
/// (x0, t0) evaluations.
class SurfaceQuadrature {
public:
  SurfaceQuadrature(const TriMesh& mesh, int order);

  const Points& points() const { return points_; }
  const Vec& weights() const { return weights_; }
  int dim() const { return static_cast<int>(points_.cols()); }

  double F(const SpacetimePoint& p, double k = 2) const;

  struct Gradient {
    Vec d_x0;
    double d_t0 = 0;
    double value = 0;
  };
  Gradient F_gradient(const SpacetimePoint& p, double k = 2) const;

private:
  Points points_;
  Vec weights_;
};

/// (4 pi t0)^(-k/2) * integral over the mesh of exp(-|x - x0|^2 / (4 t0)).
double F_functional(const TriMesh& mesh, const SpacetimePoint& p, const KernelOptions& opt = {});

SurfaceQuadrature::Gradient F_gradient(const TriMesh& mesh, const SpacetimePoint& p,
                                       const KernelOptions& opt = {});

/// u_{y,s}(t) = F(M_t, (y, s - t)) for the snapshot at time t. The kernel time s is
/// a flow time and may be zero or negative on rescaled trajectories.
double gaussian_density_u(const FlowTrajectory& traj, const Vec& y, double s, double t,
                          const KernelOptions& opt = {});
double gaussian_density_u(const Snapshot& snapshot, const Vec& y, double s, const KernelOptions& opt = {});

/// exp(K^2 (s - t) / 2) * u
double J_quantity(double u_value, double K, double s, double t);

struct EntropyOptions {
  int grid_nx = 7;  // centres per axis
  int grid_nt = 12;  // log-spaced scales
  int n_starts = 4;
  double ascent_tol = 1e-9;
  int max_iters = 200;
  int grid_quadrature = 3;
  int quadrature = 3;
  std::uint64_t seed = 0;
  double box_inflation = 0.1;

  void validate() const;
};

struct EntropyResult {
  double lambda = 0;
  SpacetimePoint argmax;
  int starts_tried = 0;
  bool converged = false;
  Box search_box;
  double T1 = 0;
  double T2 = 0;
  double grid_max = 0;
  int evaluations = 0;
};

/// Multistart ascent of F over the inflated bounding box times [T1, T2].
EntropyResult entropy(const TriMesh& mesh, const EntropyOptions& opt = {});

struct ShrinkerResidual {
  VertexField field;
  double l2 = 0;  // sqrt(sum A_i |r_i|^2 / sum A_i)
};

/// r_i = (H_i + (x_i - x0) / (2 t0))^perp, perp relative to the discrete tangent plane.
ShrinkerResidual shrinker_residual(const TriMesh& mesh, const SpacetimePoint& p);

/// CSV with columns x0_1..x0_l, t0, F.
void write_F_grid_csv(std::ostream& out, const TriMesh& mesh, const std::vector<Vec>& centres,
                      const std::vector<double>& scales, const KernelOptions& opt = {});

}  // namespace mcflab
