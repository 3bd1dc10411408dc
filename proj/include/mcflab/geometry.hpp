#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "mcflab/mesh.hpp"

namespace mcflab {

/// Per-vertex orthonormal basis of the discrete tangent plane (l x 2).
using TangentBasis = Eigen::Matrix<double, Eigen::Dynamic, 2>;

double face_area(const TriMesh& mesh, int face);

/// 4*sqrt(3)*area / (sum of squared edge lengths); 1 for equilateral, 0 when degenerate.
double face_quality(const TriMesh& mesh, int face);
double min_face_quality(const TriMesh& mesh);

double surface_area(const TriMesh& mesh);

/// Exact maximum pairwise vertex distance.
double diameter(const TriMesh& mesh);

/// Mean of the vertex positions.
Vec vertex_centroid(const TriMesh& mesh);
double mean_edge_length(const TriMesh& mesh);

/// Lumped mass: mixed Voronoi area (circumcentric cells, halved/quartered
/// face areas around obtuse triangles). Sums to the surface area.
Vec vertex_areas(const TriMesh& mesh);

/// Cotangent discretisation of the Laplace-Beltrami operator.
///
/// `stiffness` is the symmetric matrix C with (C x)_i = 1/2 sum_j (cot a_ij + cot b_ij)(x_j - x_i);
/// the discrete Laplacian is diag(mass)^-1 C.
struct CotanLaplacian {
  Eigen::SparseMatrix<double> stiffness;
  Vec mass;
};

inline constexpr double kCotanClamp = 1e6;

CotanLaplacian cotan_laplacian(const TriMesh& mesh);

/// H = Laplace-Beltrami of the position. Points toward the centre on a round
/// sphere, so the flow velocity H shrinks spheres.
VertexField mean_curvature_vector(const TriMesh& mesh);

/// Tangent plane per vertex. In R^3 it is the complement of the area-weighted
/// vertex normal; in R^l, l > 3, the dominant 2-plane of the area-weighted sum of
/// face tangent projectors.
std::vector<TangentBasis> vertex_tangent_bases(const TriMesh& mesh);

/// Removes the tangential part of `v` using the basis of the tangent plane.
Vec normal_part(const TangentBasis& basis, const Eigen::Ref<const Vec>& v);

/// Squared norm of the second fundamental form at each vertex, from a
/// least-squares quadratic height fit over the one-ring in the tangent frame.
Vec second_fundamental_norm_sq(const TriMesh& mesh, const std::vector<TangentBasis>& bases);

struct MeshMetrics {
  double area = 0;
  double diameter = 0;
  int genus = 0;
  double max_second_fundamental_norm = 0;
};

MeshMetrics mesh_metrics(const TriMesh& mesh);

struct NormalGraphOptions {
  /// Maximum angle between a graph vector and the discrete normal space.
  double angle_tolerance = 0.2;
  double min_quality = 1e-3;
};

/// Moves each vertex by scale * graph; connectivity is untouched.
TriMesh apply_normal_graph(const TriMesh& mesh, const VertexField& graph, double scale,
                           const NormalGraphOptions& options = {});

}  // namespace mcflab
