#include "mcflab/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mcflab/error.hpp"

namespace mcflab {

namespace {

struct CornerGeometry {
  double dot;
  double cross_norm;  // |u||v| sin(angle), twice the triangle area
};

CornerGeometry corner(const Points& x, int apex, int a, int b) {
  const auto u = x.row(a) - x.row(apex);
  const auto v = x.row(b) - x.row(apex);
  const double uu = u.squaredNorm();
  const double vv = v.squaredNorm();
  const double uv = u.dot(v);
  return {uv, std::sqrt(std::max(0.0, uu * vv - uv * uv))};
}

}  // namespace

double face_area(const TriMesh& mesh, int f) {
  const Face& face = mesh.faces()[f];
  return 0.5 * corner(mesh.vertices(), face[0], face[1], face[2]).cross_norm;
}

double face_quality(const TriMesh& mesh, int f) {
  const Face& face = mesh.faces()[f];
  const Points& x = mesh.vertices();
  const double l2 = (x.row(face[0]) - x.row(face[1])).squaredNorm() +
                    (x.row(face[1]) - x.row(face[2])).squaredNorm() +
                    (x.row(face[2]) - x.row(face[0])).squaredNorm();
  if (l2 <= 0) return 0;
  return 4.0 * std::sqrt(3.0) * face_area(mesh, f) / l2;
}

double min_face_quality(const TriMesh& mesh) {
  double q = 1.0;
  for (int f = 0; f < mesh.num_faces(); ++f) q = std::min(q, face_quality(mesh, f));
  return q;
}

double surface_area(const TriMesh& mesh) {
  double a = 0;
  for (int f = 0; f < mesh.num_faces(); ++f) a += face_area(mesh, f);
  return a;
}

double diameter(const TriMesh& mesh) {
  const Points& x = mesh.vertices();
  const int n = mesh.num_vertices();
  const int l = mesh.dim();
  const double* data = x.data();
  double best = 0;
  for (int i = 0; i < n; ++i) {
    const double* xi = data + static_cast<std::ptrdiff_t>(i) * l;
    for (int j = i + 1; j < n; ++j) {
      const double* xj = data + static_cast<std::ptrdiff_t>(j) * l;
      double d2 = 0;
      for (int k = 0; k < l; ++k) {
        const double d = xi[k] - xj[k];
        d2 += d * d;
      }
      best = std::max(best, d2);
    }
  }
  return std::sqrt(best);
}

Vec vertex_centroid(const TriMesh& mesh) {
  return mesh.vertices().colwise().mean().transpose();
}

double mean_edge_length(const TriMesh& mesh) {
  const Points& x = mesh.vertices();
  double sum = 0;
  for (const Edge& e : mesh.edges()) sum += (x.row(e[0]) - x.row(e[1])).norm();
  return mesh.edges().empty() ? 0.0 : sum / static_cast<double>(mesh.edges().size());
}

namespace {

// Mixed Voronoi area contribution of one face to its three corners.
std::array<double, 3> mixed_areas(const Points& x, const Face& face) {
  std::array<double, 3> cot{};
  std::array<double, 3> dots{};
  double twice_area = 0;
  for (int k = 0; k < 3; ++k) {
    const CornerGeometry c = corner(x, face[k], face[(k + 1) % 3], face[(k + 2) % 3]);
    cot[k] = c.dot / c.cross_norm;
    dots[k] = c.dot;
    twice_area = c.cross_norm;
  }
  const double area = 0.5 * twice_area;
  std::array<double, 3> out{};
  const bool obtuse = dots[0] < 0 || dots[1] < 0 || dots[2] < 0;
  if (!obtuse) {
    for (int k = 0; k < 3; ++k) {
      // corner k receives 1/8 (|e_k,k+1|^2 cot at k+2 + |e_k,k+2|^2 cot at k+1)
      const int a = (k + 1) % 3;
      const int b = (k + 2) % 3;
      const double len_ka = (x.row(face[k]) - x.row(face[a])).squaredNorm();
      const double len_kb = (x.row(face[k]) - x.row(face[b])).squaredNorm();
      out[k] = (len_ka * cot[b] + len_kb * cot[a]) / 8.0;
    }
  } else {
    for (int k = 0; k < 3; ++k) out[k] = dots[k] < 0 ? area / 2.0 : area / 4.0;
  }
  return out;
}

}  // namespace

Vec vertex_areas(const TriMesh& mesh) {
  Vec mass = Vec::Zero(mesh.num_vertices());
  for (const Face& f : mesh.faces()) {
    const auto a = mixed_areas(mesh.vertices(), f);
    for (int k = 0; k < 3; ++k) mass[f[k]] += a[k];
  }
  return mass;
}

CotanLaplacian cotan_laplacian(const TriMesh& mesh) {
  const Points& x = mesh.vertices();
  const int n = mesh.num_vertices();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.num_faces()) * 9);
  Vec mass = Vec::Zero(n);

  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.faces()[f];
    for (int k = 0; k < 3; ++k) {
      const int apex = face[k];
      const int a = face[(k + 1) % 3];
      const int b = face[(k + 2) % 3];
      const CornerGeometry c = corner(x, apex, a, b);
      double cot = c.dot / c.cross_norm;
      if (!std::isfinite(cot)) {
        fail(ErrorCode::DegenerateTriangle,
             "cotangent weight overflow in face " + std::to_string(f));
      }
      cot = std::clamp(cot, -kCotanClamp, kCotanClamp);
      const double w = 0.5 * cot;
      triplets.emplace_back(a, b, w);
      triplets.emplace_back(b, a, w);
      triplets.emplace_back(a, a, -w);
      triplets.emplace_back(b, b, -w);
    }
    const auto a = mixed_areas(x, face);
    for (int k = 0; k < 3; ++k) mass[face[k]] += a[k];
  }
  CotanLaplacian op;
  op.stiffness.resize(n, n);
  op.stiffness.setFromTriplets(triplets.begin(), triplets.end());
  op.mass = std::move(mass);
  return op;
}

VertexField mean_curvature_vector(const TriMesh& mesh) {
  const CotanLaplacian op = cotan_laplacian(mesh);
  Points h = op.stiffness * mesh.vertices();
  for (int i = 0; i < h.rows(); ++i) h.row(i) /= op.mass[i];
  return VertexField(std::move(h));
}

namespace {

TangentBasis complement_basis_r3(const Eigen::Vector3d& n) {
  Eigen::Vector3d a = Eigen::Vector3d::Zero();
  int axis = 0;
  n.cwiseAbs().minCoeff(&axis);
  a[axis] = 1.0;
  Eigen::Vector3d e1 = (a - a.dot(n) * n).normalized();
  Eigen::Vector3d e2 = n.cross(e1);
  TangentBasis basis(3, 2);
  basis.col(0) = e1;
  basis.col(1) = e2;
  return basis;
}

}  // namespace

std::vector<TangentBasis> vertex_tangent_bases(const TriMesh& mesh) {
  const Points& x = mesh.vertices();
  const int n = mesh.num_vertices();
  const int l = mesh.dim();
  std::vector<TangentBasis> bases(n);

  if (l == 3) {
    std::vector<Eigen::Vector3d> normals(n, Eigen::Vector3d::Zero());
    for (const Face& f : mesh.faces()) {
      const Eigen::Vector3d p0 = x.row(f[0]).transpose();
      const Eigen::Vector3d p1 = x.row(f[1]).transpose();
      const Eigen::Vector3d p2 = x.row(f[2]).transpose();
      const Eigen::Vector3d c = (p1 - p0).cross(p2 - p0);
      for (int v : f) normals[v] += c;
    }
    for (int v = 0; v < n; ++v) bases[v] = complement_basis_r3(normals[v].normalized());
    return bases;
  }

  // Per-vertex l x l blocks stacked vertically.
  Eigen::MatrixXd projector = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n) * l, l);
  Vec u(l), w(l), e1(l), e2(l);
  for (const Face& f : mesh.faces()) {
    u = (x.row(f[1]) - x.row(f[0])).transpose();
    w = (x.row(f[2]) - x.row(f[0])).transpose();
    e1 = u.normalized();
    e2 = (w - w.dot(e1) * e1).normalized();
    const double area = 0.5 * std::sqrt(std::max(0.0, u.squaredNorm() * w.squaredNorm() -
                                                          u.dot(w) * u.dot(w)));
    for (int v : f) {
      auto block = projector.middleRows(static_cast<Eigen::Index>(v) * l, l);
      block.noalias() += area * e1 * e1.transpose();
      block.noalias() += area * e2 * e2.transpose();
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(l);
  for (int v = 0; v < n; ++v) {
    eig.compute(projector.middleRows(static_cast<Eigen::Index>(v) * l, l));
    bases[v].resize(l, 2);
    bases[v].col(0) = eig.eigenvectors().col(l - 1);
    bases[v].col(1) = eig.eigenvectors().col(l - 2);
  }
  return bases;
}

Vec normal_part(const TangentBasis& basis, const Eigen::Ref<const Vec>& v) {
  return v - basis * (basis.transpose() * v);
}

Vec second_fundamental_norm_sq(const TriMesh& mesh, const std::vector<TangentBasis>& bases) {
  const Points& x = mesh.vertices();
  const int n = mesh.num_vertices();
  const int l = mesh.dim();
  Vec result = Vec::Zero(n);
  Eigen::MatrixXd rhs(3, l);
  for (int i = 0; i < n; ++i) {
    const auto& ring = mesh.topology().vertex_neighbors[i];
    if (ring.size() < 3) continue;
    // Normal equations of the height fit over [u^2/2, uv, v^2/2].
    Eigen::Matrix3d gram = Eigen::Matrix3d::Zero();
    rhs.setZero();
    for (int j : ring) {
      const Vec d = (x.row(j) - x.row(i)).transpose();
      const Eigen::Vector2d uv = bases[i].transpose() * d;
      const Eigen::Vector3d row(0.5 * uv[0] * uv[0], uv[0] * uv[1], 0.5 * uv[1] * uv[1]);
      gram += row * row.transpose();
      rhs += row * (d - bases[i] * uv).transpose();
    }
    const Eigen::MatrixXd coeffs = gram.ldlt().solve(rhs);
    result[i] = coeffs.row(0).squaredNorm() + 2.0 * coeffs.row(1).squaredNorm() +
                coeffs.row(2).squaredNorm();
  }
  return result;
}

MeshMetrics mesh_metrics(const TriMesh& mesh) {
  if (!mesh.is_closed()) fail(ErrorCode::NonManifoldMesh, "mesh_metrics requires a closed mesh");
  MeshMetrics m;
  m.area = surface_area(mesh);
  m.diameter = diameter(mesh);
  m.genus = (2 - mesh.euler_characteristic()) / 2;
  const Vec a2 = second_fundamental_norm_sq(mesh, vertex_tangent_bases(mesh));
  m.max_second_fundamental_norm = std::sqrt(a2.maxCoeff());
  return m;
}

TriMesh apply_normal_graph(const TriMesh& mesh, const VertexField& graph, double scale,
                           const NormalGraphOptions& options) {
  graph.check_compatible(mesh);
  if (scale == 0.0) return mesh;

  const auto bases = vertex_tangent_bases(mesh);
  const double sin_tol = std::sin(options.angle_tolerance);
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    const Vec g = graph[i].transpose();
    const double norm = g.norm();
    if (norm == 0.0) continue;
    const double tangential = (bases[i].transpose() * g).norm();
    if (tangential > sin_tol * norm) {
      fail(ErrorCode::NotNormalField, "graph vector at vertex " + std::to_string(i) +
                                          " is not normal to the mesh");
    }
  }

  Points moved = mesh.vertices() + scale * graph.values;
  TriMesh result;
  try {
    result = mesh.with_vertices(std::move(moved));
  } catch (const Error& e) {
    fail(ErrorCode::DegenerateResult, e.what());
  }
  const double q = min_face_quality(result);
  if (q < options.min_quality) {
    fail(ErrorCode::DegenerateResult, "triangle quality collapsed to " + std::to_string(q));
  }
  return result;
}

}  // namespace mcflab
