#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace mcflab {

/// Row-major V x l matrix: one point of R^l per row.
using Points = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using Face = std::array<int, 3>;
using Edge = std::array<int, 2>;

/// Connectivity shared by every mesh that differs only in vertex positions.
struct Topology {
  int num_vertices = 0;
  std::vector<Face> faces;
  std::vector<Edge> edges;                      // undirected, i < j, sorted
  std::vector<std::vector<int>> vertex_faces;   // incident faces per vertex
  std::vector<std::vector<int>> vertex_neighbors;
  std::vector<bool> boundary_vertex;
  bool closed = false;
  bool oriented = false;

  int euler_characteristic() const {
    return num_vertices - static_cast<int>(edges.size()) + static_cast<int>(faces.size());
  }
};

/// Oriented triangle mesh with vertices in R^l (l >= 3).
///
/// Construction validates the face complex. `closed` meshes must be 2-manifolds
/// without boundary with consistent winding; the `open` path admits boundary
/// edges and exists for local operator tests on patches.
class TriMesh {
public:
  TriMesh() = default;

  static TriMesh closed(Points vertices, std::vector<Face> faces);
  static TriMesh open(Points vertices, std::vector<Face> faces);

  /// Same connectivity, new positions. Re-checks degenerate faces.
  TriMesh with_vertices(Points vertices) const;

  int dim() const { return static_cast<int>(vertices_.cols()); }
  int num_vertices() const { return static_cast<int>(vertices_.rows()); }
  int num_faces() const { return static_cast<int>(topology_->faces.size()); }

  const Points& vertices() const { return vertices_; }
  auto vertex(int i) const { return vertices_.row(i); }
  const std::vector<Face>& faces() const { return topology_->faces; }
  const std::vector<Edge>& edges() const { return topology_->edges; }
  const Topology& topology() const { return *topology_; }
  const std::shared_ptr<const Topology>& topology_ptr() const { return topology_; }

  bool is_closed() const { return topology_->closed; }
  bool is_oriented() const { return topology_->oriented; }
  int euler_characteristic() const { return topology_->euler_characteristic(); }

  bool shares_connectivity(const TriMesh& other) const;

  /// Zero-area tolerance used at construction: 1e-14 * (bounding diagonal)^2.
  static constexpr double kAreaEpsRelative = 1e-14;

private:
  TriMesh(Points vertices, std::shared_ptr<const Topology> topology);
  static TriMesh build(Points vertices, std::vector<Face> faces, bool require_closed);
  void check_faces_nondegenerate() const;

  Points vertices_;
  std::shared_ptr<const Topology> topology_ = std::make_shared<Topology>();
};

/// One vector of R^l per vertex (mean curvature, variation fields, normal graphs).
struct VertexField {
  Points values;

  VertexField() = default;
  explicit VertexField(Points v) : values(std::move(v)) {}
  static VertexField zeros(const TriMesh& mesh) {
    return VertexField(Points::Zero(mesh.num_vertices(), mesh.dim()));
  }

  int size() const { return static_cast<int>(values.rows()); }
  auto operator[](int i) const { return values.row(i); }
  auto operator[](int i) { return values.row(i); }

  /// Throws InvalidArgument unless the field matches the mesh and is finite.
  void check_compatible(const TriMesh& mesh) const;
};

}  // namespace mcflab
