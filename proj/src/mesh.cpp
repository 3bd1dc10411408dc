#include "mcflab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "mcflab/error.hpp"
#include "mcflab/geometry.hpp"

namespace mcflab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonManifoldMesh: return "NonManifoldMesh";
    case ErrorCode::DegenerateTriangle: return "DegenerateTriangle";
    case ErrorCode::NotNormalField: return "NotNormalField";
    case ErrorCode::DegenerateResult: return "DegenerateResult";
    case ErrorCode::OutsideTube: return "OutsideTube";
    case ErrorCode::BasisNotTangent: return "BasisNotTangent";
    case ErrorCode::NotOnSurface: return "NotOnSurface";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::GraphDoesNotExist: return "GraphDoesNotExist";
    case ErrorCode::LinearSolveFailure: return "LinearSolveFailure";
    case ErrorCode::ProjectionFailure: return "ProjectionFailure";
    case ErrorCode::QualityCollapse: return "QualityCollapse";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::BoundarySnapshot: return "BoundarySnapshot";
    case ErrorCode::TimeNonPositive: return "TimeNonPositive";
    case ErrorCode::TimeOrder: return "TimeOrder";
    case ErrorCode::WrongAmbient: return "WrongAmbient";
    case ErrorCode::NotExtinct: return "NotExtinct";
    case ErrorCode::ConnectivityMismatch: return "ConnectivityMismatch";
    case ErrorCode::PerturbationRejected: return "PerturbationRejected";
    case ErrorCode::OptimizerDiverged: return "OptimizerDiverged";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {

std::shared_ptr<const Topology> build_topology(int num_vertices, std::vector<Face> faces,
                                               bool require_closed) {
  auto topo = std::make_shared<Topology>();
  topo->num_vertices = num_vertices;
  topo->vertex_faces.assign(num_vertices, {});
  topo->vertex_neighbors.assign(num_vertices, {});
  topo->boundary_vertex.assign(num_vertices, false);

  std::map<Edge, int> undirected;  // edge -> face count
  std::map<Edge, int> directed;
  for (int f = 0; f < static_cast<int>(faces.size()); ++f) {
    const Face& face = faces[f];
    for (int k = 0; k < 3; ++k) {
      const int a = face[k];
      if (a < 0 || a >= num_vertices) {
        fail(ErrorCode::NonManifoldMesh,
             "face " + std::to_string(f) + " references vertex " + std::to_string(a));
      }
    }
    if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
      fail(ErrorCode::NonManifoldMesh, "face " + std::to_string(f) + " repeats a vertex");
    }
    for (int k = 0; k < 3; ++k) {
      const int a = face[k];
      const int b = face[(k + 1) % 3];
      ++undirected[{std::min(a, b), std::max(a, b)}];
      ++directed[{a, b}];
      topo->vertex_faces[a].push_back(f);
    }
  }

  bool oriented = true;
  for (const auto& [e, count] : directed) {
    if (count > 1) oriented = false;
  }

  bool closed = true;
  for (const auto& [e, count] : undirected) {
    if (count > 2) {
      fail(ErrorCode::NonManifoldMesh, "edge (" + std::to_string(e[0]) + "," + std::to_string(e[1]) +
                                           ") has " + std::to_string(count) + " incident faces");
    }
    if (count == 1) {
      closed = false;
      topo->boundary_vertex[e[0]] = true;
      topo->boundary_vertex[e[1]] = true;
    }
    topo->edges.push_back(e);
    topo->vertex_neighbors[e[0]].push_back(e[1]);
    topo->vertex_neighbors[e[1]].push_back(e[0]);
  }
  for (int v = 0; v < num_vertices; ++v) {
    if (topo->vertex_faces[v].empty()) {
      fail(ErrorCode::NonManifoldMesh, "vertex " + std::to_string(v) + " is isolated");
    }
  }
  if (require_closed) {
    if (!closed) fail(ErrorCode::NonManifoldMesh, "mesh has boundary edges");
    if (!oriented) fail(ErrorCode::NonManifoldMesh, "inconsistent face winding");
    const int chi = num_vertices - static_cast<int>(topo->edges.size()) + static_cast<int>(faces.size());
    if (chi > 2 || chi % 2 != 0) {
      fail(ErrorCode::NonManifoldMesh, "Euler characteristic " + std::to_string(chi) +
                                           " is not an even integer <= 2");
    }
  }
  topo->closed = closed;
  topo->oriented = oriented;
  topo->faces = std::move(faces);
  return topo;
}

}  // namespace

TriMesh::TriMesh(Points vertices, std::shared_ptr<const Topology> topology)
    : vertices_(std::move(vertices)), topology_(std::move(topology)) {}

TriMesh TriMesh::build(Points vertices, std::vector<Face> faces, bool require_closed) {
  if (vertices.cols() < 3) {
    fail(ErrorCode::InvalidArgument, "ambient dimension must be >= 3, got " + std::to_string(vertices.cols()));
  }
  if (!vertices.allFinite()) fail(ErrorCode::InvalidArgument, "non-finite vertex coordinate");
  auto topo = build_topology(static_cast<int>(vertices.rows()), std::move(faces), require_closed);
  TriMesh mesh(std::move(vertices), std::move(topo));
  mesh.check_faces_nondegenerate();
  return mesh;
}

TriMesh TriMesh::closed(Points vertices, std::vector<Face> faces) {
  return build(std::move(vertices), std::move(faces), true);
}

TriMesh TriMesh::open(Points vertices, std::vector<Face> faces) {
  return build(std::move(vertices), std::move(faces), false);
}

TriMesh TriMesh::with_vertices(Points vertices) const {
  if (vertices.rows() != vertices_.rows() || vertices.cols() != vertices_.cols()) {
    fail(ErrorCode::InvalidArgument, "vertex array shape does not match the connectivity");
  }
  if (!vertices.allFinite()) fail(ErrorCode::InvalidArgument, "non-finite vertex coordinate");
  TriMesh mesh(std::move(vertices), topology_);
  mesh.check_faces_nondegenerate();
  return mesh;
}

bool TriMesh::shares_connectivity(const TriMesh& other) const {
  if (topology_ == other.topology_) return true;
  return num_vertices() == other.num_vertices() && faces() == other.faces();
}

void TriMesh::check_faces_nondegenerate() const {
  if (vertices_.rows() == 0) return;
  const Vec lo = vertices_.colwise().minCoeff().transpose();
  const Vec hi = vertices_.colwise().maxCoeff().transpose();
  const double eps = kAreaEpsRelative * (hi - lo).squaredNorm();
  for (int f = 0; f < num_faces(); ++f) {
    if (face_area(*this, f) <= eps) {
      fail(ErrorCode::DegenerateTriangle, "face " + std::to_string(f) + " has zero area");
    }
  }
}

void VertexField::check_compatible(const TriMesh& mesh) const {
  if (values.rows() != mesh.num_vertices() || values.cols() != mesh.dim()) {
    fail(ErrorCode::InvalidArgument, "vertex field shape does not match mesh");
  }
  if (!values.allFinite()) fail(ErrorCode::InvalidArgument, "vertex field has non-finite entries");
}

}  // namespace mcflab
