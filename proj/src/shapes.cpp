#include "mcflab/shapes.hpp"

#include <cmath>
#include <map>
#include <numbers>

#include "mcflab/error.hpp"

namespace mcflab::shapes {

namespace {

struct Soup {
  std::vector<Eigen::Vector3d> points;
  std::vector<Face> faces;
};

Soup unit_icosphere(int subdivisions) {
  if (subdivisions < 0) fail(ErrorCode::InvalidArgument, "negative subdivision level");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  Soup s;
  s.points = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
              {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : s.points) p.normalize();
  s.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      s.points.push_back((s.points[a] + s.points[b]).normalized());
      const int id = static_cast<int>(s.points.size()) - 1;
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<Face> next;
    next.reserve(s.faces.size() * 4);
    for (const Face& f : s.faces) {
      const int a = mid(f[0], f[1]);
      const int b = mid(f[1], f[2]);
      const int c = mid(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    s.faces = std::move(next);
  }
  return s;
}

Points embed(const std::vector<Eigen::Vector3d>& pts, int dim) {
  if (dim < 3) fail(ErrorCode::InvalidArgument, "dimension must be >= 3");
  Points x = Points::Zero(static_cast<Eigen::Index>(pts.size()), dim);
  for (std::size_t i = 0; i < pts.size(); ++i) x.row(static_cast<Eigen::Index>(i)).head<3>() = pts[i].transpose();
  return x;
}

std::vector<Face> grid_faces(int nu, int nv, bool wrap_u, bool wrap_v) {
  std::vector<Face> faces;
  const int cols = wrap_v ? nv : nv + 1;
  auto id = [&](int i, int j) {
    if (wrap_u) i %= nu;
    if (wrap_v) j %= nv;
    return i * cols + j;
  };
  for (int i = 0; i < nu; ++i) {
    for (int j = 0; j < nv; ++j) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      faces.push_back({a, b, c});
      faces.push_back({a, c, d});
    }
  }
  return faces;
}

}  // namespace

TriMesh icosphere(int subdivisions, double radius, int dim) {
  Soup s = unit_icosphere(subdivisions);
  for (auto& p : s.points) p *= radius;
  return TriMesh::closed(embed(s.points, dim), std::move(s.faces));
}

TriMesh ellipsoid(int subdivisions, double a, double b, double c, int dim) {
  Soup s = unit_icosphere(subdivisions);
  for (auto& p : s.points) p = Eigen::Vector3d(a * p.x(), b * p.y(), c * p.z());
  return TriMesh::closed(embed(s.points, dim), std::move(s.faces));
}

TriMesh torus(double major_radius, double minor_radius, int n_major, int n_minor, int dim) {
  if (n_major < 3 || n_minor < 3) fail(ErrorCode::InvalidArgument, "torus needs at least 3x3 samples");
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < n_major; ++i) {
    const double u = 2.0 * std::numbers::pi * i / n_major;
    for (int j = 0; j < n_minor; ++j) {
      const double v = 2.0 * std::numbers::pi * j / n_minor;
      const double rho = major_radius + minor_radius * std::cos(v);
      pts.emplace_back(rho * std::cos(u), rho * std::sin(u), minor_radius * std::sin(v));
    }
  }
  return TriMesh::closed(embed(pts, dim), grid_faces(n_major, n_minor, true, true));
}

TriMesh geodesic_sphere_s3(int subdivisions, double geodesic_radius, double rho) {
  Soup s = unit_icosphere(subdivisions);
  const double angle = geodesic_radius / rho;
  Points x(static_cast<Eigen::Index>(s.points.size()), 4);
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x.row(r).head<3>() = rho * std::sin(angle) * s.points[i].transpose();
    x(r, 3) = rho * std::cos(angle);
  }
  return TriMesh::closed(std::move(x), std::move(s.faces));
}

TriMesh clifford_torus(double r1, double r2, int n1, int n2) {
  if (n1 < 3 || n2 < 3) fail(ErrorCode::InvalidArgument, "torus needs at least 3x3 samples");
  Points x(n1 * n2, 4);
  for (int i = 0; i < n1; ++i) {
    const double u = 2.0 * std::numbers::pi * i / n1;
    for (int j = 0; j < n2; ++j) {
      const double v = 2.0 * std::numbers::pi * j / n2;
      x.row(i * n2 + j) << r1 * std::cos(u), r1 * std::sin(u), r2 * std::cos(v), r2 * std::sin(v);
    }
  }
  return TriMesh::closed(std::move(x), grid_faces(n1, n2, true, true));
}

TriMesh flat_patch(int n) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "patch needs at least one cell");
  Points x((n + 1) * (n + 1), 3);
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      x.row(i * (n + 1) + j) << -1.0 + 2.0 * i / n, -1.0 + 2.0 * j / n, 0.0;
    }
  }
  return TriMesh::open(std::move(x), grid_faces(n, n, false, false));
}

TriMesh translated(const TriMesh& mesh, const Vec& offset) {
  Points x = mesh.vertices();
  x.rowwise() += offset.transpose();
  return mesh.with_vertices(std::move(x));
}

TriMesh scaled(const TriMesh& mesh, double factor) {
  return mesh.with_vertices(mesh.vertices() * factor);
}

}  // namespace mcflab::shapes
