#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <random>
#include <string>

#include "mcflab/ambient.hpp"
#include "mcflab/flow.hpp"
#include "mcflab/geometry.hpp"
#include "mcflab/shapes.hpp"

namespace mcflab::testing {

inline double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

/// Unit sphere trajectory shared by several test cases in one binary.
inline const FlowTrajectory& unit_sphere_flow(int subdivisions = 3, int stride = 10) {
  static std::map<std::pair<int, int>, FlowTrajectory> cache;
  auto key = std::make_pair(subdivisions, stride);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  FlowConfig cfg;
  cfg.snapshot_stride = stride;
  return cache.emplace(key, run_flow(shapes::icosphere(subdivisions), AmbientSpace::euclidean(3), cfg))
      .first->second;
}

/// Geodesic sphere of radius 1 in S^3(10): nearly Euclidean with forcing |P| = 0.2.
inline const FlowTrajectory& s3_rho10_flow() {
  static const FlowTrajectory traj = [] {
    FlowConfig cfg;
    cfg.snapshot_stride = 10;
    cfg.stop_area = 1e-2;
    return run_flow(shapes::geodesic_sphere_s3(3, 1.0, 10.0), AmbientSpace::round_sphere(4, 10.0), cfg);
  }();
  return traj;
}

/// Radii of the mesh vertices about their centroid: mean and relative spread.
inline std::pair<double, double> radius_stats(const TriMesh& mesh) {
  Vec c = vertex_centroid(mesh);
  double sum = 0, sum2 = 0;
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    double r = (mesh.vertex(i).transpose() - c).norm();
    sum += r;
    sum2 += r * r;
  }
  double n = mesh.num_vertices();
  double mean = sum / n;
  return {mean, std::sqrt(std::max(0.0, sum2 / n - mean * mean)) / mean};
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mcflab_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace mcflab::testing
