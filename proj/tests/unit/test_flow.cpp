#include <doctest.h>

#include "mcflab/error.hpp"
#include "mcflab/flow.hpp"
#include "mcflab/functionals.hpp"
#include "test_support.hpp"

using namespace mcflab;
using mcflab::testing::radius_stats;
using mcflab::testing::rel_err;
using mcflab::testing::unit_sphere_flow;

namespace {

double max_displacement(const TriMesh& a, const TriMesh& b) {
  return (a.vertices() - b.vertices()).rowwise().norm().maxCoeff();
}

}  // namespace

TEST_CASE("single step") {
  auto R3 = AmbientSpace::euclidean(3);
  TriMesh sphere = shapes::icosphere(4);
  SUBCASE("explicit step shrinks the radius at rate 2/R") {
    TriMesh next = step(sphere, R3, 1e-4, Scheme::Explicit);
    double dr = 1.0 - radius_stats(next).first;
    CHECK(rel_err(dr, 2e-4) < 0.05);
  }
  SUBCASE("semi-implicit agrees") {
    TriMesh next = step(sphere, R3, 1e-4, Scheme::SemiImplicit);
    CHECK(rel_err(1.0 - radius_stats(next).first, 2e-4) < 0.05);
  }
  SUBCASE("dt = 0 is the identity") {
    TriMesh same = step(sphere, R3, 0.0, Scheme::SemiImplicit, Tangential::Scaled, 0.5);
    CHECK(max_displacement(same, sphere) == 0.0);
  }
  SUBCASE("equatorial sphere in S^3 is stationary") {
    auto S3 = AmbientSpace::round_sphere(4, 1.0);
    TriMesh eq = shapes::geodesic_sphere_s3(3, std::numbers::pi / 2, 1.0);
    for (Scheme s : {Scheme::Explicit, Scheme::SemiImplicit}) {
      TriMesh next = step(eq, S3, 1e-4, s, Tangential::Scaled, 0.5);
      CHECK(max_displacement(next, eq) < 1e-6);
    }
  }
  SUBCASE("connectivity never changes") {
    TriMesh next = step(shapes::torus(1, 0.4, 24, 12), R3, 1e-4, Scheme::SemiImplicit);
    CHECK(mesh_metrics(next).genus == 1);
  }
}

TEST_CASE("unit sphere extinction") {
  const FlowTrajectory& traj = unit_sphere_flow();
  CHECK(traj.termination.kind == Termination::Kind::Extinct);
  CHECK(rel_err(traj.termination.t_est, 0.25) < 0.01);
  CHECK(traj.extinction_point.norm() < 1e-6);

  SUBCASE("area strictly decreases") {
    for (size_t i = 1; i < traj.snapshots.size(); ++i)
      CHECK(traj.snapshots[i].area < traj.snapshots[i - 1].area + 1e-8);
  }
  SUBCASE("stays round") {
    for (const Snapshot& s : traj.snapshots) {
      if (s.area < 10 * traj.config.stop_area) break;
      CHECK(radius_stats(s.mesh).second < 0.01);
    }
  }
  SUBCASE("radius follows sqrt(1 - 4t)") {
    for (const Snapshot& s : traj.snapshots) {
      if (s.t > 0.1) break;
      CHECK(std::abs(radius_stats(s.mesh).first - std::sqrt(1 - 4 * s.t)) < 0.01);
    }
  }
  SUBCASE("self-similar radius sqrt(4 (t_est - t))") {
    double t_est = traj.termination.t_est;
    for (const Snapshot& s : traj.snapshots) {
      if (t_est - s.t < 0.01) break;
      CHECK(rel_err(radius_stats(s.mesh).first, std::sqrt(4 * (t_est - s.t))) < 0.02);
    }
  }
  SUBCASE("diameter monitor") {
    double t_est = traj.termination.t_est;
    int checked = 0;
    for (const Snapshot& s : traj.snapshots) {
      double gap = t_est - s.t;
      if (gap < 1e-3 || gap > 1e-1) continue;
      double ratio = diameter(s.mesh) / std::sqrt(gap);
      CHECK(ratio >= 3.8);
      CHECK(ratio <= 4.2);
      ++checked;
    }
    CHECK(checked > 5);
  }
}

TEST_CASE("curved ambient flows") {
  auto S3 = AmbientSpace::round_sphere(4, 1.0);
  SUBCASE("geodesic sphere pi/3 in S^3") {
    FlowConfig cfg;
    cfg.snapshot_stride = 50;
    FlowTrajectory traj = run_flow(shapes::geodesic_sphere_s3(3, std::numbers::pi / 3, 1.0), S3, cfg);
    CHECK(traj.termination.kind == Termination::Kind::Extinct);
    CHECK(rel_err(traj.termination.t_est, 0.5 * std::log(2.0)) < 0.02);
    CHECK(traj.K_used == doctest::Approx(2.0));
    for (const Snapshot& s : traj.snapshots)
      for (int i = 0; i < s.mesh.num_vertices(); ++i)
        CHECK(S3.surface_residual(s.mesh.vertex(i).transpose()) < 1e-9);
    CHECK(std::abs(S3.surface_residual(traj.extinction_point)) < 1e-9);
  }
  SUBCASE("equator under many steps") {
    FlowConfig cfg;
    cfg.max_steps = 2000;
    cfg.snapshot_stride = 2000;
    TriMesh eq = shapes::geodesic_sphere_s3(2, std::numbers::pi / 2, 1.0);
    FlowTrajectory traj = run_flow(eq, S3, cfg);
    CHECK(traj.termination.kind == Termination::Kind::StepLimit);
    CHECK(max_displacement(traj.back().mesh, eq) < 1e-4);
  }
}

TEST_CASE("termination kinds") {
  auto R3 = AmbientSpace::euclidean(3);
  SUBCASE("step limit") {
    FlowConfig cfg;
    cfg.max_steps = 5;
    FlowTrajectory traj = run_flow(shapes::icosphere(2), R3, cfg);
    CHECK(traj.termination.kind == Termination::Kind::StepLimit);
    CHECK(traj.steps == 5);
    CHECK(traj.snapshots.size() == 6);
  }
  SUBCASE("thin torus pinches or stops") {
    FlowConfig cfg;
    cfg.snapshot_stride = 100;
    FlowTrajectory traj = run_flow(shapes::torus(1.0, 0.25, 32, 10), R3, cfg);
    CHECK(traj.termination.kind != Termination::Kind::StepLimit);
    CHECK(traj.termination.kind != Termination::Kind::NumericalFailure);
  }
  SUBCASE("invalid config") {
    FlowConfig cfg;
    cfg.dt_initial = -1;
    CHECK_THROWS_AS(run_flow(shapes::icosphere(1), R3, cfg), Error);
  }
}

TEST_CASE("extinction extrapolation") {
  std::vector<double> t, a;
  for (int i = 0; i < 20; ++i) {
    t.push_back(0.01 * i);
    a.push_back(4 * std::numbers::pi * (1 - 4 * t.back()) * 0.5);
  }
  CHECK(extrapolate_extinction(t, a, 20) == doctest::Approx(0.25));
  CHECK_THROWS_AS(extrapolate_extinction({0.0}, {1.0}, 20), Error);
}

TEST_CASE("parabolic rescaling") {
  const FlowTrajectory& traj = unit_sphere_flow();
  SUBCASE("identity parameters") {
    FlowTrajectory same = rescale_trajectory(traj, Vec::Zero(3), 0.0, 1.0);
    REQUIRE(same.snapshots.size() == traj.snapshots.size());
    for (size_t i = 0; i < traj.snapshots.size(); ++i) {
      CHECK(same.snapshots[i].t == traj.snapshots[i].t);
      CHECK((same.snapshots[i].mesh.vertices() - traj.snapshots[i].mesh.vertices()).norm() == 0.0);
    }
  }
  SUBCASE("time -1 slice has radius 2") {
    double t_est = traj.termination.t_est;
    const Snapshot& s = slice_at(traj, t_est - 0.01);
    double c = 1 / std::sqrt(t_est - s.t);
    FlowTrajectory r = rescale_trajectory(traj, traj.extinction_point, t_est, c, -1.0 - 1e-9, -1.0 + 1e-9);
    REQUIRE(r.snapshots.size() == 1);
    CHECK(r.front().t == doctest::Approx(-1.0));
    CHECK(rel_err(radius_stats(r.front().mesh).first, 2.0) < 0.03);
    CHECK(r.K_used == doctest::Approx(traj.K_used / c));
  }
  SUBCASE("K scales with 1/c") {
    const FlowTrajectory& curved = mcflab::testing::s3_rho10_flow();
    FlowTrajectory r = rescale_trajectory(curved, curved.extinction_point, 0.0, 4.0);
    CHECK(r.K_used == doctest::Approx(0.05));
    CHECK(r.ambient.forcing_bound_K() == doctest::Approx(0.05));
  }
}

TEST_CASE("first variation check") {
  SUBCASE("sphere flow, centred Gaussian") {
    FlowConfig cfg;
    cfg.max_steps = 40;
    cfg.dt_initial = 1e-4;
    FlowTrajectory traj = run_flow(shapes::icosphere(4), AmbientSpace::euclidean(3), cfg);
    DerivativeCheck d = flow_derivative_check(traj, Vec::Zero(3), 0.3, 20);
    MESSAGE("lhs " << d.lhs << " rhs " << d.rhs);
    CHECK(d.gap <= 1e-2 * std::abs(d.rhs));
  }
  SUBCASE("stationary equator") {
    FlowConfig cfg;
    cfg.max_steps = 4;
    FlowTrajectory traj =
        run_flow(shapes::geodesic_sphere_s3(3, std::numbers::pi / 2, 1.0), AmbientSpace::round_sphere(4, 1.0), cfg);
    Vec x0 = Vec::Zero(4);
    x0(0) = 0.5;
    DerivativeCheck d = flow_derivative_check(traj, x0, 0.5, 2);
    CHECK(std::abs(d.lhs) < 1e-6);
    CHECK(std::abs(d.rhs) < 1e-3);
  }
}
