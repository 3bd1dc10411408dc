#include <doctest.h>

#include <sstream>

#include "mcflab/error.hpp"
#include "mcflab/functionals.hpp"
#include "mcflab/harness.hpp"
#include "test_support.hpp"

using namespace mcflab;
using mcflab::testing::s3_rho10_flow;
using mcflab::testing::unit_sphere_flow;

namespace {

SpacetimePoint self_similar_point(const FlowTrajectory& traj) {
  return SpacetimePoint::make(traj.extinction_point, traj.termination.t_est);
}

const NamedSeries& series_named(const VerificationReport& r, const std::string& name) {
  for (const NamedSeries& s : r.series)
    if (s.name == name) return s;
  FAIL("missing series " << name);
  return r.series.front();
}

std::vector<SpacetimePoint> sphere_grid(const FlowTrajectory& traj) {
  std::vector<SpacetimePoint> grid;
  double s0 = traj.termination.t_est;
  for (double dx : {-0.2, 0.0, 0.2})
    for (double ds : {1.0, 1.1, 1.5}) {
      Vec y = traj.extinction_point;
      y(0) += dx;
      grid.push_back(SpacetimePoint::make(y, s0 * ds));
    }
  return grid;
}

}  // namespace

TEST_CASE("gaussian density") {
  const FlowTrajectory& traj = unit_sphere_flow();
  SpacetimePoint p = self_similar_point(traj);
  SUBCASE("constant at the self-similar point") {
    double u0 = gaussian_density_u(traj, p.x0, p.t0, traj.front().t);
    CHECK(u0 == doctest::Approx(4 / std::exp(1.0)).epsilon(0.01));
    for (const Snapshot& s : traj.snapshots) {
      if (s.area < 0.05) break;
      CHECK(gaussian_density_u(s, p.x0, p.t0) == doctest::Approx(u0).epsilon(0.01));
    }
  }
  SUBCASE("far away it vanishes") {
    Vec far = Vec::Constant(3, 30.0);
    for (const Snapshot& s : traj.snapshots) CHECK(gaussian_density_u(s, far, p.t0) < 1e-10);
  }
  SUBCASE("kernel time must follow the snapshot") {
    CHECK_THROWS_AS(gaussian_density_u(traj.back(), p.x0, traj.back().t - 1e-3), Error);
  }
}

TEST_CASE("J quantity") {
  CHECK(J_quantity(0.7, 0.0, 3.0, 1.0) == 0.7);
  CHECK(J_quantity(1.0, 1.0, 2.0, 0.0) == doctest::Approx(std::exp(1.0)));
}

TEST_CASE("Huisken monotonicity on the sphere flow") {
  const FlowTrajectory& traj = unit_sphere_flow();
  VerificationReport r = verify_huisken(traj, sphere_grid(traj), 1e-3);
  MESSAGE("worst " << r.worst_violation << " tol " << r.tolerance);
  CHECK(r.passed);
  CHECK(r.series.size() == 18);

  SUBCASE("J with K = 0 reproduces the u series") {
    SpacetimePoint p = sphere_grid(traj)[4];
    VerificationReport j = verify_J_monotone(traj, p, 1e-3, 0.0);
    const NamedSeries& a = series_named(r, "u[4]");
    const NamedSeries& b = series_named(j, "J");
    REQUIRE(a.value.size() == b.value.size());
    for (size_t i = 0; i < a.value.size(); ++i) CHECK(a.value[i] == b.value[i]);
  }
  SUBCASE("single snapshot") {
    FlowTrajectory one = traj;
    one.snapshots.resize(1);
    VerificationReport s = verify_huisken(one, {self_similar_point(traj)}, 1e-3);
    CHECK(s.passed);
    CHECK(series_named(s, "u[0]").value.size() == 1);
  }
  SUBCASE("requires a Euclidean ambient") {
    try {
      verify_huisken(s3_rho10_flow(), {SpacetimePoint::make(s3_rho10_flow().extinction_point, 1.0)}, 1e-3);
      FAIL("expected WrongAmbient");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::WrongAmbient);
    }
  }
}

TEST_CASE("forced flow in S^3(10)") {
  const FlowTrajectory& traj = s3_rho10_flow();
  REQUIRE(traj.termination.kind == Termination::Kind::Extinct);
  SpacetimePoint p = self_similar_point(traj);
  CHECK(traj.K_used == doctest::Approx(0.2));

  VerificationReport J = verify_J_monotone(traj, p, 1e-3);
  CHECK(J.passed);
  VerificationReport bare = verify_J_monotone(traj, p, 1e-3, 0.0);
  CHECK(bare.worst_violation > 0);

  VerificationReport all = verify_almost_mono_u(traj, p, 2.0, std::numeric_limits<double>::infinity(), 1e-3);
  VerificationReport adjacent =
      verify_almost_mono_u(traj, p, 2.0, std::numeric_limits<double>::infinity(), 1e-3, true);
  CHECK(all.passed);
  CHECK(adjacent.passed == all.passed);
}

TEST_CASE("almost monotonicity reduces to monotonicity at K = 0") {
  const FlowTrajectory& traj = unit_sphere_flow();
  SpacetimePoint p = sphere_grid(traj)[5];
  VerificationReport a = verify_almost_mono_u(traj, p, 2.0, 1.0, 1e-3);
  VerificationReport j = verify_J_monotone(traj, p, 1e-3);
  CHECK(a.passed == j.passed);
}

TEST_CASE("entropy along the sphere flow") {
  const FlowTrajectory& traj = unit_sphere_flow();
  EntropySeriesOptions opt;
  opt.stride = 8;
  VerificationReport r = verify_entropy_almost_mono(traj, 0.02, 1.0, opt);
  CHECK(r.passed);
  for (double v : series_named(r, "lambda").value) CHECK(std::abs(v - 4 / std::exp(1.0)) < 0.03);
}

TEST_CASE("ball intersection area") {
  TriMesh unit = shapes::icosphere(4);
  Vec north = Vec::Zero(3);
  north(2) = 1;
  for (double r : {0.3, 0.7, 1.2}) {
    // Spherical cap of the unit sphere inside B_r(north): area pi r^2.
    CHECK(ball_intersection_area(unit, north, r) == doctest::Approx(std::numbers::pi * r * r).epsilon(0.02));
  }
  CHECK(ball_intersection_area(unit, north, 5.0) == doctest::Approx(surface_area(unit)));
}

TEST_CASE("volume ratio bound") {
  const FlowTrajectory& traj = unit_sphere_flow();
  std::vector<Vec> centres;
  for (int i : {0, 5, 40, 100, 200}) centres.push_back(traj.front().mesh.vertex(i).transpose());
  CHECK(volume_ratio_bound(traj, {0.1, 0.3}, centres, 0.36, 0.025).passed);
  CHECK(volume_ratio_bound(s3_rho10_flow(), {0.1, 0.3}, {s3_rho10_flow().front().mesh.vertex(0).transpose()}, 0.36,
                           0.025)
            .passed);
}

TEST_CASE("classify extinction") {
  SUBCASE("round sphere") {
    for (int sub : {3, 4}) {
      ExtinctionClassification c = classify_extinction(unit_sphere_flow(sub, 10));
      CHECK(c.verdict == Verdict::RoundPoint);
    }
  }
  SUBCASE("ellipsoid rounds") {
    FlowConfig cfg;
    cfg.snapshot_stride = 10;
    FlowTrajectory traj = run_flow(shapes::ellipsoid(3, 2, 1, 1), AmbientSpace::euclidean(3), cfg);
    REQUIRE(traj.termination.kind == Termination::Kind::Extinct);
    ExtinctionClassification c = classify_extinction(traj);
    CHECK(c.verdict == Verdict::RoundPoint);
    CHECK(c.residuals.back() < c.residuals.front());
  }
  SUBCASE("needs an extinct trajectory") {
    FlowTrajectory stopped = unit_sphere_flow();
    stopped.termination.kind = Termination::Kind::QualityStop;
    try {
      classify_extinction(stopped);
      FAIL("expected NotExtinct");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NotExtinct);
    }
  }
  SUBCASE("sphere fit") {
    CHECK(sphere_fit_error(shapes::icosphere(3, 2.0).vertices()) < 1e-3);
    CHECK(sphere_fit_error(shapes::ellipsoid(3, 2, 1, 1).vertices()) > 0.05);
  }
}

TEST_CASE("entropy continuity probe") {
  TriMesh sphere = shapes::icosphere(2);
  SUBCASE("constant family") {
    ContinuityProbe p = entropy_continuity_probe(std::vector<TriMesh>(3, sphere));
    CHECK(p.lipschitz_estimate == 0.0);
    CHECK(p.stable);
  }
  SUBCASE("dilations keep the entropy") {
    std::vector<TriMesh> family;
    for (int i = 0; i < 5; ++i) family.push_back(shapes::scaled(sphere, 1.0 + i / 4.0));
    ContinuityProbe p = entropy_continuity_probe(family);
    for (double l : p.lambda) CHECK(std::abs(l - p.lambda.front()) < 1e-6);
  }
  SUBCASE("connectivity must match") {
    CHECK_THROWS_AS(entropy_continuity_probe({sphere, shapes::icosphere(1)}), Error);
  }
}

TEST_CASE("report serialisation") {
  VerificationReport r;
  r.check_name = "demo";
  r.params = {{"rel_tol", 0.001}};
  r.worst_violation = -1;
  r.tolerance = 0.5;
  r.finish();
  CHECK(r.passed);
  std::ostringstream out;
  write_summary_csv(out, {r});
  CHECK(out.str() == "check,params_hash,worst_violation,tolerance,passed\ndemo," + params_hash(r.params) +
                         ",-1,0.5,true\n");
  CHECK(params_hash(r.params) == params_hash(nlohmann::json{{"rel_tol", 0.001}}));
  CHECK(params_hash(r.params) != params_hash(nlohmann::json{{"rel_tol", 0.002}}));
  CHECK(to_json(r)["check_name"] == "demo");
}

TEST_CASE("piecewise flow") {
  PiecewiseOptions opt;
  opt.flow.snapshot_stride = 10;
  SUBCASE("sphere needs no replacement") {
    PiecewiseFlowLog log = piecewise_flow(shapes::icosphere(3), AmbientSpace::euclidean(3), providers::bump(0.1, 0.5),
                                          opt);
    CHECK(log.final_classification == PiecewiseOutcome::RoundPoint);
    CHECK(log.replacements.empty());
    CHECK(log.segments.size() == 1);
  }
  SUBCASE("dilation cannot lower the entropy") {
    opt.classify.residual_threshold = 1e-9;
    PiecewiseFlowLog log =
        piecewise_flow(shapes::icosphere(3), AmbientSpace::euclidean(3), providers::dilation(0.2), opt);
    CHECK(log.accepted_count() == 0);
    REQUIRE(!log.replacements.empty());
    for (const Replacement& r : log.replacements) {
      CHECK(!r.accepted);
      CHECK(r.entropy_after > r.entropy_before - opt.budget.epsilon / 2);
    }
    CHECK(log.detail.find("PerturbationRejected") != std::string::npos);
    CHECK(log.accepted_count() <= log.replacement_bound);
  }
}
