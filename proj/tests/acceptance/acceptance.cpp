// Runs the acceptance criteria and prints one [PASS]/[FAIL] line per criterion.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mcflab/config.hpp"
#include "mcflab/driver.hpp"
#include "mcflab/error.hpp"
#include "mcflab/functionals.hpp"
#include "mcflab/geometry.hpp"
#include "mcflab/harness.hpp"
#include "mcflab/shapes.hpp"
#include "test_support.hpp"

using namespace mcflab;
using mcflab::testing::radius_stats;
using mcflab::testing::rel_err;

namespace {

const double kFourOverE = 4.0 / std::exp(1.0);
const double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (detail.tellp() > 0) detail << "; ";
    detail << (ok ? "" : "FAILED ") << what;
  }
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

// Trajectories shared between criteria.

const FlowTrajectory& euclidean_sphere() {
  static const FlowTrajectory traj = [] {
    FlowConfig cfg;
    cfg.snapshot_stride = 10;
    return run_flow(shapes::icosphere(4), AmbientSpace::euclidean(3), cfg);
  }();
  return traj;
}

const FlowTrajectory& s3_rho10() {
  static const FlowTrajectory traj = [] {
    FlowConfig cfg;
    cfg.snapshot_stride = 10;
    cfg.stop_area = 1e-2;
    return run_flow(shapes::geodesic_sphere_s3(3, 1.0, 10.0), AmbientSpace::round_sphere(4, 10.0), cfg);
  }();
  return traj;
}

SpacetimePoint self_similar_point(const FlowTrajectory& traj) {
  return SpacetimePoint::make(traj.extinction_point, traj.termination.t_est);
}

void sphere_extinction(Outcome& o) {
  const FlowTrajectory& traj = euclidean_sphere();
  o.require(traj.termination.kind == Termination::Kind::Extinct,
            "termination " + std::string(to_string(traj.termination.kind)));
  o.require(std::abs(traj.termination.t_est - 0.25) <= 0.0025, "t_est " + fmt(traj.termination.t_est, 6));
}

void curved_extinction(Outcome& o) {
  const auto S3 = AmbientSpace::round_sphere(4, 1.0);
  FlowConfig cfg;
  cfg.snapshot_stride = 100;
  FlowTrajectory traj = run_flow(shapes::geodesic_sphere_s3(3, std::numbers::pi / 3, 1.0), S3, cfg);
  const double oracle = 0.5 * std::log(2.0);
  o.require(traj.termination.kind == Termination::Kind::Extinct,
            "termination " + std::string(to_string(traj.termination.kind)));
  o.require(rel_err(traj.termination.t_est, oracle) <= 0.02,
            "t_est " + fmt(traj.termination.t_est, 6) + " vs " + fmt(oracle, 6));

  const TriMesh eq = shapes::geodesic_sphere_s3(3, std::numbers::pi / 2, 1.0);
  FlowConfig still;
  still.max_steps = 10000;
  still.snapshot_stride = 10000;
  FlowTrajectory e = run_flow(eq, S3, still);
  const double disp = (e.back().mesh.vertices() - eq.vertices()).rowwise().norm().maxCoeff();
  o.require(e.termination.kind == Termination::Kind::StepLimit && e.steps == 10000,
            "equator " + std::string(to_string(e.termination.kind)) + " after " + std::to_string(e.steps) + " steps");
  o.require(disp < 1e-4, "equator displacement " + fmt(disp, 3));
}

void entropy_golden(Outcome& o) {
  std::mt19937_64 rng(20261016);
  std::uniform_real_distribution<double> u(-3, 3);
  for (double R : {0.5, 1.0, 2.0}) {
    const Vec c = vec3(u(rng), u(rng), u(rng));
    EntropyResult e = entropy(shapes::translated(shapes::icosphere(4, R), c));
    o.require(std::abs(e.lambda - kFourOverE) <= 1e-2, "R=" + fmt(R) + " lambda " + fmt(e.lambda, 6));
    o.require(rel_err(e.argmax.t0, R * R / 4) <= 0.05, "t0 " + fmt(e.argmax.t0) + " vs " + fmt(R * R / 4));
  }
}

void huisken(Outcome& o) {
  const FlowTrajectory& traj = euclidean_sphere();
  const double s0 = traj.termination.t_est;
  std::vector<SpacetimePoint> grid;
  const std::vector<Vec> centres = {vec3(0, 0, 0), vec3(0.1, 0, 0), vec3(-0.1, 0.05, 0), vec3(0, 0, 0.2),
                                    vec3(0.15, -0.1, 0.1)};
  for (const Vec& y : centres)
    for (double k : {1.0, 1.02, 1.1, 1.25, 1.5}) grid.push_back(SpacetimePoint::make(y, k * s0));
  VerificationReport r = verify_huisken(traj, grid, 1e-3);
  o.require(grid.size() == 25, std::to_string(grid.size()) + " grid points");
  o.require(r.details.value("max_increment", r.worst_violation) <= r.tolerance,
            "worst increment " + fmt(r.details.value("max_increment", r.worst_violation), 3) + " tol " +
                fmt(r.tolerance, 3));
  o.require(r.details.value("dissipation_mismatch", 0.0) <= 10 * r.tolerance,
            "dissipation mismatch " + fmt(r.details.value("dissipation_mismatch", 0.0), 3) + " tol x10 " +
                fmt(10 * r.tolerance, 3));
  o.require(r.passed, "report passed");
}

void weighted_monotonicity(Outcome& o) {
  const FlowTrajectory& traj = s3_rho10();
  o.require(traj.termination.kind == Termination::Kind::Extinct, "S3(10) extinct");
  const Box region = Box::around(traj.front().mesh.vertices(), 0.1);
  const double K = curvature_bound_K(traj.ambient, region, 2);
  o.require(std::abs(K - 0.2) < 1e-12, "K " + fmt(K));
  const SpacetimePoint p = self_similar_point(traj);
  VerificationReport J = verify_J_monotone(traj, p, 1e-3, K);
  o.require(J.passed, "J worst " + fmt(J.worst_violation, 3) + " tol " + fmt(J.tolerance, 3));
  VerificationReport bare = verify_J_monotone(traj, p, 1e-3, 0.0);
  o.require(bare.worst_violation > 0, "K=0 worst increment " + fmt(bare.worst_violation, 3));
}

void almost_monotonicity(Outcome& o) {
  const FlowTrajectory& traj = s3_rho10();
  const SpacetimePoint p = self_similar_point(traj);
  VerificationReport u = verify_almost_mono_u(traj, p, 2.0, kInf, 1e-3);
  o.require(u.passed, "u with C=2 worst " + fmt(u.worst_violation, 3) + " tol " + fmt(u.tolerance, 3));
  EntropySeriesOptions opt;
  opt.stride = 10;
  VerificationReport lam = verify_entropy_almost_mono(traj, 0.05, kInf, opt);
  o.require(lam.passed, "lambda series eps0=0.05 worst " + fmt(lam.worst_violation, 3));
}

void gradient_correctness(Outcome& o) {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_real_distribution<double> axis(0.6, 2.0);
  double worst = 0;
  int cases = 0;
  while (cases < 100) {
    const TriMesh m = shapes::ellipsoid(2, axis(rng), axis(rng), axis(rng));
    const SpacetimePoint p = SpacetimePoint::make(vec3(u(rng), u(rng), u(rng)), 0.15 + 0.9 * (u(rng) + 1));
    const auto g = F_gradient(m, p);
    if (g.value < 1e-3) continue;
    const double h = 1e-5 * std::sqrt(p.t0);
    Vec fd(4), an(4);
    for (int k = 0; k < 4; ++k) {
      SpacetimePoint a = p, b = p;
      if (k < 3) {
        a.x0(k) += h;
        b.x0(k) -= h;
      } else {
        a.t0 += h;
        b.t0 -= h;
      }
      fd(k) = (F_functional(m, a) - F_functional(m, b)) / (2 * h);
    }
    an << g.d_x0, g.d_t0;
    worst = std::max(worst, (an - fd).norm() / an.norm());
    ++cases;
  }
  o.require(worst < 1e-4, "100 cases, worst relative error " + fmt(worst, 3));

  // Lower bound on d/dt0 F over a grid around a sphere.
  const TriMesh sphere = shapes::icosphere(4, 1.3);
  const double lambda = entropy(sphere).lambda;
  const VertexField H = mean_curvature_vector(sphere);
  const double supH2 = H.values.rowwise().squaredNorm().maxCoeff();
  const double bound = -(lambda / 4) * supH2;
  double min_dt0 = kInf;
  for (double x : {0.0, 0.5, 1.3, 2.0})
    for (double y : {0.0, 0.7})
      for (double t0 : {0.05, 0.2, 0.4225, 1.0, 3.0}) min_dt0 = std::min(min_dt0, F_gradient(sphere, SpacetimePoint::make(vec3(x, y, 0), t0)).d_t0);
  o.require(min_dt0 >= 1.05 * bound, "min d_t0 F " + fmt(min_dt0) + " >= " + fmt(1.05 * bound));

  // F at points of the surface for t0 = 16 h^2.
  const TriMesh fine = shapes::icosphere(5);
  const double hh = mean_edge_length(fine);
  double worst_limit = 0;
  std::uniform_int_distribution<int> face(0, fine.num_faces() - 1);
  std::uniform_real_distribution<double> w(0, 1);
  for (int i = 0; i < 20; ++i) {
    const Face& f = fine.faces()[face(rng)];
    double a = w(rng), b = w(rng);
    if (a + b > 1) a = 1 - a, b = 1 - b;
    const Vec x = (a * fine.vertex(f[0]) + b * fine.vertex(f[1]) + (1 - a - b) * fine.vertex(f[2])).transpose();
    worst_limit = std::max(worst_limit, std::abs(F_functional(fine, SpacetimePoint::make(x, 16 * hh * hh)) - 1));
  }
  o.require(worst_limit <= 0.05, "|F - 1| at surface points " + fmt(worst_limit, 3));
}

void shrinker_detection(Outcome& o) {
  const SpacetimePoint p = SpacetimePoint::make(Vec::Zero(3), 1.0);
  std::vector<double> res;
  for (int s : {3, 4, 5}) res.push_back(shrinker_residual(shapes::icosphere(s, 2.0), p).l2);
  const double order1 = std::log2(res[0] / res[1]);
  const double order2 = std::log2(res[1] / res[2]);
  o.require(order1 >= 1.8 && order2 >= 1.8, "residuals " + fmt(res[0], 3) + ", " + fmt(res[1], 3) + ", " +
                                                 fmt(res[2], 3) + " orders " + fmt(order1, 3) + ", " +
                                                 fmt(order2, 3));
  const SpacetimePoint arg = entropy(shapes::ellipsoid(3, 2, 1, 1)).argmax;
  double least = kInf;
  for (int s : {3, 4, 5}) least = std::min(least, shrinker_residual(shapes::ellipsoid(s, 2, 1, 1), arg).l2);
  o.require(least > 0.1, "ellipsoid residual at its entropy argmax >= " + fmt(least, 3));
}

void entropy_gap_and_continuity(Outcome& o) {
  const std::vector<std::pair<std::string, TriMesh>> catalog = {
      {"icosphere", shapes::icosphere(3)},
      {"ellipsoid", shapes::ellipsoid(3, 2, 1, 1)},
      {"torus", shapes::torus(1.0, 0.4, 48, 20)},
      {"geodesic_sphere_s3", shapes::geodesic_sphere_s3(3, 1.0, 1.0)},
      {"clifford_torus", shapes::clifford_torus(1 / std::sqrt(2.0), 1 / std::sqrt(2.0), 32, 32)},
  };
  for (const auto& [name, mesh] : catalog) {
    const double l = entropy(mesh).lambda;
    o.require(l > 1.05, name + " " + fmt(l));
  }

  const TriMesh base = shapes::ellipsoid(3, 1.5, 1.0, 0.8);
  std::vector<TriMesh> dilations;
  for (int i = 0; i <= 4; ++i) dilations.push_back(shapes::scaled(base, 1.0 + i / 4.0));
  const ContinuityProbe d = entropy_continuity_probe(dilations);
  const auto [lo, hi] = std::minmax_element(d.lambda.begin(), d.lambda.end());
  o.require(*hi - *lo < 1e-6, "dilation family spread " + fmt(*hi - *lo, 3));

  const TriMesh sphere = shapes::icosphere(3);
  VertexField g = VertexField::zeros(sphere);
  for (int v = 0; v < sphere.num_vertices(); ++v) {
    const auto x = sphere.vertex(v);
    g[v] = x(0) * x(0) * x;
  }
  std::vector<TriMesh> family;
  for (int i = 0; i <= 10; ++i) family.push_back(apply_normal_graph(sphere, g, i / 10.0));
  const ContinuityProbe c = entropy_continuity_probe(family);
  o.require(c.stable, "sphere-to-ellipsoid Lipschitz " + fmt(c.lipschitz_estimate) + " coarse " +
                          fmt(c.lipschitz_coarse));
}

void volume_bound(Outcome& o) {
  for (const FlowTrajectory* traj : {&euclidean_sphere(), &s3_rho10()}) {
    const TriMesh& m0 = traj->front().mesh;
    std::vector<Vec> centres = {traj->extinction_point};
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> pick(0, m0.num_vertices() - 1);
    for (int i = 0; i < 5; ++i) centres.push_back(m0.vertex(pick(rng)).transpose());
    const double scale = diameter(m0);
    const std::vector<double> radii = {0.02 * scale, 0.05 * scale, 0.15 * scale};
    const double S = std::pow(2 * radii.back(), 2);
    double worst = -kInf;
    bool ok = true;
    for (double frac : {0.05, 0.2, 0.5}) {
      VerificationReport r = volume_ratio_bound(*traj, radii, centres, S, frac * traj->termination.t_est);
      ok = ok && r.passed;
      worst = std::max(worst, r.worst_violation);
    }
    o.require(ok, traj->ambient.kind_name() + " worst " + fmt(worst, 3));
  }
}

void piecewise(Outcome& o) {
  PiecewiseOptions opt;
  opt.flow.snapshot_stride = 10;
  PiecewiseFlowLog ell =
      piecewise_flow(shapes::ellipsoid(3, 2, 1, 1), AmbientSpace::euclidean(3), providers::dilation(0.1), opt);
  o.require(ell.final_classification == PiecewiseOutcome::RoundPoint && ell.replacements.empty(),
            "ellipsoid " + std::string(to_string(ell.final_classification)) + " with " +
                std::to_string(ell.replacements.size()) + " replacements");
  o.require(ell.accepted_count() <= ell.replacement_bound, "ellipsoid within bound " + std::to_string(ell.replacement_bound));

  PiecewiseOptions forced = opt;
  forced.classify.residual_threshold = 1e-9;  // forces a replacement attempt on the round sphere
  PiecewiseFlowLog sph =
      piecewise_flow(shapes::icosphere(3), AmbientSpace::euclidean(3), providers::dilation(0.1), forced);
  bool all_gated = !sph.replacements.empty();
  for (const Replacement& r : sph.replacements)
    all_gated = all_gated && !r.accepted && r.entropy_after > r.entropy_before - forced.budget.epsilon / 2;
  o.require(all_gated && sph.detail.find("PerturbationRejected") != std::string::npos,
            "dilation attempts " + std::to_string(sph.replacements.size()) + " all rejected by the eps/2 gate");
  o.require(sph.accepted_count() <= sph.replacement_bound, "sphere within bound " + std::to_string(sph.replacement_bound));

  PiecewiseFlowLog bump =
      piecewise_flow(shapes::icosphere(3), AmbientSpace::euclidean(3), providers::bump(0.5, 1.0), forced);
  o.require(bump.accepted_count() <= bump.replacement_bound,
            "bump provider " + std::to_string(bump.accepted_count()) + " accepted <= bound " +
                std::to_string(bump.replacement_bound));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void determinism(Outcome& o) {
  const std::vector<std::string> configs = {
      R"({"command": "flow", "mesh": {"shape": "icosphere", "subdivisions": 3}, "flow": {"snapshot_stride": 20}})",
      R"({"command": "verify", "mesh": {"shape": "icosphere", "subdivisions": 3}, "flow": {"snapshot_stride": 20},
          "verify": {"huisken": {}, "J_monotone": {}, "almost_mono_u": {}, "volume_ratio": {},
                     "entropy_mono": {"stride": 40}, "classify": {}}})",
      R"({"command": "entropy", "mesh": {"shape": "ellipsoid", "subdivisions": 3, "a": 2, "b": 1, "c": 1},
          "functional_grid": {"centres": [[0, 0, 0], [0.5, 0.1, 0]], "scales": [0.25, 1.0]}})",
  };
  std::ostringstream log;
  int files = 0;
  for (size_t i = 0; i < configs.size(); ++i) {
    std::vector<std::filesystem::path> dirs;
    for (int run = 0; run < 2; ++run) {
      RunConfig cfg = parse_config(configs[i], std::filesystem::temp_directory_path());
      cfg.set_seed(1234);
      cfg.out = mcflab::testing::scratch_dir("determinism_" + std::to_string(i) + "_" + std::to_string(run));
      const int code = execute(cfg, log);
      o.require(code == 0 || code == kExitVerificationFailed,
                std::string(to_string(cfg.command)) + " exit " + std::to_string(code));
      dirs.push_back(cfg.out);
    }
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dirs[0])) {
      if (entry.path().extension() != ".csv") continue;
      const auto rel = std::filesystem::relative(entry.path(), dirs[0]);
      ++files;
      if (slurp(entry.path()) != slurp(dirs[1] / rel)) o.require(false, rel.string() + " differs");
    }
  }
  o.require(files > 0, std::to_string(files) + " CSV files byte-identical across runs");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"sphere extinction", sphere_extinction},
      {"curved-ambient extinction", curved_extinction},
      {"entropy of round spheres", entropy_golden},
      {"Huisken monotonicity", huisken},
      {"weighted monotonicity", weighted_monotonicity},
      {"almost-monotonicity", almost_monotonicity},
      {"gradient correctness", gradient_correctness},
      {"shrinker detection", shrinker_detection},
      {"entropy gap and continuity", entropy_gap_and_continuity},
      {"volume bound", volume_bound},
      {"piecewise orchestration", piecewise},
      {"determinism", determinism},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("[%s] %2zu %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
