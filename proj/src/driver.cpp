#include "mcflab/driver.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "mcflab/geometry.hpp"
#include "mcflab/io.hpp"
#include "mcflab/mesh_io.hpp"

namespace mcflab {

using nlohmann::json;
namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::ValidationError:
    case ErrorCode::IoError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::NonManifoldMesh:
    case ErrorCode::DegenerateTriangle:
    case ErrorCode::NotNormalField:
    case ErrorCode::WrongAmbient:
    case ErrorCode::NotExtinct:
    case ErrorCode::ConnectivityMismatch:
    case ErrorCode::TimeNonPositive:
    case ErrorCode::TimeOrder:
    case ErrorCode::EmptyWindow:
      return kExitInputError;
    default:
      return kExitNumericalFailure;
  }
}

namespace {

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
}

struct Context {
  const RunConfig& cfg;
  std::ostream& log;
  json artifacts = json::array();

  fs::path artifact(const std::string& name) {
    artifacts.push_back(name);
    return cfg.out / name;
  }
};

std::string csv_row(std::initializer_list<std::string> cells) {
  std::string row;
  for (const auto& c : cells) row += (row.empty() ? "" : ",") + c;
  return row + "\n";
}

FlowTrajectory obtain_trajectory(Context& ctx) {
  if (ctx.cfg.trajectory) {
    ctx.log << "reading trajectory " << ctx.cfg.trajectory->string() << "\n";
    return read_trajectory(*ctx.cfg.trajectory);
  }
  ctx.log << "running flow\n";
  FlowTrajectory traj = run_flow(ctx.cfg.mesh->build(), ctx.cfg.ambient, ctx.cfg.flow);
  write_trajectory(traj, ctx.artifact("trajectory"));
  return traj;
}

/// Kernel time used when none is given: the extinction estimate, or a little
/// past the last snapshot for trajectories that did not become extinct.
double default_kernel_time(const FlowTrajectory& traj) {
  const double last = traj.back().t;
  if (traj.termination.t_est > last) return traj.termination.t_est;
  return last + 0.05 * std::max(last - traj.front().t, 1e-12);
}

Vec default_centre(const FlowTrajectory& traj) {
  if (traj.extinction_point.size() == traj.front().mesh.dim()) return traj.extinction_point;
  return vertex_centroid(traj.back().mesh);
}

SpacetimePoint kernel_point(const FlowTrajectory& traj, const KernelPointSpec& spec) {
  return SpacetimePoint::make(spec.y.value_or(default_centre(traj)), spec.s.value_or(default_kernel_time(traj)));
}

int run_flow_command(Context& ctx) {
  const TriMesh mesh = ctx.cfg.mesh->build();
  ctx.log << "flow: " << mesh.num_vertices() << " vertices in R^" << mesh.dim() << ", ambient "
          << ctx.cfg.ambient.kind_name() << "\n";
  const FlowTrajectory traj = run_flow(mesh, ctx.cfg.ambient, ctx.cfg.flow);
  ctx.log << "terminated " << to_string(traj.termination.kind) << " after " << traj.steps << " steps, t_est "
          << format_double(traj.termination.t_est) << "\n";
  write_trajectory(traj, ctx.artifact("trajectory"));
  const json summary = {{"termination", std::string(to_string(traj.termination.kind))},
                        {"detail", traj.termination.detail},
                        {"t_est", traj.termination.t_est},
                        {"steps", traj.steps},
                        {"final_time", traj.back().t},
                        {"final_area", traj.back().area},
                        {"K_used", traj.K_used},
                        {"extinction_point", vec_to_json(traj.extinction_point)},
                        {"snapshots", traj.snapshots.size()}};
  write_text(ctx.artifact("flow.json"), summary.dump(2) + "\n");
  write_text(ctx.artifact("flow.csv"),
             csv_row({"termination", "t_est", "steps", "final_time", "final_area", "K_used"}) +
                 csv_row({std::string(to_string(traj.termination.kind)), format_double(traj.termination.t_est),
                          std::to_string(traj.steps), format_double(traj.back().t),
                          format_double(traj.back().area), format_double(traj.K_used)}));
  return traj.termination.kind == Termination::Kind::NumericalFailure ? kExitNumericalFailure : kExitOk;
}

int run_entropy_command(Context& ctx) {
  const TriMesh mesh = ctx.cfg.mesh->build();
  ctx.log << "entropy: " << mesh.num_vertices() << " vertices\n";
  const EntropyResult r = entropy(mesh, ctx.cfg.entropy);
  ctx.log << "lambda " << format_double(r.lambda) << " at t0 " << format_double(r.argmax.t0) << "\n";
  json out = {{"entropy", to_json(r)}};
  if (ctx.cfg.entropy_residual) {
    const ShrinkerResidual res = shrinker_residual(mesh, r.argmax);
    out["shrinker_residual"] = {{"l2", res.l2}, {"x0", vec_to_json(r.argmax.x0)}, {"t0", r.argmax.t0}};
  }
  write_text(ctx.artifact("entropy.json"), out.dump(2) + "\n");
  if (ctx.cfg.functional_grid) {
    for (const Vec& c : ctx.cfg.functional_grid->centres) {
      if (c.size() != mesh.dim()) fail(ErrorCode::InvalidArgument, "functional_grid.centres: wrong dimension");
    }
    std::ofstream csv(ctx.artifact("F_grid.csv"), std::ios::binary);
    write_F_grid_csv(csv, mesh, ctx.cfg.functional_grid->centres, ctx.cfg.functional_grid->scales,
                     KernelOptions{ctx.cfg.entropy.quadrature, 2});
    if (!csv) fail(ErrorCode::IoError, "cannot write F_grid.csv");
  }
  if (!r.converged) {
    fail(ErrorCode::OptimizerDiverged, "entropy ascent stopped on the search boundary or hit max_iters; "
                                       "artifacts hold the best value found");
  }
  return kExitOk;
}

std::vector<SpacetimePoint> default_huisken_grid(const FlowTrajectory& traj) {
  const Vec centre = default_centre(traj);
  const int l = static_cast<int>(centre.size());
  const double d0 = diameter(traj.front().mesh);
  std::vector<Vec> centres{centre};
  for (auto [axis, factor] : {std::pair{0, 0.1}, {0, -0.1}, {1, 0.1}, {2, 0.2}}) {
    Vec c = centre;
    c[axis % l] += factor * d0;
    centres.push_back(c);
  }
  const double s = default_kernel_time(traj);
  std::vector<SpacetimePoint> grid;
  for (const Vec& c : centres) {
    for (double f : {1.0, 1.02, 1.1, 1.25, 1.5}) grid.push_back(SpacetimePoint::make(c, f * s));
  }
  return grid;
}

VerificationReport classification_report(const FlowTrajectory& traj, const ClassifySpec& spec) {
  const ExtinctionClassification cls = classify_extinction(traj, spec.options);
  VerificationReport r;
  r.check_name = "classify";
  r.params = {{"window", spec.options.window},
              {"residual_threshold", spec.options.residual_threshold},
              {"fit_threshold", spec.options.fit_threshold}};
  if (spec.expect) r.params["expect"] = std::string(to_string(*spec.expect));
  r.series = {{"residual", cls.times, cls.residuals}, {"sphere_fit_error", cls.times, cls.sphere_fit_errors}};
  r.worst_violation = spec.expect && *spec.expect != cls.verdict ? 1 : 0;
  r.tolerance = 0;
  r.details = to_json(cls);
  r.finish();
  return r;
}

int run_verify_command(Context& ctx) {
  const FlowTrajectory traj = obtain_trajectory(ctx);
  const auto& sel = ctx.cfg.verify;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<VerificationReport> reports;
  auto note = [&](const VerificationReport& r) {
    ctx.log << r.check_name << ": " << (r.passed ? "passed" : "FAILED") << " (worst "
            << format_double(r.worst_violation) << ", tolerance " << format_double(r.tolerance) << ")\n";
  };

  if (sel.huisken) {
    const auto grid = sel.huisken->grid.empty() ? default_huisken_grid(traj) : sel.huisken->grid;
    reports.push_back(verify_huisken(traj, grid, sel.huisken->rel_tol));
    note(reports.back());
  }
  if (sel.J_monotone) {
    reports.push_back(verify_J_monotone(traj, kernel_point(traj, sel.J_monotone->point), sel.J_monotone->rel_tol,
                                        sel.J_monotone->K));
    note(reports.back());
  }
  if (sel.almost_mono_u) {
    const auto& a = *sel.almost_mono_u;
    reports.push_back(verify_almost_mono_u(traj, kernel_point(traj, a.point), a.C, a.tau.value_or(inf), a.rel_tol,
                                           a.adjacent_only));
    note(reports.back());
  }
  if (sel.entropy_mono) {
    EntropySeriesOptions opt;
    opt.stride = sel.entropy_mono->stride;
    opt.entropy = ctx.cfg.entropy;
    reports.push_back(verify_entropy_almost_mono(traj, sel.entropy_mono->epsilon0, sel.entropy_mono->tau.value_or(inf),
                                                 opt));
    note(reports.back());
  }
  if (sel.volume_ratio) {
    const auto& v = *sel.volume_ratio;
    const double d0 = diameter(traj.front().mesh);
    std::vector<double> radii = v.radii.empty() ? std::vector<double>{0.05 * d0, 0.15 * d0} : v.radii;
    std::vector<Vec> centres = v.centres;
    std::mt19937_64 rng(ctx.cfg.seed);
    const TriMesh& m0 = traj.front().mesh;
    std::uniform_int_distribution<int> pick(0, m0.num_vertices() - 1);
    for (int i = 0; i < v.random_centres; ++i) centres.push_back(m0.vertex(pick(rng)).transpose());
    const double r_max = *std::max_element(radii.begin(), radii.end());
    reports.push_back(volume_ratio_bound(traj, radii, centres, v.S.value_or(4 * r_max * r_max),
                                         v.T.value_or(0.1 * default_kernel_time(traj))));
    note(reports.back());
  }
  if (sel.classify) {
    reports.push_back(classification_report(traj, *sel.classify));
    ctx.log << "classify: " << reports.back().details["verdict"].get<std::string>() << "\n";
  }

  json all = json::array();
  for (const auto& r : reports) all.push_back(to_json(r));
  write_text(ctx.artifact("reports.json"), all.dump(2) + "\n");
  {
    std::ofstream csv(ctx.artifact("summary.csv"), std::ios::binary);
    write_summary_csv(csv, reports);
  }
  std::string series = "check,series,t,value\n";
  for (const auto& r : reports) {
    for (const auto& s : r.series) {
      for (std::size_t i = 0; i < s.t.size(); ++i) {
        series += csv_row({r.check_name, s.name, format_double(s.t[i]), format_double(s.value[i])});
      }
    }
  }
  write_text(ctx.artifact("series.csv"), series);

  const bool ok = std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.passed; });
  return ok ? kExitOk : kExitVerificationFailed;
}

int run_rescale_command(Context& ctx) {
  const FlowTrajectory traj = obtain_trajectory(ctx);
  const auto& spec = ctx.cfg.rescale;
  const Vec x0 = spec.x0.value_or(default_centre(traj));
  const double t0 = spec.t0.value_or(default_kernel_time(traj));
  if (!(t0 > traj.front().t)) fail(ErrorCode::TimeOrder, "rescale.t0 must exceed the first snapshot time");
  const double c = spec.c.value_or(1.0 / std::sqrt(t0 - traj.front().t));
  const double inf = std::numeric_limits<double>::infinity();
  const FlowTrajectory out = rescale_trajectory(traj, x0, t0, c, spec.s_lo.value_or(-inf), spec.s_hi.value_or(inf));
  ctx.log << "rescaled " << out.snapshots.size() << " snapshots by c = " << format_double(c) << "\n";
  write_trajectory(out, ctx.artifact("rescaled"));
  const json summary = {{"x0", vec_to_json(x0)}, {"t0", t0}, {"c", c}, {"snapshots", out.snapshots.size()}};
  write_text(ctx.artifact("rescale.json"), summary.dump(2) + "\n");
  return kExitOk;
}

int run_piecewise_command(Context& ctx) {
  const TriMesh mesh = ctx.cfg.mesh->build();
  PiecewiseOptions opt;
  opt.flow = ctx.cfg.flow;
  opt.entropy = ctx.cfg.entropy;
  opt.classify = ctx.cfg.piecewise.classify;
  opt.budget = ctx.cfg.piecewise.budget;
  opt.perturbation_id = ctx.cfg.piecewise.provider.kind;
  const PiecewiseFlowLog log = piecewise_flow(mesh, ctx.cfg.ambient, ctx.cfg.piecewise.provider.build(), opt);
  ctx.log << "piecewise: " << to_string(log.final_classification) << " after " << log.accepted_count()
          << " accepted replacements\n";
  write_text(ctx.artifact("piecewise.json"), to_json(log).dump(2) + "\n");

  std::string rows = csv_row({"time", "entropy_before", "entropy_after", "perturbation_id", "scale", "accepted"});
  for (const auto& r : log.replacements) {
    rows += csv_row({format_double(r.time), format_double(r.entropy_before), format_double(r.entropy_after),
                     r.perturbation_id, format_double(r.scale), r.accepted ? "true" : "false"});
  }
  write_text(ctx.artifact("replacements.csv"), rows);

  std::string seg = csv_row({"segment", "t", "area", "max_A"});
  for (std::size_t k = 0; k < log.segments.size(); ++k) {
    for (const auto& s : log.segments[k].snapshots) {
      seg += csv_row({std::to_string(k), format_double(log.segment_start_times[k] + s.t), format_double(s.area),
                      format_double(s.max_A)});
    }
  }
  write_text(ctx.artifact("segments.csv"), seg);
  return kExitOk;
}

}  // namespace

int execute(const RunConfig& cfg, std::ostream& log) {
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec) {
    log << "IoError: cannot create " << cfg.out.string() << ": " << ec.message() << "\n";
    return kExitInputError;
  }
  json manifest = {{"library_version", kLibraryVersion},
                   {"command", std::string(to_string(cfg.command))},
                   {"config", {{"input", cfg.source}, {"resolved", cfg.resolved()}}},
                   {"status", "running"},
                   {"incomplete", true},
                   {"artifacts", json::array()},
                   {"metadata", {{"started_at", utc_now()}}}};
  const fs::path manifest_path = cfg.out / "manifest.json";
  try {
    write_text(manifest_path, manifest.dump(2) + "\n");
  } catch (const Error& e) {
    log << e.what() << "\n";
    return kExitInputError;
  }

  Context ctx{cfg, log};
  int code = kExitOk;
  try {
    switch (cfg.command) {
      case Command::Flow: code = run_flow_command(ctx); break;
      case Command::Entropy: code = run_entropy_command(ctx); break;
      case Command::Verify: code = run_verify_command(ctx); break;
      case Command::Rescale: code = run_rescale_command(ctx); break;
      case Command::Piecewise: code = run_piecewise_command(ctx); break;
    }
  } catch (const Error& e) {
    code = exit_code_for(e.code());
    manifest["error"] = {{"code", std::string(to_string(e.code()))}, {"message", e.detail()}};
    log << e.what() << "\n";
  } catch (const std::exception& e) {
    code = kExitNumericalFailure;
    manifest["error"] = {{"code", "Internal"}, {"message", e.what()}};
    log << "error: " << e.what() << "\n";
  }

  const bool incomplete = code == kExitInputError || code == kExitNumericalFailure;
  manifest["status"] = code == kExitOk ? "complete" : code == kExitVerificationFailed ? "verification_failed" : "failed";
  manifest["incomplete"] = incomplete;
  manifest["exit_code"] = code;
  manifest["artifacts"] = ctx.artifacts;
  manifest["metadata"]["finished_at"] = utc_now();
  try {
    write_text(manifest_path, manifest.dump(2) + "\n");
  } catch (const Error& e) {
    log << e.what() << "\n";
    return kExitInputError;
  }
  return code;
}

}  // namespace mcflab
