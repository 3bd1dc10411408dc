#include "mcflab/io.hpp"

#include <cstdio>
#include <fstream>

#include "mcflab/error.hpp"
#include "mcflab/geometry.hpp"
#include "mcflab/mesh_io.hpp"

namespace mcflab {

using nlohmann::json;

const json JsonReader::kEmpty = json::object();

JsonReader::JsonReader(const json& object, std::string path) : json_(&object), path_(std::move(path)) {
  if (!object.is_object()) fail(ErrorCode::ValidationError, (path_.empty() ? "config" : path_) + ": expected an object");
}

bool JsonReader::has(const std::string& key) const { return json_->contains(key); }

std::string JsonReader::field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

const json& JsonReader::raw(const std::string& key) {
  used_.insert(key);
  auto it = json_->find(key);
  if (it == json_->end()) fail(ErrorCode::ValidationError, field(key) + ": required");
  return *it;
}

double JsonReader::number(const std::string& key, double fallback) {
  return optional_number(key).value_or(fallback);
}

std::optional<double> JsonReader::optional_number(const std::string& key) {
  if (!has(key)) return std::nullopt;
  const json& v = raw(key);
  if (!v.is_number()) fail(ErrorCode::ValidationError, field(key) + ": expected a number");
  return v.get<double>();
}

int JsonReader::integer(const std::string& key, int fallback) {
  if (!has(key)) return fallback;
  const json& v = raw(key);
  if (!v.is_number_integer()) fail(ErrorCode::ValidationError, field(key) + ": expected an integer");
  return v.get<int>();
}

bool JsonReader::boolean(const std::string& key, bool fallback) {
  if (!has(key)) return fallback;
  const json& v = raw(key);
  if (!v.is_boolean()) fail(ErrorCode::ValidationError, field(key) + ": expected true or false");
  return v.get<bool>();
}

std::string JsonReader::string(const std::string& key, const std::string& fallback) {
  if (!has(key)) return fallback;
  const json& v = raw(key);
  if (!v.is_string()) fail(ErrorCode::ValidationError, field(key) + ": expected a string");
  return v.get<std::string>();
}

std::optional<Vec> JsonReader::optional_vector(const std::string& key) {
  if (!has(key)) return std::nullopt;
  return vec_from_json(raw(key), field(key));
}

std::vector<double> JsonReader::numbers(const std::string& key, std::vector<double> fallback) {
  if (!has(key)) return fallback;
  const Vec v = vec_from_json(raw(key), field(key));
  return {v.data(), v.data() + v.size()};
}

JsonReader JsonReader::object(const std::string& key) {
  if (!has(key)) {
    used_.insert(key);
    return JsonReader(kEmpty, field(key));
  }
  return JsonReader(raw(key), field(key));
}

void JsonReader::finish() const {
  for (const auto& [key, value] : json_->items()) {
    if (!used_.count(key)) fail(ErrorCode::ParseError, "unknown key '" + field(key) + "'");
  }
}

json vec_to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec vec_from_json(const json& j, const std::string& field) {
  if (!j.is_array()) fail(ErrorCode::ValidationError, field + ": expected an array of numbers");
  Vec out(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(ErrorCode::ValidationError, field + "[" + std::to_string(i) + "]: expected a number");
    out[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return out;
}

json to_json(const AmbientSpace& ambient) {
  struct Visitor {
    int dim;
    const AmbientSpace& a;
    json operator()(const AmbientSpace::Euclidean&) const { return {{"kind", "euclidean"}, {"dim", dim}}; }
    json operator()(const AmbientSpace::RoundSphere& s) const {
      return {{"kind", "sphere"}, {"dim", dim}, {"radius", s.radius}, {"center", vec_to_json(s.center)}};
    }
    json operator()(const AmbientSpace::CliffordTorus& t) const {
      return {{"kind", "clifford_torus"}, {"r1", t.r1}, {"r2", t.r2}, {"center", vec_to_json(t.center)}};
    }
    json operator()(const AmbientSpace::Implicit& p) const {
      json out = {{"kind", "implicit"}, {"dim", dim}, {"phi", p.phi.to_string()}};
      if (a.region()) out["region"] = {{"lo", vec_to_json(a.region()->lo)}, {"hi", vec_to_json(a.region()->hi)}};
      return out;
    }
  };
  return std::visit(Visitor{ambient.dim(), ambient}, ambient.kind());
}

AmbientSpace ambient_from_json(JsonReader in, int default_dim) {
  const std::string kind = in.string("kind", "euclidean");
  const int dim = in.integer("dim", default_dim);
  auto build = [&](auto&& make) -> AmbientSpace {
    try {
      return make();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ParseError) fail(ErrorCode::ParseError, in.field("phi") + ": " + e.detail());
      if (e.code() == ErrorCode::ValidationError) throw;
      fail(ErrorCode::ValidationError, in.path() + ": " + e.detail());
    }
  };
  std::optional<AmbientSpace> out;
  if (kind == "euclidean") {
    out = build([&] { return AmbientSpace::euclidean(dim); });
  } else if (kind == "sphere") {
    const double radius = in.number("radius", 1.0);
    const auto center = in.optional_vector("center");
    out = build([&] { return AmbientSpace::round_sphere(dim, radius, center); });
  } else if (kind == "clifford_torus") {
    const double r = 1.0 / std::sqrt(2.0);
    const double r1 = in.number("r1", r), r2 = in.number("r2", r);
    const auto center = in.optional_vector("center");
    out = build([&] { return AmbientSpace::clifford_torus(r1, r2, center); });
  } else if (kind == "implicit") {
    const std::string text = in.string("phi", "");
    Box region{Vec::Constant(dim, -2.0), Vec::Constant(dim, 2.0)};
    if (in.has("region")) {
      JsonReader r = in.object("region");
      region.lo = vec_from_json(r.raw("lo"), r.field("lo"));
      region.hi = vec_from_json(r.raw("hi"), r.field("hi"));
      r.finish();
    }
    out = build([&] { return AmbientSpace::implicit(Polynomial::parse(text, dim), region); });
  } else {
    fail(ErrorCode::ValidationError, in.field("kind") + ": unknown ambient '" + kind + "'");
  }
  in.finish();
  return *out;
}

json to_json(const FlowConfig& c) {
  return {{"dt_initial", c.dt_initial},
          {"c_stab", c.c_stab},
          {"max_steps", c.max_steps},
          {"stop_area", c.stop_area},
          {"stop_quality", c.stop_quality},
          {"scheme", std::string(to_string(c.scheme))},
          {"snapshot_stride", c.snapshot_stride},
          {"extinction_fit_window", c.extinction_fit_window},
          {"tangential", std::string(to_string(c.tangential))},
          {"redistribution", c.redistribution}};
}

FlowConfig flow_config_from_json(JsonReader in) {
  FlowConfig c;
  c.dt_initial = in.number("dt_initial", c.dt_initial);
  c.c_stab = in.number("c_stab", c.c_stab);
  c.max_steps = in.integer("max_steps", c.max_steps);
  c.stop_area = in.number("stop_area", c.stop_area);
  c.stop_quality = in.number("stop_quality", c.stop_quality);
  c.snapshot_stride = in.integer("snapshot_stride", c.snapshot_stride);
  c.extinction_fit_window = in.integer("extinction_fit_window", c.extinction_fit_window);
  c.redistribution = in.number("redistribution", c.redistribution);
  const std::string scheme = in.string("scheme", std::string(to_string(c.scheme)));
  const std::string tangential = in.string("tangential", std::string(to_string(c.tangential)));
  validate_under(in.path(), [&] {
    c.scheme = scheme_from_string(scheme);
    c.tangential = tangential_from_string(tangential);
    c.validate();
  });
  in.finish();
  return c;
}

json to_json(const EntropyOptions& o) {
  return {{"grid_nx", o.grid_nx},       {"grid_nt", o.grid_nt},     {"n_starts", o.n_starts},
          {"ascent_tol", o.ascent_tol}, {"max_iters", o.max_iters}, {"grid_quadrature", o.grid_quadrature},
          {"quadrature", o.quadrature}, {"seed", o.seed},           {"box_inflation", o.box_inflation}};
}

EntropyOptions entropy_options_from_json(JsonReader in) {
  EntropyOptions o;
  o.grid_nx = in.integer("grid_nx", o.grid_nx);
  o.grid_nt = in.integer("grid_nt", o.grid_nt);
  o.n_starts = in.integer("n_starts", o.n_starts);
  o.ascent_tol = in.number("ascent_tol", o.ascent_tol);
  o.max_iters = in.integer("max_iters", o.max_iters);
  o.grid_quadrature = in.integer("grid_quadrature", o.grid_quadrature);
  o.quadrature = in.integer("quadrature", o.quadrature);
  o.box_inflation = in.number("box_inflation", o.box_inflation);
  if (in.has("seed")) {
    const json& s = in.raw("seed");
    if (!s.is_number_unsigned()) fail(ErrorCode::ValidationError, in.field("seed") + ": expected a non-negative integer");
    o.seed = s.get<std::uint64_t>();
  }
  validate_under(in.path(), [&] { o.validate(); });
  in.finish();
  return o;
}

json to_json(const EntropyResult& r) {
  return {{"lambda", r.lambda},
          {"argmax", {{"x0", vec_to_json(r.argmax.x0)}, {"t0", r.argmax.t0}}},
          {"starts_tried", r.starts_tried},
          {"converged", r.converged},
          {"search_box", {{"lo", vec_to_json(r.search_box.lo)}, {"hi", vec_to_json(r.search_box.hi)}}},
          {"T1", r.T1},
          {"T2", r.T2},
          {"grid_max", r.grid_max},
          {"evaluations", r.evaluations}};
}

json to_json(const ExtinctionClassification& c) {
  return {{"verdict", std::string(to_string(c.verdict))},
          {"times", c.times},
          {"residuals", c.residuals},
          {"sphere_fit_errors", c.sphere_fit_errors},
          {"snapshot_indices", c.snapshot_indices}};
}

json to_json(const PiecewiseFlowLog& log) {
  json segments = json::array();
  for (std::size_t i = 0; i < log.segments.size(); ++i) {
    const auto& s = log.segments[i];
    segments.push_back({{"start_time", log.segment_start_times[i]},
                        {"termination", std::string(to_string(s.termination.kind))},
                        {"t_est", s.termination.t_est},
                        {"steps", s.steps},
                        {"extinction_point", vec_to_json(s.extinction_point)}});
  }
  json replacements = json::array();
  for (const auto& r : log.replacements) {
    replacements.push_back({{"time", r.time},
                            {"entropy_before", r.entropy_before},
                            {"entropy_after", r.entropy_after},
                            {"perturbation_id", r.perturbation_id},
                            {"scale", r.scale},
                            {"accepted", r.accepted}});
  }
  return {{"final_classification", std::string(to_string(log.final_classification))},
          {"initial_entropy", log.initial_entropy},
          {"replacement_bound", log.replacement_bound},
          {"accepted_replacements", log.accepted_count()},
          {"detail", log.detail},
          {"segments", segments},
          {"replacements", replacements}};
}

namespace {

std::string snapshot_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snap_%05zu.off", i);
  return buf;
}

json termination_json(const Termination& t) {
  return {{"kind", std::string(to_string(t.kind))}, {"t_est", t.t_est}, {"detail", t.detail}};
}

}  // namespace

void write_trajectory(const FlowTrajectory& traj, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());

  json snaps = json::array();
  std::ofstream series(dir / "series.csv");
  if (!series) fail(ErrorCode::IoError, "cannot write " + (dir / "series.csv").string());
  series << "t,area,diameter,max_A,diameter_ratio\n";
  const double d0 = traj.snapshots.empty() ? 1.0 : diameter(traj.front().mesh);
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    const auto& s = traj.snapshots[i];
    const std::string name = snapshot_name(i);
    write_mesh(dir / name, s.mesh);
    const double d = diameter(s.mesh);
    series << format_double(s.t) << ',' << format_double(s.area) << ',' << format_double(d) << ','
           << format_double(s.max_A) << ',' << format_double(d / d0) << '\n';
    snaps.push_back({{"file", name}, {"t", s.t}, {"max_A", s.max_A}});
  }
  if (!series) fail(ErrorCode::IoError, "write failed for series.csv");

  const json manifest = {{"format", "mcflab-trajectory"},
                         {"version", 1},
                         {"ambient", to_json(traj.ambient)},
                         {"K_used", traj.K_used},
                         {"termination", termination_json(traj.termination)},
                         {"extinction_point", vec_to_json(traj.extinction_point)},
                         {"steps", traj.steps},
                         {"config", to_json(traj.config)},
                         {"snapshots", snaps}};
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  if (!out) fail(ErrorCode::IoError, "write failed for manifest.json");
}

FlowTrajectory read_trajectory(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) fail(ErrorCode::IoError, "cannot open " + (dir / "manifest.json").string());
  json m;
  try {
    m = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ParseError, (dir / "manifest.json").string() + ": " + e.what());
  }
  try {
    if (m.at("format") != "mcflab-trajectory") fail(ErrorCode::ParseError, "not a trajectory manifest");
    FlowTrajectory traj;
    const json& amb = m.at("ambient");
    traj.ambient = ambient_from_json(JsonReader(amb, "ambient"), amb.value("dim", 3));
    traj.K_used = m.at("K_used").get<double>();
    const json& term = m.at("termination");
    traj.termination.kind = termination_from_string(term.at("kind").get<std::string>());
    traj.termination.t_est = term.at("t_est").get<double>();
    traj.termination.detail = term.at("detail").get<std::string>();
    traj.extinction_point = vec_from_json(m.at("extinction_point"), "extinction_point");
    traj.steps = m.at("steps").get<int>();
    traj.config = flow_config_from_json(JsonReader(m.at("config"), "config"));
    for (const json& s : m.at("snapshots")) {
      TriMesh mesh = read_mesh(dir / s.at("file").get<std::string>());
      if (!traj.snapshots.empty()) {
        if (mesh.num_vertices() != traj.front().mesh.num_vertices() || mesh.faces() != traj.front().mesh.faces()) {
          fail(ErrorCode::ParseError, "snapshot connectivity differs in " + s.at("file").get<std::string>());
        }
        mesh = traj.front().mesh.with_vertices(mesh.vertices());
      }
      const double area = surface_area(mesh);
      traj.snapshots.push_back({s.at("t").get<double>(), std::move(mesh), area, s.at("max_A").get<double>()});
    }
    if (traj.snapshots.empty()) fail(ErrorCode::ParseError, "trajectory has no snapshots");
    return traj;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, (dir / "manifest.json").string() + ": " + e.what());
  }
}

}  // namespace mcflab
