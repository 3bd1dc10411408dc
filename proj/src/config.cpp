#include "mcflab/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "mcflab/error.hpp"
#include "mcflab/io.hpp"
#include "mcflab/mesh_io.hpp"
#include "mcflab/shapes.hpp"

namespace mcflab {

using nlohmann::json;

std::string_view to_string(Command c) {
  switch (c) {
    case Command::Flow: return "flow";
    case Command::Entropy: return "entropy";
    case Command::Verify: return "verify";
    case Command::Rescale: return "rescale";
    case Command::Piecewise: return "piecewise";
  }
  return "?";
}

Command command_from_string(std::string_view name) {
  for (Command c : {Command::Flow, Command::Entropy, Command::Verify, Command::Rescale, Command::Piecewise}) {
    if (to_string(c) == name) return c;
  }
  fail(ErrorCode::ValidationError,
       "command: must be flow, entropy, verify, rescale or piecewise, got '" + std::string(name) + "'");
}

TriMesh MeshSpec::build() const {
  const json& p = params;
  TriMesh mesh;
  if (shape == "file") {
    mesh = read_mesh(path);
  } else if (shape == "icosphere") {
    mesh = shapes::icosphere(p["subdivisions"], p["radius"], p["dim"]);
  } else if (shape == "ellipsoid") {
    mesh = shapes::ellipsoid(p["subdivisions"], p["a"], p["b"], p["c"], p["dim"]);
  } else if (shape == "torus") {
    mesh = shapes::torus(p["R"], p["r"], p["n_major"], p["n_minor"], p["dim"]);
  } else if (shape == "geodesic_sphere_s3") {
    mesh = shapes::geodesic_sphere_s3(p["subdivisions"], p["geodesic_radius"], p["rho"]);
  } else if (shape == "clifford_torus") {
    mesh = shapes::clifford_torus(p["r1"], p["r2"], p["n1"], p["n2"]);
  } else {
    fail(ErrorCode::ValidationError, "mesh.shape: unknown shape '" + shape + "'");
  }
  if (center) {
    if (center->size() != mesh.dim()) fail(ErrorCode::ValidationError, "mesh.center: wrong dimension");
    mesh = shapes::translated(mesh, *center);
  }
  return mesh;
}

PerturbationProvider ProviderSpec::build() const {
  if (kind == "zero") return providers::zero();
  if (kind == "dilation") return providers::dilation(amplitude);
  if (kind == "bump") return providers::bump(amplitude, width);
  fail(ErrorCode::ValidationError, "piecewise.provider.kind: unknown provider '" + kind + "'");
}

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  entropy.seed = s;
}

json RunConfig::resolved() const {
  json r = {{"command", std::string(to_string(command))},
              {"ambient", to_json(ambient)},
              {"flow", to_json(flow)},
              {"entropy", to_json(entropy)},
              {"seed", seed},
              {"out", out.generic_string()}};
  if (mesh) {
    json m = mesh->params;
    m["shape"] = mesh->shape;
    if (mesh->shape == "file") m["path"] = mesh->path.generic_string();
    if (mesh->center) m["center"] = vec_to_json(*mesh->center);
    r["mesh"] = m;
  }
  if (trajectory) r["trajectory"] = trajectory->generic_string();
  return r;
}

namespace {

void require(bool ok, const std::string& field, const std::string& why) {
  if (!ok) fail(ErrorCode::ValidationError, field + ": " + why);
}

double positive(JsonReader& in, const std::string& key, double fallback) {
  const double v = in.number(key, fallback);
  require(v > 0, in.field(key), "must be positive");
  return v;
}

int at_least(JsonReader& in, const std::string& key, int fallback, int lo) {
  const int v = in.integer(key, fallback);
  require(v >= lo, in.field(key), "must be at least " + std::to_string(lo));
  return v;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

MeshSpec parse_mesh(JsonReader in, const std::filesystem::path& base) {
  MeshSpec m;
  m.shape = in.string("shape", in.has("path") ? "file" : "icosphere");
  json& p = m.params;
  if (m.shape == "file") {
    m.path = resolve(base, in.string("path", ""));
    require(std::filesystem::is_regular_file(m.path), in.field("path"), "file not found: " + m.path.string());
  } else if (m.shape == "icosphere") {
    p["subdivisions"] = at_least(in, "subdivisions", 3, 0);
    p["radius"] = positive(in, "radius", 1.0);
    p["dim"] = at_least(in, "dim", 3, 3);
  } else if (m.shape == "ellipsoid") {
    p["subdivisions"] = at_least(in, "subdivisions", 3, 0);
    p["a"] = positive(in, "a", 2.0);
    p["b"] = positive(in, "b", 1.0);
    p["c"] = positive(in, "c", 1.0);
    p["dim"] = at_least(in, "dim", 3, 3);
  } else if (m.shape == "torus") {
    p["R"] = positive(in, "R", 1.0);
    p["r"] = positive(in, "r", 0.4);
    p["n_major"] = at_least(in, "n_major", 48, 3);
    p["n_minor"] = at_least(in, "n_minor", 20, 3);
    p["dim"] = at_least(in, "dim", 3, 3);
  } else if (m.shape == "geodesic_sphere_s3") {
    p["subdivisions"] = at_least(in, "subdivisions", 3, 0);
    p["geodesic_radius"] = positive(in, "geodesic_radius", std::numbers::pi / 3);
    p["rho"] = positive(in, "rho", 1.0);
  } else if (m.shape == "clifford_torus") {
    const double r = 1.0 / std::sqrt(2.0);
    p["r1"] = positive(in, "r1", r);
    p["r2"] = positive(in, "r2", r);
    p["n1"] = at_least(in, "n1", 32, 3);
    p["n2"] = at_least(in, "n2", 32, 3);
  } else {
    fail(ErrorCode::ValidationError, in.field("shape") + ": unknown shape '" + m.shape + "'");
  }
  m.center = in.optional_vector("center");
  in.finish();
  return m;
}

KernelPointSpec parse_point(JsonReader& in) {
  KernelPointSpec p;
  p.y = in.optional_vector("y");
  p.s = in.optional_number("s");
  return p;
}

std::vector<Vec> parse_points(JsonReader& in, const std::string& key) {
  std::vector<Vec> out;
  if (!in.has(key)) return out;
  const json& arr = in.raw(key);
  require(arr.is_array(), in.field(key), "expected an array of points");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(vec_from_json(arr[i], in.field(key) + "[" + std::to_string(i) + "]"));
  }
  return out;
}

Verdict verdict_from_string(const std::string& s, const std::string& field) {
  for (Verdict v : {Verdict::RoundPoint, Verdict::NonRound, Verdict::Inconclusive}) {
    if (to_string(v) == s) return v;
  }
  fail(ErrorCode::ValidationError, field + ": must be RoundPoint, NonRound or Inconclusive");
}

ClassifyOptions parse_classify_options(JsonReader& in) {
  ClassifyOptions o;
  o.window = at_least(in, "window", o.window, 2);
  o.residual_threshold = positive(in, "residual_threshold", o.residual_threshold);
  o.fit_threshold = positive(in, "fit_threshold", o.fit_threshold);
  return o;
}

VerifySelection parse_verify(JsonReader in) {
  VerifySelection v;
  if (in.has("huisken")) {
    JsonReader h = in.object("huisken");
    HuiskenSpec spec;
    spec.rel_tol = positive(h, "rel_tol", spec.rel_tol);
    if (h.has("grid")) {
      const json& grid = h.raw("grid");
      require(grid.is_array(), h.field("grid"), "expected an array of {y, s}");
      for (std::size_t i = 0; i < grid.size(); ++i) {
        JsonReader g(grid[i], h.field("grid") + "[" + std::to_string(i) + "]");
        const Vec y = vec_from_json(g.raw("y"), g.field("y"));
        const double s = g.number("s", 0);
        require(s > 0, g.field("s"), "must be positive");
        g.finish();
        spec.grid.push_back(SpacetimePoint::make(y, s));
      }
    }
    h.finish();
    v.huisken = spec;
  }
  if (in.has("J_monotone")) {
    JsonReader j = in.object("J_monotone");
    JSpec spec;
    spec.rel_tol = positive(j, "rel_tol", spec.rel_tol);
    spec.point = parse_point(j);
    spec.K = j.optional_number("K");
    if (spec.K) require(*spec.K >= 0, j.field("K"), "must be non-negative");
    j.finish();
    v.J_monotone = spec;
  }
  if (in.has("almost_mono_u")) {
    JsonReader a = in.object("almost_mono_u");
    AlmostMonoSpec spec;
    spec.C = a.number("C", spec.C);
    spec.tau = a.optional_number("tau");
    if (spec.tau) require(*spec.tau > 0, a.field("tau"), "must be positive");
    spec.rel_tol = positive(a, "rel_tol", spec.rel_tol);
    spec.adjacent_only = a.boolean("adjacent_only", false);
    spec.point = parse_point(a);
    a.finish();
    v.almost_mono_u = spec;
  }
  if (in.has("entropy_mono")) {
    JsonReader e = in.object("entropy_mono");
    EntropyMonoSpec spec;
    spec.epsilon0 = e.number("epsilon0", spec.epsilon0);
    spec.tau = e.optional_number("tau");
    if (spec.tau) require(*spec.tau > 0, e.field("tau"), "must be positive");
    spec.stride = at_least(e, "stride", spec.stride, 1);
    e.finish();
    v.entropy_mono = spec;
  }
  if (in.has("volume_ratio")) {
    JsonReader r = in.object("volume_ratio");
    VolumeSpec spec;
    spec.radii = r.numbers("radii", {});
    for (std::size_t i = 0; i < spec.radii.size(); ++i) {
      require(spec.radii[i] > 0, r.field("radii") + "[" + std::to_string(i) + "]", "must be positive");
    }
    spec.centres = parse_points(r, "centres");
    spec.random_centres = at_least(r, "random_centres", spec.random_centres, 0);
    spec.S = r.optional_number("S");
    spec.T = r.optional_number("T");
    if (spec.S) require(*spec.S > 0, r.field("S"), "must be positive");
    if (spec.T) require(*spec.T > 0, r.field("T"), "must be positive");
    r.finish();
    v.volume_ratio = spec;
  }
  if (in.has("classify")) {
    JsonReader c = in.object("classify");
    ClassifySpec spec;
    spec.options = parse_classify_options(c);
    if (c.has("expect")) spec.expect = verdict_from_string(c.string("expect", ""), c.field("expect"));
    c.finish();
    v.classify = spec;
  }
  in.finish();
  return v;
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir, std::optional<Command> command) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ParseError, std::string("config: ") + e.what());
  }
  RunConfig cfg;
  cfg.source = doc;
  JsonReader in(doc, "");

  if (in.has("command")) {
    const Command c = command_from_string(in.string("command", ""));
    require(!command || *command == c, "command", "config says '" + std::string(to_string(c)) +
                                                      "' but the command line says '" +
                                                      std::string(to_string(*command)) + "'");
    cfg.command = c;
  } else {
    require(command.has_value(), "command", "required");
    cfg.command = *command;
  }

  if (in.has("mesh")) {
    const json& m = in.raw("mesh");
    if (m.is_string()) {
      cfg.mesh = MeshSpec{};
      cfg.mesh->path = resolve(base_dir, m.get<std::string>());
      require(std::filesystem::is_regular_file(cfg.mesh->path), "mesh", "file not found: " + cfg.mesh->path.string());
    } else {
      cfg.mesh = parse_mesh(JsonReader(m, "mesh"), base_dir);
    }
  }
  if (in.has("trajectory")) {
    cfg.trajectory = resolve(base_dir, in.string("trajectory", ""));
    require(std::filesystem::is_regular_file(*cfg.trajectory / "manifest.json"), "trajectory",
            "no manifest.json in " + cfg.trajectory->string());
  }

  int default_dim = 3;
  if (cfg.mesh && cfg.mesh->shape != "file") {
    const json& p = cfg.mesh->params;
    if (p.contains("dim")) default_dim = p["dim"];
    if (cfg.mesh->shape == "geodesic_sphere_s3" || cfg.mesh->shape == "clifford_torus") default_dim = 4;
  }
  cfg.ambient = ambient_from_json(in.object("ambient"), default_dim);
  cfg.flow = flow_config_from_json(in.object("flow"));
  cfg.entropy = entropy_options_from_json(in.object("entropy"));
  cfg.entropy_residual = in.boolean("entropy_residual", true);

  if (in.has("functional_grid")) {
    JsonReader g = in.object("functional_grid");
    FunctionalGrid grid;
    grid.centres = parse_points(g, "centres");
    grid.scales = g.numbers("scales", {});
    for (std::size_t i = 0; i < grid.scales.size(); ++i) {
      require(grid.scales[i] > 0, g.field("scales") + "[" + std::to_string(i) + "]", "t0 must be positive");
    }
    require(!grid.centres.empty(), g.field("centres"), "at least one centre required");
    require(!grid.scales.empty(), g.field("scales"), "at least one scale required");
    g.finish();
    cfg.functional_grid = grid;
  }

  if (in.has("verify")) {
    cfg.verify = parse_verify(in.object("verify"));
  } else if (cfg.command == Command::Verify) {
    if (cfg.ambient.is_euclidean()) cfg.verify.huisken = HuiskenSpec{};
    cfg.verify.J_monotone = JSpec{};
    cfg.verify.almost_mono_u = AlmostMonoSpec{};
    cfg.verify.volume_ratio = VolumeSpec{};
  }

  {
    JsonReader r = in.object("rescale");
    cfg.rescale.x0 = r.optional_vector("x0");
    cfg.rescale.t0 = r.optional_number("t0");
    cfg.rescale.c = r.optional_number("c");
    if (cfg.rescale.c) require(*cfg.rescale.c > 0, r.field("c"), "must be positive");
    cfg.rescale.s_lo = r.optional_number("s_lo");
    cfg.rescale.s_hi = r.optional_number("s_hi");
    r.finish();
  }
  {
    JsonReader p = in.object("piecewise");
    auto& pw = cfg.piecewise;
    pw.budget.epsilon = positive(p, "epsilon", pw.budget.epsilon);
    pw.budget.max_replacements = at_least(p, "max_replacements", pw.budget.max_replacements, 0);
    pw.budget.sigma = p.number("sigma", pw.budget.sigma);
    {
      JsonReader c = p.object("classify");
      pw.classify = parse_classify_options(c);
      c.finish();
    }
    {
      JsonReader pr = p.object("provider");
      pw.provider.kind = pr.string("kind", pw.provider.kind);
      require(pw.provider.kind == "zero" || pw.provider.kind == "dilation" || pw.provider.kind == "bump",
              pr.field("kind"), "must be zero, dilation or bump");
      pw.provider.amplitude = pr.number("amplitude", pw.provider.amplitude);
      pw.provider.width = positive(pr, "width", pw.provider.width);
      pr.finish();
    }
    p.finish();
  }

  if (in.has("seed")) {
    const json& s = in.raw("seed");
    require(s.is_number_unsigned(), "seed", "expected a non-negative integer");
    cfg.set_seed(s.get<std::uint64_t>());
  } else {
    cfg.set_seed(cfg.entropy.seed);
  }
  if (in.has("out")) cfg.out = resolve(base_dir, in.string("out", ""));
  in.finish();

  const bool needs_mesh = cfg.command == Command::Flow || cfg.command == Command::Entropy ||
                          cfg.command == Command::Piecewise || !cfg.trajectory;
  require(!needs_mesh || cfg.mesh.has_value(), "mesh", "required for " + std::string(to_string(cfg.command)));
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, std::optional<Command> command) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path(), command);
}

}  // namespace mcflab
