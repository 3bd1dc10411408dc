#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcflab/ambient.hpp"
#include "mcflab/flow.hpp"
#include "mcflab/functionals.hpp"
#include "mcflab/harness.hpp"

namespace mcflab {

inline constexpr const char* kLibraryVersion = "0.1.0";

enum class Command { Flow, Entropy, Verify, Rescale, Piecewise };
std::string_view to_string(Command c);
Command command_from_string(std::string_view name);

/// A mesh file or a built-in shape with its parameters.
struct MeshSpec {
  std::string shape = "file";  // file, icosphere, ellipsoid, torus, geodesic_sphere_s3, clifford_torus
  std::filesystem::path path;
  nlohmann::json params = nlohmann::json::object();
  std::optional<Vec> center;

  TriMesh build() const;
};

struct KernelPointSpec {
  std::optional<Vec> y;     // default: extinction point
  std::optional<double> s;  // default: extinction time estimate
};

struct HuiskenSpec {
  double rel_tol = 1e-3;
  std::vector<SpacetimePoint> grid;  // empty: 5 centres x 5 kernel times around the extinction point
};

struct JSpec {
  double rel_tol = 1e-3;
  KernelPointSpec point;
  std::optional<double> K;
};

struct AlmostMonoSpec {
  double C = 2;
  std::optional<double> tau;  // default: no gap restriction
  double rel_tol = 1e-3;
  bool adjacent_only = false;
  KernelPointSpec point;
};

struct EntropyMonoSpec {
  double epsilon0 = 0.05;
  std::optional<double> tau;
  int stride = 10;
};

struct VolumeSpec {
  std::vector<double> radii;  // default: 0.05 and 0.15 times the initial diameter
  std::vector<Vec> centres;   // default: `random_centres` vertices of M_0
  int random_centres = 5;
  std::optional<double> S;    // default: (2 max r)^2
  std::optional<double> T;    // default: a tenth of the extinction time
};

struct ClassifySpec {
  ClassifyOptions options;
  std::optional<Verdict> expect;
};

struct VerifySelection {
  std::optional<HuiskenSpec> huisken;
  std::optional<JSpec> J_monotone;
  std::optional<AlmostMonoSpec> almost_mono_u;
  std::optional<EntropyMonoSpec> entropy_mono;
  std::optional<VolumeSpec> volume_ratio;
  std::optional<ClassifySpec> classify;
};

struct RescaleSpec {
  std::optional<Vec> x0;
  std::optional<double> t0;
  std::optional<double> c;  // default: 1 / sqrt(t0 - first snapshot time)
  std::optional<double> s_lo, s_hi;
};

struct ProviderSpec {
  std::string kind = "dilation";  // zero, dilation, bump
  double amplitude = 0.1;
  double width = 1.0;

  PerturbationProvider build() const;
};

struct PiecewiseSpec {
  PiecewiseBudget budget;
  ClassifyOptions classify;
  ProviderSpec provider;
};

struct FunctionalGrid {
  std::vector<Vec> centres;
  std::vector<double> scales;
};

struct RunConfig {
  Command command = Command::Flow;
  std::optional<MeshSpec> mesh;
  std::optional<std::filesystem::path> trajectory;  // verify / rescale input; otherwise the mesh is flowed
  AmbientSpace ambient = AmbientSpace::euclidean(3);
  FlowConfig flow;
  EntropyOptions entropy;
  bool entropy_residual = true;
  std::optional<FunctionalGrid> functional_grid;
  VerifySelection verify;
  RescaleSpec rescale;
  PiecewiseSpec piecewise;
  std::uint64_t seed = 0;
  std::filesystem::path out = "mcflab_out";
  nlohmann::json source = nlohmann::json::object();  // the document as read

  /// Applies --seed: the top-level seed and the entropy jitter seed.
  void set_seed(std::uint64_t s);
  nlohmann::json resolved() const;
};

/// Parses a JSON config document. Relative paths resolve against `base_dir`;
/// `command` (from the command line) must agree with a "command" key if present.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir,
                       std::optional<Command> command = {});
RunConfig load_config(const std::filesystem::path& path, std::optional<Command> command = {});

}  // namespace mcflab
