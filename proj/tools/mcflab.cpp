#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mcflab/config.hpp"
#include "mcflab/driver.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Mean curvature flow laboratory for triangle meshes"};
  app.set_version_flag("--version", std::string(mcflab::kLibraryVersion));
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  for (auto command : {mcflab::Command::Flow, mcflab::Command::Entropy, mcflab::Command::Verify,
                       mcflab::Command::Rescale, mcflab::Command::Piecewise}) {
    static const char* help[] = {"run a flow and write its trajectory", "compute the entropy of a mesh",
                                 "run verification suites on a trajectory", "parabolically rescale a trajectory",
                                 "run a piecewise flow with entropy-decreasing replacements"};
    auto* sub = app.add_subcommand(std::string(mcflab::to_string(command)), help[static_cast<int>(command)]);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--seed", seed, "seed for optimizer start jitter and random centres");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mcflab::kExitInputError;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    mcflab::RunConfig cfg = mcflab::load_config(config_path, mcflab::command_from_string(name));
    if (out_dir) cfg.out = *out_dir;
    if (seed) cfg.set_seed(*seed);
    return mcflab::execute(cfg, std::cerr);
  } catch (const mcflab::Error& e) {
    std::cerr << e.what() << "\n";
    return mcflab::exit_code_for(e.code());
  }
}
