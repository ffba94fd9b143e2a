#include <CLI11.hpp>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dgdflow/scenario.hpp"
#include "dgdflow/selftest.hpp"

namespace {

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Consensus + innovations gradient-flow experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  int jobs = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* opt = cmd->add_option("--config", config_path, "scenario config (JSON)");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--jobs", jobs, "parallel jobs (default: all cores)");
    cmd->add_option("--seed", seed, "override the scenario seed")
        ->each([&](const std::string&) { seed_set = true; });
  };

  const std::vector<std::string> experiments = {"simulate", "basins", "consensus",
                                                "manifold", "probe"};
  for (const auto& name : experiments) add_common(app.add_subcommand(name), true);

  // Manifold grid overrides.
  CLI::App* manifold_cmd = app.get_subcommand("manifold");
  double t0 = -1.0, horizon = -1.0, radius = -1.0;
  int grid_points = -1, samples = -1;
  manifold_cmd->add_option("--t0", t0, "chart base time (alpha clock)");
  manifold_cmd->add_option("--horizon", horizon, "solver horizon past t0");
  manifold_cmd->add_option("--grid-points", grid_points, "time grid nodes");
  manifold_cmd->add_option("--radius", radius, "contraction ball radius");
  manifold_cmd->add_option("--samples", samples, "stable-coordinate samples");

  CLI::App* sweep_cmd = app.add_subcommand("sweep");
  add_common(sweep_cmd, true);
  std::string param, values_csv;
  sweep_cmd->add_option("--param", param, "scalar config path, e.g. schedule.tau_beta")
      ->required();
  sweep_cmd->add_option("--values", values_csv, "comma-separated values")->required();

  CLI::App* selftest_cmd = app.add_subcommand("selftest", "run the invariant suite");
  add_common(selftest_cmd, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (selftest_cmd->parsed()) {
      const bool ok = dgdflow::report_selftest(std::cout);
      return ok ? 0 : 1;
    }

    dgdflow::Scenario sc = dgdflow::Scenario::load(config_path);
    dgdflow::RunOptions ro;
    ro.out_dir = out_dir;
    ro.jobs = jobs;
    if (seed_set) ro.seed_override = seed;

    if (sweep_cmd->parsed())
      return dgdflow::run_sweep(sc, param, parse_values(values_csv), ro, std::cout);

    for (const auto& name : experiments) {
      if (app.get_subcommand(name)->parsed()) {
        sc.experiment = name;
        if (name == "manifold") {
          if (t0 > 0) sc.manifold.t0 = t0;
          if (horizon > 0) sc.manifold.horizon = horizon;
          if (grid_points > 0) sc.manifold.grid_points = grid_points;
          if (radius > 0) sc.manifold.radius = radius;
          if (samples > 0) sc.manifold.samples = samples;
        }
        return dgdflow::run_scenario(sc, ro, std::cout);
      }
    }
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
