#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "socialtrack/commands.hpp"
#include "socialtrack/error.hpp"

using namespace socialtrack;

int main(int argc, char** argv) {
  CLI::App app{"Distributed tracking over social networks: MSD analysis, simulation, regret and edge design"};
  app.require_subcommand(1, 1);

  std::string scenario_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> horizon;
  std::optional<int> threads;

  const std::map<std::string, std::string> about{
      {"analyze", "Closed-form steady-state MSD and stability report"},
      {"simulate", "Monte Carlo MSD estimate"},
      {"regret", "Empirical regret against the finite-horizon bound"},
      {"design-edge", "Rank non-edges by first-order MSD change"},
      {"sweep-alpha", "MSD and spectral radius over a grid of alpha"},
  };
  for (const auto& name : subcommand_names()) {
    auto* sub = app.add_subcommand(name, about.at(name));
    sub->add_option("--scenario", scenario_path, "Scenario file (TOML)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed", seed, "Override the scenario seed");
    sub->add_option("--trials", trials, "Override simulation and regret trial counts")->check(CLI::PositiveNumber);
    sub->add_option("--horizon", horizon, "Override the simulation horizon")->check(CLI::PositiveNumber);
    sub->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  Scenario s;
  try {
    s = load_scenario(scenario_path);
  } catch (const ValidationError& e) {
    std::cerr << "error [" << e.module() << "]: " << e.what() << "\n";
    return kExitValidation;
  }
  if (seed) s.seed = *seed;
  if (trials) {
    s.simulation.trials = *trials;
    s.regret.trials = *trials;
  }
  if (horizon) s.simulation.horizon = *horizon;
  if (threads) s.simulation.threads = *threads;

  return run_subcommand(app.get_subcommands().front()->get_name(), s, out_dir, std::cerr);
}
