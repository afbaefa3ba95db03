#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "socialtrack/error.hpp"
#include "socialtrack/estimator.hpp"
#include "socialtrack/graph.hpp"
#include "socialtrack/model.hpp"
#include "socialtrack/simulate.hpp"

namespace socialtrack {

/// Scenario file problem. `field()` is the dotted key path (empty for
/// syntax errors, which carry line and column instead).
class ScenarioError : public ValidationError {
 public:
  ScenarioError(std::string field, const std::string& what)
      : ValidationError("cli", what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct GraphSpec {
  /// Unset means a custom edge list.
  std::optional<GraphFamily> family = GraphFamily::complete;
  int n = 2;
  std::vector<Edge> edges;

  friend bool operator==(const GraphSpec&, const GraphSpec&) = default;
};

enum class WeightMethod { metropolis, lazy_metropolis, laplacian, explicit_matrix };

std::string_view to_string(WeightMethod m);

/// How beta is chosen for Laplacian weights.
enum class BetaRule {
  value,
  /// (1 - alpha) / N
  one_minus_alpha_over_n,
  /// 1 / N
  one_over_n,
};

std::string_view to_string(BetaRule r);

struct WeightSpec {
  WeightMethod method = WeightMethod::metropolis;
  BetaRule beta_rule = BetaRule::value;
  double beta = 0.0;
  std::vector<std::vector<double>> matrix;

  bool depends_on_alpha() const {
    return method == WeightMethod::laplacian && beta_rule == BetaRule::one_minus_alpha_over_n;
  }
  friend bool operator==(const WeightSpec&, const WeightSpec&) = default;
};

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::tilde;
  /// Unset means (1 + lambda_N(P)) / 2.
  std::optional<double> alpha = 0.5;
  BeliefInit init = BeliefInit::first_observation;

  friend bool operator==(const EstimatorConfig&, const EstimatorConfig&) = default;
};

struct RegretConfig {
  double delta = 0.05;
  std::vector<int> horizons{256, 512, 1024, 2048, 4096, 8192, 16384};
  int trials = 400;

  friend bool operator==(const RegretConfig&, const RegretConfig&) = default;
};

struct DesignConfig {
  std::optional<double> eps;
  int top_k = 10;

  friend bool operator==(const DesignConfig&, const DesignConfig&) = default;
};

struct SweepConfig {
  /// alpha_k = k / points for k = 1..points.
  int points = 100;

  friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

struct SimulationSection {
  int horizon = 10000;
  int trials = 16;
  std::optional<int> burn_in;
  RecordMode record = RecordMode::aggregate;
  bool allow_unstable = false;
  int threads = 0;

  friend bool operator==(const SimulationSection&, const SimulationSection&) = default;
};

/// Fully resolved scenario: every default is filled in.
struct Scenario {
  std::uint64_t seed = 1;
  GraphSpec graph;
  WeightSpec weights;
  ModelParams model;
  EstimatorConfig estimator;
  SimulationSection simulation;
  RegretConfig regret;
  DesignConfig design;
  SweepConfig sweep;
  /// Tables present in the source file.
  std::set<std::string> sections;

  Graph build_graph() const;
  /// `alpha` only matters for BetaRule::one_minus_alpha_over_n.
  CommMatrix build_comm_matrix(double alpha) const;
  /// Communication matrix plus the resolved estimator.
  std::pair<CommMatrix, EstimatorSpec> resolve() const;
  SimConfig sim_config() const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Parses the TOML scenario format. Unknown keys are errors. Throws
/// ScenarioError with "source:line:column" for syntax errors and the
/// dotted field path for invalid values.
Scenario parse_scenario(std::string_view text, std::string_view source = "<string>");
Scenario load_scenario(const std::filesystem::path& path);

nlohmann::json to_json(const Scenario& s);
Scenario scenario_from_json(const nlohmann::json& j);

}  // namespace socialtrack
