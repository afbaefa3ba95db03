#include "socialtrack/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

namespace socialtrack {

std::string_view to_string(WeightMethod m) {
  switch (m) {
    case WeightMethod::metropolis: return "metropolis";
    case WeightMethod::lazy_metropolis: return "lazy_metropolis";
    case WeightMethod::laplacian: return "laplacian";
    case WeightMethod::explicit_matrix: return "explicit";
  }
  return "unknown";
}

std::string_view to_string(BetaRule r) {
  switch (r) {
    case BetaRule::value: return "value";
    case BetaRule::one_minus_alpha_over_n: return "one_minus_alpha_over_n";
    case BetaRule::one_over_n: return "one_over_n";
  }
  return "unknown";
}

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& msg) {
  throw ScenarioError(field, fmt::format("{}: {}", field, msg));
}

// Reads typed keys from one TOML table and rejects keys nobody asked for.
class TableReader {
 public:
  TableReader(const toml::table* table, std::string path) : table_(table), path_(std::move(path)) {}

  std::string field(std::string_view key) const {
    return path_.empty() ? std::string(key) : fmt::format("{}.{}", path_, key);
  }

  const toml::node* get(std::string_view key) {
    known_.emplace(key);
    return table_ ? table_->get(key) : nullptr;
  }

  std::optional<double> number(std::string_view key) {
    const toml::node* n = get(key);
    if (!n) return std::nullopt;
    if (auto i = n->value_exact<int64_t>()) return static_cast<double>(*i);
    if (auto d = n->value_exact<double>()) return *d;
    bad(field(key), "expected a number");
  }

  std::optional<int64_t> integer(std::string_view key) {
    const toml::node* n = get(key);
    if (!n) return std::nullopt;
    if (auto i = n->value_exact<int64_t>()) return *i;
    bad(field(key), "expected an integer");
  }

  std::optional<std::string> string(std::string_view key) {
    const toml::node* n = get(key);
    if (!n) return std::nullopt;
    if (auto s = n->value_exact<std::string>()) return *s;
    bad(field(key), "expected a string");
  }

  std::optional<bool> boolean(std::string_view key) {
    const toml::node* n = get(key);
    if (!n) return std::nullopt;
    if (auto b = n->value_exact<bool>()) return *b;
    bad(field(key), "expected true or false");
  }

  const toml::array* array(std::string_view key) {
    const toml::node* n = get(key);
    if (!n) return nullptr;
    if (!n->is_array()) bad(field(key), "expected an array");
    return n->as_array();
  }

  void finish() const {
    if (!table_) return;
    for (auto&& [k, v] : *table_) {
      if (!known_.count(std::string(k.str()))) bad(field(k.str()), "unknown key");
    }
  }

 private:
  const toml::table* table_;
  std::string path_;
  std::set<std::string, std::less<>> known_;
};

template <typename T>
T checked_int(int64_t v, const std::string& field) {
  if (v < std::numeric_limits<T>::min() || v > static_cast<int64_t>(std::numeric_limits<T>::max())) {
    bad(field, fmt::format("value {} is out of range", v));
  }
  return static_cast<T>(v);
}

void parse_graph(TableReader& r, Scenario& s) {
  auto& g = s.graph;
  const auto family = r.string("family");
  const auto* edges = r.array("edges");
  if (auto n = r.integer("n")) g.n = checked_int<int>(*n, r.field("n"));
  else bad(r.field("n"), "missing required key");
  if (family && *family != "custom") {
    g.family = parse_graph_family(*family);
    if (!g.family) bad(r.field("family"), fmt::format("unknown family \"{}\" (complete, star, cycle, path, custom)", *family));
    if (edges) bad(r.field("edges"), "an edge list needs family = \"custom\" or no family");
  } else {
    g.family.reset();
    if (!edges) bad(r.field("edges"), "a custom graph needs an edge list");
    for (std::size_t k = 0; k < edges->size(); ++k) {
      const auto* pair = (*edges)[k].as_array();
      const std::string f = fmt::format("{}[{}]", r.field("edges"), k);
      if (!pair || pair->size() != 2) bad(f, "each edge must be a pair [i, j]");
      auto i = (*pair)[0].value_exact<int64_t>();
      auto j = (*pair)[1].value_exact<int64_t>();
      if (!i || !j) bad(f, "edge endpoints must be integers");
      g.edges.emplace_back(checked_int<int>(*i, f), checked_int<int>(*j, f));
    }
  }
  try {
    (void)s.build_graph();
  } catch (const ScenarioError&) {
    throw;
  } catch (const ValidationError& e) {
    bad(r.field(g.family ? "n" : "edges"), e.what());
  }
}

void parse_weights(TableReader& r, Scenario& s) {
  auto& w = s.weights;
  if (auto m = r.string("method")) {
    if (*m == "metropolis") w.method = WeightMethod::metropolis;
    else if (*m == "lazy_metropolis") w.method = WeightMethod::lazy_metropolis;
    else if (*m == "laplacian") w.method = WeightMethod::laplacian;
    else if (*m == "explicit") w.method = WeightMethod::explicit_matrix;
    else bad(r.field("method"), fmt::format("unknown method \"{}\" (metropolis, lazy_metropolis, laplacian, explicit)", *m));
  }
  const toml::node* beta = r.get("beta");
  if (beta) {
    if (w.method != WeightMethod::laplacian) bad(r.field("beta"), "beta only applies to method = \"laplacian\"");
    if (auto sv = beta->value_exact<std::string>()) {
      if (*sv == "one_minus_alpha_over_n") w.beta_rule = BetaRule::one_minus_alpha_over_n;
      else if (*sv == "one_over_n") w.beta_rule = BetaRule::one_over_n;
      else bad(r.field("beta"), fmt::format("unknown beta rule \"{}\" (a number, one_minus_alpha_over_n, one_over_n)", *sv));
    } else {
      w.beta_rule = BetaRule::value;
      w.beta = *r.number("beta");
      if (!(w.beta >= 0.0) || !std::isfinite(w.beta)) bad(r.field("beta"), "must be a finite number >= 0");
    }
  } else if (w.method == WeightMethod::laplacian) {
    bad(r.field("beta"), "method = \"laplacian\" needs beta");
  }
  const auto* matrix = r.array("matrix");
  if (matrix && w.method != WeightMethod::explicit_matrix) bad(r.field("matrix"), "matrix only applies to method = \"explicit\"");
  if (w.method == WeightMethod::explicit_matrix) {
    if (!matrix) bad(r.field("matrix"), "method = \"explicit\" needs a matrix");
    for (std::size_t i = 0; i < matrix->size(); ++i) {
      const auto* row = (*matrix)[i].as_array();
      const std::string f = fmt::format("{}[{}]", r.field("matrix"), i);
      if (!row || static_cast<int>(row->size()) != s.graph.n) bad(f, fmt::format("each row needs {} numbers", s.graph.n));
      std::vector<double> values;
      for (std::size_t j = 0; j < row->size(); ++j) {
        const auto& node = (*row)[j];
        if (auto iv = node.value_exact<int64_t>()) values.push_back(static_cast<double>(*iv));
        else if (auto dv = node.value_exact<double>()) values.push_back(*dv);
        else bad(fmt::format("{}[{}]", f, j), "expected a number");
      }
      w.matrix.push_back(std::move(values));
    }
    if (static_cast<int>(w.matrix.size()) != s.graph.n) bad(r.field("matrix"), fmt::format("needs {} rows", s.graph.n));
  }
}

void parse_model(TableReader& r, Scenario& s) {
  auto& m = s.model;
  auto set = [&](std::string_view key, double& target) {
    if (auto v = r.number(key)) target = *v;
  };
  set("a", m.a);
  set("sigma_r2", m.sigma_r2);
  set("sigma_w2", m.sigma_w2);
  set("x0_mean", m.x0_mean);
  set("x0_var", m.x0_var);
  set("truncation", m.truncation);
  if (auto n = r.string("noise")) {
    auto f = parse_noise_family(*n);
    if (!f) bad(r.field("noise"), fmt::format("unknown noise family \"{}\" (gaussian, uniform_bounded, truncated_gaussian)", *n));
    m.noise = *f;
  }
  if (!std::isfinite(m.a)) bad(r.field("a"), "must be finite");
  if (!(m.sigma_r2 >= 0.0) || !std::isfinite(m.sigma_r2)) bad(r.field("sigma_r2"), "must be >= 0");
  if (!(m.sigma_w2 >= 0.0) || !std::isfinite(m.sigma_w2)) bad(r.field("sigma_w2"), "must be >= 0");
  if (!std::isfinite(m.x0_mean)) bad(r.field("x0_mean"), "must be finite");
  if (!(m.x0_var >= 0.0) || !std::isfinite(m.x0_var)) bad(r.field("x0_var"), "must be >= 0");
  if (!(m.truncation > 0.0) || !std::isfinite(m.truncation)) bad(r.field("truncation"), "must be > 0");
}

void parse_estimator(TableReader& r, Scenario& s) {
  auto& e = s.estimator;
  if (auto k = r.string("kind")) {
    auto kind = parse_estimator_kind(*k);
    if (!kind) bad(r.field("kind"), fmt::format("unknown estimator \"{}\" (hat, tilde)", *k));
    e.kind = *kind;
  }
  if (const toml::node* alpha = r.get("alpha")) {
    if (auto sv = alpha->value_exact<std::string>()) {
      if (*sv != "stability_optimal") bad(r.field("alpha"), "expected a number in (0, 1] or \"stability_optimal\"");
      e.alpha.reset();
    } else {
      e.alpha = *r.number("alpha");
    }
  }
  if (e.alpha && !(*e.alpha > 0.0 && *e.alpha <= 1.0)) {
    bad(r.field("alpha"), fmt::format("must lie in (0, 1], got {}", *e.alpha));
  }
  if (!e.alpha && s.weights.depends_on_alpha()) {
    bad(r.field("alpha"), "\"stability_optimal\" cannot be combined with beta = \"one_minus_alpha_over_n\"");
  }
  if (auto i = r.string("init")) {
    auto init = parse_belief_init(*i);
    if (!init) bad(r.field("init"), fmt::format("unknown init \"{}\" (first_observation, zeros)", *i));
    e.init = *init;
  }
}

void parse_simulation(TableReader& r, Scenario& s) {
  auto& c = s.simulation;
  if (auto v = r.integer("horizon")) c.horizon = checked_int<int>(*v, r.field("horizon"));
  if (auto v = r.integer("trials")) c.trials = checked_int<int>(*v, r.field("trials"));
  if (auto v = r.integer("burn_in")) c.burn_in = checked_int<int>(*v, r.field("burn_in"));
  if (auto v = r.integer("threads")) c.threads = checked_int<int>(*v, r.field("threads"));
  if (auto v = r.boolean("allow_unstable")) c.allow_unstable = *v;
  if (auto v = r.string("record")) {
    auto m = parse_record_mode(*v);
    if (!m) bad(r.field("record"), fmt::format("unknown record mode \"{}\" (aggregate, per_step, full)", *v));
    c.record = *m;
  }
  if (c.horizon < 1) bad(r.field("horizon"), "must be >= 1");
  if (c.trials < 1) bad(r.field("trials"), "must be >= 1");
  if (c.burn_in && (*c.burn_in < 0 || *c.burn_in >= c.horizon)) bad(r.field("burn_in"), "must lie in [0, horizon)");
  if (c.threads < 0) bad(r.field("threads"), "must be >= 0");
}

void parse_regret(TableReader& r, Scenario& s) {
  auto& c = s.regret;
  if (auto v = r.number("delta")) c.delta = *v;
  if (auto v = r.integer("trials")) c.trials = checked_int<int>(*v, r.field("trials"));
  if (const auto* h = r.array("horizons")) {
    c.horizons.clear();
    for (std::size_t k = 0; k < h->size(); ++k) {
      const std::string f = fmt::format("{}[{}]", r.field("horizons"), k);
      auto v = (*h)[k].value_exact<int64_t>();
      if (!v || *v < 1) bad(f, "horizons must be integers >= 1");
      c.horizons.push_back(checked_int<int>(*v, f));
    }
  }
  if (!(c.delta > 0.0 && c.delta < 1.0)) bad(r.field("delta"), "must lie in (0, 1)");
  if (c.trials < 1) bad(r.field("trials"), "must be >= 1");
  if (c.horizons.empty()) bad(r.field("horizons"), "must not be empty");
}

void parse_design(TableReader& r, Scenario& s) {
  auto& c = s.design;
  if (auto v = r.number("eps")) {
    if (!(*v > 0.0) || !std::isfinite(*v)) bad(r.field("eps"), "must be > 0");
    c.eps = *v;
  }
  if (auto v = r.integer("top_k")) c.top_k = checked_int<int>(*v, r.field("top_k"));
  if (c.top_k < 0) bad(r.field("top_k"), "must be >= 0");
}

void parse_sweep(TableReader& r, Scenario& s) {
  if (auto v = r.integer("points")) s.sweep.points = checked_int<int>(*v, r.field("points"));
  if (s.sweep.points < 1) bad(r.field("points"), "must be >= 1");
}

}  // namespace

Graph Scenario::build_graph() const {
  if (graph.family) return build_named_graph(*graph.family, graph.n);
  return Graph(graph.n, graph.edges);
}

CommMatrix Scenario::build_comm_matrix(double alpha) const {
  const Graph g = build_graph();
  const double n = g.size();
  switch (weights.method) {
    case WeightMethod::metropolis: return comm_metropolis(g);
    case WeightMethod::lazy_metropolis: return comm_lazy_metropolis(g);
    case WeightMethod::laplacian: {
      double beta = weights.beta;
      if (weights.beta_rule == BetaRule::one_minus_alpha_over_n) beta = (1.0 - alpha) / n;
      if (weights.beta_rule == BetaRule::one_over_n) beta = 1.0 / n;
      return comm_from_laplacian(g, beta);
    }
    case WeightMethod::explicit_matrix: {
      Eigen::MatrixXd p(g.size(), g.size());
      for (int i = 0; i < g.size(); ++i)
        for (int j = 0; j < g.size(); ++j) p(i, j) = weights.matrix.at(i).at(j);
      return CommMatrix::from_matrix(std::move(p), &g);
    }
  }
  throw ValidationError("cli", "unknown weight method");
}

std::pair<CommMatrix, EstimatorSpec> Scenario::resolve() const {
  EstimatorSpec spec{estimator.kind, estimator.alpha.value_or(1.0)};
  CommMatrix p = build_comm_matrix(spec.alpha);
  if (!estimator.alpha) spec.alpha = optimal_alpha_for_stability(p);
  spec.validate();
  return {std::move(p), spec};
}

SimConfig Scenario::sim_config() const {
  SimConfig c;
  c.horizon = simulation.horizon;
  c.trials = simulation.trials;
  c.burn_in = simulation.burn_in;
  c.seed = seed;
  c.record = simulation.record;
  c.init = estimator.init;
  c.allow_unstable = simulation.allow_unstable;
  c.threads = simulation.threads;
  return c;
}

Scenario parse_scenario(std::string_view text, std::string_view source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    const auto& where = e.source().begin;
    throw ScenarioError("", fmt::format("{}:{}:{}: {}", source, where.line, where.column, e.description()));
  }
  Scenario s;
  TableReader top(&root, "");
  if (auto seed = top.integer("seed")) {
    if (*seed < 0) bad("seed", "must be >= 0");
    s.seed = static_cast<std::uint64_t>(*seed);
  }
  auto section = [&](std::string_view name, auto&& parse) {
    const toml::node* node = top.get(name);
    if (node && !node->is_table()) bad(std::string(name), "expected a table");
    const toml::table* t = node ? node->as_table() : nullptr;
    if (t) s.sections.emplace(name);
    TableReader r(t, std::string(name));
    parse(r, s);
    r.finish();
  };
  if (!root.get("graph")) bad("graph", "missing required section [graph]");
  section("graph", parse_graph);
  section("weights", parse_weights);
  section("model", parse_model);
  section("estimator", parse_estimator);
  section("simulation", parse_simulation);
  section("regret", parse_regret);
  section("design", parse_design);
  section("sweep", parse_sweep);
  top.finish();
  if (!s.estimator.alpha && s.weights.depends_on_alpha()) {
    bad("estimator.alpha", "\"stability_optimal\" needs weights that do not depend on alpha");
  }
  try {
    (void)s.resolve();
  } catch (const ScenarioError&) {
    throw;
  } catch (const ValidationError& e) {
    const char* field = s.weights.method == WeightMethod::explicit_matrix ? "weights.matrix"
                        : s.weights.method == WeightMethod::laplacian     ? "weights.beta"
                                                                          : "weights";
    bad(field, e.what());
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("", fmt::format("cannot open scenario file {}", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

nlohmann::json to_json(const Scenario& s) {
  using nlohmann::json;
  json graph = {{"n", s.graph.n}};
  if (s.graph.family) {
    graph["family"] = to_string(*s.graph.family);
  } else {
    graph["family"] = "custom";
    json edges = json::array();
    for (const auto& [i, j] : s.graph.edges) edges.push_back({i, j});
    graph["edges"] = edges;
  }
  json weights = {{"method", to_string(s.weights.method)}};
  if (s.weights.method == WeightMethod::laplacian) {
    if (s.weights.beta_rule == BetaRule::value) weights["beta"] = s.weights.beta;
    else weights["beta"] = to_string(s.weights.beta_rule);
  }
  if (s.weights.method == WeightMethod::explicit_matrix) weights["matrix"] = s.weights.matrix;
  const auto& m = s.model;
  json model = {{"a", m.a},           {"sigma_r2", m.sigma_r2}, {"sigma_w2", m.sigma_w2},        {"x0_mean", m.x0_mean},
                {"x0_var", m.x0_var}, {"noise", to_string(m.noise)}, {"truncation", m.truncation}};
  json estimator = {{"kind", to_string(s.estimator.kind)}, {"init", to_string(s.estimator.init)}};
  estimator["alpha"] = s.estimator.alpha ? json(*s.estimator.alpha) : json("stability_optimal");
  const auto& c = s.simulation;
  json simulation = {{"horizon", c.horizon},
                     {"trials", c.trials},
                     {"burn_in", c.burn_in ? json(*c.burn_in) : json(nullptr)},
                     {"record", to_string(c.record)},
                     {"allow_unstable", c.allow_unstable},
                     {"threads", c.threads}};
  json regret = {{"delta", s.regret.delta}, {"horizons", s.regret.horizons}, {"trials", s.regret.trials}};
  json design = {{"eps", s.design.eps ? json(*s.design.eps) : json(nullptr)}, {"top_k", s.design.top_k}};
  json sweep = {{"points", s.sweep.points}};
  return {{"seed", s.seed},   {"graph", graph},   {"weights", weights}, {"model", model},
          {"estimator", estimator}, {"simulation", simulation}, {"regret", regret}, {"design", design},
          {"sweep", sweep},   {"sections", s.sections}};
}

Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  s.seed = j.at("seed").get<std::uint64_t>();
  const auto& g = j.at("graph");
  s.graph.n = g.at("n").get<int>();
  const auto family = g.at("family").get<std::string>();
  if (family == "custom") {
    s.graph.family.reset();
    for (const auto& e : g.at("edges")) s.graph.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  } else {
    s.graph.family = parse_graph_family(family);
    if (!s.graph.family) bad("graph.family", "unknown family");
  }
  const auto& w = j.at("weights");
  const auto method = w.at("method").get<std::string>();
  for (auto mth : {WeightMethod::metropolis, WeightMethod::lazy_metropolis, WeightMethod::laplacian,
                   WeightMethod::explicit_matrix}) {
    if (method == to_string(mth)) s.weights.method = mth;
  }
  if (w.contains("beta")) {
    if (w.at("beta").is_string()) {
      const auto rule = w.at("beta").get<std::string>();
      s.weights.beta_rule = rule == "one_over_n" ? BetaRule::one_over_n : BetaRule::one_minus_alpha_over_n;
    } else {
      s.weights.beta = w.at("beta").get<double>();
    }
  }
  if (w.contains("matrix")) s.weights.matrix = w.at("matrix").get<std::vector<std::vector<double>>>();
  const auto& m = j.at("model");
  s.model.a = m.at("a").get<double>();
  s.model.sigma_r2 = m.at("sigma_r2").get<double>();
  s.model.sigma_w2 = m.at("sigma_w2").get<double>();
  s.model.x0_mean = m.at("x0_mean").get<double>();
  s.model.x0_var = m.at("x0_var").get<double>();
  s.model.noise = parse_noise_family(m.at("noise").get<std::string>()).value();
  s.model.truncation = m.at("truncation").get<double>();
  const auto& e = j.at("estimator");
  s.estimator.kind = parse_estimator_kind(e.at("kind").get<std::string>()).value();
  s.estimator.init = parse_belief_init(e.at("init").get<std::string>()).value();
  if (e.at("alpha").is_string()) s.estimator.alpha.reset();
  else s.estimator.alpha = e.at("alpha").get<double>();
  const auto& c = j.at("simulation");
  s.simulation.horizon = c.at("horizon").get<int>();
  s.simulation.trials = c.at("trials").get<int>();
  if (!c.at("burn_in").is_null()) s.simulation.burn_in = c.at("burn_in").get<int>();
  s.simulation.record = parse_record_mode(c.at("record").get<std::string>()).value();
  s.simulation.allow_unstable = c.at("allow_unstable").get<bool>();
  s.simulation.threads = c.at("threads").get<int>();
  const auto& r = j.at("regret");
  s.regret.delta = r.at("delta").get<double>();
  s.regret.horizons = r.at("horizons").get<std::vector<int>>();
  s.regret.trials = r.at("trials").get<int>();
  const auto& d = j.at("design");
  if (!d.at("eps").is_null()) s.design.eps = d.at("eps").get<double>();
  s.design.top_k = d.at("top_k").get<int>();
  s.sweep.points = j.at("sweep").at("points").get<int>();
  s.sections = j.at("sections").get<std::set<std::string>>();
  return s;
}

}  // namespace socialtrack
