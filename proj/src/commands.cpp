#include "socialtrack/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "socialtrack/error.hpp"

namespace socialtrack {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

std::string csv_document(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) out += ',';
      out += cells[k];
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void require_section(const Scenario& s, const char* section, const char* command) {
  if (!s.sections.count(section)) {
    throw ScenarioError(section, fmt::format("{}: section [{}] is required by `{}`", section, section, command));
  }
}

json envelope(const Scenario& s) { return {{"scenario", to_json(s)}, {"seed", s.seed}}; }

void warn_unbiasedness(const CommMatrix& p, const ModelParams& params, CommandOutput& out) {
  const double bound = unbiasedness_bound(p);
  if (!(std::abs(params.a) < bound)) {
    out.warnings.push_back(fmt::format(
        "|a| = {} is not below the unbiasedness bound 2 / (1 - lambda_N(P)) = {}; no signal weight gives unbiased "
        "estimates on this network",
        format_double(std::abs(params.a)), format_double(bound)));
  }
}

}  // namespace

json to_json(const MsdReport& r) {
  return {{"kind", to_string(r.kind)}, {"alpha", r.alpha},     {"a", r.a},         {"sigma_r2", r.sigma_r2},
          {"sigma_w2", r.sigma_w2},    {"r_msd", r.r_msd},     {"w_msd", r.w_msd}, {"total", r.total},
          {"eigenvalues", r.eigenvalues}, {"per_mode", r.per_mode}};
}

MsdReport msd_report_from_json(const json& j) {
  MsdReport r;
  r.kind = parse_estimator_kind(j.at("kind").get<std::string>()).value();
  r.alpha = j.at("alpha").get<double>();
  r.a = j.at("a").get<double>();
  r.sigma_r2 = j.at("sigma_r2").get<double>();
  r.sigma_w2 = j.at("sigma_w2").get<double>();
  r.r_msd = j.at("r_msd").get<double>();
  r.w_msd = j.at("w_msd").get<double>();
  r.total = j.at("total").get<double>();
  r.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
  r.per_mode = j.at("per_mode").get<std::vector<double>>();
  return r;
}

json to_json(const RegretReport& r) {
  return {{"horizon", r.horizon},
          {"n", r.n},
          {"rho", r.rho},
          {"delta", r.delta},
          {"s_bound", r.s_bound},
          {"xi0_norm", r.xi0_norm},
          {"bound_terms",
           {{"transient_quadratic", r.bound_terms[0]},
            {"cross", r.bound_terms[1]},
            {"tail", r.bound_terms[2]},
            {"concentration", r.bound_terms[3]}}},
          {"bound_total", r.bound_total},
          {"empirical_trace", r.empirical_trace},
          {"empirical_specnorm", r.empirical_specnorm}};
}

RegretReport regret_report_from_json(const json& j) {
  RegretReport r;
  r.horizon = j.at("horizon").get<int>();
  r.n = j.at("n").get<int>();
  r.rho = j.at("rho").get<double>();
  r.delta = j.at("delta").get<double>();
  r.s_bound = j.at("s_bound").get<double>();
  r.xi0_norm = j.at("xi0_norm").get<double>();
  const auto& t = j.at("bound_terms");
  r.bound_terms = {t.at("transient_quadratic").get<double>(), t.at("cross").get<double>(), t.at("tail").get<double>(),
                   t.at("concentration").get<double>()};
  r.bound_total = j.at("bound_total").get<double>();
  r.empirical_trace = j.at("empirical_trace").get<double>();
  r.empirical_specnorm = j.at("empirical_specnorm").get<double>();
  return r;
}

json to_json(const EdgeCandidate& c) {
  return {{"i", c.i},
          {"j", c.j},
          {"eps", c.eps},
          {"score_first_order", c.score_first_order},
          {"predicted_delta_msd", c.predicted_delta_msd},
          {"lower_bound", c.lower_bound},
          {"delta_msd_exact", c.delta_msd_exact ? json(*c.delta_msd_exact) : json(nullptr)}};
}

static void analyze_into(const Scenario& s, CommandOutput& out) {
  const auto [p, spec] = s.resolve();
  warn_unbiasedness(p, s.model, out);
  const ErrorSystem sys = build_error_system(p, spec, s.model);
  if (!is_stable(sys)) {
    throw InstabilityError("estimator", fmt::format("rho(Q) = {} >= 1 for alpha = {}; the estimates are biased",
                                                    format_double(sys.rho), format_double(spec.alpha)));
  }
  const MsdReport rep = msd_closed_form(p, spec, s.model);
  json j = envelope(s);
  j["report"] = to_json(rep);
  j["stability"] = {{"rho", sys.rho},
                    {"stable", true},
                    {"lambda_min", p.lambda_min()},
                    {"lambda_second", p.lambda_second()},
                    {"unbiasedness_bound", finite_or_null(unbiasedness_bound(p))},
                    {"optimal_alpha", optimal_alpha_for_stability(p)},
                    {"psd", p.is_psd()}};
  if (s.model.sigma_w2 > 0.0) j["kalman_steady_state"] = kalman_steady_state(s.model, p.size());
  out.artifacts.push_back({"msd_report.json", dump_json(j)});

  std::vector<std::vector<std::string>> rows;
  for (std::size_t k = 0; k < rep.per_mode.size(); ++k) {
    rows.push_back({std::to_string(k), format_double(rep.eigenvalues[k]), format_double(rep.per_mode[k])});
  }
  out.artifacts.push_back({"msd_modes.csv", csv_document({"mode", "eigenvalue", "contribution"}, rows)});
}

static void simulate_into(const Scenario& s, CommandOutput& out) {
  require_section(s, "simulation", "simulate");
  const auto [p, spec] = s.resolve();
  warn_unbiasedness(p, s.model, out);
  const SimConfig cfg = s.sim_config();
  const SimResult res = run_trials(p, spec, s.model, cfg);
  json j = envelope(s);
  j["empirical_msd"] = res.empirical_msd;
  j["stderr"] = res.stderr_msd;
  try {
    j["closed_form_msd"] = msd_closed_form(p, spec, s.model).total;
  } catch (const InstabilityError&) {
    j["closed_form_msd"] = nullptr;
  }
  j["n"] = p.size();
  j["T"] = cfg.horizon;
  j["trials"] = cfg.trials;
  j["burn_in"] = res.burn_in;
  j["alpha"] = spec.alpha;
  j["rho"] = res.rho;
  j["unstable"] = res.unstable;
  j["completed_trials"] = res.completed_trials;
  j["aborted_trials"] = res.aborted_trials;
  if (res.unstable) out.warnings.push_back("running an unstable configuration (allow_unstable = true)");
  if (!res.aborted_trials.empty()) {
    out.warnings.push_back(fmt::format("{} trial(s) diverged past ||xi|| = 1e12 and were dropped",
                                       res.aborted_trials.size()));
  }
  out.artifacts.push_back({"simulation.json", dump_json(j)});

  if (cfg.record != RecordMode::aggregate) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t t = 0; t < res.per_step_msd.size(); ++t) {
      rows.push_back({std::to_string(t), format_double(res.per_step_msd[t])});
    }
    out.artifacts.push_back({"per_step_mean.csv", csv_document({"t", "msd_mean"}, rows)});
  }
  if (cfg.record == RecordMode::full) {
    std::vector<std::vector<std::string>> rows;
    int trace = 0;
    for (int k = 0; k < cfg.trials; ++k) {
      if (std::find(res.aborted_trials.begin(), res.aborted_trials.end(), k) != res.aborted_trials.end()) continue;
      const auto& series = res.trial_traces[trace++];
      for (std::size_t t = 0; t < series.size(); ++t) {
        rows.push_back({std::to_string(k), std::to_string(t), format_double(series[t])});
      }
    }
    out.artifacts.push_back({"per_step.csv", csv_document({"trial", "t", "msd_instant"}, rows)});
  }
}

static void regret_into(const Scenario& s, CommandOutput& out) {
  require_section(s, "regret", "regret");
  const auto [p, spec] = s.resolve();
  warn_unbiasedness(p, s.model, out);
  const RegretTable table = verify_bound(p, spec, s.model, s.regret.horizons, s.regret.delta, s.regret.trials, s.seed,
                                         s.estimator.init, s.simulation.threads);
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : table.rows) {
    rows.push_back({std::to_string(r.horizon), std::to_string(r.trial), format_double(r.regret_trace),
                    format_double(r.regret_specnorm), format_double(r.bound_total), r.violated ? "1" : "0"});
  }
  out.artifacts.push_back(
      {"regret.csv",
       csv_document({"T", "trial", "regret_trace", "regret_specnorm", "bound_total", "violated"}, rows)});

  json j = envelope(s);
  j["alpha"] = spec.alpha;
  j["rho"] = table.rho;
  j["s_bound"] = table.s_bound;
  j["delta"] = table.delta;
  j["trials"] = table.trials;
  j["allowed_violation_rate"] = table.allowed_violation_rate;
  json per_t = json::array();
  bool ok = true;
  for (const auto& sm : table.summary) {
    const bool pass = sm.violation_rate <= table.allowed_violation_rate;
    ok = ok && pass;
    per_t.push_back({{"T", sm.horizon},
                     {"violation_rate", sm.violation_rate},
                     {"median_regret_trace", sm.median_trace},
                     {"median_abs_regret_trace", sm.median_abs_trace},
                     {"median_regret_specnorm", sm.median_specnorm},
                     {"median_bound_total", sm.median_bound},
                     {"within_allowed_rate", pass}});
  }
  j["per_horizon"] = per_t;
  j["bound_holds"] = ok;
  if (!ok) out.warnings.push_back("observed bound violation rate exceeds delta plus binomial slack");
  out.artifacts.push_back({"regret_summary.json", dump_json(j)});
}

static void design_edge_into(const Scenario& s, CommandOutput& out) {
  const auto [p, spec] = s.resolve();
  const std::vector<std::string> header{"i", "j", "score_first_order", "lower_bound", "delta_msd_exact"};
  json j = envelope(s);
  j["alpha"] = spec.alpha;
  if (p.support().is_complete()) {
    out.warnings.push_back("the communication graph is complete; there is no edge to add");
    j["candidates"] = json::array();
    j["notice"] = "complete graph: no candidate edges";
    out.artifacts.push_back({"edges.csv", csv_document(header, {})});
    out.artifacts.push_back({"design.json", dump_json(j)});
    return;
  }
  const EdgeSearchResult res = optimal_edge_search(p, spec, s.model, s.design.eps, s.design.top_k);
  if (!res.psd) out.warnings.push_back("P is not positive semidefinite; sign and lower-bound guarantees do not apply");
  if (!(std::abs(s.model.a * spec.alpha) < 1.0)) {
    out.warnings.push_back("|a alpha| >= 1; sign and lower-bound guarantees do not apply");
  }
  if (spec.kind == EstimatorKind::hat) {
    out.warnings.push_back(
        "first-order scores and lower bounds are derived for the tilde estimator; exact changes use hat");
  }
  if (!res.infeasible.empty()) {
    out.warnings.push_back(fmt::format("{} non-edge(s) skipped because eps >= min(p_ii, p_jj)", res.infeasible.size()));
  }
  std::vector<std::vector<std::string>> rows;
  json cands = json::array();
  for (const auto& c : res.candidates) {
    rows.push_back({std::to_string(c.i), std::to_string(c.j), format_double(c.score_first_order),
                    format_double(c.lower_bound), c.delta_msd_exact ? format_double(*c.delta_msd_exact) : ""});
    cands.push_back(to_json(c));
  }
  out.artifacts.push_back({"edges.csv", csv_document(header, rows)});
  j["eps"] = res.eps;
  j["psd"] = res.psd;
  j["within_guarantees"] = res.within_guarantees;
  j["infeasible"] = res.infeasible;
  j["candidates"] = cands;
  out.artifacts.push_back({"design.json", dump_json(j)});
}

static void sweep_alpha_into(const Scenario& s, CommandOutput& out) {
  // P(alpha) shares the eigenvectors of L.
  const bool rebuild = s.weights.depends_on_alpha();
  const CommMatrix base = s.build_comm_matrix(0.5);
  Eigen::VectorXd lap;
  if (rebuild) {
    lap = eig_sym(laplacian(s.build_graph())).eigenvalues.reverse();
    lap(0) = 0.0;
  }
  auto spectrum_for = [&](double alpha) -> Eigen::VectorXd {
    if (!rebuild) return base.eigenvalues();
    return (1.0 - (1.0 - alpha) / base.size() * lap.array()).matrix();
  };
  auto msd_of = [&](EstimatorKind kind, double alpha) {
    return msd_from_spectrum(spectrum_for(alpha), {kind, alpha}, s.model).total;
  };
  auto rho_of = [&](double alpha) { return std::abs(s.model.a) * (spectrum_for(alpha).array() - alpha).abs().maxCoeff(); };

  std::vector<std::vector<std::string>> rows;
  json j = envelope(s);
  json grid_min = json::object();
  double best[2] = {INFINITY, INFINITY};
  double best_alpha[2] = {0.0, 0.0};
  for (int k = 1; k <= s.sweep.points; ++k) {
    const double alpha = static_cast<double>(k) / s.sweep.points;
    std::vector<std::string> row{format_double(alpha)};
    row.push_back(format_double(rho_of(alpha)));
    for (int kind = 0; kind < 2; ++kind) {
      try {
        const double v = msd_of(kind == 0 ? EstimatorKind::hat : EstimatorKind::tilde, alpha);
        row.push_back(format_double(v));
        if (v < best[kind]) {
          best[kind] = v;
          best_alpha[kind] = alpha;
        }
      } catch (const ValidationError&) {
        row.push_back("");
      } catch (const InstabilityError&) {
        row.push_back("");
      }
    }
    rows.push_back(std::move(row));
  }
  out.artifacts.push_back({"alpha_sweep.csv", csv_document({"alpha", "rho", "msd_hat", "msd_tilde"}, rows)});

  json optimum = json::object();
  for (int kind = 0; kind < 2; ++kind) {
    const auto ek = kind == 0 ? EstimatorKind::hat : EstimatorKind::tilde;
    const std::string name(to_string(ek));
    if (!std::isfinite(best[kind])) {
      optimum[name] = nullptr;
      grid_min[name] = nullptr;
      out.warnings.push_back(fmt::format("no alpha on the grid stabilizes the {} estimator", name));
      continue;
    }
    grid_min[name] = {{"alpha", best_alpha[kind]}, {"msd", best[kind]}};
    const AlphaOptimum opt = optimize_alpha([&](double alpha) { return msd_of(ek, alpha); });
    optimum[name] = {{"alpha", opt.alpha}, {"msd", opt.value}};
  }
  j["grid_minimum"] = grid_min;
  j["optimum"] = optimum;
  out.artifacts.push_back({"alpha_sweep.json", dump_json(j)});
}

CommandOutput run_analyze(const Scenario& s) {
  CommandOutput out;
  analyze_into(s, out);
  return out;
}

CommandOutput run_simulate(const Scenario& s) {
  CommandOutput out;
  simulate_into(s, out);
  return out;
}

CommandOutput run_regret(const Scenario& s) {
  CommandOutput out;
  regret_into(s, out);
  return out;
}

CommandOutput run_design_edge(const Scenario& s) {
  CommandOutput out;
  design_edge_into(s, out);
  return out;
}

CommandOutput run_sweep_alpha(const Scenario& s) {
  CommandOutput out;
  sweep_alpha_into(s, out);
  return out;
}

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names{"analyze", "simulate", "regret", "design-edge", "sweep-alpha"};
  return names;
}

int run_subcommand(std::string_view name, const Scenario& s, const std::filesystem::path& out_dir, std::ostream& err) {
  CommandOutput out;
  auto flush_warnings = [&] {
    for (const auto& w : out.warnings) err << "warning: " << w << "\n";
  };
  try {
    if (name == "analyze") analyze_into(s, out);
    else if (name == "simulate") simulate_into(s, out);
    else if (name == "regret") regret_into(s, out);
    else if (name == "design-edge") design_edge_into(s, out);
    else if (name == "sweep-alpha") sweep_alpha_into(s, out);
    else {
      err << "error: unknown subcommand `" << name << "`\n";
      return kExitValidation;
    }
  } catch (const InstabilityError& e) {
    flush_warnings();
    err << "error [" << e.module() << "]: " << e.what()
        << "\nhint: lower |a|, or set estimator.alpha = \"stability_optimal\" to widen the stable range\n";
    return kExitUnstable;
  } catch (const ValidationError& e) {
    flush_warnings();
    err << "error [" << e.module() << "]: " << e.what() << "\nhint: fix the scenario file and rerun\n";
    return kExitValidation;
  } catch (const Error& e) {
    flush_warnings();
    err << "error [" << e.module() << "]: " << e.what() << "\n";
    return kExitFailure;
  }
  flush_warnings();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    err << "error: cannot create output directory " << out_dir.string() << ": " << ec.message() << "\n";
    return kExitFailure;
  }
  for (const auto& a : out.artifacts) {
    std::ofstream f(out_dir / a.name, std::ios::binary);
    f << a.content;
    if (!f) {
      err << "error: cannot write " << (out_dir / a.name).string() << "\n";
      return kExitFailure;
    }
  }
  return kExitOk;
}

}  // namespace socialtrack
