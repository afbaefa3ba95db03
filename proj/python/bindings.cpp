#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "socialtrack/commands.hpp"
#include "socialtrack/error.hpp"
#include "socialtrack/msd.hpp"
#include "socialtrack/netdesign.hpp"
#include "socialtrack/regret.hpp"
#include "socialtrack/simulate.hpp"

namespace py = pybind11;
using namespace socialtrack;

namespace {

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

template <typename E, typename Parse>
E parse_enum(const std::string& name, Parse parse, const char* what) {
  if (auto v = parse(name)) return *v;
  throw ValidationError("python", "unknown " + std::string(what) + " \"" + name + "\"");
}

GraphFamily family_of(const std::string& s) { return parse_enum<GraphFamily>(s, parse_graph_family, "graph family"); }
EstimatorKind kind_of(const std::string& s) { return parse_enum<EstimatorKind>(s, parse_estimator_kind, "estimator"); }

py::dict sim_to_dict(const SimResult& r) {
  py::dict d;
  d["empirical_msd"] = r.empirical_msd;
  d["stderr"] = r.stderr_msd;
  d["empirical_sigma"] = r.empirical_sigma;
  d["per_step_msd"] = r.per_step_msd;
  d["trial_msd"] = r.trial_msd;
  d["burn_in"] = r.burn_in;
  d["completed_trials"] = r.completed_trials;
  d["aborted_trials"] = r.aborted_trials;
  d["rho"] = r.rho;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Distributed tracking of a geometric random walk over social networks";

  static py::exception<Error> base(m, "SocialTrackError", PyExc_RuntimeError);
  static py::exception<ValidationError> validation(m, "ValidationError", PyExc_ValueError);
  static py::exception<InstabilityError> instability(m, "InstabilityError", base.ptr());
  static py::exception<NumericalError> numerical(m, "NumericalError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ValidationError& e) {
      py::set_error(validation, e.what());
    } catch (const InstabilityError& e) {
      py::set_error(instability, e.what());
    } catch (const NumericalError& e) {
      py::set_error(numerical, e.what());
    } catch (const Error& e) {
      py::set_error(base, e.what());
    }
  });

  py::class_<Graph>(m, "Graph")
      .def(py::init<int, std::vector<Edge>>(), py::arg("n"), py::arg("edges") = std::vector<Edge>{})
      .def_static("named", [](const std::string& family, int n) { return build_named_graph(family_of(family), n); },
                  py::arg("family"), py::arg("n"))
      .def_property_readonly("n", &Graph::size)
      .def_property_readonly("edges", &Graph::edges)
      .def("degrees", &Graph::degrees)
      .def("is_connected", &Graph::is_connected)
      .def("is_complete", &Graph::is_complete)
      .def("non_edges", &Graph::non_edges)
      .def("laplacian", [](const Graph& g) { return laplacian(g); })
      .def("__repr__", [](const Graph& g) {
        return "Graph(n=" + std::to_string(g.size()) + ", edges=" + std::to_string(g.edge_count()) + ")";
      });

  py::class_<CommMatrix>(m, "CommMatrix")
      .def_static("from_matrix", [](const Eigen::MatrixXd& p) { return CommMatrix::from_matrix(p); }, py::arg("p"))
      .def_static("metropolis", &comm_metropolis, py::arg("graph"))
      .def_static("lazy_metropolis", &comm_lazy_metropolis, py::arg("graph"))
      .def_static("from_laplacian", &comm_from_laplacian, py::arg("graph"), py::arg("beta"))
      .def_property_readonly("matrix", &CommMatrix::matrix)
      .def_property_readonly("eigenvalues", &CommMatrix::eigenvalues)
      .def_property_readonly("eigenvectors", &CommMatrix::eigenvectors)
      .def_property_readonly("n", &CommMatrix::size)
      .def_property_readonly("lambda_min", &CommMatrix::lambda_min)
      .def_property_readonly("support", &CommMatrix::support)
      .def("is_psd", &CommMatrix::is_psd, py::arg("tol") = 1e-10)
      .def("add_edge", [](const CommMatrix& p, int i, int j, double eps) { return perturb(p, {i, j, eps}, PerturbSign::add); })
      .def("remove_edge",
           [](const CommMatrix& p, int i, int j, double eps) { return perturb(p, {i, j, eps}, PerturbSign::remove); });

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init([](double a, double sigma_r2, double sigma_w2, const std::string& noise, double truncation,
                       double x0_mean, double x0_var) {
             ModelParams p;
             p.a = a;
             p.sigma_r2 = sigma_r2;
             p.sigma_w2 = sigma_w2;
             p.noise = parse_enum<NoiseFamily>(noise, parse_noise_family, "noise family");
             p.truncation = truncation;
             p.x0_mean = x0_mean;
             p.x0_var = x0_var;
             p.validate();
             return p;
           }),
           py::arg("a") = 1.0, py::arg("sigma_r2") = 1.0, py::arg("sigma_w2") = 1.0, py::arg("noise") = "gaussian",
           py::arg("truncation") = 3.0, py::arg("x0_mean") = 0.0, py::arg("x0_var") = 0.0)
      .def_readonly("a", &ModelParams::a)
      .def_readonly("sigma_r2", &ModelParams::sigma_r2)
      .def_readonly("sigma_w2", &ModelParams::sigma_w2)
      .def_property_readonly("noise", [](const ModelParams& p) { return std::string(to_string(p.noise)); });

  py::class_<EstimatorSpec>(m, "EstimatorSpec")
      .def(py::init([](const std::string& kind, double alpha) {
             EstimatorSpec s{kind_of(kind), alpha};
             s.validate();
             return s;
           }),
           py::arg("kind") = "tilde", py::arg("alpha") = 0.5)
      .def_property_readonly("kind", [](const EstimatorSpec& s) { return std::string(to_string(s.kind)); })
      .def_readonly("alpha", &EstimatorSpec::alpha);

  m.def("unbiasedness_bound", &unbiasedness_bound, py::arg("p"));
  m.def("optimal_alpha_for_stability", &optimal_alpha_for_stability, py::arg("p"));
  m.def("stability_radius", &stability_radius, py::arg("p"), py::arg("a"), py::arg("alpha"));

  m.def("msd_closed_form",
        [](const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params) {
          return to_python(to_json(msd_closed_form(p, spec, params)));
        },
        py::arg("p"), py::arg("spec"), py::arg("params"));
  m.def("steady_state_sigma",
        [](const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params) {
          return steady_state_sigma(build_error_system(p, spec, params));
        },
        py::arg("p"), py::arg("spec"), py::arg("params"));
  m.def("msd_limit_named",
        [](const std::string& family, const EstimatorSpec& spec, const ModelParams& params, double beta) {
          return msd_limit_named(family_of(family), spec, params, beta);
        },
        py::arg("family"), py::arg("spec"), py::arg("params"), py::arg("beta") = 0.0);
  m.def("kalman_steady_state", &kalman_steady_state, py::arg("params"), py::arg("n"));
  m.def("msd_bound_reference", &msd_bound_reference, py::arg("alpha"), py::arg("params"));
  m.def("connectivity_ratio", &connectivity_ratio, py::arg("alpha"), py::arg("params"));
  m.def("optimize_alpha",
        [](const std::function<double(double)>& objective, double lo, double hi) {
          const AlphaOptimum o = optimize_alpha(objective, lo, hi);
          return py::make_tuple(o.alpha, o.value);
        },
        py::arg("objective"), py::arg("lo") = 0.0, py::arg("hi") = 1.0);

  m.def("run_trials",
        [](const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params, int horizon, int trials,
           std::uint64_t seed, std::optional<int> burn_in, const std::string& record, int threads) {
          SimConfig cfg;
          cfg.horizon = horizon;
          cfg.trials = trials;
          cfg.seed = seed;
          cfg.burn_in = burn_in;
          cfg.record = parse_enum<RecordMode>(record, parse_record_mode, "record mode");
          cfg.threads = threads;
          SimResult r;
          {
            py::gil_scoped_release release;
            r = run_trials(p, spec, params, cfg);
          }
          return sim_to_dict(r);
        },
        py::arg("p"), py::arg("spec"), py::arg("params"), py::arg("horizon") = 1000, py::arg("trials") = 16,
        py::arg("seed") = 1, py::arg("burn_in") = std::nullopt, py::arg("record") = "aggregate",
        py::arg("threads") = 0);

  m.def("verify_bound",
        [](const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params, const std::vector<int>& horizons,
           double delta, int trials, std::uint64_t seed, int threads) {
          RegretTable t;
          {
            py::gil_scoped_release release;
            t = verify_bound(p, spec, params, horizons, delta, trials, seed, BeliefInit::first_observation, threads);
          }
          py::list summary;
          for (const auto& s : t.summary) {
            py::dict d;
            d["T"] = s.horizon;
            d["violation_rate"] = s.violation_rate;
            d["median_regret_trace"] = s.median_trace;
            d["median_abs_regret_trace"] = s.median_abs_trace;
            d["median_regret_specnorm"] = s.median_specnorm;
            d["median_bound_total"] = s.median_bound;
            summary.append(d);
          }
          py::dict out;
          out["summary"] = summary;
          out["allowed_violation_rate"] = t.allowed_violation_rate;
          out["s_bound"] = t.s_bound;
          out["rho"] = t.rho;
          return out;
        },
        py::arg("p"), py::arg("spec"), py::arg("params"), py::arg("horizons"), py::arg("delta") = 0.05,
        py::arg("trials") = 400, py::arg("seed") = 1, py::arg("threads") = 0);

  m.def("optimal_edge_search",
        [](const CommMatrix& p, const EstimatorSpec& spec, const ModelParams& params, std::optional<double> eps,
           int top_k) {
          const EdgeSearchResult r = optimal_edge_search(p, spec, params, eps, top_k);
          py::list out;
          for (const auto& c : r.candidates) out.append(to_python(to_json(c)));
          return out;
        },
        py::arg("p"), py::arg("spec"), py::arg("params"), py::arg("eps") = std::nullopt, py::arg("top_k") = 10);

  m.def("parse_scenario", [](const std::string& text) { return to_python(to_json(parse_scenario(text))); },
        py::arg("text"));
  m.def("run_subcommand",
        [](const std::string& name, const std::filesystem::path& scenario, const std::filesystem::path& out_dir) {
          std::ostringstream err;
          int code;
          try {
            const Scenario s = load_scenario(scenario);
            code = run_subcommand(name, s, out_dir, err);
          } catch (const ValidationError& e) {
            err << "error [" << e.module() << "]: " << e.what() << "\n";
            code = kExitValidation;
          }
          return py::make_tuple(code, err.str());
        },
        py::arg("name"), py::arg("scenario"), py::arg("out_dir"));
  m.attr("subcommands") = subcommand_names();
}
