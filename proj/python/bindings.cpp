#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sabandit/diagnostics.hpp"
#include "sabandit/estimator.hpp"
#include "sabandit/harness.hpp"

namespace py = pybind11;
using namespace sabandit;

namespace {

py::dict solution_dict(const LassoSolution& sol) {
  py::dict out;
  out["beta"] = sol.beta;
  out["objective"] = sol.objective;
  out["iterations"] = sol.iterations;
  out["converged"] = sol.converged;
  out["kkt_violation"] = sol.kkt_violation;
  out["objective_trace"] = sol.objective_trace;
  return out;
}

py::dict result_dict(const ExperimentResult& result) {
  py::list traces;
  for (const auto& t : result.traces) {
    py::dict d;
    d["run_id"] = t.run_id;
    d["policy"] = t.policy;
    d["inst_regret"] = t.inst;
    d["cum_regret"] = t.cum;
    d["actions"] = t.actions;
    traces.append(d);
  }
  py::dict summary;
  for (const auto& s : result.summary) {
    py::dict d;
    d["mean"] = s.mean;
    d["std"] = s.stddev;
    summary[py::str(s.policy)] = d;
  }
  py::dict out;
  out["traces"] = traces;
  out["summary"] = summary;
  out["solver_warnings"] = result.solver_warnings;
  out["wall_seconds"] = result.wall_seconds;
  return out;
}

template <typename Report>
py::dict report_dict(const Report& report) {
  py::dict out;
  out["pass"] = report.pass;
  out["text"] = format_report(report);
  out["csv"] = to_csv(report);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sparsity-agnostic Lasso bandit simulation core";

  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("version", &version_string);
  m.def("link_mean", [](const std::string& link, double z) { return link_mean(parse_link(link), z); });
  m.def("soft_threshold", &soft_threshold, py::arg("z"), py::arg("gamma"));
  m.def("lambda_schedule", &lambda_schedule, py::arg("lambda0"), py::arg("t"), py::arg("d"));

  m.def(
      "fit_lasso",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda, const std::string& link,
         double tol, int max_iter, std::optional<Eigen::VectorXd> init, bool record_trace) {
        SolverOptions options;
        options.tol = tol;
        options.max_iter = max_iter;
        options.record_trace = record_trace;
        return solution_dict(fit_lasso(LassoProblem(X, y, lambda, parse_link(link)), options, init));
      },
      py::arg("X"), py::arg("y"), py::arg("lam"), py::arg("link") = "linear",
      py::arg("tol") = 1e-7, py::arg("max_iter") = 10000, py::arg("init") = py::none(),
      py::arg("record_trace") = false);

  m.def(
      "lasso_objective",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda, const std::string& link,
         const Eigen::VectorXd& beta) {
        return lasso_objective(LassoProblem(X, y, lambda, parse_link(link)), beta);
      },
      py::arg("X"), py::arg("y"), py::arg("lam"), py::arg("link"), py::arg("beta"));

  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        const auto config = nlohmann::json::parse(config_json).get<ExperimentConfig>();
        config.validate();
        ExperimentResult result;
        {
          py::gil_scoped_release release;
          result = run_experiment(config);
        }
        return result_dict(result);
      },
      py::arg("config_json"));

  m.def(
      "simulate",
      [](const std::string& config_json) {
        const auto config = nlohmann::json::parse(config_json).get<ExperimentConfig>();
        config.validate();
        py::gil_scoped_release release;
        write_results(run_experiment(config), config, config.out);
      },
      py::arg("config_json"));

  m.def("default_config", [] { return nlohmann::json(ExperimentConfig{}).dump(); });

  m.def(
      "compatibility_constant",
      [](const Eigen::MatrixXd& M, const std::vector<int>& active, int samples, std::uint64_t seed) {
        ConeSearchOptions options;
        options.samples = samples;
        options.seed = seed;
        return compatibility_constant(M, active, options);
      },
      py::arg("M"), py::arg("active_set"), py::arg("samples") = 2000, py::arg("seed") = 7);
  m.def(
      "restricted_eigenvalue",
      [](const Eigen::MatrixXd& M, const std::vector<int>& active, int samples, std::uint64_t seed) {
        ConeSearchOptions options;
        options.samples = samples;
        options.seed = seed;
        return restricted_eigenvalue(M, active, options);
      },
      py::arg("M"), py::arg("active_set"), py::arg("samples") = 2000, py::arg("seed") = 7);

  m.def(
      "check_oracle_inequality",
      [](const std::string& overrides) {
        auto config = DiagnosticConfig::oracle_defaults();
        from_json(nlohmann::json::parse(overrides), config);
        py::gil_scoped_release release;
        auto report = check_oracle_inequality(config);
        py::gil_scoped_acquire acquire;
        return report_dict(report);
      },
      py::arg("overrides_json") = "{}");
  m.def(
      "check_matrix_concentration",
      [](const std::string& overrides, double max_ratio) {
        auto config = DiagnosticConfig::concentration_defaults();
        from_json(nlohmann::json::parse(overrides), config);
        py::gil_scoped_release release;
        auto report = check_matrix_concentration(config, max_ratio);
        py::gil_scoped_acquire acquire;
        py::dict out = report_dict(report);
        out["decay_ratio"] = report.decay_ratio;
        out["log_log_slope"] = report.log_log_slope;
        return out;
      },
      py::arg("overrides_json") = "{}", py::arg("max_ratio") = 0.7);

  m.def("bernstein_threshold", &bernstein_threshold, py::arg("d"), py::arg("tau"), py::arg("w"));
  m.def("bernstein_tail_bound", &bernstein_tail_bound, py::arg("tau"), py::arg("w"));
  m.def(
      "check_bernstein",
      [](const std::string& generator, int d, std::vector<std::pair<long, double>> grid, long trials,
         std::uint64_t seed, int jobs) {
        BernsteinConfig config;
        config.generator = parse_bernstein_generator(generator);
        config.d = d;
        config.grid = std::move(grid);
        config.trials = trials;
        config.seed = seed;
        config.jobs = jobs;
        py::gil_scoped_release release;
        auto report = check_bernstein_adapted(config);
        py::gil_scoped_acquire acquire;
        py::dict out = report_dict(report);
        py::list empirical;
        for (const auto& row : report.rows) empirical.append(row.empirical);
        out["empirical"] = empirical;
        return out;
      },
      py::arg("generator") = "rademacher", py::arg("d") = 5,
      py::arg("grid") = std::vector<std::pair<long, double>>{{100, 0.05}, {200, 0.1}, {400, 0.2}},
      py::arg("trials") = 100000, py::arg("seed") = 42, py::arg("jobs") = 1);

  m.def(
      "balanced_covariance_constant",
      [](int d, int arms, double rho2, const Eigen::VectorXd& beta, long samples, int batches,
         std::uint64_t seed, int jobs) {
        DistributionSpec spec;
        spec.kind = GaussianEquicorrelated{rho2};
        spec.d = d;
        spec.arms = arms;
        BalancedCovarianceOptions options;
        options.samples = samples;
        options.batches = batches;
        options.seed = seed;
        options.jobs = jobs;
        py::gil_scoped_release release;
        auto report = estimate_balanced_covariance_constant(spec, beta, options);
        py::gil_scoped_acquire acquire;
        py::dict out;
        out["estimate"] = report.estimate;
        out["standard_error"] = report.standard_error;
        out["skipped"] = report.skipped;
        out["text"] = format_report(report);
        out["csv"] = to_csv(report);
        return out;
      },
      py::arg("d"), py::arg("arms"), py::arg("rho2"), py::arg("beta"),
      py::arg("samples") = 1000000, py::arg("batches") = 10, py::arg("seed") = 42,
      py::arg("jobs") = 1);
}
