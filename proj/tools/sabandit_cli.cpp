// Command line front end: `simulate` runs regret experiments, `diagnose`
// runs the estimation diagnostics.
//
// Exit codes: 0 success, 2 invalid configuration, 3 file I/O failure,
// 4 numerical failure, 1 anything else.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "sabandit/diagnostics.hpp"
#include "sabandit/estimator.hpp"
#include "sabandit/harness.hpp"

namespace {

using nlohmann::json;
using namespace sabandit;

constexpr int kConfigError = 2;
constexpr int kIoError = 3;
constexpr int kNumericalError = 4;

// Options that, when given, override the same key of a JSON config.
class Overlay {
 public:
  template <class T>
  CLI::Option* add(CLI::App* app, const std::string& key, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option("--" + key, *value, help);
    apply_.push_back([opt, value, key](json& j) {
      if (opt->count() > 0) j[key] = *value;
    });
    return opt;
  }

  CLI::Option* flag(CLI::App* app, const std::string& key, const std::string& help) {
    auto value = std::make_shared<bool>(false);
    CLI::Option* opt = app->add_flag("--" + key, *value, help);
    apply_.push_back([opt, value, key](json& j) {
      if (opt->count() > 0) j[key] = *value;
    });
    return opt;
  }

  json merge(json base) const {
    if (base.is_null()) base = json::object();
    for (const auto& f : apply_) f(base);
    return base;
  }

 private:
  std::vector<std::function<void(json&)>> apply_;
};

json base_config(const std::string& path) {
  return path.empty() ? json::object() : read_json_file(path);
}

template <class T>
T parse_config(const json& j) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
}

void emit(const std::string& out_dir, const std::string& name, const std::string& report,
          const std::string& csv) {
  std::cout << report;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir + "': " + ec.message());
  write_text_file(std::filesystem::path(out_dir) / (name + ".txt"), report);
  write_text_file(std::filesystem::path(out_dir) / (name + ".csv"), csv);
  std::cout << "wrote " << (std::filesystem::path(out_dir) / (name + ".csv")).string() << "\n";
}

std::vector<int> parse_index_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw std::invalid_argument("config: bad index '" + item + "'");
    }
  }
  return out;
}

std::vector<std::pair<long, double>> parse_grid(const std::string& text) {
  std::vector<std::pair<long, double>> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("config: grid entries look like tau:w");
    try {
      grid.emplace_back(std::stol(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
    } catch (const std::exception&) {
      throw std::invalid_argument("config: bad grid entry '" + item + "'");
    }
  }
  return grid;
}

Eigen::MatrixXd read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open matrix '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    for (char& c : line) {
      if (c == ',' || c == ';') c = ' ';
    }
    std::istringstream ls(line);
    std::vector<double> row;
    double v = 0.0;
    while (ls >> v) row.push_back(v);
    if (!ls.eof()) throw std::invalid_argument("config: non-numeric entry in '" + path + "'");
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("config: matrix file '" + path + "' is empty");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw std::invalid_argument("config: ragged matrix in '" + path + "'");
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

void add_diagnostic_options(CLI::App* app, Overlay& o) {
  o.add<int>(app, "d", "feature dimension");
  o.add<int>(app, "arms", "number of arms K");
  o.add<int>(app, "s0", "sparsity of beta*");
  o.add<std::string>(app, "dist", "gaussian | uniform");
  o.add<double>(app, "rho2", "equicorrelation across arms");
  o.add<std::string>(app, "link", "linear | logistic");
  o.add<double>(app, "sigma", "noise standard deviation");
  o.add<long>(app, "horizon", "rounds per trajectory");
  o.add<int>(app, "trajectories", "independent trajectories");
  o.add<std::vector<long>>(app, "checkpoints", "comma-separated rounds")->delimiter(',');
  o.add<double>(app, "delta", "failure probability");
  o.add<std::string>(app, "policy", "sa_lasso | random");
  o.add<double>(app, "lambda0", "SA Lasso input (default 2 sigma)");
  o.add<long>(app, "mc-draws", "Monte Carlo context draws");
  o.add<double>(app, "phi2-floor", "compatibility treated as zero below this");
  o.add<std::uint64_t>(app, "seed", "random seed");
  o.add<int>(app, "jobs", "worker threads");
}

void print_summary(const ExperimentResult& result, const ExperimentConfig& config) {
  std::cout << "policy,R(T),std\n";
  for (const auto& s : result.summary) {
    if (s.mean.empty()) continue;
    std::cout << s.policy << ',' << std::setprecision(6) << s.mean.back() << ','
              << s.stddev.back() << '\n';
  }
  std::cout << "horizon " << config.horizon << ", runs " << config.runs << ", wall "
            << std::setprecision(4) << result.wall_seconds << " s, solver warnings "
            << result.solver_warnings << "\nwrote " << config.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparsity-agnostic Lasso bandit simulations and diagnostics"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  // simulate
  CLI::App* sim = app.add_subcommand("simulate", "run a regret experiment");
  std::string sim_config;
  sim->add_option("--config", sim_config, "JSON file with the same keys as the options");
  Overlay sim_opts;
  sim_opts.add<int>(sim, "d", "feature dimension");
  sim_opts.add<int>(sim, "arms", "number of arms K");
  sim_opts.add<int>(sim, "s0", "sparsity of beta*");
  sim_opts.add<long>(sim, "horizon", "rounds T");
  sim_opts.add<int>(sim, "runs", "independent runs");
  sim_opts.add<std::string>(sim, "dist", "gaussian | uniform | elliptical");
  sim_opts.add<double>(sim, "rho2", "equicorrelation across arms (gaussian)");
  sim_opts.add<int>(sim, "elliptical-rank", "rank of the elliptical scale matrix (0 = d)");
  sim_opts.add<std::string>(sim, "link", "linear | logistic");
  sim_opts.add<double>(sim, "sigma", "noise standard deviation");
  sim_opts.add<std::string>(sim, "policies", "comma-separated policy names");
  sim_opts.add<std::uint64_t>(sim, "seed", "random seed");
  sim_opts.add<std::string>(sim, "out", "output directory");
  sim_opts.add<int>(sim, "jobs", "worker threads");
  sim_opts.add<double>(sim, "clip-xmax", "rescale context rows onto this norm bound");
  sim_opts.add<int>(sim, "baseline-s0", "sparsity index given to the baselines");
  sim_opts.add<double>(sim, "lambda0", "SA Lasso input (default 2 sigma x_max)");
  sim_opts.flag(sim, "shared-beta", "reuse one beta* across runs");
  sim_opts.flag(sim, "geometric-refit", "refit SA Lasso only on a geometric grid of rounds");
  sim_opts.add<int>(sim, "lb-q", "Lasso bandit forced-sampling block length");
  sim_opts.add<double>(sim, "lb-h", "Lasso bandit screening gap");
  sim_opts.add<double>(sim, "lb-lambda1", "Lasso bandit forced-sample penalty");
  sim_opts.add<double>(sim, "lb-lambda2", "Lasso bandit all-sample penalty scale");
  sim_opts.add<double>(sim, "dr-lambda1", "DR Lasso exploration scale");
  sim_opts.add<double>(sim, "dr-lambda2", "DR Lasso penalty scale");
  sim_opts.add<long>(sim, "dr-zt", "DR Lasso initial random rounds");

  // diagnose
  CLI::App* diag = app.add_subcommand("diagnose", "estimation diagnostics");
  diag->require_subcommand(1);
  std::string diag_out = "diagnostics";
  diag->add_option("--out", diag_out, "directory for the report and CSV")->capture_default_str();

  CLI::App* oracle = diag->add_subcommand("oracle-ineq", "Lasso oracle inequality along trajectories");
  std::string oracle_config;
  oracle->add_option("--config", oracle_config, "JSON file with the same keys as the options");
  Overlay oracle_opts;
  add_diagnostic_options(oracle, oracle_opts);

  CLI::App* conc = diag->add_subcommand("concentration", "adapted vs empirical Gram matrix");
  std::string conc_config;
  conc->add_option("--config", conc_config, "JSON file with the same keys as the options");
  double max_ratio = 0.7;
  conc->add_option("--max-ratio", max_ratio, "required last/first error ratio")->capture_default_str();
  Overlay conc_opts;
  add_diagnostic_options(conc, conc_opts);

  CLI::App* bern = diag->add_subcommand("bernstein", "tail bound for adapted sums");
  BernsteinConfig bern_cfg;
  std::string bern_generator = "rademacher";
  std::string bern_grid = "100:0.05,200:0.1,400:0.2";
  bern->add_option("--generator", bern_generator, "rademacher | adapted_rademacher | adapted_hypercube")
      ->capture_default_str();
  bern->add_option("--d", bern_cfg.d, "dimension")->capture_default_str();
  bern->add_option("--grid", bern_grid, "comma-separated tau:w pairs")->capture_default_str();
  bern->add_option("--trials", bern_cfg.trials, "Monte Carlo trials")->capture_default_str();
  bern->add_option("--seed", bern_cfg.seed, "random seed")->capture_default_str();
  bern->add_option("--jobs", bern_cfg.jobs, "worker threads")->capture_default_str();

  CLI::App* compat = diag->add_subcommand("compat", "compatibility and restricted eigenvalue constants");
  std::string compat_matrix, compat_kind = "identity", compat_active = "0";
  int compat_d = 10;
  double compat_rho = 0.0, compat_scale = 1.0;
  ConeSearchOptions cone;
  compat->add_option("--matrix", compat_matrix, "whitespace or comma separated matrix file");
  compat->add_option("--kind", compat_kind, "identity | equicorrelated | toeplitz (without --matrix)")
      ->capture_default_str();
  compat->add_option("--d", compat_d, "dimension of the built-in matrix")->capture_default_str();
  compat->add_option("--rho", compat_rho, "off-diagonal parameter")->capture_default_str();
  compat->add_option("--scale", compat_scale, "multiplier applied to the matrix")->capture_default_str();
  compat->add_option("--active", compat_active, "comma-separated active set")->capture_default_str();
  compat->add_option("--samples", cone.samples, "random cone samples")->capture_default_str();
  compat->add_option("--iterations", cone.refine_iterations, "refinement iterations")->capture_default_str();
  compat->add_option("--seed", cone.seed, "random seed")->capture_default_str();

  CLI::App* bal = diag->add_subcommand("balanced-cov", "balanced covariance constant");
  int bal_d = 10, bal_arms = 3, bal_beta_s0 = 0;
  std::string bal_dist = "gaussian";
  double bal_rho2 = 0.0;
  bool bal_correlated = false;
  std::uint64_t bal_beta_seed = 1;
  BalancedCovarianceOptions bal_opts;
  bal->add_option("--d", bal_d, "dimension")->capture_default_str();
  bal->add_option("--arms", bal_arms, "number of arms K (3..7)")->capture_default_str();
  bal->add_option("--dist", bal_dist, "gaussian | uniform")->capture_default_str();
  bal->add_option("--rho2", bal_rho2, "equicorrelation across arms")->capture_default_str();
  bal->add_flag("--correlated", bal_correlated, "every arm repeats one context");
  bal->add_option("--beta-s0", bal_beta_s0, "nonzeros of the scoring vector (0 = dense)")->capture_default_str();
  bal->add_option("--beta-seed", bal_beta_seed, "seed of the scoring vector")->capture_default_str();
  bal->add_option("--samples", bal_opts.samples, "Monte Carlo samples")->capture_default_str();
  bal->add_option("--batches", bal_opts.batches, "batches for the standard error")->capture_default_str();
  bal->add_option("--min-event-samples", bal_opts.min_event_samples, "per-batch minimum per ordering")
      ->capture_default_str();
  bal->add_option("--seed", bal_opts.seed, "random seed")->capture_default_str();
  bal->add_option("--jobs", bal_opts.jobs, "worker threads")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*sim) {
      const auto config = parse_config<ExperimentConfig>(sim_opts.merge(base_config(sim_config)));
      config.validate();
      const ExperimentResult result = run_experiment(config);
      write_results(result, config, config.out);
      print_summary(result, config);
    } else if (*oracle) {
      auto config = DiagnosticConfig::oracle_defaults();
      json j = config;
      j.update(oracle_opts.merge(base_config(oracle_config)));
      config = parse_config<DiagnosticConfig>(j);
      const auto report = check_oracle_inequality(config);
      emit(diag_out, "oracle_ineq", format_report(report), to_csv(report));
    } else if (*conc) {
      auto config = DiagnosticConfig::concentration_defaults();
      json j = config;
      j.update(conc_opts.merge(base_config(conc_config)));
      config = parse_config<DiagnosticConfig>(j);
      const auto report = check_matrix_concentration(config, max_ratio);
      emit(diag_out, "concentration", format_report(report), to_csv(report));
    } else if (*bern) {
      bern_cfg.generator = parse_bernstein_generator(bern_generator);
      bern_cfg.grid = parse_grid(bern_grid);
      const auto report = check_bernstein_adapted(bern_cfg);
      emit(diag_out, "bernstein", format_report(report), to_csv(report));
    } else if (*compat) {
      Eigen::MatrixXd m;
      if (!compat_matrix.empty()) {
        m = read_matrix(compat_matrix);
      } else {
        if (compat_d < 1) throw std::invalid_argument("config: d must be >= 1");
        m = Eigen::MatrixXd::Identity(compat_d, compat_d);
        for (int i = 0; i < compat_d; ++i) {
          for (int k = 0; k < compat_d; ++k) {
            if (i == k) continue;
            if (compat_kind == "equicorrelated") {
              m(i, k) = compat_rho;
            } else if (compat_kind == "toeplitz") {
              m(i, k) = std::pow(compat_rho, std::abs(i - k));
            } else if (compat_kind != "identity") {
              throw std::invalid_argument("config: unknown matrix kind '" + compat_kind + "'");
            }
          }
        }
      }
      m *= compat_scale;
      const std::vector<int> active = parse_index_list(compat_active);
      const auto phi = compatibility_search(m, active, cone);
      const auto re = restricted_eigenvalue_search(m, active, cone);
      std::ostringstream report, csv;
      report << "diagnostic: compatibility\nd: " << m.rows() << "\nactive:";
      for (int j : active) report << ' ' << j;
      report << "\nsamples: " << phi.samples << "\northants: " << phi.orthants
             << "\ncompatibility: " << std::setprecision(8) << phi.value
             << "\nrestricted_eigenvalue: " << re.value
             << "\nnote: both values are upper bounds on the cone minima\n";
      csv << "quantity,value,samples,orthants\n"
          << std::setprecision(17) << "compatibility," << phi.value << ',' << phi.samples << ','
          << phi.orthants << "\nrestricted_eigenvalue," << re.value << ',' << re.samples << ','
          << re.orthants << '\n';
      emit(diag_out, "compat", report.str(), csv.str());
    } else if (*bal) {
      if (bal_d < 1) throw std::invalid_argument("config: d must be >= 1");
      DistributionSpec spec;
      spec.d = bal_d;
      spec.arms = bal_arms;
      if (bal_dist == "gaussian") {
        spec.kind = GaussianEquicorrelated{bal_rho2};
      } else if (bal_dist == "uniform") {
        spec.kind = UniformHypercube{};
      } else {
        throw std::invalid_argument("config: dist must be gaussian or uniform");
      }
      if (bal_beta_s0 < 0 || bal_beta_s0 > bal_d) throw std::invalid_argument("config: beta-s0 must lie in [0, d]");
      Rng beta_rng = make_rng(bal_beta_seed);
      const Eigen::VectorXd beta = make_parameter(bal_d, bal_beta_s0 == 0 ? bal_d : bal_beta_s0, beta_rng).beta;
      BalancedCovarianceReport report;
      if (bal_correlated) {
        spec.arms = 1;
        auto one = std::make_shared<const ContextSampler>(spec);
        const int k = bal_arms;
        report = estimate_balanced_covariance_constant(
            [one, k](Rng& rng) { return Eigen::MatrixXd(one->sample(rng).features.replicate(k, 1)); },
            beta, bal_arms, bal_opts);
      } else {
        report = estimate_balanced_covariance_constant(spec, beta, bal_opts);
      }
      emit(diag_out, "balanced_cov", format_report(report), to_csv(report));
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
