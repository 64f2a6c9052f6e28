#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sabandit/contexts.hpp"
#include "sabandit/link.hpp"
#include "sabandit/policies.hpp"

namespace sabandit {

/// File could not be opened, created or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes `content` to `path`, replacing any existing file.
void write_text_file(const std::filesystem::path& path, const std::string& content);

/// One simulation grid point. JSON keys match the long CLI option names.
struct ExperimentConfig {
  int d = 100;
  int arms = 2;
  int s0 = 5;
  long horizon = 1000;
  int runs = 20;
  std::string dist = "gaussian";  // gaussian | uniform | elliptical
  double rho2 = 0.7;
  int elliptical_rank = 0;  // 0 means rank d
  LinkKind link = LinkKind::kLinear;
  double sigma = 1.0;
  std::vector<std::string> policies{"sa_lasso", "lasso_bandit", "dr_lasso", "oracle"};
  std::uint64_t seed = 42;
  std::string out = "results";
  int jobs = 1;
  std::optional<double> clip_xmax;
  /// Sparsity index handed to the baselines; defaults to the true s0.
  std::optional<int> baseline_s0;
  /// SA input; defaults to 2 * sigma * x_max with x_max = clip bound or 1.
  std::optional<double> lambda0;
  /// Draw beta* once and reuse it in every run.
  bool shared_beta = false;
  bool geometric_refit = false;

  // Baseline overrides; unset values follow the for_sparsity() defaults.
  std::optional<int> lb_q;
  std::optional<double> lb_h;
  std::optional<double> lb_lambda1;
  std::optional<double> lb_lambda2;
  std::optional<double> dr_lambda1;
  std::optional<double> dr_lambda2;
  std::optional<long> dr_zt;

  /// Throws std::invalid_argument describing the first invalid field.
  void validate() const;
  double effective_lambda0() const;
  int effective_baseline_s0() const;
  DistributionSpec distribution(Rng& rng) const;

  bool operator==(const ExperimentConfig&) const = default;
};

void to_json(nlohmann::json& j, const ExperimentConfig& config);
void from_json(const nlohmann::json& j, ExperimentConfig& config);
/// Parses a JSON file; IoError if unreadable, std::invalid_argument if malformed.
nlohmann::json read_json_file(const std::filesystem::path& path);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Regret of one policy in one run; inst[t-1] and cum[t-1] for t = 1..T.
struct RegretTrace {
  int run_id = 0;
  std::string policy;
  std::vector<double> inst;
  std::vector<double> cum;
  std::vector<std::size_t> actions;
};

/// Per-policy mean and standard deviation (n - 1 denominator, zero for a
/// single run) of cumulative regret at every round.
struct PolicySummary {
  std::string policy;
  std::vector<double> mean;
  std::vector<double> stddev;
};

struct ExperimentResult {
  std::vector<RegretTrace> traces;  // sorted by (run_id, policy order)
  std::vector<PolicySummary> summary;
  long solver_warnings = 0;
  double wall_seconds = 0.0;
};

/// Builds a policy by name for one run. Names: sa_lasso, lasso_bandit,
/// dr_lasso, oracle, random. Throws std::invalid_argument for unknown names.
std::unique_ptr<Policy> make_policy(const std::string& name, const ExperimentConfig& config,
                                    const ModelSpec& model, int run_id, std::size_t policy_index);

/// Runs every policy on common random numbers: identical context sets, and
/// per-(round, arm) noise so equal choices see equal rewards.
ExperimentResult run_experiment(const ExperimentConfig& config);

std::vector<PolicySummary> summarize(const std::vector<RegretTrace>& traces,
                                     const std::vector<std::string>& policy_order);

/// Writes regret.csv, summary.csv and manifest.json under `dir`.
void write_results(const ExperimentResult& result, const ExperimentConfig& config,
                   const std::filesystem::path& dir);

std::string version_string();

}  // namespace sabandit
