#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sabandit/contexts.hpp"
#include "sabandit/link.hpp"

namespace sabandit {

// ---------------------------------------------------------------------------
// Cone-restricted constants

/// True when |beta_{S^c}|_1 <= 3 |beta_S|_1 (no tolerance).
bool in_cone(const Eigen::VectorXd& beta, const std::vector<int>& active_set);

struct ConeSearchOptions {
  /// Random cone points drawn before local refinement.
  int samples = 2000;
  /// Projected-gradient iterations per refinement start.
  int refine_iterations = 2000;
  /// Best random samples that also seed a refinement.
  int refine_starts = 4;
  std::uint64_t seed = 7;
};

struct ConeSearchResult {
  double value = 0.0;
  /// Minimizing point found, scaled so that |beta_S|_1 = 1.
  Eigen::VectorXd argmin;
  int samples = 0;
  int orthants = 0;
};

/// min over the cone of s0 b'Mb / |b_S|_1^2 with s0 = |S|. Each sign orthant
/// of b_S is searched by accelerated projected gradient over
/// {|b_S|_1 = 1} x {|b_{S^c}|_1 <= 3}, which is exact for PSD M up to the
/// iteration budget. The value is an upper bound on the true minimum.
/// Requires d <= 20 and a nonempty, in-range S.
ConeSearchResult compatibility_search(const Eigen::MatrixXd& M, const std::vector<int>& active_set,
                                      const ConeSearchOptions& options = {});
double compatibility_constant(const Eigen::MatrixXd& M, const std::vector<int>& active_set,
                              const ConeSearchOptions& options = {});

/// min over the cone of b'Mb / |b|_2^2 by sampling and local projected
/// descent on the ratio; an upper bound on the true minimum.
ConeSearchResult restricted_eigenvalue_search(const Eigen::MatrixXd& M,
                                              const std::vector<int>& active_set,
                                              const ConeSearchOptions& options = {});
double restricted_eigenvalue(const Eigen::MatrixXd& M, const std::vector<int>& active_set,
                             const ConeSearchOptions& options = {});

// ---------------------------------------------------------------------------
// Oracle inequality

/// 2 sigma x_max sqrt(2 (log(2/delta) + log d) / t).
double oracle_lambda(double sigma, double x_max, double delta, long t, long d);
/// 4 s0 lambda / (kappa0 phi2).
double oracle_l1_bound(int s0, double lambda, double kappa0, double phi2);
/// 3 sqrt(s0) lambda / (kappa0 phi2).
double oracle_l2_bound(int s0, double lambda, double kappa0, double phi2);
/// 1 for the linear link; min of the link derivative over
/// [-x_max b, x_max b] for the logistic link.
double kappa0(LinkKind link, double x_max, double b);

/// Shared configuration of the trajectory-based diagnostics.
struct DiagnosticConfig {
  int d = 10;
  int arms = 2;
  int s0 = 2;
  std::string dist = "gaussian";
  double rho2 = 0.7;
  LinkKind link = LinkKind::kLinear;
  double sigma = 1.0;
  long horizon = 500;
  int trajectories = 200;
  std::vector<long> checkpoints{50, 100, 200, 300, 400, 500};
  double delta = 0.05;
  /// Policy generating the trajectories: sa_lasso or random.
  std::string policy = "sa_lasso";
  std::optional<double> lambda0;
  /// Monte Carlo context draws behind each conditional-moment estimate.
  long mc_draws = 10000;
  /// Compatibility below this is treated as not yet established.
  double phi2_floor = 1e-6;
  std::uint64_t seed = 42;
  int jobs = 1;

  static DiagnosticConfig oracle_defaults();
  static DiagnosticConfig concentration_defaults();
  void validate() const;
  DistributionSpec distribution() const;
};

void to_json(nlohmann::json& j, const DiagnosticConfig& config);
/// Keys absent from `j` keep their current value; unknown keys throw.
void from_json(const nlohmann::json& j, DiagnosticConfig& config);

struct OracleCheckpoint {
  long t = 0;
  int used = 0;
  /// Trajectories whose compatibility constant was still below phi2_floor.
  int excluded = 0;
  int violations_l1 = 0;
  int violations_l2 = 0;
  double rate_l1 = 0.0;
  double rate_l2 = 0.0;
  /// sqrt(delta (1 - delta) / used): standard error of the rate at delta.
  double standard_error = 0.0;
  double mean_lambda = 0.0;
  double mean_phi2 = 0.0;
  double mean_re = 0.0;
  double mean_error_l1 = 0.0;
  double mean_bound_l1 = 0.0;
  double mean_error_l2 = 0.0;
  double mean_bound_l2 = 0.0;
  bool pass = true;
};

struct OracleInequalityReport {
  DiagnosticConfig config;
  std::vector<OracleCheckpoint> checkpoints;
  double mean_kappa0 = 1.0;
  bool pass = true;
};

/// Runs the configured policy, and at each checkpoint refits the Lasso on
/// the trajectory so far with oracle_lambda (x_max = largest context row
/// norm seen) and compares its error with the l1 and l2 bounds. A
/// checkpoint passes when both violation rates are <= delta + 3 SE.
OracleInequalityReport check_oracle_inequality(const DiagnosticConfig& config);

// ---------------------------------------------------------------------------
// Matrix concentration

struct ConcentrationCheckpoint {
  long t = 0;
  int trajectories = 0;
  /// Mean and standard error of max_ij |Sigma_t - hat Sigma_t|_ij.
  double mean_error = 0.0;
  double se_error = 0.0;
  /// Cone-restricted positivity of hat Sigma_t.
  double mean_phi2 = 0.0;
  double min_phi2 = 0.0;
  double positive_fraction = 0.0;
  /// Fraction of trajectories whose error is at least phi0^2 / (32 s0 nu).
  double above_threshold_fraction = 0.0;
};

struct ConcentrationReport {
  DiagnosticConfig config;
  std::vector<ConcentrationCheckpoint> checkpoints;
  /// Conditional context draws per round behind Sigma_t.
  long draws_per_round = 0;
  /// Monte Carlo estimate of phi^2(Sigma, S0), substituted for phi0^2.
  double phi0_squared = 0.0;
  double symmetry_ratio = 1.0;
  double threshold = 0.0;
  /// Error at the last checkpoint over the error at the first.
  double decay_ratio = 0.0;
  /// Least-squares slope of log mean error on log t.
  double log_log_slope = 0.0;
  double max_ratio = 0.7;
  bool pass = true;
};

/// Sigma_t averages, over rounds, Monte Carlo estimates of the chosen
/// arm's conditional second moment under the policy's decision rule at that
/// round; hat Sigma_t averages the realized outer products. Passes when
/// decay_ratio <= max_ratio.
ConcentrationReport check_matrix_concentration(const DiagnosticConfig& config,
                                               double max_ratio = 0.7);

// ---------------------------------------------------------------------------
// Bernstein inequality for adapted sequences

enum class BernsteinGenerator {
  /// i.i.d. Rademacher entries.
  kRademacher,
  /// Rademacher entries times a sign fixed by the running sum.
  kAdaptedRademacher,
  /// (x_i x_j - E[x_i x_j | past]) / (2 x_max^2) for x = c_t u, u uniform on
  /// the hypercube and c_t in {1/2, 1} chosen from the running sum.
  kAdaptedHypercube,
};

std::string to_string(BernsteinGenerator generator);
BernsteinGenerator parse_bernstein_generator(std::string_view name);

/// w + sqrt(2w) + sqrt(4 log(2 d^2) / tau) + 2 log(2 d^2) / tau.
double bernstein_threshold(int d, long tau, double w);
/// exp(-tau w / 2).
double bernstein_tail_bound(long tau, double w);

struct BernsteinConfig {
  BernsteinGenerator generator = BernsteinGenerator::kRademacher;
  int d = 5;
  std::vector<std::pair<long, double>> grid{{100, 0.05}, {200, 0.1}, {400, 0.2}};
  long trials = 100000;
  std::uint64_t seed = 42;
  int jobs = 1;

  void validate() const;
};

struct BernsteinRow {
  long tau = 0;
  double w = 0.0;
  double threshold = 0.0;
  double bound = 0.0;
  long exceedances = 0;
  long trials = 0;
  double empirical = 0.0;
  double standard_error = 0.0;
  /// Mean of the maximal entry statistic, for scale.
  double mean_statistic = 0.0;
  bool pass = true;
};

struct BernsteinReport {
  BernsteinConfig config;
  std::vector<BernsteinRow> rows;
  bool pass = true;
};

/// Estimates P(max_{i<=j} |(1/tau) sum_t gamma_t^{ij}| >= threshold) and
/// compares it with bound + 3 SE (SE of the empirical proportion).
BernsteinReport check_bernstein_adapted(const BernsteinConfig& config);

// ---------------------------------------------------------------------------
// Balanced covariance

/// Draws one K x d context matrix.
using ContextDraw = std::function<Eigen::MatrixXd(Rng&)>;

struct BalancedCovarianceOptions {
  long samples = 1000000;
  int batches = 10;
  /// Ordering events with fewer samples (per batch) are skipped.
  long min_event_samples = 50;
  std::uint64_t seed = 42;
  int jobs = 1;
};

struct BalancedCovarianceEvent {
  std::vector<int> ordering;  // arm indices, highest score first
  int rank = 0;               // middle rank k, 1-based
  long count = 0;
  double value = 0.0;
};

struct BalancedCovarianceReport {
  int arms = 0;
  int d = 0;
  long samples = 0;
  double estimate = 0.0;
  double standard_error = 0.0;
  std::vector<double> batch_estimates;
  std::vector<BalancedCovarianceEvent> events;
  int skipped = 0;
  std::vector<std::string> notes;
};

/// Largest generalized eigenvalue of E[X_k X_k' 1{order}] against
/// E[(X_first X_first' + X_last X_last') 1{order}], maximized over orderings
/// of the arm scores x'beta (ties broken by arm index) and middle ranks.
/// The standard error comes from batch estimates. Requires K in [3, 7].
BalancedCovarianceReport estimate_balanced_covariance_constant(
    const ContextDraw& draw, const Eigen::VectorXd& beta, int arms,
    const BalancedCovarianceOptions& options = {});
BalancedCovarianceReport estimate_balanced_covariance_constant(
    const DistributionSpec& dist, const Eigen::VectorXd& beta,
    const BalancedCovarianceOptions& options = {});

// ---------------------------------------------------------------------------
// Report output: a human-readable text block and a CSV of per-row values.

std::string format_report(const OracleInequalityReport& report);
std::string format_report(const ConcentrationReport& report);
std::string format_report(const BernsteinReport& report);
std::string format_report(const BalancedCovarianceReport& report);
std::string to_csv(const OracleInequalityReport& report);
std::string to_csv(const ConcentrationReport& report);
std::string to_csv(const BernsteinReport& report);
std::string to_csv(const BalancedCovarianceReport& report);

}  // namespace sabandit
