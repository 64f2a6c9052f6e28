#pragma once

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sabandit/contexts.hpp"
#include "sabandit/estimator.hpp"

namespace sabandit {

/// Chosen-arm features and observed rewards, one row per completed round.
class History {
 public:
  explicit History(Eigen::Index d) : d_(d) {}

  void append(const Eigen::Ref<const Eigen::VectorXd>& x, double y);
  long size() const { return static_cast<long>(y_.size()); }
  Eigen::Index dim() const { return d_; }
  /// Copies the rows into an n x d matrix.
  Eigen::MatrixXd features() const;
  Eigen::VectorXd responses() const;

 private:
  Eigen::Index d_;
  std::vector<double> x_;  // row-major
  std::vector<double> y_;
};

/// Common interface of every bandit policy. Policies only see contexts and
/// the rewards of arms they pulled; nothing about the generating model.
class Policy {
 public:
  explicit Policy(Eigen::Index d) : history_(d) {}
  virtual ~Policy() = default;
  Policy(const Policy&) = delete;
  Policy& operator=(const Policy&) = delete;

  virtual std::string name() const = 0;
  virtual std::size_t choose(const ContextSet& ctx) = 0;
  /// Feeds back the reward of `arm`, the arm returned by the last choose().
  virtual void update(const ContextSet& ctx, std::size_t arm, double reward) = 0;

  const History& history() const { return history_; }
  /// Number of refits that stopped at max_iter without meeting tolerance.
  long solver_warnings() const { return solver_warnings_; }

 protected:
  void record(const ContextSet& ctx, std::size_t arm, double reward);
  void note_solution(const LassoSolution& sol) {
    if (!sol.converged) ++solver_warnings_;
  }

  History history_;
  long solver_warnings_ = 0;
};

struct SaLassoOptions {
  /// Only input of the algorithm; 2 * sigma * x_max in the regret analysis.
  double lambda0 = 2.0;
  LinkKind link = LinkKind::kLinear;
  SolverOptions solver{};
  /// Refit only when t reaches the next power of `refit_ratio`. Off by
  /// default, in which case every round is refit.
  bool geometric_refit = false;
  double refit_ratio = 1.1;
};

/// Sparsity-agnostic Lasso bandit: greedy on the current Lasso estimate,
/// refit after every round with lambda_t = lambda0 sqrt((4 log t + 2 log d)/t).
/// The first estimate is zero, so round 1 picks arm 0.
class SaLassoPolicy final : public Policy {
 public:
  SaLassoPolicy(Eigen::Index d, SaLassoOptions options);

  std::string name() const override { return "sa_lasso"; }
  std::size_t choose(const ContextSet& ctx) override;
  void update(const ContextSet& ctx, std::size_t arm, double reward) override;

  /// Appends an observation and refits; `update` forwards here.
  void observe(const Eigen::Ref<const Eigen::VectorXd>& x, double reward);

  const Eigen::VectorXd& beta_hat() const { return beta_hat_; }
  /// Overrides the current estimate (used by decision-equivalence checks).
  void set_beta_hat(Eigen::VectorXd beta);
  double current_lambda() const { return lambda_; }
  /// Next round index t (history length + 1).
  long round() const { return history_.size() + 1; }
  const SaLassoOptions& options() const { return options_; }

 private:
  void refit();

  SaLassoOptions options_;
  GramAccumulator stats_;
  Eigen::VectorXd beta_hat_;
  double lambda_ = 0.0;
  long next_refit_ = 1;
};

/// Always pulls the arm with the largest expected reward.
class OraclePolicy final : public Policy {
 public:
  explicit OraclePolicy(ModelSpec model);
  std::string name() const override { return "oracle"; }
  std::size_t choose(const ContextSet& ctx) override;
  void update(const ContextSet& ctx, std::size_t arm, double reward) override;

 private:
  ModelSpec model_;
};

/// Uniformly random arm.
class RandomPolicy final : public Policy {
 public:
  RandomPolicy(Eigen::Index d, Rng rng) : Policy(d), rng_(std::move(rng)) {}
  std::string name() const override { return "random"; }
  std::size_t choose(const ContextSet& ctx) override;
  void update(const ContextSet& ctx, std::size_t arm, double reward) override;

 private:
  Rng rng_;
};

std::size_t random_choose(Rng& rng, std::size_t arms);

/// Tuning of the forced-sampling Lasso bandit. Penalties are given in the
/// squared-error scaling (1/n)|y - X b|^2 + lambda |b|_1 used by that method.
struct LassoBanditTuning {
  int q = 1;
  double h = 5.0;
  double lambda1 = 0.05;
  double lambda2 = 0.05;

  /// Defaults for a known sparsity index: q = s0, other constants fixed.
  static LassoBanditTuning for_sparsity(int s0);
};

/// Arm owning round t under the forced-sampling schedule
/// T_i = {(2^n - 1) K q + j : n >= 0, j in [q(i-1)+1, q i]}; nullopt when t
/// is not a forced round. Arms are 0-based, rounds 1-based.
std::optional<std::size_t> forced_sampling_arm(long t, int arms, int q);
/// All forced rounds <= horizon for one arm, ascending.
std::vector<long> forced_sampling_schedule(std::size_t arm, int arms, int q, long horizon);

/// Forced-sampling Lasso bandit adapted to shared-parameter contexts through
/// the K*d concatenated context and per-arm parameters in R^{K d}.
class LassoBanditPolicy final : public Policy {
 public:
  LassoBanditPolicy(Eigen::Index d, int arms, LassoBanditTuning tuning,
                    SolverOptions solver = {});

  std::string name() const override { return "lasso_bandit"; }
  std::size_t choose(const ContextSet& ctx) override;
  void update(const ContextSet& ctx, std::size_t arm, double reward) override;

  const LassoBanditTuning& tuning() const { return tuning_; }
  const Eigen::VectorXd& forced_estimate(std::size_t arm) const { return forced_beta_[arm]; }
  const Eigen::VectorXd& all_sample_estimate(std::size_t arm) const { return all_beta_[arm]; }
  long forced_count(std::size_t arm) const { return forced_stats_[arm].count(); }

 private:
  Eigen::VectorXd concatenate(const ContextSet& ctx) const;

  int arms_;
  LassoBanditTuning tuning_;
  SolverOptions solver_;
  std::vector<GramAccumulator> forced_stats_;
  std::vector<GramAccumulator> all_stats_;
  std::vector<Eigen::VectorXd> forced_beta_;
  std::vector<Eigen::VectorXd> all_beta_;
};

/// Tuning of the doubly-robust Lasso bandit: lambda1 scales the random
/// exploration probability, lambda2 the Lasso penalty (squared-error
/// scaling), and the first `z_T` rounds are uniformly random.
struct DrLassoTuning {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  long z_T = 10;

  /// Defaults for a known sparsity index: z_T = 2 * s0, other constants fixed.
  static DrLassoTuning for_sparsity(int s0);
};

/// Doubly-robust Lasso bandit. After each round the pseudo-reward
///   r~ = xbar' b + (r - x_a' b) / (K pi_a)
/// of the arm-averaged context xbar enters a Lasso fit with penalty
/// lambda2 sqrt((log t + log d)/t).
class DrLassoPolicy final : public Policy {
 public:
  DrLassoPolicy(Eigen::Index d, int arms, DrLassoTuning tuning, Rng rng,
                SolverOptions solver = {});

  std::string name() const override { return "dr_lasso"; }
  std::size_t choose(const ContextSet& ctx) override;
  void update(const ContextSet& ctx, std::size_t arm, double reward) override;

  const Eigen::VectorXd& beta_hat() const { return beta_hat_; }
  const std::vector<double>& pseudo_rewards() const { return pseudo_rewards_; }
  /// Selection probability of the arm returned by the last choose().
  double last_probability() const { return last_probability_; }

 private:
  int arms_;
  DrLassoTuning tuning_;
  Rng rng_;
  SolverOptions solver_;
  GramAccumulator stats_;
  Eigen::VectorXd beta_hat_;
  std::vector<double> pseudo_rewards_;
  std::size_t last_arm_ = 0;
  double last_probability_ = 1.0;
};

}  // namespace sabandit
