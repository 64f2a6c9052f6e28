#include "sabandit/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sabandit {

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

// sqrt((log t + log d) / t), the decay shared by both baselines
double baseline_decay(long t, Eigen::Index d) {
  const double td = static_cast<double>(t);
  return std::sqrt((std::log(td) + std::log(static_cast<double>(d))) / td);
}

}  // namespace

void History::append(const Eigen::Ref<const Eigen::VectorXd>& x, double y) {
  require(x.size() == d_, "history row has wrong dimension");
  x_.insert(x_.end(), x.data(), x.data() + x.size());
  y_.push_back(y);
}

Eigen::MatrixXd History::features() const {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<const RowMajor>(x_.data(), size(), d_);
}

Eigen::VectorXd History::responses() const {
  return Eigen::Map<const Eigen::VectorXd>(y_.data(), size());
}

void Policy::record(const ContextSet& ctx, std::size_t arm, double reward) {
  require(arm < static_cast<std::size_t>(ctx.arms()), "arm index out of range");
  history_.append(ctx.features.row(static_cast<Eigen::Index>(arm)).transpose(), reward);
}

// ---------------------------------------------------------------------------

SaLassoPolicy::SaLassoPolicy(Eigen::Index d, SaLassoOptions options)
    : Policy(d), options_(options), stats_(d), beta_hat_(Eigen::VectorXd::Zero(d)) {
  require(d >= 2, "SA Lasso bandit needs d >= 2");
  require(options_.lambda0 > 0.0, "lambda0 must be positive");
  require(options_.refit_ratio > 1.0, "refit ratio must exceed 1");
}

std::size_t SaLassoPolicy::choose(const ContextSet& ctx) {
  require(ctx.dim() == history_.dim(), "context dimension mismatch");
  return argmax_lowest(ctx.features * beta_hat_);
}

void SaLassoPolicy::update(const ContextSet& ctx, std::size_t arm, double reward) {
  require(arm < static_cast<std::size_t>(ctx.arms()), "arm index out of range");
  observe(ctx.features.row(static_cast<Eigen::Index>(arm)).transpose(), reward);
}

void SaLassoPolicy::observe(const Eigen::Ref<const Eigen::VectorXd>& x, double reward) {
  history_.append(x, reward);
  if (options_.link == LinkKind::kLinear) stats_.add(x, reward);
  const long t = history_.size();
  lambda_ = lambda_schedule(options_.lambda0, t, history_.dim());
  if (options_.geometric_refit) {
    if (t < next_refit_) return;
    next_refit_ = std::max(t + 1, static_cast<long>(std::ceil(
                                      static_cast<double>(t) * options_.refit_ratio)));
  }
  refit();
}

void SaLassoPolicy::refit() {
  LassoSolution sol;
  if (options_.link == LinkKind::kLinear) {
    sol = fit_lasso_gram(stats_, lambda_, options_.solver, beta_hat_);
  } else {
    LassoProblem problem(history_.features(), history_.responses(), lambda_, options_.link);
    sol = fit_lasso(problem, options_.solver, beta_hat_);
  }
  note_solution(sol);
  beta_hat_ = std::move(sol.beta);
}

void SaLassoPolicy::set_beta_hat(Eigen::VectorXd beta) {
  require(beta.size() == history_.dim(), "estimate has wrong dimension");
  beta_hat_ = std::move(beta);
}

// ---------------------------------------------------------------------------

OraclePolicy::OraclePolicy(ModelSpec model)
    : Policy(model.beta_star.size()), model_(std::move(model)) {}

std::size_t OraclePolicy::choose(const ContextSet& ctx) { return best_arm(model_, ctx); }

void OraclePolicy::update(const ContextSet& ctx, std::size_t arm, double reward) {
  record(ctx, arm, reward);
}

std::size_t random_choose(Rng& rng, std::size_t arms) {
  require(arms >= 1, "need at least one arm");
  std::uniform_int_distribution<std::size_t> pick(0, arms - 1);
  return pick(rng);
}

std::size_t RandomPolicy::choose(const ContextSet& ctx) {
  return random_choose(rng_, static_cast<std::size_t>(ctx.arms()));
}

void RandomPolicy::update(const ContextSet& ctx, std::size_t arm, double reward) {
  record(ctx, arm, reward);
}

// ---------------------------------------------------------------------------

LassoBanditTuning LassoBanditTuning::for_sparsity(int s0) {
  LassoBanditTuning t;
  t.q = std::max(1, s0);
  return t;
}

std::optional<std::size_t> forced_sampling_arm(long t, int arms, int q) {
  require(t >= 1, "round index must be >= 1");
  require(arms >= 1 && q >= 1, "forced sampling needs arms >= 1 and q >= 1");
  const long block = static_cast<long>(arms) * q;
  // block n starts after offset (2^n - 1) * K * q
  for (long mult = 0;; mult = 2 * mult + 1) {
    const long start = mult * block;
    if (t <= start) return std::nullopt;
    if (t <= start + block) {
      const long j = t - start;  // 1..K q
      return static_cast<std::size_t>((j - 1) / q);
    }
    if (mult > std::numeric_limits<long>::max() / 4 / block) return std::nullopt;
  }
}

std::vector<long> forced_sampling_schedule(std::size_t arm, int arms, int q, long horizon) {
  require(arm < static_cast<std::size_t>(arms), "arm index out of range");
  std::vector<long> out;
  const long block = static_cast<long>(arms) * q;
  for (long mult = 0; mult * block < horizon; mult = 2 * mult + 1) {
    for (long j = static_cast<long>(arm) * q + 1; j <= static_cast<long>(arm + 1) * q; ++j) {
      const long t = mult * block + j;
      if (t <= horizon) out.push_back(t);
    }
  }
  return out;
}

LassoBanditPolicy::LassoBanditPolicy(Eigen::Index d, int arms, LassoBanditTuning tuning,
                                     SolverOptions solver)
    : Policy(d), arms_(arms), tuning_(tuning), solver_(solver) {
  require(arms_ >= 1, "need at least one arm");
  require(tuning_.q >= 1, "lasso_bandit tuning q must be >= 1");
  require(tuning_.h > 0.0, "lasso_bandit tuning h must be positive");
  require(tuning_.lambda1 > 0.0 && tuning_.lambda2 > 0.0,
          "lasso_bandit penalties lambda1 and lambda2 must be positive");
  const Eigen::Index dim = d * arms_;
  require(dim >= 2, "lasso_bandit needs K d >= 2");
  for (int i = 0; i < arms_; ++i) {
    forced_stats_.emplace_back(dim);
    all_stats_.emplace_back(dim);
    forced_beta_.push_back(Eigen::VectorXd::Zero(dim));
    all_beta_.push_back(Eigen::VectorXd::Zero(dim));
  }
}

Eigen::VectorXd LassoBanditPolicy::concatenate(const ContextSet& ctx) const {
  require(ctx.arms() == arms_ && ctx.dim() == history_.dim(), "context shape mismatch");
  Eigen::VectorXd x(ctx.arms() * ctx.dim());
  for (Eigen::Index i = 0; i < ctx.arms(); ++i) {
    x.segment(i * ctx.dim(), ctx.dim()) = ctx.features.row(i).transpose();
  }
  return x;
}

std::size_t LassoBanditPolicy::choose(const ContextSet& ctx) {
  const long t = history_.size() + 1;
  if (auto forced = forced_sampling_arm(t, arms_, tuning_.q)) return *forced;

  const Eigen::VectorXd x = concatenate(ctx);
  Eigen::VectorXd forced_scores(arms_);
  for (int i = 0; i < arms_; ++i) forced_scores[i] = x.dot(forced_beta_[static_cast<std::size_t>(i)]);
  const double cutoff = forced_scores.maxCoeff() - tuning_.h / 2.0;

  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < arms_; ++i) {
    if (forced_scores[i] < cutoff) continue;
    const double s = x.dot(all_beta_[static_cast<std::size_t>(i)]);
    if (s > best_score) {
      best_score = s;
      best = static_cast<std::size_t>(i);
    }
  }
  return best;
}

void LassoBanditPolicy::update(const ContextSet& ctx, std::size_t arm, double reward) {
  const long t = history_.size() + 1;
  record(ctx, arm, reward);
  const Eigen::VectorXd x = concatenate(ctx);

  // the squared-error objective of this method is twice ours
  if (forced_sampling_arm(t, arms_, tuning_.q) == arm) {
    forced_stats_[arm].add(x, reward);
    auto sol = fit_lasso_gram(forced_stats_[arm], tuning_.lambda1 / 2.0, solver_, forced_beta_[arm]);
    note_solution(sol);
    forced_beta_[arm] = std::move(sol.beta);
  }
  all_stats_[arm].add(x, reward);
  const double lambda = tuning_.lambda2 * baseline_decay(t, x.size()) / 2.0;
  // only the played arm's sample set changed
  auto sol = fit_lasso_gram(all_stats_[arm], lambda, solver_, all_beta_[arm]);
  note_solution(sol);
  all_beta_[arm] = std::move(sol.beta);
}

// ---------------------------------------------------------------------------

DrLassoTuning DrLassoTuning::for_sparsity(int s0) {
  DrLassoTuning t;
  t.z_T = std::max(1L, 2L * s0);
  return t;
}

DrLassoPolicy::DrLassoPolicy(Eigen::Index d, int arms, DrLassoTuning tuning, Rng rng,
                             SolverOptions solver)
    : Policy(d),
      arms_(arms),
      tuning_(tuning),
      rng_(std::move(rng)),
      solver_(solver),
      stats_(d),
      beta_hat_(Eigen::VectorXd::Zero(d)) {
  require(arms_ >= 1, "need at least one arm");
  require(d >= 2, "dr_lasso needs d >= 2");
  require(tuning_.lambda1 > 0.0 && tuning_.lambda2 > 0.0,
          "dr_lasso tuning lambda1 and lambda2 must be positive");
  require(tuning_.z_T >= 0, "dr_lasso tuning z_T must be >= 0");
}

std::size_t DrLassoPolicy::choose(const ContextSet& ctx) {
  require(ctx.arms() == arms_ && ctx.dim() == history_.dim(), "context shape mismatch");
  const long t = history_.size() + 1;
  const double K = static_cast<double>(arms_);
  if (t <= tuning_.z_T) {
    last_arm_ = random_choose(rng_, static_cast<std::size_t>(arms_));
    last_probability_ = 1.0 / K;
    return last_arm_;
  }
  const double explore = std::min(1.0, tuning_.lambda1 * baseline_decay(t, history_.dim()));
  const std::size_t greedy = argmax_lowest(ctx.features * beta_hat_);
  std::bernoulli_distribution coin(explore);
  last_arm_ = coin(rng_) ? random_choose(rng_, static_cast<std::size_t>(arms_)) : greedy;
  last_probability_ = explore / K + (last_arm_ == greedy ? 1.0 - explore : 0.0);
  return last_arm_;
}

void DrLassoPolicy::update(const ContextSet& ctx, std::size_t arm, double reward) {
  require(arm == last_arm_, "dr_lasso must be updated with the arm it chose");
  const long t = history_.size() + 1;
  record(ctx, arm, reward);
  const Eigen::VectorXd mean_context = ctx.features.colwise().mean().transpose();
  const double chosen_score = ctx.features.row(static_cast<Eigen::Index>(arm)).dot(beta_hat_);
  const double pseudo = mean_context.dot(beta_hat_) +
                        (reward - chosen_score) / (static_cast<double>(arms_) * last_probability_);
  pseudo_rewards_.push_back(pseudo);
  stats_.add(mean_context, pseudo);
  const double lambda = tuning_.lambda2 * baseline_decay(t, history_.dim()) / 2.0;
  auto sol = fit_lasso_gram(stats_, lambda, solver_, beta_hat_);
  note_solution(sol);
  beta_hat_ = std::move(sol.beta);
}

}  // namespace sabandit
