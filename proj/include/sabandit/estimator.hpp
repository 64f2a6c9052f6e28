#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sabandit/link.hpp"

namespace sabandit {

/// l1-penalized GLM estimation problem
///
///     minimize  l_n(beta) + lambda * ||beta||_1,
///     l_n(beta) = -(1/n) sum_j [ y_j x_j'beta - m(x_j'beta) ]
///
/// Invariants (checked at construction): n >= 1, d >= 1, lambda >= 0,
/// X and y agree on n, and every row of X has l2-norm <= x_max when a bound
/// is supplied.
class LassoProblem {
 public:
  LassoProblem(Eigen::MatrixXd X, Eigen::VectorXd y, double lambda,
               LinkKind link, std::optional<double> x_max = std::nullopt);

  const Eigen::MatrixXd& X() const { return X_; }
  const Eigen::VectorXd& y() const { return y_; }
  double lambda() const { return lambda_; }
  LinkKind link() const { return link_; }
  Eigen::Index n() const { return X_.rows(); }
  Eigen::Index d() const { return X_.cols(); }

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  double lambda_;
  LinkKind link_;
};

struct SolverOptions {
  /// Stopping threshold on the coordinate-wise KKT residual.
  double tol = 1e-7;
  /// Coordinate-descent sweeps (linear) or proximal steps (logistic).
  int max_iter = 10000;
  /// Record the objective after every sweep/step into objective_trace.
  bool record_trace = false;
};

struct LassoSolution {
  Eigen::VectorXd beta;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double kkt_violation = 0.0;
  std::vector<double> objective_trace;
};

/// Raised when the solver produces a non-finite value.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, Eigen::Index coordinate)
      : std::runtime_error(what), coordinate_(coordinate) {}
  Eigen::Index coordinate() const { return coordinate_; }

 private:
  Eigen::Index coordinate_;
};

/// sign(z) * max(|z| - gamma, 0); gamma must be non-negative.
double soft_threshold(double z, double gamma);

double neg_log_likelihood(const LassoProblem& problem,
                          const Eigen::VectorXd& beta);
Eigen::VectorXd neg_log_likelihood_gradient(const LassoProblem& problem,
                                            const Eigen::VectorXd& beta);
/// l_n(beta) + lambda * ||beta||_1
double lasso_objective(const LassoProblem& problem, const Eigen::VectorXd& beta);

/// Largest violation of the l1 stationarity conditions given the loss
/// gradient: |g_j| - lambda for zero coordinates, |g_j + lambda sign(b_j)|
/// otherwise.
double kkt_violation(const Eigen::VectorXd& gradient,
                     const Eigen::VectorXd& beta, double lambda);

/// Solves the problem to `options.tol` on the KKT residual. Linear link uses
/// cyclic coordinate descent on the Gram form, logistic uses proximal
/// gradient with backtracking. `init` warm-starts the iterate.
///
/// Non-convergence is reported through `converged == false`; a non-finite
/// iterate throws NumericalError naming the coordinate.
LassoSolution fit_lasso(const LassoProblem& problem,
                        const SolverOptions& options = {},
                        const std::optional<Eigen::VectorXd>& init = std::nullopt);

/// lambda0 * sqrt((4 log t + 2 log d) / t), natural logarithm.
double lambda_schedule(double lambda0, long t, long d);

/// Running sufficient statistics sum x x' and sum x y for squared-loss
/// Lasso fits. Rank-one updates keep per-round refits O(d^2).
class GramAccumulator {
 public:
  explicit GramAccumulator(Eigen::Index d);

  void add(const Eigen::Ref<const Eigen::VectorXd>& x, double y);

  Eigen::Index dim() const { return gram_.rows(); }
  long count() const { return count_; }
  /// Unnormalized sum of x x'.
  const Eigen::MatrixXd& gram() const { return gram_; }
  /// Unnormalized sum of x y.
  const Eigen::VectorXd& xty() const { return xty_; }

 private:
  Eigen::MatrixXd gram_;
  Eigen::VectorXd xty_;
  long count_ = 0;
};

/// Linear-link Lasso fit from accumulated statistics; equivalent to
/// fit_lasso on the rows that produced them. An empty accumulator yields
/// the zero vector.
LassoSolution fit_lasso_gram(const GramAccumulator& stats, double lambda,
                             const SolverOptions& options = {},
                             const std::optional<Eigen::VectorXd>& init = std::nullopt);

}  // namespace sabandit
