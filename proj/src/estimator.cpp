#include "sabandit/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sabandit {

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

void check_finite(double value, Eigen::Index coordinate, const char* stage) {
  if (!std::isfinite(value)) {
    std::ostringstream os;
    os << "non-finite value during " << stage << " at coordinate " << coordinate;
    throw NumericalError(os.str(), coordinate);
  }
}

// Zero is optimal once lambda >= |grad l(0)|_inf; returned without iterating.
LassoSolution zero_solution(Eigen::Index d, double objective, const SolverOptions& options) {
  LassoSolution sol;
  sol.beta = Eigen::VectorXd::Zero(d);
  sol.objective = objective;
  sol.converged = true;
  if (options.record_trace) sol.objective_trace.push_back(objective);
  return sol;
}

double l1_penalty(const Eigen::VectorXd& beta, double lambda) {
  return lambda * beta.lpNorm<1>();
}

// Cyclic coordinate descent on 0.5 b'Gb - c'b + lambda |b|_1 with
// G = inv_n * gram and c = inv_n * xty. The gradient g = Gb - c is carried
// along and refreshed from scratch before accepting convergence.
LassoSolution coordinate_descent(const Eigen::MatrixXd& gram,
                                 const Eigen::VectorXd& xty, double inv_n,
                                 double lambda, const SolverOptions& options,
                                 const std::optional<Eigen::VectorXd>& init) {
  const Eigen::Index d = gram.rows();
  LassoSolution sol;
  sol.beta = init ? *init : Eigen::VectorXd::Zero(d);
  require(sol.beta.size() == d, "warm start has wrong dimension");

  auto fresh_gradient = [&] {
    Eigen::VectorXd g = inv_n * (gram * sol.beta - xty);
    return g;
  };
  auto objective_of = [&](const Eigen::VectorXd& g) {
    // 0.5 b'Gb - c'b written through g = Gb - c
    return 0.5 * sol.beta.dot(g) - 0.5 * inv_n * xty.dot(sol.beta) +
           l1_penalty(sol.beta, lambda);
  };

  Eigen::VectorXd g = fresh_gradient();
  sol.kkt_violation = kkt_violation(g, sol.beta, lambda);
  if (options.record_trace) sol.objective_trace.push_back(objective_of(g));
  if (sol.kkt_violation <= options.tol) {
    sol.converged = true;
  }

  auto update_coordinate = [&](Eigen::Index j) {
    const double gjj = inv_n * gram(j, j);
    const double old = sol.beta[j];
    const double updated =
        gjj > 0.0 ? soft_threshold(gjj * old - g[j], lambda) / gjj : 0.0;
    check_finite(updated, j, "coordinate descent");
    const double delta = updated - old;
    if (delta != 0.0) {
      sol.beta[j] = updated;
      g.noalias() += (delta * inv_n) * gram.col(j);
    }
  };

  for (int sweep = 1; !sol.converged && sweep <= options.max_iter; ++sweep) {
    sol.iterations = sweep;
    for (Eigen::Index j = 0; j < d; ++j) update_coordinate(j);
    sol.kkt_violation = kkt_violation(g, sol.beta, lambda);
    if (sol.kkt_violation <= options.tol) {
      g = fresh_gradient();
      sol.kkt_violation = kkt_violation(g, sol.beta, lambda);
      sol.converged = sol.kkt_violation <= options.tol;
    }
    if (options.record_trace) sol.objective_trace.push_back(objective_of(g));
  }

  g = fresh_gradient();
  sol.kkt_violation = kkt_violation(g, sol.beta, lambda);
  sol.objective = objective_of(g);
  // Zero is always feasible with objective 0 for the Gram form.
  if (sol.objective > 0.0) {
    sol.beta.setZero();
    g = fresh_gradient();
    sol.kkt_violation = kkt_violation(g, sol.beta, lambda);
    sol.converged = sol.kkt_violation <= options.tol;
    sol.objective = 0.0;
  }
  return sol;
}

double logistic_loss(const LassoProblem& p, const Eigen::VectorXd& scores) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    total += link_cumulant(LinkKind::kLogistic, scores[i]) - p.y()[i] * scores[i];
  }
  return total / static_cast<double>(p.n());
}

Eigen::VectorXd logistic_gradient(const LassoProblem& p,
                                  const Eigen::VectorXd& scores) {
  Eigen::VectorXd resid(scores.size());
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    resid[i] = link_mean(LinkKind::kLogistic, scores[i]) - p.y()[i];
  }
  return p.X().transpose() * resid / static_cast<double>(p.n());
}

// Proximal gradient (ISTA) with backtracking on the sufficient-decrease
// condition f(b+) <= f(b) + g'(b+ - b) + L/2 |b+ - b|^2. The step estimate
// is relaxed by half before each step, so L tracks the local curvature.
LassoSolution proximal_gradient(const LassoProblem& p, const SolverOptions& options,
                                const std::optional<Eigen::VectorXd>& init) {
  const double lambda = p.lambda();
  LassoSolution sol;
  sol.beta = init ? *init : Eigen::VectorXd::Zero(p.d());
  require(sol.beta.size() == p.d(), "warm start has wrong dimension");

  Eigen::VectorXd scores = p.X() * sol.beta;
  double loss = logistic_loss(p, scores);
  Eigen::VectorXd grad = logistic_gradient(p, scores);
  double step_curvature =
      std::max(1e-12, 0.25 * p.X().colwise().squaredNorm().maxCoeff() /
                          static_cast<double>(p.n()));

  if (options.record_trace) {
    sol.objective_trace.push_back(loss + l1_penalty(sol.beta, lambda));
  }
  sol.kkt_violation = kkt_violation(grad, sol.beta, lambda);
  sol.converged = sol.kkt_violation <= options.tol;

  for (int it = 1; !sol.converged && it <= options.max_iter; ++it) {
    sol.iterations = it;
    step_curvature *= 0.5;
    Eigen::VectorXd candidate(p.d());
    Eigen::VectorXd cand_scores;
    double cand_loss = 0.0;
    for (int backtrack = 0; backtrack < 200; ++backtrack) {
      for (Eigen::Index j = 0; j < p.d(); ++j) {
        candidate[j] = soft_threshold(sol.beta[j] - grad[j] / step_curvature,
                                      lambda / step_curvature);
        check_finite(candidate[j], j, "proximal step");
      }
      cand_scores = p.X() * candidate;
      cand_loss = logistic_loss(p, cand_scores);
      const Eigen::VectorXd diff = candidate - sol.beta;
      const double model = loss + grad.dot(diff) +
                           0.5 * step_curvature * diff.squaredNorm();
      if (cand_loss <= model + 1e-15 * std::abs(loss)) break;
      step_curvature *= 2.0;
    }
    sol.beta = candidate;
    scores = std::move(cand_scores);
    loss = cand_loss;
    grad = logistic_gradient(p, scores);
    for (Eigen::Index j = 0; j < p.d(); ++j) check_finite(grad[j], j, "gradient");
    sol.kkt_violation = kkt_violation(grad, sol.beta, lambda);
    sol.converged = sol.kkt_violation <= options.tol;
    if (options.record_trace) {
      sol.objective_trace.push_back(loss + l1_penalty(sol.beta, lambda));
    }
  }

  sol.objective = loss + l1_penalty(sol.beta, lambda);
  const double zero_objective = logistic_loss(p, Eigen::VectorXd::Zero(p.n()));
  if (sol.objective > zero_objective) {
    sol.beta.setZero();
    grad = logistic_gradient(p, Eigen::VectorXd::Zero(p.n()));
    sol.kkt_violation = kkt_violation(grad, sol.beta, lambda);
    sol.converged = sol.kkt_violation <= options.tol;
    sol.objective = zero_objective;
  }
  return sol;
}

}  // namespace

LassoProblem::LassoProblem(Eigen::MatrixXd X, Eigen::VectorXd y, double lambda,
                           LinkKind link, std::optional<double> x_max)
    : X_(std::move(X)), y_(std::move(y)), lambda_(lambda), link_(link) {
  require(X_.rows() >= 1, "LassoProblem needs at least one row");
  require(X_.cols() >= 1, "LassoProblem needs at least one column");
  require(y_.size() == X_.rows(), "X and y disagree on the number of rows");
  require(lambda_ >= 0.0 && std::isfinite(lambda_), "lambda must be finite and >= 0");
  if (x_max) {
    const double bound = *x_max;
    for (Eigen::Index i = 0; i < X_.rows(); ++i) {
      if (X_.row(i).norm() > bound) {
        std::ostringstream os;
        os << "row " << i << " has norm " << X_.row(i).norm()
           << " above x_max = " << bound;
        throw std::invalid_argument(os.str());
      }
    }
  }
}

double soft_threshold(double z, double gamma) {
  require(gamma >= 0.0, "soft_threshold needs gamma >= 0");
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

double neg_log_likelihood(const LassoProblem& problem, const Eigen::VectorXd& beta) {
  require(beta.size() == problem.d(), "beta has wrong dimension");
  const Eigen::VectorXd scores = problem.X() * beta;
  double total = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    total += problem.y()[i] * scores[i] - link_cumulant(problem.link(), scores[i]);
  }
  return -total / static_cast<double>(problem.n());
}

Eigen::VectorXd neg_log_likelihood_gradient(const LassoProblem& problem,
                                            const Eigen::VectorXd& beta) {
  require(beta.size() == problem.d(), "beta has wrong dimension");
  const Eigen::VectorXd scores = problem.X() * beta;
  Eigen::VectorXd resid(scores.size());
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    resid[i] = link_mean(problem.link(), scores[i]) - problem.y()[i];
  }
  return problem.X().transpose() * resid / static_cast<double>(problem.n());
}

double lasso_objective(const LassoProblem& problem, const Eigen::VectorXd& beta) {
  return neg_log_likelihood(problem, beta) + l1_penalty(beta, problem.lambda());
}

double kkt_violation(const Eigen::VectorXd& gradient, const Eigen::VectorXd& beta,
                     double lambda) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const double v = beta[j] == 0.0
                         ? std::max(0.0, std::abs(gradient[j]) - lambda)
                         : std::abs(gradient[j] + (beta[j] > 0.0 ? lambda : -lambda));
    worst = std::max(worst, v);
  }
  return worst;
}

LassoSolution fit_lasso(const LassoProblem& problem, const SolverOptions& options,
                        const std::optional<Eigen::VectorXd>& init) {
  require(options.tol > 0.0, "solver tolerance must be positive");
  require(options.max_iter >= 1, "max_iter must be at least 1");
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(problem.d());
  const Eigen::VectorXd g0 = neg_log_likelihood_gradient(problem, zero);
  for (Eigen::Index j = 0; j < g0.size(); ++j) check_finite(g0[j], j, "input check");
  if (g0.lpNorm<Eigen::Infinity>() <= problem.lambda()) {
    return zero_solution(problem.d(), lasso_objective(problem, zero), options);
  }
  if (problem.link() == LinkKind::kLogistic) {
    return proximal_gradient(problem, options, init);
  }
  const Eigen::MatrixXd gram = problem.X().transpose() * problem.X();
  const Eigen::VectorXd xty = problem.X().transpose() * problem.y();
  LassoSolution sol = coordinate_descent(
      gram, xty, 1.0 / static_cast<double>(problem.n()), problem.lambda(), options, init);
  sol.objective = lasso_objective(problem, sol.beta);
  return sol;
}

double lambda_schedule(double lambda0, long t, long d) {
  require(lambda0 > 0.0, "lambda0 must be positive");
  require(t >= 1, "round index must be >= 1");
  require(d >= 2, "dimension must be >= 2");
  const double td = static_cast<double>(t);
  return lambda0 *
         std::sqrt((4.0 * std::log(td) + 2.0 * std::log(static_cast<double>(d))) / td);
}

GramAccumulator::GramAccumulator(Eigen::Index d)
    : gram_(Eigen::MatrixXd::Zero(d, d)), xty_(Eigen::VectorXd::Zero(d)) {}

void GramAccumulator::add(const Eigen::Ref<const Eigen::VectorXd>& x, double y) {
  require(x.size() == dim(), "observation has wrong dimension");
  gram_.noalias() += x * x.transpose();
  xty_.noalias() += y * x;
  ++count_;
}

LassoSolution fit_lasso_gram(const GramAccumulator& stats, double lambda,
                             const SolverOptions& options,
                             const std::optional<Eigen::VectorXd>& init) {
  require(options.tol > 0.0, "solver tolerance must be positive");
  require(options.max_iter >= 1, "max_iter must be at least 1");
  require(lambda >= 0.0, "lambda must be >= 0");
  if (stats.count() == 0) {
    LassoSolution sol;
    sol.beta = Eigen::VectorXd::Zero(stats.dim());
    sol.converged = true;
    return sol;
  }
  for (Eigen::Index j = 0; j < stats.dim(); ++j) check_finite(stats.xty()[j], j, "input check");
  if (stats.xty().lpNorm<Eigen::Infinity>() / static_cast<double>(stats.count()) <= lambda) {
    return zero_solution(stats.dim(), 0.0, options);
  }
  return coordinate_descent(stats.gram(), stats.xty(),
                            1.0 / static_cast<double>(stats.count()), lambda,
                            options, init);
}

}  // namespace sabandit
