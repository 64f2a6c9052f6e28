#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "oracles.hpp"
#include "sabandit/estimator.hpp"

using namespace sabandit;

namespace {

LinkKind to_link(oracle::Loss loss) {
  return loss == oracle::Loss::kSquared ? LinkKind::kLinear : LinkKind::kLogistic;
}

LassoProblem make_problem(const oracle::TinyProblem& p) {
  return LassoProblem(p.X, p.y, p.lambda, to_link(p.loss));
}

}  // namespace

TEST(SoftThreshold, Examples) {
  EXPECT_DOUBLE_EQ(soft_threshold(3.0, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(soft_threshold(-0.5, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(soft_threshold(-2.0, 0.0), -2.0);
  EXPECT_THROW(soft_threshold(1.0, -0.1), std::invalid_argument);
}

TEST(NegLogLikelihood, Examples) {
  {
    Eigen::MatrixXd X(1, 2);
    X << 1, 0;
    LassoProblem p(X, Eigen::VectorXd::Zero(1), 0.0, LinkKind::kLinear);
    EXPECT_DOUBLE_EQ(neg_log_likelihood(p, Eigen::VectorXd::Zero(2)), 0.0);
  }
  {
    LassoProblem p(Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Ones(1), 0.0,
                   LinkKind::kLogistic);
    EXPECT_NEAR(neg_log_likelihood(p, Eigen::VectorXd::Zero(1)), 0.693147, 1e-6);
  }
  {
    LassoProblem p(Eigen::MatrixXd::Ones(2, 1), Eigen::VectorXd::Constant(2, 2.0), 0.0,
                   LinkKind::kLinear);
    EXPECT_DOUBLE_EQ(neg_log_likelihood(p, Eigen::VectorXd::Constant(1, 2.0)), -2.0);
  }
}

TEST(NegLogLikelihood, DimensionMismatchThrows) {
  LassoProblem p(Eigen::MatrixXd::Ones(2, 3), Eigen::VectorXd::Ones(2), 0.1, LinkKind::kLinear);
  EXPECT_THROW(neg_log_likelihood(p, Eigen::VectorXd::Zero(2)), std::invalid_argument);
}

TEST(NegLogLikelihood, MatchesIndependentEvaluation) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (auto loss : {oracle::Loss::kSquared, oracle::Loss::kLogistic}) {
      const auto tp = oracle::tiny_problem(seed, loss);
      const auto p = make_problem(tp);
      const Eigen::VectorXd beta = Eigen::VectorXd::LinSpaced(p.d(), -1.0, 1.5);
      EXPECT_NEAR(lasso_objective(p, beta), oracle::objective(loss, tp.X, tp.y, tp.lambda, beta),
                  1e-12);
    }
  }
}

TEST(NegLogLikelihood, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (auto loss : {oracle::Loss::kSquared, oracle::Loss::kLogistic}) {
      const auto p = make_problem(oracle::tiny_problem(seed, loss));
      Eigen::VectorXd beta(p.d());
      for (auto& b : beta) b = normal(rng);
      const Eigen::VectorXd g = neg_log_likelihood_gradient(p, beta);
      Eigen::VectorXd fd(p.d());
      for (Eigen::Index j = 0; j < p.d(); ++j) {
        Eigen::VectorXd up = beta, down = beta;
        up[j] += 1e-5;
        down[j] -= 1e-5;
        fd[j] = (neg_log_likelihood(p, up) - neg_log_likelihood(p, down)) / 2e-5;
      }
      EXPECT_LE((g - fd).norm(), 1e-4 * std::max(g.norm(), 1e-3)) << seed;
    }
  }
}

TEST(LambdaSchedule, Examples) {
  EXPECT_NEAR(lambda_schedule(2.0, 1, 100), 6.0697, 1e-4);
  EXPECT_NEAR(lambda_schedule(2.0, 1, 100), 2.0 * std::sqrt(2.0 * std::log(100.0)), 1e-12);
  for (long d : {2L, 10L, 100L, 1000L}) {
    for (long t = 3; t < 5000; ++t) {
      EXPECT_LT(lambda_schedule(1.0, t + 1, d), lambda_schedule(1.0, t, d)) << t << " " << d;
    }
  }
  EXPECT_THROW(lambda_schedule(2.0, 0, 10), std::invalid_argument);
  EXPECT_THROW(lambda_schedule(2.0, 1, 1), std::invalid_argument);
  EXPECT_THROW(lambda_schedule(0.0, 1, 10), std::invalid_argument);
}

TEST(LassoProblem, RejectsInvalidInput) {
  EXPECT_THROW(LassoProblem(Eigen::MatrixXd(0, 2), Eigen::VectorXd(0), 0.1, LinkKind::kLinear),
               std::invalid_argument);
  EXPECT_THROW(LassoProblem(Eigen::MatrixXd::Ones(2, 2), Eigen::VectorXd::Ones(3), 0.1,
                            LinkKind::kLinear),
               std::invalid_argument);
  EXPECT_THROW(LassoProblem(Eigen::MatrixXd::Ones(2, 2), Eigen::VectorXd::Ones(2), -0.1,
                            LinkKind::kLinear),
               std::invalid_argument);
  EXPECT_THROW(LassoProblem(Eigen::MatrixXd::Ones(2, 2), Eigen::VectorXd::Ones(2), 0.1,
                            LinkKind::kLinear, 1.0),
               std::invalid_argument);
  EXPECT_NO_THROW(LassoProblem(Eigen::MatrixXd::Ones(2, 2), Eigen::VectorXd::Ones(2), 0.1,
                               LinkKind::kLinear, 1.5));
}

TEST(FitLasso, OrthonormalClosedForm) {
  const int n = 6;
  const Eigen::MatrixXd X = std::sqrt(static_cast<double>(n)) * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd y(n);
  y << 2.0, -0.3, 0.05, -1.7, 0.9, 0.0;
  const double lambda = 0.25;
  const auto sol = fit_lasso(LassoProblem(X, y, lambda, LinkKind::kLinear));
  ASSERT_TRUE(sol.converged);
  const Eigen::VectorXd c = X.transpose() * y / n;
  for (int j = 0; j < n; ++j) EXPECT_NEAR(sol.beta[j], soft_threshold(c[j], lambda), 1e-9);
}

TEST(FitLasso, LargePenaltyGivesExactZero) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (auto loss : {oracle::Loss::kSquared, oracle::Loss::kLogistic}) {
      const auto tp = oracle::tiny_problem(seed, loss);
      const double lambda =
          oracle::smooth_gradient(loss, tp.X, tp.y, Eigen::VectorXd::Zero(tp.X.cols()))
              .lpNorm<Eigen::Infinity>() *
          (1.0 + 1e-12);
      const auto sol = fit_lasso(LassoProblem(tp.X, tp.y, lambda, to_link(loss)),
                                 {}, Eigen::VectorXd::Ones(tp.X.cols()));
      EXPECT_TRUE(sol.converged);
      EXPECT_TRUE((sol.beta.array() == 0.0).all()) << sol.beta.transpose();
    }
  }
}

TEST(FitLasso, MatchesExactOracleSmallLinear) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd X(20, 3);
  for (auto& v : X.reshaped()) v = normal(rng);
  Eigen::VectorXd beta(3);
  beta << 1.0, 0.0, -0.5;
  Eigen::VectorXd y = X * beta;
  for (auto& v : y) v += 0.5 * normal(rng);
  const double lambda = 0.1;
  const auto exact = oracle::exact_lasso(oracle::Loss::kSquared, X, y, lambda);
  const auto sol = fit_lasso(LassoProblem(X, y, lambda, LinkKind::kLinear));
  EXPECT_LE(std::abs(sol.objective - exact.objective), 1e-8);
}

TEST(FitLasso, MatchesExactOracleOnTinyProblems) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (auto loss : {oracle::Loss::kSquared, oracle::Loss::kLogistic}) {
      const auto tp = oracle::tiny_problem(seed, loss);
      const auto exact = oracle::exact_lasso(loss, tp.X, tp.y, tp.lambda);
      const auto sol = fit_lasso(make_problem(tp));
      EXPECT_LE(std::abs(sol.objective - exact.objective), 1e-7) << seed;
      EXPECT_NEAR(oracle::objective(loss, tp.X, tp.y, tp.lambda, sol.beta), sol.objective, 1e-12);
      if (sol.converged) EXPECT_LE(sol.kkt_violation, 1e-7);
    }
  }
}

TEST(FitLasso, ExactOracleAgreesWithSubgradientOracle) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    for (auto loss : {oracle::Loss::kSquared, oracle::Loss::kLogistic}) {
      const auto tp = oracle::tiny_problem(seed, loss);
      const auto exact = oracle::exact_lasso(loss, tp.X, tp.y, tp.lambda);
      const auto sub = oracle::subgradient_lasso(loss, tp.X, tp.y, tp.lambda, 50000);
      EXPECT_LE(exact.objective, sub.objective + 1e-12);
      EXPECT_LE(sub.objective - exact.objective, 1e-3);
    }
  }
}

TEST(FitLasso, KktResidualRecomputed) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (auto loss : {oracle::Loss::kSquared, oracle::Loss::kLogistic}) {
      const auto tp = oracle::tiny_problem(seed, loss);
      const auto sol = fit_lasso(make_problem(tp));
      ASSERT_TRUE(sol.converged);
      const Eigen::VectorXd g = oracle::smooth_gradient(loss, tp.X, tp.y, sol.beta);
      for (Eigen::Index j = 0; j < g.size(); ++j) {
        if (sol.beta[j] == 0.0) {
          EXPECT_LE(std::abs(g[j]), tp.lambda + 1e-7);
        } else {
          EXPECT_LE(std::abs(g[j] + tp.lambda * (sol.beta[j] > 0 ? 1.0 : -1.0)), 1e-7);
        }
      }
    }
  }
}

TEST(FitLasso, ObjectiveTraceIsMonotone) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (auto loss : {oracle::Loss::kSquared, oracle::Loss::kLogistic}) {
      SolverOptions options;
      options.record_trace = true;
      const auto sol = fit_lasso(make_problem(oracle::tiny_problem(seed, loss)), options);
      ASSERT_FALSE(sol.objective_trace.empty());
      for (std::size_t k = 1; k < sol.objective_trace.size(); ++k) {
        EXPECT_LE(sol.objective_trace[k], sol.objective_trace[k - 1] + 1e-14);
      }
    }
  }
}

TEST(FitLasso, NeverWorseThanZero) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (auto loss : {oracle::Loss::kSquared, oracle::Loss::kLogistic}) {
      const auto p = make_problem(oracle::tiny_problem(seed, loss));
      SolverOptions options;
      options.max_iter = 1;
      for (const auto& sol : {fit_lasso(p), fit_lasso(p, options)}) {
        EXPECT_LE(sol.objective, lasso_objective(p, Eigen::VectorXd::Zero(p.d())));
      }
    }
  }
}

TEST(FitLasso, ShrinkagePath) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (auto loss : {oracle::Loss::kSquared, oracle::Loss::kLogistic}) {
      const auto tp = oracle::tiny_problem(seed, loss);
      double previous = 0.0;
      for (double lambda : {1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01}) {
        const auto sol = fit_lasso(LassoProblem(tp.X, tp.y, lambda, to_link(loss)));
        const double norm = sol.beta.lpNorm<1>();
        EXPECT_GE(norm + 1e-7, previous);
        previous = norm;
      }
    }
  }
}

TEST(FitLasso, NonConvergenceIsReported) {
  const auto p = make_problem(oracle::tiny_problem(7, oracle::Loss::kLogistic));
  SolverOptions options;
  options.max_iter = 1;
  options.tol = 1e-14;
  const auto sol = fit_lasso(p, options);
  EXPECT_FALSE(sol.converged);
  EXPECT_GT(sol.kkt_violation, 1e-14);
}

TEST(FitLasso, NonFiniteDataThrows) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXd y(3);
  y << 1.0, std::nan(""), 0.5;
  EXPECT_THROW(fit_lasso(LassoProblem(X, y, 0.1, LinkKind::kLinear)), NumericalError);
  X(0, 0) = std::numeric_limits<double>::infinity();
  y[1] = 1.0;
  EXPECT_THROW(fit_lasso(LassoProblem(X, y, 0.1, LinkKind::kLogistic)), NumericalError);
}

TEST(FitLasso, WarmStartReachesSameObjective) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (auto loss : {oracle::Loss::kSquared, oracle::Loss::kLogistic}) {
      const auto p = make_problem(oracle::tiny_problem(seed, loss));
      const auto cold = fit_lasso(p);
      const auto warm = fit_lasso(p, {}, Eigen::VectorXd::Constant(p.d(), 3.0));
      EXPECT_NEAR(cold.objective, warm.objective, 1e-7);
    }
  }
}

TEST(GramAccumulator, MatchesRowFit) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto tp = oracle::tiny_problem(seed, oracle::Loss::kSquared);
    GramAccumulator stats(tp.X.cols());
    for (Eigen::Index i = 0; i < tp.X.rows(); ++i) stats.add(tp.X.row(i).transpose(), tp.y[i]);
    EXPECT_EQ(stats.count(), tp.X.rows());
    EXPECT_LE((stats.gram() - tp.X.transpose() * tp.X).norm(), 1e-12);
    const auto from_gram = fit_lasso_gram(stats, tp.lambda);
    const auto from_rows = fit_lasso(make_problem(tp));
    EXPECT_NEAR(oracle::objective(oracle::Loss::kSquared, tp.X, tp.y, tp.lambda, from_gram.beta),
                from_rows.objective, 1e-9);
  }
  GramAccumulator empty(3);
  EXPECT_TRUE(fit_lasso_gram(empty, 0.1).beta.isZero());
}
