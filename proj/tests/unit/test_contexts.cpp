#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "sabandit/contexts.hpp"

using namespace sabandit;

namespace {

DistributionSpec gaussian(int d, int arms, double rho2) {
  DistributionSpec spec;
  spec.kind = GaussianEquicorrelated{rho2};
  spec.d = d;
  spec.arms = arms;
  return spec;
}

DistributionSpec uniform(int d, int arms) {
  DistributionSpec spec;
  spec.kind = UniformHypercube{};
  spec.d = d;
  spec.arms = arms;
  return spec;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / n;
    mb += b[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

ModelSpec linear_model(Eigen::VectorXd beta, double sigma) {
  SparseParameter param;
  param.beta = std::move(beta);
  for (Eigen::Index j = 0; j < param.beta.size(); ++j) {
    if (param.beta[j] != 0.0) param.active_set.push_back(static_cast<int>(j));
  }
  return ModelSpec::from_parameter(param, LinkKind::kLinear, sigma, 1.0);
}

}  // namespace

TEST(MakeParameter, FullSupport) {
  Rng rng = make_rng(1);
  const auto p = make_parameter(5, 5, rng);
  ASSERT_EQ(p.active_set.size(), 5u);
  for (int j = 0; j < 5; ++j) {
    EXPECT_GT(p.beta[j], 0.0);
    EXPECT_LE(p.beta[j], 1.0);
  }
}

TEST(MakeParameter, ZeroSparsity) {
  Rng rng = make_rng(1);
  const auto p = make_parameter(100, 0, rng);
  EXPECT_TRUE(p.beta.isZero());
  EXPECT_TRUE(p.active_set.empty());
}

TEST(MakeParameter, DeterministicSupport) {
  Rng a = make_rng(9), b = make_rng(9);
  const auto pa = make_parameter(100, 5, a);
  const auto pb = make_parameter(100, 5, b);
  EXPECT_EQ((pa.beta.array() != 0.0).count(), 5);
  EXPECT_EQ(pa.active_set, pb.active_set);
  EXPECT_TRUE(pa.beta == pb.beta);
  EXPECT_TRUE(std::is_sorted(pa.active_set.begin(), pa.active_set.end()));
  EXPECT_THROW(make_parameter(3, 4, a), std::invalid_argument);
}

TEST(MakeParameter, ModelRecordsBound) {
  Rng rng = make_rng(2);
  const auto model = ModelSpec::from_parameter(make_parameter(20, 4, rng), LinkKind::kLinear,
                                               1.0, 1.0);
  EXPECT_EQ(model.s0, 4);
  EXPECT_EQ(model.active_set.size(), 4u);
  EXPECT_LE(model.beta_star.norm(), model.b + 1e-15);
}

TEST(ContextSampler, IndependentArmsUncorrelated) {
  ContextSampler sampler(gaussian(3, 2, 0.0));
  Rng rng = make_rng(3);
  std::vector<double> a, b;
  for (int k = 0; k < 100000; ++k) {
    const auto ctx = sampler.sample(rng);
    a.push_back(ctx.features(0, 1));
    b.push_back(ctx.features(1, 1));
  }
  const double r = correlation(a, b);
  EXPECT_GE(r, -0.01);
  EXPECT_LE(r, 0.01);
}

TEST(ContextSampler, EquicorrelatedArms) {
  ContextSampler sampler(gaussian(1, 2, 0.7));
  Rng rng = make_rng(4);
  std::vector<double> a, b;
  a.reserve(1000000);
  b.reserve(1000000);
  for (int k = 0; k < 1000000; ++k) {
    const auto ctx = sampler.sample(rng);
    a.push_back(ctx.features(0, 0));
    b.push_back(ctx.features(1, 0));
  }
  const double r = correlation(a, b);
  EXPECT_GE(r, 0.69);
  EXPECT_LE(r, 0.71);
}

TEST(ContextSampler, UniformMoments) {
  ContextSampler sampler(uniform(3, 1));
  Rng rng = make_rng(5);
  Eigen::Vector3d sum = Eigen::Vector3d::Zero(), sq = Eigen::Vector3d::Zero();
  const int n = 1000000;
  for (int k = 0; k < n; ++k) {
    const Eigen::Vector3d x = sampler.sample(rng).features.row(0).transpose();
    EXPECT_LE(x.cwiseAbs().maxCoeff(), 1.0);
    sum += x;
    sq += x.cwiseProduct(x);
  }
  for (int j = 0; j < 3; ++j) {
    const double mean = sum[j] / n;
    EXPECT_NEAR(mean, 0.0, 0.01);
    EXPECT_NEAR(sq[j] / n - mean * mean, 1.0 / 3.0, 0.01);
  }
}

TEST(ContextSampler, GramMatchesAnalyticWithinMonteCarloError) {
  const int d = 4, arms = 3, n = 20000;
  ContextSampler sampler(gaussian(d, arms, 0.5));
  Rng rng = make_rng(6);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d), sq = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k < n; ++k) {
    const auto ctx = sampler.sample(rng);
    const Eigen::MatrixXd g = ctx.features.transpose() * ctx.features / arms;
    sum += g;
    sq += g.cwiseProduct(g);
  }
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const double mean = sum(i, j) / n;
      const double se = std::sqrt((sq(i, j) / n - mean * mean) / n);
      EXPECT_LE(std::abs(mean - (i == j ? 1.0 : 0.0)), 3.0 * se + 1e-12) << i << "," << j;
    }
  }
}

TEST(ContextSampler, Deterministic) {
  ContextSampler sampler(gaussian(10, 3, 0.7));
  Rng a = make_rng(7, {1, 2}), b = make_rng(7, {1, 2}), c = make_rng(7, {1, 3});
  bool differs = false;
  for (int k = 0; k < 50; ++k) {
    const auto x = sampler.sample(a, k).features;
    EXPECT_TRUE(x == sampler.sample(b, k).features);
    differs = differs || !(x == sampler.sample(c, k).features);
  }
  EXPECT_TRUE(differs);
}

TEST(ContextSampler, ClippingBoundsRowNorms) {
  auto spec = gaussian(20, 4, 0.3);
  spec.clip_to_xmax = 1.0;
  ContextSampler sampler(spec);
  Rng rng = make_rng(8);
  for (int k = 0; k < 200; ++k) {
    const auto ctx = sampler.sample(rng);
    EXPECT_LE(ctx.features.rowwise().norm().maxCoeff(), 1.0 + 1e-12);
  }
}

TEST(ContextSampler, EllipticalShapeAndRank) {
  Rng rng = make_rng(10);
  DistributionSpec spec;
  spec.kind = make_elliptical(6, 2, rng);
  spec.d = 6;
  spec.arms = 2;
  ContextSampler sampler(spec);
  Eigen::MatrixXd stacked(200, 6);
  for (int k = 0; k < 100; ++k) stacked.middleRows(2 * k, 2) = sampler.sample(rng).features;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(stacked);
  EXPECT_EQ(lu.rank(), 2);
}

TEST(ContextSampler, InvalidSpecThrows) {
  EXPECT_THROW(ContextSampler(gaussian(3, 2, 1.0)), std::invalid_argument);
  EXPECT_THROW(ContextSampler(gaussian(0, 2, 0.1)), std::invalid_argument);
  EXPECT_THROW(ContextSampler(gaussian(3, 0, 0.1)), std::invalid_argument);
}

TEST(DistributionSpec, SymmetryRatioIsOne) {
  Rng rng = make_rng(11);
  DistributionSpec ell;
  ell.kind = make_elliptical(4, 4, rng);
  ell.d = 4;
  for (const auto& spec : {gaussian(4, 2, 0.7), uniform(4, 2), ell}) {
    EXPECT_EQ(spec.symmetry_ratio(), 1.0) << spec.kind_name();
  }
}

TEST(DistributionSpec, JsonRoundTrip) {
  auto spec = gaussian(7, 3, 0.25);
  spec.clip_to_xmax = 2.5;
  nlohmann::json j = spec;
  const auto back = j.get<DistributionSpec>();
  EXPECT_EQ(back.d, 7);
  EXPECT_EQ(back.arms, 3);
  EXPECT_EQ(back.clip_to_xmax, 2.5);
  EXPECT_EQ(std::get<GaussianEquicorrelated>(back.kind).rho2, 0.25);
  EXPECT_EQ(nlohmann::json(back), j);
}

TEST(ModelSpec, JsonRoundTrip) {
  Rng rng = make_rng(12);
  const auto model = ModelSpec::from_parameter(make_parameter(8, 3, rng), LinkKind::kLogistic,
                                               0.5, 2.0);
  nlohmann::json j = model;
  const auto back = j.get<ModelSpec>();
  EXPECT_TRUE(back.beta_star == model.beta_star);
  EXPECT_EQ(back.active_set, model.active_set);
  EXPECT_EQ(back.link, LinkKind::kLogistic);
  EXPECT_EQ(back.sigma, 0.5);
}

TEST(Rewards, NoiselessLinearIsExact) {
  Eigen::VectorXd beta(3);
  beta << 0.5, 0.0, 0.25;
  const auto model = linear_model(beta, 0.0);
  Eigen::VectorXd x(3);
  x << 1.0, -2.0, 4.0;
  Rng rng = make_rng(13);
  EXPECT_DOUBLE_EQ(sample_reward(model, x, rng), 1.5);
}

TEST(Rewards, ZeroSignalNoiseMean) {
  const auto model = linear_model(Eigen::VectorXd::Ones(2), 1.0);
  Rng rng = make_rng(14);
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
  double sum = 0.0;
  const int n = 1000000;
  for (int k = 0; k < n; ++k) sum += sample_reward(model, x, rng);
  EXPECT_NEAR(sum / n, 0.0, 0.004);
}

TEST(Rewards, LogisticNoiselessHalf) {
  auto model = linear_model(Eigen::VectorXd::Ones(2), 0.0);
  model.link = LinkKind::kLogistic;
  Rng rng = make_rng(15);
  Eigen::VectorXd x(2);
  x << 1.0, -1.0;
  EXPECT_DOUBLE_EQ(sample_reward(model, x, rng), 0.5);
  EXPECT_DOUBLE_EQ(reward_with_noise(model, x, 2.0), 0.5);
}

TEST(BestArm, TieBreakAndExample) {
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(4);
  e1[0] = 1.0;
  const auto model = linear_model(e1, 1.0);
  ContextSet ctx;
  ctx.features = Eigen::MatrixXd::Ones(2, 4);
  EXPECT_EQ(best_arm(model, ctx), 0u);
  ctx.features.setZero();
  ctx.features(0, 0) = 1.0;
  ctx.features(1, 0) = 2.0;
  EXPECT_EQ(best_arm(model, ctx), 1u);
  Eigen::VectorXd scores(4);
  scores << 1.0, 3.0, 3.0, 2.0;
  EXPECT_EQ(argmax_lowest(scores), 1u);
}

TEST(BestArm, MonotoneLinkArgmaxEquivalence) {
  Rng rng = make_rng(16);
  ContextSampler sampler(gaussian(6, 4, 0.5));
  for (int k = 0; k < 1000; ++k) {
    auto model = ModelSpec::from_parameter(make_parameter(6, 3, rng), LinkKind::kLogistic, 1.0,
                                           1.0);
    const auto ctx = sampler.sample(rng);
    const Eigen::VectorXd scores = ctx.features * model.beta_star;
    EXPECT_EQ(best_arm(model, ctx), argmax_lowest(scores));
  }
}
