#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "json.hpp"
#include "sabandit/link.hpp"

namespace sabandit {

using Rng = std::mt19937_64;

/// Seeds an independent generator for (seed, stream...) through
/// std::seed_seq so that runs, policies and noise streams never share state.
Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream = {});

/// Each coordinate i draws the K arm values jointly from N(0, V) with
/// V_kk = 1 and V_kl = rho2; coordinates are independent.
struct GaussianEquicorrelated {
  double rho2 = 0.0;
};

/// Every coordinate of every arm i.i.d. Uniform[-1, 1].
struct UniformHypercube {};

/// X = mean + R * A * U with R ~ N(0,1) and U uniform on the unit sphere of
/// R^k, independently per arm. A is d x k with rank k.
struct Elliptical {
  Eigen::MatrixXd A;
  Eigen::VectorXd mean;
};

/// Elliptical family with A_ij ~ Uniform[0,1] and zero mean; k = 0 means k = d.
Elliptical make_elliptical(int d, int k, Rng& rng);

struct DistributionSpec {
  std::variant<GaussianEquicorrelated, UniformHypercube, Elliptical> kind;
  int d = 1;
  int arms = 1;
  /// Rows whose norm exceeds this bound are rescaled onto it.
  std::optional<double> clip_to_xmax;

  /// Bound on p(-x)/p(x). All shipped generators are symmetric about zero,
  /// so this is 1 unless an elliptical mean is non-zero (reported as +inf).
  double symmetry_ratio() const;
  std::string kind_name() const;
};

struct ContextSet {
  /// Row i holds the feature vector of arm i.
  Eigen::MatrixXd features;
  long round = 0;

  Eigen::Index arms() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
};

/// Draws context sets for one DistributionSpec. The equicorrelation factor
/// is computed once at construction.
class ContextSampler {
 public:
  /// Throws std::invalid_argument on an invalid spec, including a
  /// covariance that fails to factor.
  explicit ContextSampler(DistributionSpec spec);

  ContextSet sample(Rng& rng, long round = 0) const;
  const DistributionSpec& spec() const { return spec_; }

 private:
  DistributionSpec spec_;
  Eigen::MatrixXd arm_factor_;  // lower Cholesky factor of V (K x K)
};

struct SparseParameter {
  Eigen::VectorXd beta;
  std::vector<int> active_set;  // sorted ascending
};

/// s0 support indices uniformly without replacement, each filled with an
/// independent Uniform[0,1] draw. s0 = 0 gives the zero vector.
SparseParameter make_parameter(int d, int s0, Rng& rng);

struct ModelSpec {
  Eigen::VectorXd beta_star;
  std::vector<int> active_set;
  int s0 = 0;
  LinkKind link = LinkKind::kLinear;
  double sigma = 1.0;
  double x_max = 1.0;
  /// Recorded bound on ||beta_star||_2.
  double b = 0.0;

  static ModelSpec from_parameter(SparseParameter param, LinkKind link,
                                  double sigma, double x_max);
};

double expected_reward(const ModelSpec& model, const Eigen::Ref<const Eigen::VectorXd>& x);
/// Expected reward plus sigma * standard_normal.
double reward_with_noise(const ModelSpec& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                         double standard_normal);
double sample_reward(const ModelSpec& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                     Rng& rng);

/// Lowest index maximizing the given scores.
std::size_t argmax_lowest(const Eigen::Ref<const Eigen::VectorXd>& scores);
/// Lowest-index arm with the largest expected reward.
std::size_t best_arm(const ModelSpec& model, const ContextSet& ctx);

void to_json(nlohmann::json& j, const DistributionSpec& spec);
void from_json(const nlohmann::json& j, DistributionSpec& spec);
void to_json(nlohmann::json& j, const ModelSpec& model);
void from_json(const nlohmann::json& j, ModelSpec& model);

}  // namespace sabandit
