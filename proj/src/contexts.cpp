#include "sabandit/contexts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace sabandit {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    require(static_cast<Eigen::Index>(j.at(r).size()) == cols, "ragged matrix in config");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

std::vector<double> vector_to_std(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

Eigen::VectorXd vector_from_std(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
  std::vector<std::uint32_t> words;
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (auto s : stream) push(s);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

Elliptical make_elliptical(int d, int k, Rng& rng) {
  require(d >= 1, "elliptical dimension must be >= 1");
  if (k == 0) k = d;
  require(k >= 1 && k <= d, "elliptical rank must lie in [1, d]");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Elliptical e;
  e.A.resize(d, k);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < k; ++j) e.A(i, j) = unif(rng);
  e.mean = Eigen::VectorXd::Zero(d);
  return e;
}

double DistributionSpec::symmetry_ratio() const {
  if (const auto* e = std::get_if<Elliptical>(&kind)) {
    if (e->mean.size() > 0 && !e->mean.isZero(0.0)) {
      return std::numeric_limits<double>::infinity();
    }
  }
  return 1.0;
}

std::string DistributionSpec::kind_name() const {
  return std::visit(Overloaded{[](const GaussianEquicorrelated&) { return std::string("gaussian"); },
                               [](const UniformHypercube&) { return std::string("uniform"); },
                               [](const Elliptical&) { return std::string("elliptical"); }},
                    kind);
}

ContextSampler::ContextSampler(DistributionSpec spec) : spec_(std::move(spec)) {
  require(spec_.d >= 1, "context dimension must be >= 1");
  require(spec_.arms >= 1, "number of arms must be >= 1");
  if (spec_.clip_to_xmax) require(*spec_.clip_to_xmax > 0.0, "clip bound must be positive");
  if (const auto* g = std::get_if<GaussianEquicorrelated>(&spec_.kind)) {
    require(g->rho2 >= 0.0 && g->rho2 < 1.0, "rho2 must lie in [0, 1)");
    const int K = spec_.arms;
    Eigen::MatrixXd V = Eigen::MatrixXd::Constant(K, K, g->rho2);
    V.diagonal().setOnes();
    Eigen::LLT<Eigen::MatrixXd> llt(V);
    if (llt.info() != Eigen::Success) {
      throw std::invalid_argument("arm covariance is not positive definite");
    }
    arm_factor_ = llt.matrixL();
  } else if (const auto* e = std::get_if<Elliptical>(&spec_.kind)) {
    require(e->A.rows() == spec_.d, "elliptical A must have d rows");
    require(e->A.cols() >= 1 && e->A.cols() <= spec_.d, "elliptical rank must lie in [1, d]");
    require(e->mean.size() == spec_.d, "elliptical mean must have d entries");
    Eigen::FullPivLU<Eigen::MatrixXd> lu(e->A);
    require(lu.rank() == e->A.cols(), "elliptical A must have full column rank");
  }
}

ContextSet ContextSampler::sample(Rng& rng, long round) const {
  const int K = spec_.arms;
  const int d = spec_.d;
  ContextSet ctx;
  ctx.round = round;
  ctx.features.resize(K, d);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::visit(
      Overloaded{
          [&](const GaussianEquicorrelated&) {
            Eigen::VectorXd z(K);
            for (int i = 0; i < d; ++i) {
              for (int k = 0; k < K; ++k) z[k] = normal(rng);
              ctx.features.col(i) = arm_factor_ * z;
            }
          },
          [&](const UniformHypercube&) {
            std::uniform_real_distribution<double> unif(-1.0, 1.0);
            for (int k = 0; k < K; ++k)
              for (int i = 0; i < d; ++i) ctx.features(k, i) = unif(rng);
          },
          [&](const Elliptical& e) {
            const Eigen::Index rank = e.A.cols();
            Eigen::VectorXd u(rank);
            for (int k = 0; k < K; ++k) {
              double norm = 0.0;
              do {
                for (Eigen::Index j = 0; j < rank; ++j) u[j] = normal(rng);
                norm = u.norm();
              } while (norm == 0.0);
              const double radius = normal(rng);
              ctx.features.row(k) = (e.mean + radius * (e.A * (u / norm))).transpose();
            }
          }},
      spec_.kind);

  if (spec_.clip_to_xmax) {
    const double bound = *spec_.clip_to_xmax;
    for (int k = 0; k < K; ++k) {
      const double norm = ctx.features.row(k).norm();
      if (norm > bound) ctx.features.row(k) *= bound / norm;
    }
  }
  return ctx;
}

SparseParameter make_parameter(int d, int s0, Rng& rng) {
  require(d >= 1, "dimension must be >= 1");
  require(s0 >= 0, "sparsity must be >= 0");
  require(s0 <= d, "sparsity s0 exceeds dimension d");
  std::vector<int> idx(static_cast<std::size_t>(d));
  std::iota(idx.begin(), idx.end(), 0);
  // partial Fisher-Yates
  for (int i = 0; i < s0; ++i) {
    std::uniform_int_distribution<int> pick(i, d - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  SparseParameter p;
  p.beta = Eigen::VectorXd::Zero(d);
  p.active_set.assign(idx.begin(), idx.begin() + s0);
  std::sort(p.active_set.begin(), p.active_set.end());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int j : p.active_set) {
    double v = 0.0;
    // a draw of exactly 0 would shrink the support
    while (v == 0.0) v = unif(rng);
    p.beta[j] = v;
  }
  return p;
}

ModelSpec ModelSpec::from_parameter(SparseParameter param, LinkKind link, double sigma,
                                    double x_max) {
  require(sigma >= 0.0, "sigma must be >= 0");
  require(x_max > 0.0, "x_max must be positive");
  ModelSpec m;
  m.s0 = static_cast<int>(param.active_set.size());
  m.beta_star = std::move(param.beta);
  m.active_set = std::move(param.active_set);
  m.link = link;
  m.sigma = sigma;
  m.x_max = x_max;
  m.b = m.beta_star.norm();
  return m;
}

double expected_reward(const ModelSpec& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  require(x.size() == model.beta_star.size(), "feature dimension does not match beta*");
  return link_mean(model.link, x.dot(model.beta_star));
}

double reward_with_noise(const ModelSpec& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                         double standard_normal) {
  return expected_reward(model, x) + model.sigma * standard_normal;
}

double sample_reward(const ModelSpec& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                     Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  return reward_with_noise(model, x, normal(rng));
}

std::size_t argmax_lowest(const Eigen::Ref<const Eigen::VectorXd>& scores) {
  require(scores.size() >= 1, "argmax of an empty score vector");
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(i);
  }
  return best;
}

std::size_t best_arm(const ModelSpec& model, const ContextSet& ctx) {
  Eigen::VectorXd rewards(ctx.arms());
  for (Eigen::Index i = 0; i < ctx.arms(); ++i) {
    rewards[i] = expected_reward(model, ctx.features.row(i).transpose());
  }
  return argmax_lowest(rewards);
}

void to_json(nlohmann::json& j, const DistributionSpec& spec) {
  j = nlohmann::json{{"d", spec.d}, {"arms", spec.arms}, {"dist", spec.kind_name()}};
  if (spec.clip_to_xmax) j["clip-xmax"] = *spec.clip_to_xmax;
  if (const auto* g = std::get_if<GaussianEquicorrelated>(&spec.kind)) {
    j["rho2"] = g->rho2;
  } else if (const auto* e = std::get_if<Elliptical>(&spec.kind)) {
    j["elliptical-A"] = matrix_to_json(e->A);
    j["elliptical-mean"] = vector_to_std(e->mean);
  }
}

void from_json(const nlohmann::json& j, DistributionSpec& spec) {
  spec.d = j.at("d").get<int>();
  spec.arms = j.at("arms").get<int>();
  spec.clip_to_xmax.reset();
  if (j.contains("clip-xmax") && !j.at("clip-xmax").is_null()) {
    spec.clip_to_xmax = j.at("clip-xmax").get<double>();
  }
  const auto name = j.at("dist").get<std::string>();
  if (name == "gaussian") {
    spec.kind = GaussianEquicorrelated{j.value("rho2", 0.0)};
  } else if (name == "uniform") {
    spec.kind = UniformHypercube{};
  } else if (name == "elliptical") {
    Elliptical e;
    e.A = matrix_from_json(j.at("elliptical-A"));
    e.mean = vector_from_std(j.at("elliptical-mean").get<std::vector<double>>());
    spec.kind = std::move(e);
  } else {
    throw std::invalid_argument("unknown distribution '" + name + "'");
  }
}

void to_json(nlohmann::json& j, const ModelSpec& model) {
  j = nlohmann::json{{"beta_star", vector_to_std(model.beta_star)},
                     {"active_set", model.active_set},
                     {"s0", model.s0},
                     {"link", to_string(model.link)},
                     {"sigma", model.sigma},
                     {"x_max", model.x_max},
                     {"b", model.b}};
}

void from_json(const nlohmann::json& j, ModelSpec& model) {
  model.beta_star = vector_from_std(j.at("beta_star").get<std::vector<double>>());
  model.active_set = j.at("active_set").get<std::vector<int>>();
  model.s0 = j.at("s0").get<int>();
  model.link = parse_link(j.at("link").get<std::string>());
  model.sigma = j.at("sigma").get<double>();
  model.x_max = j.at("x_max").get<double>();
  model.b = j.at("b").get<double>();
  require(static_cast<int>(model.active_set.size()) == model.s0,
          "active set size disagrees with s0");
}

}  // namespace sabandit
