#include "sabandit/diagnostics.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "sabandit/estimator.hpp"
#include "sabandit/policies.hpp"

namespace sabandit {

namespace {

enum Stream : std::uint64_t {
  kConeStream = 101,
  kOracleStream = 102,
  kConcentrationStream = 103,
  kBernsteinStream = 104,
  kBalancedStream = 105,
};

// Sub-streams inside one trajectory.
enum TrajectoryStream : std::uint64_t {
  kTrajBeta = 1,
  kTrajContext = 2,
  kTrajNoise = 3,
  kTrajPolicy = 4,
  kTrajMonteCarlo = 5,
};

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

std::string csv_number(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

// Euclidean projection onto {w >= 0, sum w = z}.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v, double z) {
  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cumulative += sorted[i];
    const double candidate = (cumulative - z) / static_cast<double>(i + 1);
    if (sorted[i] - candidate > 0.0) theta = candidate;
  }
  return (v.array() - theta).max(0.0).matrix();
}

// Euclidean projection onto {|w|_1 <= radius}.
Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double radius) {
  if (v.lpNorm<1>() <= radius) return v;
  const Eigen::VectorXd magnitude = project_simplex(v.cwiseAbs(), radius);
  return magnitude.cwiseProduct(v.unaryExpr([](double x) { return x < 0.0 ? -1.0 : 1.0; }));
}

struct ConeGeometry {
  std::vector<int> on;   // S
  std::vector<int> off;  // complement of S
  Eigen::Index d = 0;
};

ConeGeometry make_geometry(const Eigen::MatrixXd& M, const std::vector<int>& active_set) {
  require(M.rows() == M.cols(), "cone search: matrix must be square");
  require(M.rows() >= 1 && M.rows() <= 20, "cone search: dimension must lie in [1, 20]");
  require(M.allFinite(), "cone search: matrix has non-finite entries");
  require(!active_set.empty(), "cone search: active set must be nonempty");
  ConeGeometry g;
  g.d = M.rows();
  std::vector<char> member(static_cast<std::size_t>(g.d), 0);
  for (int j : active_set) {
    require(j >= 0 && j < g.d, "cone search: active index out of range");
    require(!member[static_cast<std::size_t>(j)], "cone search: duplicate active index");
    member[static_cast<std::size_t>(j)] = 1;
  }
  for (int j = 0; j < g.d; ++j) (member[static_cast<std::size_t>(j)] ? g.on : g.off).push_back(j);
  return g;
}

// Points of the scale-fixed cone slice: |b_S|_1 = 1 with the sign pattern
// `signs`, |b_{S^c}|_1 <= 3.
struct SlicePoint {
  Eigen::VectorXd u;  // magnitudes on S, in the simplex
  Eigen::VectorXd v;  // values off S
};

Eigen::VectorXd assemble(const ConeGeometry& g, const Eigen::VectorXd& signs, const SlicePoint& p) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(g.d);
  for (std::size_t a = 0; a < g.on.size(); ++a) {
    const auto i = static_cast<Eigen::Index>(a);
    beta[g.on[a]] = signs[i] * p.u[i];
  }
  for (std::size_t a = 0; a < g.off.size(); ++a) beta[g.off[a]] = p.v[static_cast<Eigen::Index>(a)];
  return beta;
}

void split(const ConeGeometry& g, const Eigen::VectorXd& grad, const Eigen::VectorXd& signs,
           Eigen::VectorXd& grad_u, Eigen::VectorXd& grad_v) {
  grad_u.resize(static_cast<Eigen::Index>(g.on.size()));
  grad_v.resize(static_cast<Eigen::Index>(g.off.size()));
  for (std::size_t a = 0; a < g.on.size(); ++a) {
    const auto i = static_cast<Eigen::Index>(a);
    grad_u[i] = signs[i] * grad[g.on[a]];
  }
  for (std::size_t a = 0; a < g.off.size(); ++a) grad_v[static_cast<Eigen::Index>(a)] = grad[g.off[a]];
}

SlicePoint project(const SlicePoint& p) {
  SlicePoint out;
  out.u = project_simplex(p.u, 1.0);
  out.v = p.v.size() > 0 ? project_l1_ball(p.v, 3.0) : p.v;
  return out;
}

struct RandomConePoint {
  Eigen::VectorXd beta;
  Eigen::VectorXd signs;
  SlicePoint point;
};

RandomConePoint random_cone_point(const ConeGeometry& g, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  RandomConePoint r;
  const auto s = static_cast<Eigen::Index>(g.on.size());
  const auto m = static_cast<Eigen::Index>(g.off.size());
  r.point.u.resize(s);
  r.signs.resize(s);
  for (Eigen::Index i = 0; i < s; ++i) {
    r.point.u[i] = expo(rng);
    r.signs[i] = (i == 0 || coin(rng)) ? 1.0 : -1.0;
  }
  r.point.u /= r.point.u.sum();
  r.point.v = Eigen::VectorXd::Zero(m);
  if (m > 0 && coin(rng)) {
    for (Eigen::Index i = 0; i < m; ++i) r.point.v[i] = (coin(rng) ? 1.0 : -1.0) * expo(rng);
    r.point.v *= 3.0 * unif(rng) / r.point.v.lpNorm<1>();
  }
  r.beta = assemble(g, r.signs, r.point);
  return r;
}

Eigen::VectorXd orthant_signs(std::size_t s, unsigned long pattern) {
  Eigen::VectorXd signs = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(s));
  for (std::size_t i = 1; i < s; ++i) {
    if ((pattern >> (i - 1)) & 1UL) signs[static_cast<Eigen::Index>(i)] = -1.0;
  }
  return signs;
}

// Beyond this many active coordinates only the orthants of the best samples
// and the all-positive orthant are refined.
constexpr std::size_t kMaxEnumeratedActive = 11;

using Objective = std::function<double(const Eigen::VectorXd&)>;
using Refiner = std::function<double(const Eigen::VectorXd& signs, SlicePoint start,
                                     Eigen::VectorXd& best_beta)>;

ConeSearchResult cone_search(const ConeGeometry& g, const ConeSearchOptions& options,
                             const Objective& objective, const Refiner& refine) {
  require(options.samples >= 0 && options.refine_iterations >= 0 && options.refine_starts >= 0,
          "cone search: sample and iteration counts must be >= 0");
  ConeSearchResult result;
  result.value = std::numeric_limits<double>::infinity();
  auto consider = [&](double value, const Eigen::VectorXd& beta) {
    if (value < result.value) {
      result.value = value;
      result.argmin = beta;
    }
  };

  Rng rng = make_rng(options.seed, {kConeStream});
  std::vector<std::pair<double, RandomConePoint>> best;
  for (int k = 0; k < options.samples; ++k) {
    RandomConePoint r = random_cone_point(g, rng);
    const double value = objective(r.beta);
    consider(value, r.beta);
    best.emplace_back(value, std::move(r));
    if (best.size() > static_cast<std::size_t>(options.refine_starts)) {
      auto worst = std::max_element(best.begin(), best.end(),
                                    [](const auto& a, const auto& b) { return a.first < b.first; });
      best.erase(worst);
    }
  }
  result.samples = options.samples;

  const std::size_t s = g.on.size();
  const auto m = static_cast<Eigen::Index>(g.off.size());
  SlicePoint centre;
  centre.u = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(s), 1.0 / static_cast<double>(s));
  centre.v = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd beta;
  if (options.refine_iterations > 0) {
    if (s <= kMaxEnumeratedActive) {
      const unsigned long orthants = 1UL << (s - 1);
      for (unsigned long pattern = 0; pattern < orthants; ++pattern) {
        const double value = refine(orthant_signs(s, pattern), centre, beta);
        consider(value, beta);
      }
      result.orthants = static_cast<int>(orthants);
    } else {
      consider(refine(orthant_signs(s, 0), centre, beta), beta);
      result.orthants = 1;
    }
    for (const auto& [value, r] : best) {
      (void)value;
      consider(refine(r.signs, r.point, beta), beta);
    }
  }
  if (!std::isfinite(result.value)) {
    // no samples and no refinement: evaluate the centre of the first orthant
    result.argmin = assemble(g, orthant_signs(s, 0), centre);
    result.value = objective(result.argmin);
  }
  return result;
}

}  // namespace

bool in_cone(const Eigen::VectorXd& beta, const std::vector<int>& active_set) {
  double on = 0.0;
  double total = beta.lpNorm<1>();
  for (int j : active_set) {
    require(j >= 0 && j < beta.size(), "in_cone: active index out of range");
    on += std::abs(beta[j]);
  }
  return total - on <= 3.0 * on;
}

ConeSearchResult compatibility_search(const Eigen::MatrixXd& M, const std::vector<int>& active_set,
                                      const ConeSearchOptions& options) {
  const ConeGeometry g = make_geometry(M, active_set);
  const double s0 = static_cast<double>(g.on.size());
  const Eigen::MatrixXd sym = 0.5 * (M + M.transpose());
  // |b_S|_1 = 1 on the slice, so the ratio is the quadratic form itself.
  const Objective objective = [&](const Eigen::VectorXd& b) { return s0 * b.dot(sym * b); };
  // Frobenius norm bounds the spectral norm and scales exactly with M.
  const double lipschitz = 2.0 * s0 * sym.norm();

  const Refiner refine = [&](const Eigen::VectorXd& signs, SlicePoint start,
                             Eigen::VectorXd& best_beta) {
    SlicePoint x = project(start);
    best_beta = assemble(g, signs, x);
    double best_value = objective(best_beta);
    if (lipschitz <= 0.0) return best_value;
    const double step = 1.0 / lipschitz;
    SlicePoint y = x;
    double momentum = 1.0;
    Eigen::VectorXd grad_u, grad_v;
    for (int it = 0; it < options.refine_iterations; ++it) {
      const Eigen::VectorXd by = assemble(g, signs, y);
      split(g, 2.0 * s0 * (sym * by), signs, grad_u, grad_v);
      SlicePoint trial{y.u - step * grad_u, y.v - step * grad_v};
      SlicePoint next = project(trial);
      const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      const double w = (momentum - 1.0) / next_momentum;
      const double change = std::max((next.u - x.u).lpNorm<Eigen::Infinity>(),
                                     next.v.size() ? (next.v - x.v).lpNorm<Eigen::Infinity>() : 0.0);
      y.u = next.u + w * (next.u - x.u);
      y.v = next.v + w * (next.v - x.v);
      x = std::move(next);
      momentum = next_momentum;
      const Eigen::VectorXd bx = assemble(g, signs, x);
      const double value = objective(bx);
      if (value < best_value) {
        best_value = value;
        best_beta = bx;
      }
      if (change < 1e-13) break;
    }
    return best_value;
  };
  return cone_search(g, options, objective, refine);
}

double compatibility_constant(const Eigen::MatrixXd& M, const std::vector<int>& active_set,
                              const ConeSearchOptions& options) {
  return compatibility_search(M, active_set, options).value;
}

ConeSearchResult restricted_eigenvalue_search(const Eigen::MatrixXd& M,
                                              const std::vector<int>& active_set,
                                              const ConeSearchOptions& options) {
  const ConeGeometry g = make_geometry(M, active_set);
  const Eigen::MatrixXd sym = 0.5 * (M + M.transpose());
  const Objective objective = [&](const Eigen::VectorXd& b) {
    return b.dot(sym * b) / b.squaredNorm();
  };

  const Refiner refine = [&](const Eigen::VectorXd& signs, SlicePoint start,
                             Eigen::VectorXd& best_beta) {
    SlicePoint x = project(start);
    best_beta = assemble(g, signs, x);
    double value = objective(best_beta);
    double step = 1.0;
    Eigen::VectorXd grad_u, grad_v;
    for (int it = 0; it < options.refine_iterations; ++it) {
      const double norm2 = best_beta.squaredNorm();
      split(g, 2.0 * (sym * best_beta - value * best_beta) / norm2, signs, grad_u, grad_v);
      bool moved = false;
      for (int halving = 0; halving < 60; ++halving) {
        SlicePoint next = project(SlicePoint{x.u - step * grad_u, x.v - step * grad_v});
        const Eigen::VectorXd candidate = assemble(g, signs, next);
        const double candidate_value = objective(candidate);
        if (candidate_value < value) {
          const double change = (candidate - best_beta).lpNorm<Eigen::Infinity>();
          x = std::move(next);
          best_beta = candidate;
          value = candidate_value;
          step *= 2.0;
          moved = change >= 1e-13;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    return value;
  };
  return cone_search(g, options, objective, refine);
}

double restricted_eigenvalue(const Eigen::MatrixXd& M, const std::vector<int>& active_set,
                             const ConeSearchOptions& options) {
  return restricted_eigenvalue_search(M, active_set, options).value;
}

// ---------------------------------------------------------------------------

double oracle_lambda(double sigma, double x_max, double delta, long t, long d) {
  require(sigma >= 0.0, "oracle_lambda: sigma must be >= 0");
  require(x_max > 0.0, "oracle_lambda: x_max must be positive");
  require(delta > 0.0 && delta < 1.0, "oracle_lambda: delta must lie in (0, 1)");
  require(t >= 1 && d >= 1, "oracle_lambda: t and d must be >= 1");
  const double td = static_cast<double>(t);
  return 2.0 * sigma * x_max *
         std::sqrt(2.0 * (std::log(2.0 / delta) + std::log(static_cast<double>(d))) / td);
}

double oracle_l1_bound(int s0, double lambda, double kappa0, double phi2) {
  require(kappa0 > 0.0, "oracle bound: kappa0 must be positive");
  if (phi2 <= 0.0) return std::numeric_limits<double>::infinity();
  return 4.0 * s0 * lambda / (kappa0 * phi2);
}

double oracle_l2_bound(int s0, double lambda, double kappa0, double phi2) {
  require(kappa0 > 0.0, "oracle bound: kappa0 must be positive");
  if (phi2 <= 0.0) return std::numeric_limits<double>::infinity();
  return 3.0 * std::sqrt(static_cast<double>(s0)) * lambda / (kappa0 * phi2);
}

double kappa0(LinkKind link, double x_max, double b) {
  require(x_max >= 0.0 && b >= 0.0, "kappa0: x_max and b must be >= 0");
  if (link == LinkKind::kLinear) return 1.0;
  // the logistic derivative is even and decreasing in |z|
  return link_mean_derivative(link, x_max * b);
}

DiagnosticConfig DiagnosticConfig::oracle_defaults() { return DiagnosticConfig{}; }

DiagnosticConfig DiagnosticConfig::concentration_defaults() {
  DiagnosticConfig c;
  c.rho2 = 0.0;
  c.horizon = 400;
  c.trajectories = 50;
  c.checkpoints = {100, 200, 400};
  return c;
}

void DiagnosticConfig::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("config: " + what);
  };
  check(d >= 2 && d <= 20, "d must lie in [2, 20]");
  check(arms >= 1, "arms must be >= 1");
  check(s0 >= 1 && s0 <= d, "s0 must lie in [1, d]");
  check(dist == "gaussian" || dist == "uniform", "dist must be gaussian or uniform");
  if (dist == "gaussian") check(rho2 >= 0.0 && rho2 < 1.0, "rho2 must lie in [0, 1)");
  check(sigma >= 0.0, "sigma must be >= 0");
  check(horizon >= 1, "horizon must be >= 1");
  check(trajectories >= 1, "trajectories must be >= 1");
  check(!checkpoints.empty(), "at least one checkpoint is required");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    check(checkpoints[i] >= 1 && checkpoints[i] <= horizon, "checkpoints must lie in [1, horizon]");
    if (i > 0) check(checkpoints[i] > checkpoints[i - 1], "checkpoints must be increasing");
  }
  check(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  check(policy == "sa_lasso" || policy == "random", "policy must be sa_lasso or random");
  if (lambda0) check(*lambda0 > 0.0, "lambda0 must be positive");
  if (policy == "sa_lasso") check(lambda0.value_or(2.0 * sigma) > 0.0,
                                  "lambda0 = 2 sigma is zero; pass lambda0");
  check(mc_draws >= 1, "mc-draws must be >= 1");
  check(phi2_floor >= 0.0, "phi2-floor must be >= 0");
  check(jobs >= 1, "jobs must be >= 1");
}

DistributionSpec DiagnosticConfig::distribution() const {
  DistributionSpec spec;
  spec.d = d;
  spec.arms = arms;
  if (dist == "gaussian") {
    spec.kind = GaussianEquicorrelated{rho2};
  } else {
    spec.kind = UniformHypercube{};
  }
  return spec;
}

void to_json(nlohmann::json& j, const DiagnosticConfig& c) {
  j = nlohmann::json{{"d", c.d},
                     {"arms", c.arms},
                     {"s0", c.s0},
                     {"dist", c.dist},
                     {"rho2", c.rho2},
                     {"link", to_string(c.link)},
                     {"sigma", c.sigma},
                     {"horizon", c.horizon},
                     {"trajectories", c.trajectories},
                     {"checkpoints", c.checkpoints},
                     {"delta", c.delta},
                     {"policy", c.policy},
                     {"mc-draws", c.mc_draws},
                     {"phi2-floor", c.phi2_floor},
                     {"seed", c.seed},
                     {"jobs", c.jobs}};
  if (c.lambda0) j["lambda0"] = *c.lambda0;
}

void from_json(const nlohmann::json& j, DiagnosticConfig& c) {
  static const std::vector<std::string> keys{
      "d",      "arms",   "s0",      "dist",     "rho2",       "link", "sigma", "horizon",
      "trajectories", "checkpoints", "delta", "policy", "lambda0", "mc-draws", "phi2-floor",
      "seed",   "jobs"};
  require(j.is_object(), "config: expected an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("d", c.d);
  get("arms", c.arms);
  get("s0", c.s0);
  get("dist", c.dist);
  get("rho2", c.rho2);
  if (j.contains("link")) c.link = parse_link(j.at("link").get<std::string>());
  get("sigma", c.sigma);
  get("horizon", c.horizon);
  get("trajectories", c.trajectories);
  get("checkpoints", c.checkpoints);
  get("delta", c.delta);
  get("policy", c.policy);
  if (j.contains("lambda0") && !j.at("lambda0").is_null()) c.lambda0 = j.at("lambda0").get<double>();
  get("mc-draws", c.mc_draws);
  get("phi2-floor", c.phi2_floor);
  get("seed", c.seed);
  get("jobs", c.jobs);
}

namespace {

// One policy trajectory on a fresh parameter draw; `observe` runs after
// each round with the round index, the context and the chosen arm.
struct Trajectory {
  ModelSpec model;
  std::unique_ptr<Policy> policy;
  Rng context_rng;
  Rng noise_rng;
};

Trajectory start_trajectory(const DiagnosticConfig& c, std::uint64_t stream, int id) {
  const auto uid = static_cast<std::uint64_t>(id);
  Rng beta_rng = make_rng(c.seed, {stream, kTrajBeta, uid});
  Trajectory tr{ModelSpec::from_parameter(make_parameter(c.d, c.s0, beta_rng), c.link, c.sigma, 1.0),
                nullptr, make_rng(c.seed, {stream, kTrajContext, uid}),
                make_rng(c.seed, {stream, kTrajNoise, uid})};
  if (c.policy == "sa_lasso") {
    SaLassoOptions opts;
    opts.lambda0 = c.lambda0.value_or(2.0 * c.sigma);
    opts.link = c.link;
    tr.policy = std::make_unique<SaLassoPolicy>(c.d, opts);
  } else {
    tr.policy = std::make_unique<RandomPolicy>(c.d, make_rng(c.seed, {stream, kTrajPolicy, uid}));
  }
  return tr;
}

ConeSearchOptions cone_options(std::uint64_t seed) {
  ConeSearchOptions o;
  o.seed = seed;
  return o;
}

bool is_checkpoint(const std::vector<long>& checkpoints, long t, std::size_t& index) {
  auto it = std::lower_bound(checkpoints.begin(), checkpoints.end(), t);
  if (it == checkpoints.end() || *it != t) return false;
  index = static_cast<std::size_t>(it - checkpoints.begin());
  return true;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double max_abs_entry(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

OracleInequalityReport check_oracle_inequality(const DiagnosticConfig& config) {
  config.validate();
  const ContextSampler sampler(config.distribution());
  const std::size_t nc = config.checkpoints.size();

  struct Sample {
    bool excluded = false;
    double lambda = 0.0, phi2 = 0.0, re = 0.0, kappa = 1.0;
    double err1 = 0.0, bound1 = 0.0, err2 = 0.0, bound2 = 0.0;
  };
  std::vector<std::vector<Sample>> samples(static_cast<std::size_t>(config.trajectories),
                                           std::vector<Sample>(nc));

  detail::parallel_for(config.trajectories, config.jobs, [&](long r) {
    Trajectory tr = start_trajectory(config, kOracleStream, static_cast<int>(r));
    std::normal_distribution<double> normal(0.0, 1.0);
    GramAccumulator stats(config.d);
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(config.d);
    double x_max = 0.0;
    for (long t = 1; t <= config.horizon; ++t) {
      const ContextSet ctx = sampler.sample(tr.context_rng, t);
      x_max = std::max(x_max, ctx.features.rowwise().norm().maxCoeff());
      const std::size_t arm = tr.policy->choose(ctx);
      const Eigen::VectorXd x = ctx.features.row(static_cast<Eigen::Index>(arm)).transpose();
      const double y = reward_with_noise(tr.model, x, normal(tr.noise_rng));
      tr.policy->update(ctx, arm, y);
      stats.add(x, y);

      std::size_t k = 0;
      if (!is_checkpoint(config.checkpoints, t, k)) continue;
      Sample& s = samples[static_cast<std::size_t>(r)][k];
      s.lambda = oracle_lambda(config.sigma, x_max, config.delta, t, config.d);
      LassoSolution sol;
      if (config.link == LinkKind::kLinear) {
        sol = fit_lasso_gram(stats, s.lambda, {}, warm);
      } else {
        const History& h = tr.policy->history();
        sol = fit_lasso(LassoProblem(h.features(), h.responses(), s.lambda, config.link), {}, warm);
      }
      warm = sol.beta;
      const Eigen::MatrixXd sigma_hat = stats.gram() / static_cast<double>(t);
      const auto seed = config.seed ^ (static_cast<std::uint64_t>(r) << 20) ^ static_cast<std::uint64_t>(t);
      s.phi2 = compatibility_constant(sigma_hat, tr.model.active_set, cone_options(seed));
      s.re = restricted_eigenvalue(sigma_hat, tr.model.active_set, cone_options(seed));
      s.kappa = kappa0(config.link, x_max, tr.model.b);
      s.excluded = s.phi2 <= config.phi2_floor;
      const Eigen::VectorXd diff = sol.beta - tr.model.beta_star;
      s.err1 = diff.lpNorm<1>();
      s.err2 = diff.norm();
      s.bound1 = oracle_l1_bound(config.s0, s.lambda, s.kappa, s.phi2);
      s.bound2 = s.re > config.phi2_floor ? oracle_l2_bound(config.s0, s.lambda, s.kappa, s.re)
                                          : std::numeric_limits<double>::infinity();
    }
  });

  OracleInequalityReport report;
  report.config = config;
  std::vector<double> kappas;
  for (std::size_t k = 0; k < nc; ++k) {
    OracleCheckpoint cp;
    cp.t = config.checkpoints[k];
    std::vector<double> lambda, phi2, re, e1, b1, e2, b2;
    for (const auto& traj : samples) {
      const Sample& s = traj[k];
      kappas.push_back(s.kappa);
      if (s.excluded) {
        ++cp.excluded;
        continue;
      }
      ++cp.used;
      if (s.err1 > s.bound1) ++cp.violations_l1;
      if (s.err2 > s.bound2) ++cp.violations_l2;
      lambda.push_back(s.lambda);
      phi2.push_back(s.phi2);
      re.push_back(s.re);
      e1.push_back(s.err1);
      b1.push_back(s.bound1);
      e2.push_back(s.err2);
      if (std::isfinite(s.bound2)) b2.push_back(s.bound2);
    }
    if (cp.used > 0) {
      const double n = cp.used;
      cp.rate_l1 = cp.violations_l1 / n;
      cp.rate_l2 = cp.violations_l2 / n;
      cp.standard_error = std::sqrt(config.delta * (1.0 - config.delta) / n);
      const double limit = config.delta + 3.0 * cp.standard_error;
      cp.pass = cp.rate_l1 <= limit && cp.rate_l2 <= limit;
    }
    cp.mean_lambda = mean_of(lambda);
    cp.mean_phi2 = mean_of(phi2);
    cp.mean_re = mean_of(re);
    cp.mean_error_l1 = mean_of(e1);
    cp.mean_bound_l1 = mean_of(b1);
    cp.mean_error_l2 = mean_of(e2);
    cp.mean_bound_l2 = mean_of(b2);
    report.pass = report.pass && cp.pass;
    report.checkpoints.push_back(cp);
  }
  report.mean_kappa0 = mean_of(kappas);
  return report;
}

// ---------------------------------------------------------------------------

ConcentrationReport check_matrix_concentration(const DiagnosticConfig& config, double max_ratio) {
  config.validate();
  require(max_ratio > 0.0, "concentration: max_ratio must be positive");
  const DistributionSpec spec = config.distribution();
  const ContextSampler sampler(spec);
  const std::size_t nc = config.checkpoints.size();
  const long per_round = std::max<long>(
      1, (config.mc_draws + config.checkpoints.back() - 1) / config.checkpoints.back());

  ConcentrationReport report;
  report.config = config;
  report.max_ratio = max_ratio;
  report.draws_per_round = per_round;
  report.symmetry_ratio = spec.symmetry_ratio();

  // theoretical Gram (1/K) E[X'X], used only for the phi0^2 substitute
  {
    Rng rng = make_rng(config.seed, {kConcentrationStream, 0});
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(config.d, config.d);
    for (long i = 0; i < config.mc_draws; ++i) {
      const Eigen::MatrixXd& x = sampler.sample(rng).features;
      sigma.noalias() += x.transpose() * x;
    }
    sigma /= static_cast<double>(config.mc_draws) * config.arms;
    std::vector<int> leading(static_cast<std::size_t>(config.s0));
    std::iota(leading.begin(), leading.end(), 0);
    // exchangeable coordinates make the choice of S0 immaterial
    report.phi0_squared = compatibility_constant(sigma, leading, cone_options(config.seed));
    report.threshold = report.phi0_squared / (32.0 * config.s0 * report.symmetry_ratio);
  }

  struct Sample {
    double error = 0.0;
    double phi2 = 0.0;
  };
  std::vector<std::vector<Sample>> samples(static_cast<std::size_t>(config.trajectories),
                                           std::vector<Sample>(nc));

  detail::parallel_for(config.trajectories, config.jobs, [&](long r) {
    Trajectory tr = start_trajectory(config, kConcentrationStream, static_cast<int>(r) + 1);
    Rng mc_rng = make_rng(config.seed, {kConcentrationStream, kTrajMonteCarlo,
                                        static_cast<std::uint64_t>(r)});
    auto* sa = dynamic_cast<SaLassoPolicy*>(tr.policy.get());
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd adapted = Eigen::MatrixXd::Zero(config.d, config.d);
    Eigen::MatrixXd empirical = Eigen::MatrixXd::Zero(config.d, config.d);
    Eigen::MatrixXd conditional(config.d, config.d);
    for (long t = 1; t <= config.horizon; ++t) {
      // conditional second moment of the chosen features given the past
      conditional.setZero();
      for (long m = 0; m < per_round; ++m) {
        const Eigen::MatrixXd x = sampler.sample(mc_rng).features;
        if (sa) {
          const auto a = static_cast<Eigen::Index>(argmax_lowest(x * sa->beta_hat()));
          conditional.noalias() += x.row(a).transpose() * x.row(a);
        } else {
          conditional.noalias() += x.transpose() * x / static_cast<double>(config.arms);
        }
      }
      adapted += conditional / static_cast<double>(per_round);

      const ContextSet ctx = sampler.sample(tr.context_rng, t);
      const std::size_t arm = tr.policy->choose(ctx);
      const Eigen::VectorXd x = ctx.features.row(static_cast<Eigen::Index>(arm)).transpose();
      tr.policy->update(ctx, arm, reward_with_noise(tr.model, x, normal(tr.noise_rng)));
      empirical.noalias() += x * x.transpose();

      std::size_t k = 0;
      if (!is_checkpoint(config.checkpoints, t, k)) continue;
      const double td = static_cast<double>(t);
      Sample& s = samples[static_cast<std::size_t>(r)][k];
      s.error = max_abs_entry((adapted - empirical) / td);
      const auto seed = config.seed ^ (static_cast<std::uint64_t>(r) << 20) ^ static_cast<std::uint64_t>(t);
      s.phi2 = compatibility_constant(empirical / td, tr.model.active_set, cone_options(seed));
    }
  });

  std::vector<double> log_t, log_err;
  for (std::size_t k = 0; k < nc; ++k) {
    ConcentrationCheckpoint cp;
    cp.t = config.checkpoints[k];
    cp.trajectories = config.trajectories;
    std::vector<double> errors, phis;
    int positive = 0, above = 0;
    for (const auto& traj : samples) {
      errors.push_back(traj[k].error);
      phis.push_back(traj[k].phi2);
      if (traj[k].phi2 > config.phi2_floor) ++positive;
      if (traj[k].error >= report.threshold) ++above;
    }
    const double n = static_cast<double>(errors.size());
    cp.mean_error = mean_of(errors);
    double ss = 0.0;
    for (double e : errors) ss += (e - cp.mean_error) * (e - cp.mean_error);
    cp.se_error = errors.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    cp.mean_phi2 = mean_of(phis);
    cp.min_phi2 = *std::min_element(phis.begin(), phis.end());
    cp.positive_fraction = positive / n;
    cp.above_threshold_fraction = above / n;
    report.checkpoints.push_back(cp);
    if (cp.mean_error > 0.0) {
      log_t.push_back(std::log(static_cast<double>(cp.t)));
      log_err.push_back(std::log(cp.mean_error));
    }
  }
  const double first = report.checkpoints.front().mean_error;
  report.decay_ratio = first > 0.0 ? report.checkpoints.back().mean_error / first : 0.0;
  if (log_t.size() >= 2) {
    const double mt = mean_of(log_t), me = mean_of(log_err);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < log_t.size(); ++i) {
      num += (log_t[i] - mt) * (log_err[i] - me);
      den += (log_t[i] - mt) * (log_t[i] - mt);
    }
    report.log_log_slope = num / den;
  }
  report.pass = nc >= 2 && report.decay_ratio <= max_ratio;
  return report;
}

// ---------------------------------------------------------------------------

std::string to_string(BernsteinGenerator generator) {
  switch (generator) {
    case BernsteinGenerator::kRademacher:
      return "rademacher";
    case BernsteinGenerator::kAdaptedRademacher:
      return "adapted_rademacher";
    case BernsteinGenerator::kAdaptedHypercube:
      return "adapted_hypercube";
  }
  return "unknown";
}

BernsteinGenerator parse_bernstein_generator(std::string_view name) {
  if (name == "rademacher") return BernsteinGenerator::kRademacher;
  if (name == "adapted_rademacher") return BernsteinGenerator::kAdaptedRademacher;
  if (name == "adapted_hypercube") return BernsteinGenerator::kAdaptedHypercube;
  throw std::invalid_argument("unknown generator '" + std::string(name) +
                              "' (expected rademacher, adapted_rademacher or adapted_hypercube)");
}

double bernstein_threshold(int d, long tau, double w) {
  require(d >= 1 && tau >= 1 && w > 0.0, "bernstein_threshold: need d >= 1, tau >= 1, w > 0");
  const double l = std::log(2.0 * d * d);
  const double td = static_cast<double>(tau);
  return w + std::sqrt(2.0 * w) + std::sqrt(4.0 * l / td) + 2.0 * l / td;
}

double bernstein_tail_bound(long tau, double w) {
  require(tau >= 1 && w > 0.0, "bernstein_tail_bound: need tau >= 1, w > 0");
  return std::exp(-static_cast<double>(tau) * w / 2.0);
}

void BernsteinConfig::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("config: " + what);
  };
  check(d >= 1 && d <= 64, "d must lie in [1, 64]");
  check(!grid.empty(), "the (tau, w) grid is empty");
  for (const auto& [tau, w] : grid) check(tau >= 1 && w > 0.0, "grid entries need tau >= 1, w > 0");
  check(trials >= 1, "trials must be >= 1");
  check(jobs >= 1, "jobs must be >= 1");
}

namespace {

// Supplies Rademacher signs 64 at a time.
class SignSource {
 public:
  explicit SignSource(Rng& rng) : rng_(rng) {}
  double next() {
    if (left_ == 0) {
      bits_ = rng_();
      left_ = 64;
    }
    const double s = (bits_ & 1U) ? 1.0 : -1.0;
    bits_ >>= 1;
    --left_;
    return s;
  }

 private:
  Rng& rng_;
  std::uint64_t bits_ = 0;
  int left_ = 0;
};

double unit_uniform(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

// max_{i<=j} |(1/tau) sum_t gamma_t^{ij}| for one trial.
double bernstein_statistic(BernsteinGenerator gen, int d, long tau, Rng& rng,
                           std::vector<double>& sums, std::vector<double>& u) {
  std::fill(sums.begin(), sums.end(), 0.0);
  const std::size_t entries = sums.size();
  SignSource signs(rng);
  switch (gen) {
    case BernsteinGenerator::kRademacher:
      for (long t = 0; t < tau; ++t) {
        for (std::size_t e = 0; e < entries; ++e) sums[e] += signs.next();
      }
      break;
    case BernsteinGenerator::kAdaptedRademacher:
      // the scale of each increment depends on the sign of its running sum
      for (long t = 0; t < tau; ++t) {
        for (std::size_t e = 0; e < entries; ++e) sums[e] += (sums[e] >= 0.0 ? 1.0 : 0.5) * signs.next();
      }
      break;
    case BernsteinGenerator::kAdaptedHypercube: {
      const double inv = 1.0 / (2.0 * d);  // 1 / (2 x_max^2) with x_max^2 = d
      for (long t = 0; t < tau; ++t) {
        const double c = sums[0] >= 0.0 ? 1.0 : 0.5;
        for (int i = 0; i < d; ++i) u[static_cast<std::size_t>(i)] = c * unit_uniform(rng);
        const double diag_mean = c * c / 3.0;
        std::size_t e = 0;
        for (int i = 0; i < d; ++i) {
          for (int j = i; j < d; ++j, ++e) {
            const double prod = u[static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(j)];
            sums[e] += (prod - (i == j ? diag_mean : 0.0)) * inv;
          }
        }
      }
      break;
    }
  }
  double worst = 0.0;
  for (double s : sums) worst = std::max(worst, std::abs(s));
  return worst / static_cast<double>(tau);
}

}  // namespace

BernsteinReport check_bernstein_adapted(const BernsteinConfig& config) {
  config.validate();
  BernsteinReport report;
  report.config = config;
  constexpr long kBlock = 1024;
  const long blocks = (config.trials + kBlock - 1) / kBlock;
  const std::size_t entries = static_cast<std::size_t>(config.d) * (config.d + 1) / 2;

  for (std::size_t g = 0; g < config.grid.size(); ++g) {
    const auto [tau, w] = config.grid[g];
    BernsteinRow row;
    row.tau = tau;
    row.w = w;
    row.threshold = bernstein_threshold(config.d, tau, w);
    row.bound = bernstein_tail_bound(tau, w);
    row.trials = config.trials;
    std::vector<long> exceed(static_cast<std::size_t>(blocks), 0);
    std::vector<double> stat_sum(static_cast<std::size_t>(blocks), 0.0);
    detail::parallel_for(blocks, config.jobs, [&](long b) {
      Rng rng = make_rng(config.seed, {kBernsteinStream, static_cast<std::uint64_t>(config.generator),
                                       g, static_cast<std::uint64_t>(b)});
      std::vector<double> sums(entries), u(static_cast<std::size_t>(config.d));
      const long end = std::min(config.trials, (b + 1) * kBlock);
      for (long trial = b * kBlock; trial < end; ++trial) {
        const double stat = bernstein_statistic(config.generator, config.d, tau, rng, sums, u);
        stat_sum[static_cast<std::size_t>(b)] += stat;
        if (stat >= row.threshold) ++exceed[static_cast<std::size_t>(b)];
      }
    });
    row.exceedances = std::accumulate(exceed.begin(), exceed.end(), 0L);
    const double n = static_cast<double>(config.trials);
    row.empirical = row.exceedances / n;
    row.standard_error = std::sqrt(row.empirical * (1.0 - row.empirical) / n);
    row.mean_statistic = std::accumulate(stat_sum.begin(), stat_sum.end(), 0.0) / n;
    row.pass = row.empirical <= row.bound + 3.0 * row.standard_error;
    report.pass = report.pass && row.pass;
    report.rows.push_back(row);
  }
  return report;
}

// ---------------------------------------------------------------------------

namespace {

long factorial(int k) {
  long f = 1;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

// Lehmer rank of a permutation of 0..K-1.
long permutation_rank(const std::vector<int>& perm) {
  const int k = static_cast<int>(perm.size());
  long rank = 0;
  for (int i = 0; i < k; ++i) {
    int smaller = 0;
    for (int j = i + 1; j < k; ++j) smaller += perm[static_cast<std::size_t>(j)] < perm[static_cast<std::size_t>(i)];
    rank += smaller * factorial(k - 1 - i);
  }
  return rank;
}

std::vector<int> permutation_unrank(long rank, int k) {
  std::vector<int> pool(static_cast<std::size_t>(k));
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<int> perm;
  for (int i = k - 1; i >= 0; --i) {
    const long f = factorial(i);
    const auto idx = static_cast<std::size_t>(rank / f);
    rank %= f;
    perm.push_back(pool[idx]);
    pool.erase(pool.begin() + static_cast<long>(idx));
  }
  return perm;
}

struct OrderingMoments {
  std::vector<long> count;
  std::vector<Eigen::MatrixXd> extremes;            // per ordering
  std::vector<std::vector<Eigen::MatrixXd>> middle;  // per ordering, per middle rank

  OrderingMoments(long orderings, int arms, int d)
      : count(static_cast<std::size_t>(orderings), 0),
        extremes(static_cast<std::size_t>(orderings), Eigen::MatrixXd::Zero(d, d)),
        middle(static_cast<std::size_t>(orderings),
               std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(arms - 2), Eigen::MatrixXd::Zero(d, d))) {}

  void merge(const OrderingMoments& other) {
    for (std::size_t p = 0; p < count.size(); ++p) {
      count[p] += other.count[p];
      extremes[p] += other.extremes[p];
      for (std::size_t k = 0; k < middle[p].size(); ++k) middle[p][k] += other.middle[p][k];
    }
  }
};

struct Evaluation {
  double estimate = 0.0;
  std::vector<BalancedCovarianceEvent> events;
  int skipped = 0;
  std::vector<std::string> notes;
};

Evaluation evaluate(const OrderingMoments& mom, int arms, long min_samples) {
  Evaluation ev;
  for (std::size_t p = 0; p < mom.count.size(); ++p) {
    const std::vector<int> order = permutation_unrank(static_cast<long>(p), arms);
    std::ostringstream name;
    for (std::size_t i = 0; i < order.size(); ++i) name << (i ? ">" : "") << order[i];
    if (mom.count[p] < min_samples) {
      ++ev.skipped;
      ev.notes.push_back("ordering " + name.str() + " skipped: " + std::to_string(mom.count[p]) +
                         " samples");
      continue;
    }
    const Eigen::MatrixXd b = 0.5 * (mom.extremes[p] + mom.extremes[p].transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(b);
    if (llt.info() != Eigen::Success) {
      ++ev.skipped;
      ev.notes.push_back("ordering " + name.str() + " skipped: extreme-arm moment not positive definite");
      continue;
    }
    for (std::size_t k = 0; k < mom.middle[p].size(); ++k) {
      const Eigen::MatrixXd a = 0.5 * (mom.middle[p][k] + mom.middle[p][k].transpose());
      Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, b, Eigen::EigenvaluesOnly);
      if (solver.info() != Eigen::Success) {
        ++ev.skipped;
        ev.notes.push_back("ordering " + name.str() + " skipped: eigen solver failed");
        continue;
      }
      BalancedCovarianceEvent e;
      e.ordering = order;
      e.rank = static_cast<int>(k) + 2;
      e.count = mom.count[p];
      e.value = solver.eigenvalues().maxCoeff();
      ev.estimate = std::max(ev.estimate, e.value);
      ev.events.push_back(std::move(e));
    }
  }
  return ev;
}

}  // namespace

BalancedCovarianceReport estimate_balanced_covariance_constant(
    const ContextDraw& draw, const Eigen::VectorXd& beta, int arms,
    const BalancedCovarianceOptions& options) {
  require(static_cast<bool>(draw), "balanced covariance: empty sampler");
  require(arms >= 3 && arms <= 7, "balanced covariance: arms must lie in [3, 7]");
  require(beta.size() >= 1, "balanced covariance: beta is empty");
  require(options.samples >= 1 && options.batches >= 1 && options.samples >= options.batches,
          "balanced covariance: need samples >= batches >= 1");
  require(options.min_event_samples >= 1 && options.jobs >= 1,
          "balanced covariance: min_event_samples and jobs must be >= 1");
  const int d = static_cast<int>(beta.size());
  const long orderings = factorial(arms);

  std::vector<OrderingMoments> batches;
  batches.reserve(static_cast<std::size_t>(options.batches));
  for (int b = 0; b < options.batches; ++b) batches.emplace_back(orderings, arms, d);

  detail::parallel_for(options.batches, options.jobs, [&](long b) {
    Rng rng = make_rng(options.seed, {kBalancedStream, static_cast<std::uint64_t>(b)});
    OrderingMoments& mom = batches[static_cast<std::size_t>(b)];
    const long begin = options.samples * b / options.batches;
    const long end = options.samples * (b + 1) / options.batches;
    std::vector<int> order(static_cast<std::size_t>(arms));
    for (long i = begin; i < end; ++i) {
      const Eigen::MatrixXd x = draw(rng);
      if (x.rows() != arms || x.cols() != d) {
        throw std::invalid_argument("balanced covariance: sampler returned the wrong shape");
      }
      const Eigen::VectorXd scores = x * beta;
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](int l, int r) { return scores[l] > scores[r]; });
      const auto p = static_cast<std::size_t>(permutation_rank(order));
      ++mom.count[p];
      const auto first = x.row(order.front());
      const auto last = x.row(order.back());
      mom.extremes[p].noalias() += first.transpose() * first + last.transpose() * last;
      for (int k = 1; k + 1 < arms; ++k) {
        const auto mid = x.row(order[static_cast<std::size_t>(k)]);
        mom.middle[p][static_cast<std::size_t>(k - 1)].noalias() += mid.transpose() * mid;
      }
    }
  });

  BalancedCovarianceReport report;
  report.arms = arms;
  report.d = d;
  report.samples = options.samples;
  OrderingMoments total(orderings, arms, d);
  for (const auto& mom : batches) {
    total.merge(mom);
    const Evaluation ev = evaluate(mom, arms, options.min_event_samples);
    if (!ev.events.empty()) report.batch_estimates.push_back(ev.estimate);
  }
  const Evaluation ev = evaluate(total, arms, options.min_event_samples * options.batches);
  report.estimate = ev.estimate;
  report.events = ev.events;
  report.skipped = ev.skipped;
  report.notes = ev.notes;
  if (ev.events.empty()) report.notes.push_back("no ordering event had enough samples");
  const auto nb = static_cast<double>(report.batch_estimates.size());
  if (nb > 1) {
    const double m = mean_of(report.batch_estimates);
    double ss = 0.0;
    for (double v : report.batch_estimates) ss += (v - m) * (v - m);
    report.standard_error = std::sqrt(ss / (nb - 1.0) / nb);
  }
  return report;
}

BalancedCovarianceReport estimate_balanced_covariance_constant(
    const DistributionSpec& dist, const Eigen::VectorXd& beta,
    const BalancedCovarianceOptions& options) {
  require(beta.size() == dist.d, "balanced covariance: beta dimension differs from the distribution");
  auto sampler = std::make_shared<const ContextSampler>(dist);
  return estimate_balanced_covariance_constant(
      [sampler](Rng& rng) { return sampler->sample(rng).features; }, beta, dist.arms, options);
}

// ---------------------------------------------------------------------------

std::string format_report(const OracleInequalityReport& r) {
  std::ostringstream os;
  const auto& c = r.config;
  os << "diagnostic: oracle-inequality\n"
     << "d: " << c.d << "\narms: " << c.arms << "\ns0: " << c.s0 << "\ndist: " << c.dist
     << "\nrho2: " << c.rho2 << "\nlink: " << to_string(c.link) << "\nsigma: " << c.sigma
     << "\npolicy: " << c.policy << "\nhorizon: " << c.horizon << "\ntrajectories: " << c.trajectories
     << "\ndelta: " << c.delta << "\nseed: " << c.seed << "\nmean_kappa0: " << fmt(r.mean_kappa0)
     << "\nlambda_t: 2 sigma x_max sqrt(2 (log(2/delta) + log d) / t), x_max = largest row norm seen"
     << "\nstandard_error: sqrt(delta (1 - delta) / used)\n"
     << "checkpoints:\n";
  for (const auto& cp : r.checkpoints) {
    os << "  t=" << cp.t << " used=" << cp.used << " excluded=" << cp.excluded
       << " rate_l1=" << fmt(cp.rate_l1) << " rate_l2=" << fmt(cp.rate_l2)
       << " limit=" << fmt(c.delta + 3.0 * cp.standard_error) << " mean_phi2=" << fmt(cp.mean_phi2)
       << " mean_err_l1=" << fmt(cp.mean_error_l1) << " mean_bound_l1=" << fmt(cp.mean_bound_l1)
       << " " << (cp.pass ? "PASS" : "FAIL") << "\n";
    if (cp.excluded > 0) os << "    note: " << cp.excluded << " trajectories: compatibility not yet established\n";
  }
  os << "result: " << (r.pass ? "PASS" : "FAIL") << "\n";
  return os.str();
}

std::string to_csv(const OracleInequalityReport& r) {
  std::ostringstream os;
  os << "t,used,excluded,violations_l1,violations_l2,rate_l1,rate_l2,standard_error,mean_lambda,"
        "mean_phi2,mean_re,mean_error_l1,mean_bound_l1,mean_error_l2,mean_bound_l2,pass\n";
  for (const auto& cp : r.checkpoints) {
    os << cp.t << ',' << cp.used << ',' << cp.excluded << ',' << cp.violations_l1 << ','
       << cp.violations_l2 << ',' << csv_number(cp.rate_l1) << ',' << csv_number(cp.rate_l2) << ','
       << csv_number(cp.standard_error) << ',' << csv_number(cp.mean_lambda) << ','
       << csv_number(cp.mean_phi2) << ',' << csv_number(cp.mean_re) << ','
       << csv_number(cp.mean_error_l1) << ',' << csv_number(cp.mean_bound_l1) << ','
       << csv_number(cp.mean_error_l2) << ',' << csv_number(cp.mean_bound_l2) << ','
       << (cp.pass ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string format_report(const ConcentrationReport& r) {
  std::ostringstream os;
  const auto& c = r.config;
  os << "diagnostic: matrix-concentration\n"
     << "d: " << c.d << "\narms: " << c.arms << "\ns0: " << c.s0 << "\ndist: " << c.dist
     << "\nrho2: " << c.rho2 << "\npolicy: " << c.policy << "\nhorizon: " << c.horizon
     << "\ntrajectories: " << c.trajectories << "\nseed: " << c.seed
     << "\ndraws_per_round: " << r.draws_per_round
     << "\nphi0_squared: " << fmt(r.phi0_squared)
     << " (Monte Carlo estimate of phi^2(Sigma, S0) substituted for the unknown constant)"
     << "\nsymmetry_ratio: " << fmt(r.symmetry_ratio) << "\nthreshold: " << fmt(r.threshold)
     << "\ncheckpoints:\n";
  for (const auto& cp : r.checkpoints) {
    os << "  t=" << cp.t << " mean_error=" << fmt(cp.mean_error) << " se=" << fmt(cp.se_error)
       << " mean_phi2=" << fmt(cp.mean_phi2) << " min_phi2=" << fmt(cp.min_phi2)
       << " positive_fraction=" << fmt(cp.positive_fraction)
       << " above_threshold=" << fmt(cp.above_threshold_fraction) << "\n";
  }
  os << "decay_ratio: " << fmt(r.decay_ratio) << " (max " << fmt(r.max_ratio) << ")"
     << "\nlog_log_slope: " << fmt(r.log_log_slope) << "\nresult: " << (r.pass ? "PASS" : "FAIL")
     << "\n";
  return os.str();
}

std::string to_csv(const ConcentrationReport& r) {
  std::ostringstream os;
  os << "t,trajectories,mean_error,se_error,mean_phi2,min_phi2,positive_fraction,"
        "above_threshold_fraction\n";
  for (const auto& cp : r.checkpoints) {
    os << cp.t << ',' << cp.trajectories << ',' << csv_number(cp.mean_error) << ','
       << csv_number(cp.se_error) << ',' << csv_number(cp.mean_phi2) << ','
       << csv_number(cp.min_phi2) << ',' << csv_number(cp.positive_fraction) << ','
       << csv_number(cp.above_threshold_fraction) << '\n';
  }
  return os.str();
}

std::string format_report(const BernsteinReport& r) {
  std::ostringstream os;
  os << "diagnostic: bernstein-adapted\n"
     << "generator: " << to_string(r.config.generator) << "\nd: " << r.config.d
     << "\ntrials: " << r.config.trials << "\nseed: " << r.config.seed
     << "\nstandard_error: sqrt(p (1 - p) / trials) of the empirical tail\nrows:\n";
  for (const auto& row : r.rows) {
    os << "  tau=" << row.tau << " w=" << row.w << " threshold=" << fmt(row.threshold)
       << " empirical=" << fmt(row.empirical) << " se=" << fmt(row.standard_error)
       << " bound=" << fmt(row.bound) << " mean_statistic=" << fmt(row.mean_statistic) << " "
       << (row.pass ? "PASS" : "FAIL") << "\n";
  }
  os << "result: " << (r.pass ? "PASS" : "FAIL") << "\n";
  return os.str();
}

std::string to_csv(const BernsteinReport& r) {
  std::ostringstream os;
  os << "generator,tau,w,threshold,bound,exceedances,trials,empirical,standard_error,"
        "mean_statistic,pass\n";
  for (const auto& row : r.rows) {
    os << to_string(r.config.generator) << ',' << row.tau << ',' << csv_number(row.w) << ','
       << csv_number(row.threshold) << ',' << csv_number(row.bound) << ',' << row.exceedances << ','
       << row.trials << ',' << csv_number(row.empirical) << ',' << csv_number(row.standard_error)
       << ',' << csv_number(row.mean_statistic) << ',' << (row.pass ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string format_report(const BalancedCovarianceReport& r) {
  std::ostringstream os;
  os << "diagnostic: balanced-covariance\n"
     << "arms: " << r.arms << "\nd: " << r.d << "\nsamples: " << r.samples
     << "\nbatches: " << r.batch_estimates.size() << "\nestimate: " << fmt(r.estimate)
     << "\nstandard_error: " << fmt(r.standard_error) << "\nevents: " << r.events.size()
     << "\nskipped: " << r.skipped << "\n";
  for (const auto& note : r.notes) os << "note: " << note << "\n";
  return os.str();
}

std::string to_csv(const BalancedCovarianceReport& r) {
  std::ostringstream os;
  os << "ordering,rank,count,value\n";
  for (const auto& e : r.events) {
    for (std::size_t i = 0; i < e.ordering.size(); ++i) os << (i ? ">" : "") << e.ordering[i];
    os << ',' << e.rank << ',' << e.count << ',' << csv_number(e.value) << '\n';
  }
  return os.str();
}

}  // namespace sabandit
