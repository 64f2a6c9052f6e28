#include "sabandit/harness.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#ifndef SABANDIT_VERSION
#define SABANDIT_VERSION "0.0.0"
#endif
#ifndef SABANDIT_GIT_DESCRIBE
#define SABANDIT_GIT_DESCRIBE "unknown"
#endif

namespace sabandit {

namespace {

// Stream identifiers for make_rng; each (seed, stream, run) is independent.
enum Stream : std::uint64_t {
  kBetaStream = 1,
  kDistributionStream = 2,
  kContextStream = 3,
  kNoiseStream = 4,
  kPolicyStream = 5,
};

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument("config: " + message);
}

const std::vector<std::string>& known_policies() {
  static const std::vector<std::string> names{"sa_lasso", "lasso_bandit", "dr_lasso", "oracle",
                                              "random"};
  return names;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
void put_optional(nlohmann::json& j, const char* key, const std::optional<T>& value) {
  if (value) j[key] = *value;
}

template <class T>
void get_optional(const nlohmann::json& j, const char* key, std::optional<T>& value) {
  value.reset();
  if (j.contains(key) && !j.at(key).is_null()) value = j.at(key).get<T>();
}

template <class T>
void get_if_present(const nlohmann::json& j, const char* key, T& value) {
  if (j.contains(key)) value = j.at(key).get<T>();
}


std::string format_double(double v) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << v;
  return os.str();
}

struct RunOutput {
  std::vector<RegretTrace> traces;
  long solver_warnings = 0;
};

RunOutput simulate_run(const ExperimentConfig& config, const ContextSampler& sampler,
                       const std::optional<SparseParameter>& shared, int run_id) {
  const double x_max = config.clip_xmax.value_or(1.0);
  SparseParameter param;
  if (shared) {
    param = *shared;
  } else {
    Rng beta_rng = make_rng(config.seed, {kBetaStream, static_cast<std::uint64_t>(run_id)});
    param = make_parameter(config.d, config.s0, beta_rng);
  }
  const ModelSpec model = ModelSpec::from_parameter(std::move(param), config.link, config.sigma, x_max);

  std::vector<std::unique_ptr<Policy>> policies;
  for (std::size_t i = 0; i < config.policies.size(); ++i) {
    policies.push_back(make_policy(config.policies[i], config, model, run_id, i));
  }

  RunOutput out;
  out.traces.resize(policies.size());
  for (std::size_t i = 0; i < policies.size(); ++i) {
    auto& tr = out.traces[i];
    tr.run_id = run_id;
    tr.policy = config.policies[i];
    tr.inst.reserve(static_cast<std::size_t>(config.horizon));
    tr.cum.reserve(static_cast<std::size_t>(config.horizon));
    tr.actions.reserve(static_cast<std::size_t>(config.horizon));
  }

  Rng context_rng = make_rng(config.seed, {kContextStream, static_cast<std::uint64_t>(run_id)});
  Rng noise_rng = make_rng(config.seed, {kNoiseStream, static_cast<std::uint64_t>(run_id)});
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd means(config.arms);
  Eigen::VectorXd noise(config.arms);

  for (long t = 1; t <= config.horizon; ++t) {
    const ContextSet ctx = sampler.sample(context_rng, t);
    for (int k = 0; k < config.arms; ++k) {
      means[k] = expected_reward(model, ctx.features.row(k).transpose());
      noise[k] = normal(noise_rng);
    }
    const double best = means.maxCoeff();
    for (std::size_t i = 0; i < policies.size(); ++i) {
      const std::size_t arm = policies[i]->choose(ctx);
      const auto a = static_cast<Eigen::Index>(arm);
      const double regret = best - means[a];
      auto& tr = out.traces[i];
      tr.inst.push_back(regret);
      tr.cum.push_back((tr.cum.empty() ? 0.0 : tr.cum.back()) + regret);
      tr.actions.push_back(arm);
      policies[i]->update(ctx, arm, means[a] + config.sigma * noise[a]);
    }
  }
  for (const auto& p : policies) out.solver_warnings += p->solver_warnings();
  return out;
}

}  // namespace

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void ExperimentConfig::validate() const {
  require(d >= 2, "d must be >= 2");
  require(arms >= 1, "arms must be >= 1");
  require(s0 >= 0 && s0 <= d, "s0 must lie in [0, d]");
  require(horizon >= 1, "horizon must be >= 1");
  require(runs >= 1, "runs must be >= 1");
  require(jobs >= 1, "jobs must be >= 1");
  require(sigma >= 0.0, "sigma must be >= 0");
  require(dist == "gaussian" || dist == "uniform" || dist == "elliptical",
          "dist must be gaussian, uniform or elliptical");
  if (dist == "gaussian") require(rho2 >= 0.0 && rho2 < 1.0, "rho2 must lie in [0, 1)");
  if (dist == "elliptical") require(elliptical_rank >= 0 && elliptical_rank <= d,
                                    "elliptical-rank must lie in [0, d]");
  require(!policies.empty(), "at least one policy is required");
  for (const auto& p : policies) {
    require(std::find(known_policies().begin(), known_policies().end(), p) != known_policies().end(),
            "unknown policy '" + p + "'");
  }
  if (clip_xmax) require(*clip_xmax > 0.0, "clip-xmax must be positive");
  if (baseline_s0) require(*baseline_s0 >= 0, "baseline-s0 must be >= 0");
  if (lambda0) require(*lambda0 > 0.0, "lambda0 must be positive");
  require(effective_lambda0() > 0.0, "lambda0 = 2 sigma x_max is zero; pass --lambda0");
  if (lb_q) require(*lb_q >= 1, "lb-q must be >= 1");
  if (lb_h) require(*lb_h > 0.0, "lb-h must be positive");
  if (lb_lambda1) require(*lb_lambda1 > 0.0, "lb-lambda1 must be positive");
  if (lb_lambda2) require(*lb_lambda2 > 0.0, "lb-lambda2 must be positive");
  if (dr_lambda1) require(*dr_lambda1 > 0.0, "dr-lambda1 must be positive");
  if (dr_lambda2) require(*dr_lambda2 > 0.0, "dr-lambda2 must be positive");
  if (dr_zt) require(*dr_zt >= 0, "dr-zt must be >= 0");
}

double ExperimentConfig::effective_lambda0() const {
  return lambda0 ? *lambda0 : 2.0 * sigma * clip_xmax.value_or(1.0);
}

int ExperimentConfig::effective_baseline_s0() const { return baseline_s0.value_or(s0); }

DistributionSpec ExperimentConfig::distribution(Rng& rng) const {
  DistributionSpec spec;
  spec.d = d;
  spec.arms = arms;
  spec.clip_to_xmax = clip_xmax;
  if (dist == "gaussian") {
    spec.kind = GaussianEquicorrelated{rho2};
  } else if (dist == "uniform") {
    spec.kind = UniformHypercube{};
  } else {
    spec.kind = make_elliptical(d, elliptical_rank, rng);
  }
  return spec;
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{{"d", c.d},
                     {"arms", c.arms},
                     {"s0", c.s0},
                     {"horizon", c.horizon},
                     {"runs", c.runs},
                     {"dist", c.dist},
                     {"rho2", c.rho2},
                     {"elliptical-rank", c.elliptical_rank},
                     {"link", to_string(c.link)},
                     {"sigma", c.sigma},
                     {"policies", c.policies},
                     {"seed", c.seed},
                     {"out", c.out},
                     {"jobs", c.jobs},
                     {"shared-beta", c.shared_beta},
                     {"geometric-refit", c.geometric_refit}};
  put_optional(j, "clip-xmax", c.clip_xmax);
  put_optional(j, "baseline-s0", c.baseline_s0);
  put_optional(j, "lambda0", c.lambda0);
  put_optional(j, "lb-q", c.lb_q);
  put_optional(j, "lb-h", c.lb_h);
  put_optional(j, "lb-lambda1", c.lb_lambda1);
  put_optional(j, "lb-lambda2", c.lb_lambda2);
  put_optional(j, "dr-lambda1", c.dr_lambda1);
  put_optional(j, "dr-lambda2", c.dr_lambda2);
  put_optional(j, "dr-zt", c.dr_zt);
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  static const std::vector<std::string> keys{
      "d",      "arms",       "s0",          "horizon",     "runs",      "dist",
      "rho2",   "elliptical-rank", "link",   "sigma",       "policies",  "seed",
      "out",    "jobs",       "shared-beta", "geometric-refit", "clip-xmax", "baseline-s0",
      "lambda0", "lb-q",      "lb-h",        "lb-lambda1",  "lb-lambda2", "dr-lambda1",
      "dr-lambda2", "dr-zt"};
  for (const auto& item : j.items()) {
    if (std::find(keys.begin(), keys.end(), item.key()) == keys.end()) {
      throw std::invalid_argument("config: unknown key '" + item.key() + "'");
    }
  }
  get_if_present(j, "d", c.d);
  get_if_present(j, "arms", c.arms);
  get_if_present(j, "s0", c.s0);
  get_if_present(j, "horizon", c.horizon);
  get_if_present(j, "runs", c.runs);
  get_if_present(j, "dist", c.dist);
  get_if_present(j, "rho2", c.rho2);
  get_if_present(j, "elliptical-rank", c.elliptical_rank);
  if (j.contains("link")) c.link = parse_link(j.at("link").get<std::string>());
  get_if_present(j, "sigma", c.sigma);
  if (j.contains("policies")) {
    const auto& p = j.at("policies");
    c.policies = p.is_string() ? split_list(p.get<std::string>()) : p.get<std::vector<std::string>>();
  }
  get_if_present(j, "seed", c.seed);
  get_if_present(j, "out", c.out);
  get_if_present(j, "jobs", c.jobs);
  get_if_present(j, "shared-beta", c.shared_beta);
  get_if_present(j, "geometric-refit", c.geometric_refit);
  get_optional(j, "clip-xmax", c.clip_xmax);
  get_optional(j, "baseline-s0", c.baseline_s0);
  get_optional(j, "lambda0", c.lambda0);
  get_optional(j, "lb-q", c.lb_q);
  get_optional(j, "lb-h", c.lb_h);
  get_optional(j, "lb-lambda1", c.lb_lambda1);
  get_optional(j, "lb-lambda2", c.lb_lambda2);
  get_optional(j, "dr-lambda1", c.dr_lambda1);
  get_optional(j, "dr-lambda2", c.dr_lambda2);
  get_optional(j, "dr-zt", c.dr_zt);
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config '" + path.string() + "': " + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  const nlohmann::json j = read_json_file(path);
  try {
    return j.get<ExperimentConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config '" + path.string() + "': " + e.what());
  }
}

std::unique_ptr<Policy> make_policy(const std::string& name, const ExperimentConfig& config,
                                    const ModelSpec& model, int run_id, std::size_t policy_index) {
  const int s0 = config.effective_baseline_s0();
  Rng rng = make_rng(config.seed, {kPolicyStream, static_cast<std::uint64_t>(run_id),
                                   static_cast<std::uint64_t>(policy_index)});
  if (name == "sa_lasso") {
    SaLassoOptions opts;
    opts.lambda0 = config.effective_lambda0();
    opts.link = config.link;
    opts.geometric_refit = config.geometric_refit;
    return std::make_unique<SaLassoPolicy>(config.d, opts);
  }
  if (name == "lasso_bandit") {
    auto tuning = LassoBanditTuning::for_sparsity(s0);
    if (config.lb_q) tuning.q = *config.lb_q;
    if (config.lb_h) tuning.h = *config.lb_h;
    if (config.lb_lambda1) tuning.lambda1 = *config.lb_lambda1;
    if (config.lb_lambda2) tuning.lambda2 = *config.lb_lambda2;
    return std::make_unique<LassoBanditPolicy>(config.d, config.arms, tuning);
  }
  if (name == "dr_lasso") {
    auto tuning = DrLassoTuning::for_sparsity(s0);
    if (config.dr_lambda1) tuning.lambda1 = *config.dr_lambda1;
    if (config.dr_lambda2) tuning.lambda2 = *config.dr_lambda2;
    if (config.dr_zt) tuning.z_T = *config.dr_zt;
    return std::make_unique<DrLassoPolicy>(config.d, config.arms, tuning, std::move(rng));
  }
  if (name == "oracle") return std::make_unique<OraclePolicy>(model);
  if (name == "random") return std::make_unique<RandomPolicy>(config.d, std::move(rng));
  throw std::invalid_argument("config: unknown policy '" + name + "'");
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();

  Rng dist_rng = make_rng(config.seed, {kDistributionStream});
  const ContextSampler sampler(config.distribution(dist_rng));

  std::optional<SparseParameter> shared;
  if (config.shared_beta) {
    Rng beta_rng = make_rng(config.seed, {kBetaStream});
    shared = make_parameter(config.d, config.s0, beta_rng);
  }

  // Surface policy configuration errors before any simulation work.
  {
    Rng probe = make_rng(config.seed, {kBetaStream});
    const ModelSpec model = ModelSpec::from_parameter(make_parameter(config.d, config.s0, probe),
                                                      config.link, config.sigma,
                                                      config.clip_xmax.value_or(1.0));
    for (std::size_t i = 0; i < config.policies.size(); ++i) {
      (void)make_policy(config.policies[i], config, model, 0, i);
    }
  }

  std::vector<RunOutput> outputs(static_cast<std::size_t>(config.runs));
  detail::parallel_for(config.runs, config.jobs, [&](long run) {
    outputs[static_cast<std::size_t>(run)] =
        simulate_run(config, sampler, shared, static_cast<int>(run));
  });

  ExperimentResult result;
  for (auto& out : outputs) {
    result.solver_warnings += out.solver_warnings;
    for (auto& tr : out.traces) result.traces.push_back(std::move(tr));
  }
  result.summary = summarize(result.traces, config.policies);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

std::vector<PolicySummary> summarize(const std::vector<RegretTrace>& traces,
                                     const std::vector<std::string>& policy_order) {
  std::vector<PolicySummary> out;
  for (const auto& name : policy_order) {
    std::vector<const RegretTrace*> mine;
    for (const auto& tr : traces) {
      if (tr.policy == name) mine.push_back(&tr);
    }
    PolicySummary s;
    s.policy = name;
    if (mine.empty()) {
      out.push_back(std::move(s));
      continue;
    }
    const std::size_t T = mine.front()->cum.size();
    s.mean.assign(T, 0.0);
    s.stddev.assign(T, 0.0);
    const double n = static_cast<double>(mine.size());
    for (std::size_t t = 0; t < T; ++t) {
      double sum = 0.0;
      for (const auto* tr : mine) sum += tr->cum.at(t);
      const double mean = sum / n;
      double ss = 0.0;
      for (const auto* tr : mine) ss += (tr->cum[t] - mean) * (tr->cum[t] - mean);
      s.mean[t] = mean;
      s.stddev[t] = mine.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_results(const ExperimentResult& result, const ExperimentConfig& config,
                   const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

  std::ostringstream regret;
  regret << "run_id,policy,t,inst_regret,cum_regret\n";
  for (const auto& tr : result.traces) {
    for (std::size_t t = 0; t < tr.cum.size(); ++t) {
      regret << tr.run_id << ',' << tr.policy << ',' << (t + 1) << ',' << format_double(tr.inst[t])
             << ',' << format_double(tr.cum[t]) << '\n';
    }
  }
  write_text_file(dir / "regret.csv", regret.str());

  std::ostringstream summary;
  summary << "policy,t,mean_cum_regret,std_cum_regret\n";
  for (const auto& s : result.summary) {
    for (std::size_t t = 0; t < s.mean.size(); ++t) {
      summary << s.policy << ',' << (t + 1) << ',' << format_double(s.mean[t]) << ','
              << format_double(s.stddev[t]) << '\n';
    }
  }
  write_text_file(dir / "summary.csv", summary.str());

  nlohmann::json manifest{{"config", config},
                          {"version", version_string()},
                          {"wall_seconds", result.wall_seconds},
                          {"solver_warnings", result.solver_warnings},
                          {"files", {"regret.csv", "summary.csv"}}};
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::string version_string() {
  return std::string(SABANDIT_VERSION) + "+" + SABANDIT_GIT_DESCRIBE;
}

}  // namespace sabandit
