#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "oracles.hpp"
#include "sabandit/harness.hpp"

using namespace sabandit;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig config;
  config.d = 8;
  config.arms = 2;
  config.s0 = 2;
  config.horizon = 60;
  config.runs = 3;
  config.policies = {"sa_lasso", "lasso_bandit", "dr_lasso", "oracle", "random"};
  config.seed = 17;
  return config;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sabandit_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST(Harness, OracleHasZeroRegretAndTracesAreMonotone) {
  const auto result = run_experiment(small_config());
  ASSERT_EQ(result.traces.size(), 15u);
  for (const auto& trace : result.traces) {
    ASSERT_EQ(trace.cum.size(), 60u);
    for (std::size_t t = 0; t < trace.cum.size(); ++t) {
      EXPECT_GE(trace.inst[t], 0.0);
      if (t > 0) EXPECT_GE(trace.cum[t], trace.cum[t - 1]);
    }
    if (trace.policy == "oracle") EXPECT_EQ(trace.cum.back(), 0.0);
  }
}

TEST(Harness, TracesSortedByRunThenPolicy) {
  const auto config = small_config();
  const auto result = run_experiment(config);
  for (std::size_t k = 0; k < result.traces.size(); ++k) {
    EXPECT_EQ(result.traces[k].run_id, static_cast<int>(k / config.policies.size()));
    EXPECT_EQ(result.traces[k].policy, config.policies[k % config.policies.size()]);
  }
}

TEST(Harness, SameSeedSameBytes) {
  auto config = small_config();
  const auto a = scratch("det_a"), b = scratch("det_b"), c = scratch("det_c");
  write_results(run_experiment(config), config, a);
  config.jobs = 3;
  write_results(run_experiment(config), config, b);
  config.seed = 18;
  write_results(run_experiment(config), config, c);
  for (const char* file : {"regret.csv", "summary.csv"}) {
    EXPECT_EQ(slurp(a / file), slurp(b / file)) << file;
    EXPECT_NE(slurp(a / file), slurp(c / file)) << file;
  }
  EXPECT_TRUE(fs::exists(a / "manifest.json"));
}

TEST(Harness, CsvCardinalityAndHeaders) {
  const auto config = small_config();
  const auto dir = scratch("rows");
  write_results(run_experiment(config), config, dir);
  const auto regret = lines(slurp(dir / "regret.csv"));
  const auto summary = lines(slurp(dir / "summary.csv"));
  EXPECT_EQ(regret.size(), static_cast<std::size_t>(config.runs) * config.policies.size() *
                                   config.horizon + 1);
  EXPECT_EQ(regret.front(), "run_id,policy,t,inst_regret,cum_regret");
  EXPECT_EQ(summary.size(), config.policies.size() * config.horizon + 1);
  EXPECT_EQ(summary.front(), "policy,t,mean_cum_regret,std_cum_regret");
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest.at("config").get<ExperimentConfig>(), config);
  EXPECT_TRUE(manifest.contains("version"));
  EXPECT_TRUE(manifest.contains("wall_seconds"));
}

TEST(Harness, EmptyResultWritesHeadersOnly) {
  const auto dir = scratch("empty");
  write_results(ExperimentResult{}, small_config(), dir);
  EXPECT_EQ(lines(slurp(dir / "regret.csv")).size(), 1u);
  EXPECT_EQ(lines(slurp(dir / "summary.csv")).size(), 1u);
}

TEST(Harness, SummaryMatchesRecomputation) {
  const auto config = small_config();
  const auto result = run_experiment(config);
  std::map<std::string, std::vector<const RegretTrace*>> by_policy;
  for (const auto& trace : result.traces) by_policy[trace.policy].push_back(&trace);
  ASSERT_EQ(result.summary.size(), config.policies.size());
  for (const auto& summary : result.summary) {
    const auto& traces = by_policy.at(summary.policy);
    for (long t = 0; t < config.horizon; ++t) {
      double mean = 0.0;
      for (const auto* trace : traces) mean += trace->cum[t];
      mean /= traces.size();
      double var = 0.0;
      for (const auto* trace : traces) var += (trace->cum[t] - mean) * (trace->cum[t] - mean);
      var /= traces.size() - 1;
      EXPECT_NEAR(summary.mean[t], mean, 1e-12 * (1 + mean));
      EXPECT_NEAR(summary.stddev[t], std::sqrt(var), 1e-9 * (1 + mean));
    }
  }
}

TEST(Harness, CommonRandomNumbers) {
  auto config = small_config();
  config.policies = {"sa_lasso", "sa_lasso", "oracle", "oracle"};
  const auto result = run_experiment(config);
  for (std::size_t k = 0; k < result.traces.size(); k += 2) {
    EXPECT_EQ(result.traces[k].actions, result.traces[k + 1].actions);
    EXPECT_EQ(result.traces[k].cum, result.traces[k + 1].cum);
  }
}

TEST(Harness, ZeroSparsityHasZeroRegret) {
  auto config = small_config();
  config.s0 = 0;
  for (const auto& trace : run_experiment(config).traces) EXPECT_EQ(trace.cum.back(), 0.0);
}

TEST(Harness, RandomPolicyGrowsLinearly) {
  ExperimentConfig config;
  config.d = 10;
  config.s0 = 5;
  config.horizon = 2000;
  config.runs = 20;
  config.policies = {"random"};
  const auto result = run_experiment(config);
  const auto& mean = result.summary.at(0).mean;
  const long T = config.horizon;
  const double first = (mean[3 * T / 4 - 1] - mean[T / 2 - 1]) / (T / 4);
  const double second = (mean[T - 1] - mean[3 * T / 4 - 1]) / (T / 4);
  EXPECT_NEAR(second / first, 1.0, 0.1);
}

TEST(Harness, ConfigRoundTrip) {
  auto config = small_config();
  config.clip_xmax = 1.5;
  config.baseline_s0 = 4;
  config.lambda0 = 0.5;
  config.lb_q = 3;
  config.dr_zt = 7;
  config.link = LinkKind::kLogistic;
  nlohmann::json j = config;
  EXPECT_EQ(j.get<ExperimentConfig>(), config);

  const auto dir = scratch("config");
  fs::create_directories(dir);
  write_text_file(dir / "c.json", j.dump(2));
  EXPECT_EQ(load_config(dir / "c.json"), config);
}

TEST(Harness, ConfigErrors) {
  nlohmann::json j = small_config();
  j["bogus"] = 1;
  EXPECT_THROW(j.get<ExperimentConfig>(), std::invalid_argument);

  const auto dir = scratch("config_errors");
  fs::create_directories(dir);
  write_text_file(dir / "broken.json", "{ \"d\": ");
  EXPECT_THROW(load_config(dir / "broken.json"), std::invalid_argument);
  EXPECT_THROW(load_config(dir / "missing.json"), IoError);

  auto bad = small_config();
  bad.horizon = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = small_config();
  bad.policies = {};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = small_config();
  bad.policies = {"ucb"};
  EXPECT_THROW(run_experiment(bad), std::invalid_argument);
  bad = small_config();
  bad.s0 = 20;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Harness, DefaultLambda0) {
  ExperimentConfig config;
  EXPECT_DOUBLE_EQ(config.effective_lambda0(), 2.0);
  config.sigma = 0.5;
  config.clip_xmax = 3.0;
  EXPECT_DOUBLE_EQ(config.effective_lambda0(), 3.0);
  config.lambda0 = 0.7;
  EXPECT_DOUBLE_EQ(config.effective_lambda0(), 0.7);
}

TEST(Harness, UnwritableOutputNamesPath) {
  const auto dir = scratch("blocked");
  fs::create_directories(dir);
  write_text_file(dir / "file", "x");
  try {
    write_results(ExperimentResult{}, small_config(), dir / "file" / "sub");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("file"), std::string::npos);
  }
}
