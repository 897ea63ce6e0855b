#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ktd/experiments.hpp"
#include "ktd/report.hpp"

using namespace ktd;

namespace {

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

ExperimentConfig tiny() {
  ExperimentConfig cfg;
  cfg.nGrid = {16, 32, 64};
  cfg.seeds = 2;
  cfg.gridSize = 64;
  return cfg;
}

}  // namespace

TEST_CASE("slope fit recovers an exact power law") {
  const std::vector<std::size_t> grid = {64, 128, 256, 512, 1024, 2000};
  std::vector<std::vector<double>> errs(3);
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t n : grid) errs[s].push_back(2.5 * std::pow(double(n), -0.6));
  }
  const RateFit fit = fit_rate(grid, errs);
  CHECK(std::abs(fit.slope + 0.6) <= 1e-9);
  CHECK(fit.converging());
}

TEST_CASE("slope fit uses only the upper half of the grid") {
  const std::vector<std::size_t> grid = {10, 20, 40, 80};
  std::vector<std::vector<double>> errs = {{1e6, 1e-9, 1.0 / 40, 1.0 / 80}};
  CHECK(fit_rate(grid, errs).slope == doctest::Approx(-1.0));
}

TEST_CASE("line fit") {
  const auto f = fit_line({0, 1, 2}, {1, 3, 5});
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
}

TEST_CASE("predicted rates") {
  CHECK(predicted_rate(ScheduleSetting::Thm1b, 0.5) == doctest::Approx(-0.6));
  CHECK(std::round(predicted_rate(ScheduleSetting::Thm1b, 1.0) * 100) / 100 == doctest::Approx(-0.67));
  CHECK(std::round(predicted_rate(ScheduleSetting::Thm1b, -0.25) * 100) / 100 == doctest::Approx(-0.43));
}

TEST_CASE("config round trip and validation") {
  ExperimentConfig cfg;
  cfg.reward = Reward::Cos;
  cfg.kernelOrder = 2;
  cfg.setting = ScheduleSetting::Thm2i;
  cfg.oracleRadius = 3.5;
  cfg.approx.lowRank = true;
  const auto back = ExperimentConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());

  auto bad = cfg;
  bad.seeds = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.nGrid = {8, 64};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"reward", "sin"}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"epsilon", "high"}}), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);

  const auto f = ExperimentConfig{}.fast();
  CHECK(f.seeds == 5);
  for (auto n : f.nGrid) CHECK(n <= 512);
}

TEST_CASE("csv schemas and determinism") {
  const auto cfg = tiny();
  const RateFit a = run_experiment(cfg);
  const RateFit b = run_experiment(cfg);
  CHECK(run_csv(a) == run_csv(b));
  CHECK(aggregate_csv(a) == aggregate_csv(b));
  const auto runs = run_csv(a);
  CHECK(runs.rfind("n,seed,sq_l2_error\n", 0) == 0);
  CHECK(count(runs, "\n") == 1 + cfg.nGrid.size() * static_cast<std::size_t>(cfg.seeds));
  const auto agg = aggregate_csv(a);
  CHECK(agg.rfind("n,mean_sq_l2_error,std_sq_l2_error\n", 0) == 0);
  CHECK(count(agg, "\n") == 1 + cfg.nGrid.size());
  CHECK(a.failures == 0);
}

TEST_CASE("runs are independent of the worker count") {
  const auto cfg = tiny();
  setenv("KTD_WORKERS", "1", 1);
  const auto one = run_csv(run_experiment(cfg));
  setenv("KTD_WORKERS", "3", 1);
  const auto three = run_csv(run_experiment(cfg));
  unsetenv("KTD_WORKERS");
  CHECK(one == three);
}

TEST_CASE("sweep produces one labelled series per value") {
  auto cfg = tiny();
  const auto series = fig_sweep(SweepParam::Epsilon, {0.2, 0.5, 0.8}, cfg);
  REQUIRE(series.size() == 3);
  const auto csv = series_csv(series);
  CHECK(count(csv, "\n") == 1 + 3 * cfg.nGrid.size());
  const auto svg = series_svg("t", "n", series);
  CHECK(count(svg, "<polyline") == 3);
  CHECK_THROWS_AS(fig_sweep(SweepParam::Gamma, {1.0}, cfg), ConfigError);
  CHECK_THROWS_AS(fig_sweep(SweepParam::Epsilon, {0.0}, cfg), ConfigError);
}

TEST_CASE("skip comparison reports tau") {
  auto cfg = tiny();
  cfg.nGrid = {64, 128};
  const auto cmp = fig_skip_td(cfg, {0.8});
  REQUIRE(cmp.size() == 1);
  const auto& skip = cmp[0].skip.fit;
  for (std::size_t i = 0; i < skip.nGrid.size(); ++i) {
    const auto sched = TdSchedule::make(ScheduleSetting::Cor1i, skip.nGrid[i], cfg.theta, cfg.lambda0, 1.0);
    CHECK(skip.tau[i] == skip_tau(sched.rho(1), 1.0 - 0.8));
  }
}

TEST_CASE("partial results survive failed runs") {
  auto cfg = tiny();
  cfg.setting = ScheduleSetting::ConstantUnregularized;
  cfg.gamma = 0.99;
  cfg.nGrid = {9, 16};
  const RateFit fit = run_experiment(cfg);
  CHECK(fit.records.size() == 4);
  for (const auto& r : fit.records) {
    if (!r.failure.empty()) CHECK(std::isnan(r.error));
  }
}

TEST_CASE("format_double round trips") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("figure files are written") {
  const auto dir = std::filesystem::temp_directory_path() / "ktd_fig_test";
  std::filesystem::remove_all(dir);
  auto cfg = tiny();
  const auto series = fig_sweep(SweepParam::Gamma, {0.0, 0.9}, cfg);
  write_figure(series, "gamma", "n", dir, "fig");
  CHECK(std::filesystem::exists(dir / "fig.csv"));
  CHECK(std::filesystem::exists(dir / "fig.svg"));
  CHECK(std::filesystem::exists(dir / "fig_summary.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("discount sweep orders the curves and every curve decreases") {
  const ExperimentConfig cfg;
  const auto series = fig_sweep(SweepParam::Gamma, {0.0, 0.9}, cfg);
  const RateFit& easy = series[0].fit;
  const RateFit& hard = series[1].fit;
  for (std::size_t i = 0; i < easy.nGrid.size(); ++i) {
    if (easy.nGrid[i] >= 100) CHECK(easy.meanError[i] < hard.meanError[i]);
  }
  for (const auto& s : series) {
    const std::size_t half = s.fit.nGrid.size() / 2;
    for (std::size_t i = half + 1; i < s.fit.nGrid.size(); ++i) CHECK(s.fit.meanError[i] < s.fit.meanError[i - 1]);
  }
}
