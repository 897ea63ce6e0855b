#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "ktd/experiments.hpp"
#include "ktd/report.hpp"

namespace fs = std::filesystem;
using namespace ktd;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailure = 1;
constexpr int kConfigError = 2;

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("not a number in --values: " + item);
    }
  }
  if (out.empty()) throw ConfigError("--values is empty");
  return out;
}

ExperimentConfig base_config(const std::string& configPath, bool fast) {
  ExperimentConfig cfg = configPath.empty() ? ExperimentConfig{} : load_config(configPath);
  if (fast) cfg = cfg.fast();
  cfg.validate();
  return cfg;
}

void print_fit(std::ostream& os, const std::string& label, const RateFit& fit) {
  os << label << ": slope " << format_double(fit.slope) << ", final mean error "
     << format_double(fit.meanError.back()) << ", failures " << fit.failures << '\n';
}

int cmd_table1(const fs::path& out, bool fast, const std::string& configPath) {
  ExperimentConfig base = base_config(configPath, false);
  const Table1Result res = table1(base, fast);
  write_table1(res, out);
  bool ok = true;
  for (const auto& c : res.cells) {
    std::cout << "s=" << c.kernelOrder << " " << reward_name(c.reward) << "  theta=" << format_double(c.maxTheta)
              << "  predicted=" << format_double(c.predicted) << "  observed=" << format_double(c.fit.slope)
              << "  reference=" << format_double(c.referenceRate) << "  " << (c.withinTolerance ? "PASS" : "FAIL")
              << '\n';
    ok = ok && c.withinTolerance;
  }
  std::cout << "tolerance " << format_double(res.tolerance) << ", written to " << out.string() << '\n';
  return ok ? kOk : kCheckFailure;
}

int cmd_run(const std::string& configPath, std::optional<std::uint64_t> seed, const std::string& outOverride) {
  ExperimentConfig cfg = load_config(configPath);
  if (seed) cfg.baseSeed = *seed;
  if (!outOverride.empty()) cfg.outDir = outOverride;
  cfg.validate();
  const RateFit fit = run_experiment(cfg);
  const fs::path out(cfg.outDir);
  write_text_file(out / "runs.csv", run_csv(fit));
  write_text_file(out / "aggregate.csv", aggregate_csv(fit));
  const double predicted = predicted_rate(cfg.setting, cfg.theta);
  nlohmann::json summary = {{"config", cfg.to_json()},
                            {"fitted_slope", fit.slope},
                            {"predicted_slope", predicted},
                            {"failures", fit.failures},
                            {"converging", fit.converging()}};
  write_text_file(out / "summary.json", summary.dump(2) + "\n");
  print_fit(std::cout, setting_name(cfg.setting), fit);
  std::cout << "predicted slope " << format_double(predicted) << '\n';
  return fit.failures == 0 ? kOk : kCheckFailure;
}

int cmd_sweep(const std::string& param, const std::string& values, const fs::path& out, bool fast,
              const std::string& configPath) {
  SweepParam p;
  if (param == "epsilon") {
    p = SweepParam::Epsilon;
  } else if (param == "gamma") {
    p = SweepParam::Gamma;
  } else {
    throw ConfigError("--param must be epsilon or gamma");
  }
  const auto series = fig_sweep(p, parse_values(values), base_config(configPath, fast));
  write_figure(series, "sweep over " + param, param, out, "fig_sweep_" + param);
  for (const auto& s : series) print_fit(std::cout, param + "=" + format_double(s.value), s.fit);
  return kOk;
}

int cmd_theta(const std::string& values, const fs::path& out, bool fast, const std::string& configPath) {
  const auto rob = fig_theta_robustness(base_config(configPath, fast), parse_values(values));
  write_figure(rob.series, "theta robustness (s=2, abs)", "theta", out, "fig_theta");
  for (const auto& s : rob.series) print_fit(std::cout, "theta=" + format_double(s.value), s.fit);
  return kOk;
}

int cmd_skip(const std::string& values, const fs::path& out, bool fast, const std::string& configPath) {
  const auto cmp = fig_skip_td(base_config(configPath, fast), parse_values(values));
  std::vector<NamedFit> all;
  for (const auto& c : cmp) {
    all.push_back(c.plain);
    all.push_back(c.skip);
    print_fit(std::cout, c.plain.label, c.plain.fit);
    print_fit(std::cout, c.skip.label + " (tau " + std::to_string(c.skip.fit.tau.back()) + ")", c.skip.fit);
  }
  write_figure(all, "TD vs skip TD", "raw samples", out, "fig_skip");
  return kOk;
}

int cmd_oracle(const fs::path& out, std::uint64_t seed) {
  OracleOptions opts;
  opts.seed = seed;
  const auto checks = oracle_suite(opts);
  const std::string text = oracle_report_text(checks);
  std::cout << text;
  write_text_file(out / "oracle_report.txt", text);
  write_text_file(out / "oracle_report.json", oracle_report_json(checks).dump(2) + "\n");
  for (const auto& c : checks) {
    if (!c.passed) return kCheckFailure;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel TD learning experiments"};
  app.require_subcommand(1);

  std::string out = "out";
  std::string config;
  bool fast = false;
  std::string param, values;
  std::uint64_t seed = 0;
  std::uint64_t oracleSeed = 7;

  auto* t1 = app.add_subcommand("table1", "Reproduce the rate table");
  t1->add_option("--out", out, "Output directory")->required();
  t1->add_flag("--fast", fast, "n <= 512 and 5 seeds");
  t1->add_option("--config", config, "Base config (JSON)");

  auto* run = app.add_subcommand("run", "Run one configured experiment");
  run->add_option("--config", config, "Config file (JSON)")->required();
  auto* seedOpt = run->add_option("--seed", seed, "Override base seed");
  std::string runOut;
  run->add_option("--out", runOut, "Override output directory");

  auto* sweep = app.add_subcommand("fig-sweep", "Error curves across epsilon or gamma");
  sweep->add_option("--param", param, "epsilon|gamma")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();
  sweep->add_option("--out", out, "Output directory");
  sweep->add_flag("--fast", fast, "n <= 512 and 5 seeds");
  sweep->add_option("--config", config, "Base config (JSON)");

  std::string thetaValues = "-1,-0.5,0,1";
  auto* theta = app.add_subcommand("fig-theta", "Robustness to the assumed theta");
  theta->add_option("--values", thetaValues, "Comma-separated theta values");
  theta->add_option("--out", out, "Output directory");
  theta->add_flag("--fast", fast, "n <= 512 and 5 seeds");
  theta->add_option("--config", config, "Base config (JSON)");

  std::string skipValues = "0.2,0.8";
  auto* skip = app.add_subcommand("fig-skip", "Plain TD vs skip TD on Markov samples");
  skip->add_option("--values", skipValues, "Comma-separated epsilon values");
  skip->add_option("--out", out, "Output directory");
  skip->add_flag("--fast", fast, "n <= 512 and 5 seeds");
  skip->add_option("--config", config, "Base config (JSON)");

  auto* oracle = app.add_subcommand("oracle", "Run the verification suite");
  oracle->add_option("--out", out, "Output directory")->required();
  oracle->add_option("--seed", oracleSeed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*t1) return cmd_table1(out, fast, config);
    if (*run) return cmd_run(config, *seedOpt ? std::optional<std::uint64_t>(seed) : std::nullopt, runOut);
    if (*sweep) return cmd_sweep(param, values, out, fast, config);
    if (*theta) return cmd_theta(thetaValues, out, fast, config);
    if (*skip) return cmd_skip(skipValues, out, fast, config);
    if (*oracle) return cmd_oracle(out, oracleSeed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCheckFailure;
  }
  return kOk;
}
