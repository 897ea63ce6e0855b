#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ktd/mrp.hpp"
#include "ktd/td_learner.hpp"

namespace ktd {

/// Invalid experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  Reward reward = Reward::Abs;
  int kernelOrder = 1;
  double epsilon = 0.8;
  double gamma = 0.5;
  ScheduleSetting setting = ScheduleSetting::Thm1b;
  double lambda0 = 1.0;
  double theta = 0.5;
  std::optional<double> oracleRadius;
  std::vector<std::size_t> nGrid = {64, 128, 256, 512, 1024, 2000};
  int seeds = 10;
  std::uint64_t baseSeed = 1;
  int gridSize = 512;
  KernelApprox approx;
  std::string outDir = "out";

  /// Throws ConfigError.
  void validate() const;

  /// The --fast reduction: n <= 512 and 5 seeds.
  [[nodiscard]] ExperimentConfig fast() const;

  [[nodiscard]] MrpModel model() const { return {epsilon, gamma, reward}; }
  [[nodiscard]] KernelSpec kernel() const { return KernelSpec::sobolev(kernelOrder); }

  static ExperimentConfig from_json(const nlohmann::json& j);
  [[nodiscard]] nlohmann::json to_json() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

/// Number of worker threads: $KTD_WORKERS if set, otherwise the hardware count.
unsigned worker_count();

/// Runs fn(0..count-1) on the worker pool. Exceptions are rethrown after all
/// workers have finished.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares y = slope x + intercept.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct RunRecord {
  std::size_t n = 0;
  int seed = 0;
  double error = 0.0;  // NaN on failure
  std::string failure;
  std::size_t rawSamples = 0;
  int tau = 1;
  bool rhoBelowBar = false;
  std::size_t projections = 0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<std::size_t> nGrid;
  std::vector<std::vector<double>> perSeedErrors;  // [seed][n index]
  std::vector<double> meanError;
  std::vector<double> stdError;
  std::vector<double> meanLogError;
  std::vector<double> stdLogError;
  std::vector<int> tau;  // per n index
  std::vector<RunRecord> records;
  int failures = 0;

  /// Finite negative slope below -0.05 with no failed runs.
  [[nodiscard]] bool converging() const;
};

/// Fits mean log error against log n over the upper half of the grid.
RateFit fit_rate(const std::vector<std::size_t>& nGrid, const std::vector<std::vector<double>>& perSeedErrors);

/// Projection radius used by the schedule, or nullopt when it has none.
/// Oracle settings default to 2 ||V*||_H computed spectrally.
std::optional<double> projection_radius(const ExperimentConfig& cfg, const TdSchedule& schedule);

/// Sampling mode implied by the schedule setting.
SamplingMode sampling_for(const ExperimentConfig& cfg, const TdSchedule& schedule);

/// One (n, seed) run of the configured learner.
RunRecord run_single(const ExperimentConfig& cfg, std::size_t n, int seed);

RateFit run_experiment(const ExperimentConfig& cfg);

/// Predicted exponent of the squared L2 error for the schedule setting.
double predicted_rate(ScheduleSetting setting, double theta);

std::string run_csv(const RateFit& fit);
std::string aggregate_csv(const RateFit& fit);

struct NamedFit {
  std::string label;
  double value = 0.0;
  RateFit fit;
};

std::string series_csv(const std::vector<NamedFit>& series);
std::string series_svg(const std::string& title, const std::string& xLabel, const std::vector<NamedFit>& series);

// --- rate table -------------------------------------------------------------

struct Table1Cell {
  int kernelOrder = 1;
  Reward reward = Reward::Abs;
  double maxTheta = 0.0;
  double predicted = 0.0;
  double referenceRate = 0.0;
  RateFit fit;
  bool withinTolerance = false;
};

struct Table1Result {
  std::vector<Table1Cell> cells;
  double tolerance = 0.15;
};

/// Observed slopes reported for the four cells (s=1 abs, s=1 cos, s=2 abs, s=2 cos).
constexpr double kReferenceRates[4] = {-0.72, -0.64, -0.58, -0.64};

/// theta grid used to read off the maximal source exponent.
std::vector<double> default_theta_grid();

Table1Result table1(const ExperimentConfig& base, bool fast);
void write_table1(const Table1Result& result, const std::filesystem::path& outDir);

// --- figures --------------------------------------------------------------

enum class SweepParam { Epsilon, Gamma };

std::vector<NamedFit> fig_sweep(SweepParam param, const std::vector<double>& values, const ExperimentConfig& base);

struct ThetaRobustness {
  std::vector<NamedFit> series;
  [[nodiscard]] const NamedFit& at(double theta) const;
};

/// Thm1b on the (s=2, abs) cell at each theta.
ThetaRobustness fig_theta_robustness(const ExperimentConfig& base, const std::vector<double>& thetas);

struct SkipComparison {
  double epsilon = 0.0;
  NamedFit plain;
  NamedFit skip;
};

/// Plain Markov TD (Thm2i) against tau-Skip-TD (Cor1i), both indexed by raw samples.
std::vector<SkipComparison> fig_skip_td(const ExperimentConfig& base, const std::vector<double>& epsilons);

void write_figure(const std::vector<NamedFit>& series, const std::string& title, const std::string& xLabel,
                  const std::filesystem::path& outDir, const std::string& stem);

// --- oracle suite ---------------------------------------------------------

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double bound = 0.0;
  std::string detail;
};

struct OracleOptions {
  std::vector<int> omegas = {256, 512};
  std::uint64_t seed = 7;
};

/// Runs every invariant check across the library and collects the results.
/// Individual failures (including thrown errors) become failed rows.
std::vector<CheckResult> oracle_suite(const OracleOptions& opts = {});

std::string oracle_report_text(const std::vector<CheckResult>& checks);
nlohmann::json oracle_report_json(const std::vector<CheckResult>& checks);

}  // namespace ktd
