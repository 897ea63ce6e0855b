#include "ktd/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "ktd/report.hpp"
#include "ktd/spectral.hpp"

namespace ktd {

// --- configuration -----------------------------------------------------------

void ExperimentConfig::validate() const {
  if (kernelOrder != 1 && kernelOrder != 2) throw ConfigError("kernel_order must be 1 or 2");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in (0, 1]");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  if (!(theta >= -1.0 && theta <= 1.0)) throw ConfigError("theta must lie in [-1, 1]");
  if (!(lambda0 > 0.0)) throw ConfigError("lambda0 must be positive");
  if (seeds < 1) throw ConfigError("seeds must be >= 1");
  if (gridSize < 64) throw ConfigError("grid_size must be >= 64");
  if (nGrid.empty()) throw ConfigError("n_grid must not be empty");
  for (auto n : nGrid) {
    if (n < 9) throw ConfigError("n_grid entries must be >= 9");
  }
  if (setting == ScheduleSetting::Custom) throw ConfigError("custom schedules cannot be configured from a file");
  if (oracleRadius && !(*oracleRadius > 0.0)) throw ConfigError("oracle_radius must be positive");
  if (approx.lowRank && approx.maxRank < 1) throw ConfigError("max_rank must be >= 1");
}

ExperimentConfig ExperimentConfig::fast() const {
  ExperimentConfig out = *this;
  out.nGrid.erase(std::remove_if(out.nGrid.begin(), out.nGrid.end(), [](std::size_t n) { return n > 512; }),
                  out.nGrid.end());
  if (out.nGrid.empty()) out.nGrid = {64, 128, 256, 512};
  out.seeds = std::min(out.seeds, 5);
  return out;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("reward")) c.reward = parse_reward(j.at("reward").get<std::string>());
    c.kernelOrder = j.value("kernel_order", c.kernelOrder);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.gamma = j.value("gamma", c.gamma);
    if (j.contains("schedule")) {
      const auto& s = j.at("schedule");
      if (s.contains("setting")) c.setting = parse_setting(s.at("setting").get<std::string>());
      c.lambda0 = s.value("lambda0", c.lambda0);
      c.theta = s.value("theta", c.theta);
      if (s.contains("oracle_radius") && !s.at("oracle_radius").is_null()) c.oracleRadius = s.at("oracle_radius").get<double>();
    }
    if (j.contains("n_grid")) c.nGrid = j.at("n_grid").get<std::vector<std::size_t>>();
    c.seeds = j.value("seeds", c.seeds);
    c.baseSeed = j.value("base_seed", c.baseSeed);
    c.gridSize = j.value("grid_size", c.gridSize);
    if (j.contains("low_rank")) {
      const auto& l = j.at("low_rank");
      c.approx.lowRank = l.value("enabled", false);
      c.approx.maxRank = l.value("max_rank", c.approx.maxRank);
      c.approx.tol = l.value("tol", c.approx.tol);
    }
    c.outDir = j.value("out_dir", c.outDir);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["reward"] = reward_name(reward);
  j["kernel_order"] = kernelOrder;
  j["epsilon"] = epsilon;
  j["gamma"] = gamma;
  j["schedule"] = {{"setting", setting_name(setting)}, {"lambda0", lambda0}, {"theta", theta}};
  j["schedule"]["oracle_radius"] = oracleRadius ? nlohmann::json(*oracleRadius) : nlohmann::json(nullptr);
  j["n_grid"] = nGrid;
  j["seeds"] = seeds;
  j["base_seed"] = baseSeed;
  j["grid_size"] = gridSize;
  j["low_rank"] = {{"enabled", approx.lowRank}, {"max_rank", approx.maxRank}, {"tol", approx.tol}};
  j["out_dir"] = outDir;
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return ExperimentConfig::from_json(j);
}

// --- worker pool ---------------------------------------------------------------

unsigned worker_count() {
  if (const char* env = std::getenv("KTD_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex errorMutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(errorMutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// --- fitting -------------------------------------------------------------------

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("line fit needs >= 2 paired points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

bool RateFit::converging() const { return failures == 0 && std::isfinite(slope) && slope < -0.05; }

RateFit fit_rate(const std::vector<std::size_t>& nGrid, const std::vector<std::vector<double>>& perSeedErrors) {
  RateFit fit;
  fit.nGrid = nGrid;
  fit.perSeedErrors = perSeedErrors;
  const std::size_t m = nGrid.size();
  const std::size_t seeds = perSeedErrors.size();
  fit.meanError.assign(m, 0.0);
  fit.stdError.assign(m, 0.0);
  fit.meanLogError.assign(m, 0.0);
  fit.stdLogError.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0, s2 = 0, l = 0, l2 = 0;
    for (std::size_t k = 0; k < seeds; ++k) {
      const double e = perSeedErrors[k][i];
      if (!std::isfinite(e)) ++fit.failures;
      const double le = std::log(e);
      s += e;
      s2 += e * e;
      l += le;
      l2 += le * le;
    }
    const double n = static_cast<double>(seeds);
    fit.meanError[i] = s / n;
    fit.meanLogError[i] = l / n;
    fit.stdError[i] = seeds > 1 ? std::sqrt(std::max(0.0, (s2 - n * fit.meanError[i] * fit.meanError[i]) / (n - 1))) : 0.0;
    fit.stdLogError[i] = seeds > 1 ? std::sqrt(std::max(0.0, (l2 - n * fit.meanLogError[i] * fit.meanLogError[i]) / (n - 1))) : 0.0;
  }
  // Asymptotic regime: upper half of the grid.
  const std::size_t start = m >= 4 ? m / 2 : 0;
  std::vector<double> xs, ys;
  for (std::size_t i = start; i < m; ++i) {
    xs.push_back(std::log(static_cast<double>(nGrid[i])));
    ys.push_back(fit.meanLogError[i]);
  }
  if (xs.size() >= 2) {
    const LineFit lf = fit_line(xs, ys);
    fit.slope = lf.slope;
    fit.intercept = lf.intercept;
  } else {
    fit.slope = fit.intercept = std::nan("");
  }
  return fit;
}

// --- runs ----------------------------------------------------------------------

std::optional<double> projection_radius(const ExperimentConfig& cfg, const TdSchedule& schedule) {
  switch (schedule.setting) {
    case ScheduleSetting::Thm2i:
    case ScheduleSetting::Cor1i: {
      if (cfg.oracleRadius) return cfg.oracleRadius;
      const SpectralModel m = build_spectral(cfg.kernelOrder, cfg.epsilon, cfg.gamma, cfg.reward, 256);
      return 2.0 * h_norm(m, m.vStarHat);
    }
    case ScheduleSetting::Thm2ii:
    case ScheduleSetting::Cor1ii:
      return std::sqrt(cfg.kernel().max_diagonal()) * reward_l2_norm(cfg.reward) / schedule.lambda;
    default: return std::nullopt;
  }
}

SamplingMode sampling_for(const ExperimentConfig& cfg, const TdSchedule& schedule) {
  if (schedule.isSkip()) return SamplingMode::skip(skip_tau(schedule.rhoConst, 1.0 - cfg.epsilon));
  if (schedule.isMarkov()) return SamplingMode::markov();
  return SamplingMode::iid();
}

namespace {

Rng run_rng(const ExperimentConfig& cfg, std::size_t n, int seed) {
  return Rng(cfg.baseSeed).split(n).split(static_cast<std::uint64_t>(seed));
}

}  // namespace

RunRecord run_single(const ExperimentConfig& cfg, std::size_t n, int seed) {
  RunRecord rec;
  rec.n = n;
  rec.seed = seed;
  const TdSchedule schedule = TdSchedule::make(cfg.setting, n, cfg.theta, cfg.lambda0, cfg.oracleRadius);
  const SamplingMode mode = sampling_for(cfg, schedule);
  rec.tau = mode.tau;
  TdRunOptions opts;
  opts.projectionRadius = projection_radius(cfg, schedule);
  opts.approx = cfg.approx;
  const KernelSpec kernel = cfg.kernel();
  double maxRho = 0.0;
  for (std::size_t k = 1; k <= n; ++k) maxRho = std::max(maxRho, schedule.rho(k));
  rec.rhoBelowBar = maxRho <= rho_bar(cfg.gamma, kernel.max_diagonal());
  Rng rng = run_rng(cfg, n, seed);
  try {
    const AlphaHistory hist = td_run(cfg.model(), kernel, schedule, mode, opts, rng);
    rec.rawSamples = hist.rawSamples;
    rec.projections = hist.projections;
    rec.error = l2_error(averaged_iterate(hist, schedule), cfg.model(), cfg.gridSize);
    if (!std::isfinite(rec.error)) {
      rec.failure = "non-finite error";
      rec.error = std::nan("");
    }
  } catch (const std::runtime_error& e) {
    rec.failure = e.what();
    rec.error = std::nan("");
  }
  return rec;
}

RateFit run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t m = cfg.nGrid.size();
  const auto seeds = static_cast<std::size_t>(cfg.seeds);
  std::vector<RunRecord> records(m * seeds);
  // Warm the spectral radius once so workers do not each rebuild it.
  ExperimentConfig resolved = cfg;
  if (!resolved.oracleRadius) {
    const TdSchedule probe = TdSchedule::make(cfg.setting, cfg.nGrid.front(), cfg.theta, cfg.lambda0);
    if (probe.setting == ScheduleSetting::Thm2i || probe.setting == ScheduleSetting::Cor1i) {
      resolved.oracleRadius = projection_radius(cfg, probe);
    }
  }
  parallel_for(records.size(), [&](std::size_t idx) {
    const std::size_t i = idx / seeds;
    const int seed = static_cast<int>(idx % seeds);
    records[idx] = run_single(resolved, cfg.nGrid[i], seed);
  });
  std::vector<std::vector<double>> errors(seeds, std::vector<double>(m));
  for (std::size_t idx = 0; idx < records.size(); ++idx) errors[idx % seeds][idx / seeds] = records[idx].error;
  RateFit fit = fit_rate(cfg.nGrid, errors);
  fit.records = std::move(records);
  fit.tau.resize(m);
  for (std::size_t i = 0; i < m; ++i) fit.tau[i] = fit.records[i * seeds].tau;
  return fit;
}

double predicted_rate(ScheduleSetting setting, double theta) {
  switch (setting) {
    case ScheduleSetting::Thm1a: return -(1.0 + theta) / (3.0 + theta);
    case ScheduleSetting::Thm1b:
    case ScheduleSetting::Thm1c:
    case ScheduleSetting::Thm2i:
    case ScheduleSetting::Cor1i: return -(1.0 + theta) / (2.0 + theta);
    case ScheduleSetting::Thm2ii:
    case ScheduleSetting::Cor1ii: return -(1.0 + theta) / (4.0 + theta);
    case ScheduleSetting::ConstantUnregularized: return -0.5;
    case ScheduleSetting::Custom: break;
  }
  return std::nan("");
}

std::string run_csv(const RateFit& fit) {
  std::ostringstream out;
  out << "n,seed,sq_l2_error\n";
  for (std::size_t i = 0; i < fit.nGrid.size(); ++i) {
    for (std::size_t s = 0; s < fit.perSeedErrors.size(); ++s) {
      out << fit.nGrid[i] << ',' << s << ',' << format_double(fit.perSeedErrors[s][i]) << '\n';
    }
  }
  return out.str();
}

std::string aggregate_csv(const RateFit& fit) {
  std::ostringstream out;
  out << "n,mean_sq_l2_error,std_sq_l2_error\n";
  for (std::size_t i = 0; i < fit.nGrid.size(); ++i) {
    out << fit.nGrid[i] << ',' << format_double(fit.meanError[i]) << ',' << format_double(fit.stdError[i]) << '\n';
  }
  return out.str();
}

std::string series_csv(const std::vector<NamedFit>& series) {
  std::ostringstream out;
  out << "series,n,mean_sq_l2_error,std_sq_l2_error\n";
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.fit.nGrid.size(); ++i) {
      out << s.label << ',' << s.fit.nGrid[i] << ',' << format_double(s.fit.meanError[i]) << ','
          << format_double(s.fit.stdError[i]) << '\n';
    }
  }
  return out.str();
}

std::string series_svg(const std::string& title, const std::string& xLabel, const std::vector<NamedFit>& series) {
  std::vector<PlotSeries> plot;
  for (const auto& s : series) {
    PlotSeries p;
    p.label = s.label;
    for (std::size_t i = 0; i < s.fit.nGrid.size(); ++i) {
      p.x.push_back(static_cast<double>(s.fit.nGrid[i]));
      p.mean.push_back(s.fit.meanError[i]);
      p.std.push_back(s.fit.stdError[i]);
    }
    plot.push_back(std::move(p));
  }
  return render_loglog_svg(title, xLabel, "squared L2(p) error", plot);
}

void write_figure(const std::vector<NamedFit>& series, const std::string& title, const std::string& xLabel,
                  const std::filesystem::path& outDir, const std::string& stem) {
  write_text_file(outDir / (stem + ".csv"), series_csv(series));
  write_text_file(outDir / (stem + ".svg"), series_svg(title, xLabel, series));
  nlohmann::json meta = nlohmann::json::array();
  for (const auto& s : series) {
    meta.push_back({{"series", s.label},
                    {"value", s.value},
                    {"slope", s.fit.slope},
                    {"failures", s.fit.failures},
                    {"converging", s.fit.converging()},
                    {"tau", s.fit.tau}});
  }
  write_text_file(outDir / (stem + "_summary.json"), meta.dump(2) + "\n");
}

// --- rate table ------------------------------------------------------------------

std::vector<double> default_theta_grid() { return {-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0}; }

Table1Result table1(const ExperimentConfig& base, bool fast) {
  Table1Result result;
  result.tolerance = fast ? 0.25 : 0.15;
  const std::pair<int, Reward> cells[4] = {{1, Reward::Abs}, {1, Reward::Cos}, {2, Reward::Abs}, {2, Reward::Cos}};
  for (int i = 0; i < 4; ++i) {
    Table1Cell cell;
    cell.kernelOrder = cells[i].first;
    cell.reward = cells[i].second;
    const SpectralModel m = build_spectral(cell.kernelOrder, 0.8, 0.5, cell.reward, 256);
    cell.maxTheta = max_stable_theta(max_theta_diagnostic(m, default_theta_grid()));
    cell.predicted = predicted_rate(ScheduleSetting::Thm1b, cell.maxTheta);
    cell.referenceRate = kReferenceRates[i];

    ExperimentConfig cfg = fast ? base.fast() : base;
    cfg.kernelOrder = cell.kernelOrder;
    cfg.reward = cell.reward;
    cfg.epsilon = 0.8;
    cfg.gamma = 0.5;
    cfg.setting = ScheduleSetting::Thm1b;
    cfg.theta = cell.maxTheta;
    cell.fit = run_experiment(cfg);
    cell.withinTolerance = std::isfinite(cell.fit.slope) && std::abs(cell.fit.slope - cell.referenceRate) <= result.tolerance &&
                           cell.fit.slope < -0.3;
    result.cells.push_back(std::move(cell));
  }
  return result;
}

void write_table1(const Table1Result& result, const std::filesystem::path& outDir) {
  std::ostringstream csv;
  csv << "kernel_order,reward,max_theta,predicted_rate,observed_rate,reference_rate,within_tolerance\n";
  nlohmann::json summary;
  summary["tolerance"] = result.tolerance;
  summary["cells"] = nlohmann::json::array();
  for (const auto& c : result.cells) {
    csv << c.kernelOrder << ',' << reward_name(c.reward) << ',' << format_double(c.maxTheta) << ','
        << format_double(c.predicted) << ',' << format_double(c.fit.slope) << ',' << format_double(c.referenceRate) << ','
        << (c.withinTolerance ? "pass" : "fail") << '\n';
    const std::string stem = "table1_s" + std::to_string(c.kernelOrder) + "_" + reward_name(c.reward);
    write_text_file(outDir / (stem + "_runs.csv"), run_csv(c.fit));
    write_text_file(outDir / (stem + "_aggregate.csv"), aggregate_csv(c.fit));
    summary["cells"].push_back({{"kernel_order", c.kernelOrder},
                                {"reward", reward_name(c.reward)},
                                {"max_theta", c.maxTheta},
                                {"predicted_slope", c.predicted},
                                {"fitted_slope", c.fit.slope},
                                {"reference_slope", c.referenceRate},
                                {"failures", c.fit.failures},
                                {"pass", c.withinTolerance}});
  }
  write_text_file(outDir / "table1.csv", csv.str());
  write_text_file(outDir / "table1_summary.json", summary.dump(2) + "\n");
}

// --- figures -------------------------------------------------------------------

std::vector<NamedFit> fig_sweep(SweepParam param, const std::vector<double>& values, const ExperimentConfig& base) {
  std::vector<NamedFit> out;
  for (double v : values) {
    ExperimentConfig cfg = base;
    if (param == SweepParam::Epsilon) {
      if (!(v > 0.0 && v <= 1.0)) throw ConfigError("epsilon sweep values must lie in (0, 1]");
      cfg.epsilon = v;
    } else {
      if (!(v >= 0.0 && v < 1.0)) throw ConfigError("gamma sweep values must lie in [0, 1)");
      cfg.gamma = v;
    }
    NamedFit nf;
    nf.label = std::string(param == SweepParam::Epsilon ? "epsilon=" : "gamma=") + format_double(v);
    nf.value = v;
    nf.fit = run_experiment(cfg);
    out.push_back(std::move(nf));
  }
  return out;
}

const NamedFit& ThetaRobustness::at(double theta) const {
  for (const auto& s : series) {
    if (std::abs(s.value - theta) < 1e-12) return s;
  }
  throw std::out_of_range("theta not in robustness sweep");
}

ThetaRobustness fig_theta_robustness(const ExperimentConfig& base, const std::vector<double>& thetas) {
  ThetaRobustness out;
  for (double theta : thetas) {
    if (!(theta >= -1.0 && theta <= 1.0)) throw ConfigError("theta values must lie in [-1, 1]");
    ExperimentConfig cfg = base;
    cfg.kernelOrder = 2;
    cfg.reward = Reward::Abs;
    cfg.setting = ScheduleSetting::Thm1b;
    cfg.theta = theta;
    NamedFit nf;
    nf.label = "theta=" + format_double(theta);
    nf.value = theta;
    nf.fit = run_experiment(cfg);
    out.series.push_back(std::move(nf));
  }
  return out;
}

std::vector<SkipComparison> fig_skip_td(const ExperimentConfig& base, const std::vector<double>& epsilons) {
  std::vector<SkipComparison> out;
  for (double eps : epsilons) {
    SkipComparison cmp;
    cmp.epsilon = eps;
    ExperimentConfig cfg = base;
    cfg.epsilon = eps;
    cfg.oracleRadius.reset();
    cfg.setting = ScheduleSetting::Thm2i;
    cmp.plain.label = "td_eps=" + format_double(eps);
    cmp.plain.value = eps;
    cmp.plain.fit = run_experiment(cfg);
    cfg.setting = ScheduleSetting::Cor1i;
    cmp.skip.label = "skip_td_eps=" + format_double(eps);
    cmp.skip.value = eps;
    cmp.skip.fit = run_experiment(cfg);
    out.push_back(std::move(cmp));
  }
  return out;
}

}  // namespace ktd
