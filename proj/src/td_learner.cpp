#include "ktd/td_learner.hpp"

#include <cmath>
#include <stdexcept>

namespace ktd {

// --- value functions -------------------------------------------------------

double ValueFunction::operator()(State y) const {
  double acc = 0.0;
  for (std::size_t j = 0; j < coefficients.size(); ++j) acc += coefficients[j] * kernel_eval(kernel, supportPoints[j], y);
  return acc;
}

double evaluate(const ValueFunction& v, State y) { return v(y); }

double h_norm(const ValueFunction& v) {
  if (v.coefficients.empty()) return 0.0;
  const Eigen::MatrixXd k = kernel_matrix(v.kernel, v.supportPoints);
  const Eigen::Map<const Eigen::VectorXd> a(v.coefficients.data(), static_cast<Eigen::Index>(v.coefficients.size()));
  return std::sqrt(std::max(0.0, a.dot(k * a)));
}

ValueFunction project_ball(const ValueFunction& v, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("projection radius must be positive");
  const double norm = h_norm(v);
  if (norm <= radius) return v;
  ValueFunction out = v;
  const double scale = radius / norm;
  for (auto& c : out.coefficients) c *= scale;
  return out;
}

// --- schedules -------------------------------------------------------------

std::string setting_name(ScheduleSetting s) {
  switch (s) {
    case ScheduleSetting::Thm1a: return "thm1a";
    case ScheduleSetting::Thm1b: return "thm1b";
    case ScheduleSetting::Thm1c: return "thm1c";
    case ScheduleSetting::Thm2i: return "thm2i";
    case ScheduleSetting::Thm2ii: return "thm2ii";
    case ScheduleSetting::Cor1i: return "cor1i";
    case ScheduleSetting::Cor1ii: return "cor1ii";
    case ScheduleSetting::ConstantUnregularized: return "constant";
    case ScheduleSetting::Custom: return "custom";
  }
  return "unknown";
}

ScheduleSetting parse_setting(const std::string& name) {
  for (auto s : {ScheduleSetting::Thm1a, ScheduleSetting::Thm1b, ScheduleSetting::Thm1c, ScheduleSetting::Thm2i,
                 ScheduleSetting::Thm2ii, ScheduleSetting::Cor1i, ScheduleSetting::Cor1ii,
                 ScheduleSetting::ConstantUnregularized}) {
    if (setting_name(s) == name) return s;
  }
  throw std::invalid_argument("unknown schedule setting '" + name + "'");
}

TdSchedule TdSchedule::make(ScheduleSetting setting, std::size_t n, double theta, double lambda0,
                            std::optional<double> oracleRadius) {
  if (setting == ScheduleSetting::Custom) throw std::invalid_argument("use TdSchedule::constant for custom schedules");
  if (n < 9) throw std::invalid_argument("theorem schedules need n >= 9");
  if (!(theta >= -1.0 && theta <= 1.0)) throw std::invalid_argument("theta must lie in [-1, 1]");
  if (!(lambda0 > 0.0)) throw std::invalid_argument("lambda0 must be positive");

  TdSchedule s;
  s.setting = setting;
  s.n = n;
  s.theta = theta;
  s.lambda0 = lambda0;
  s.oracleRadius = oracleRadius;
  const double nd = static_cast<double>(n);
  const double logn = std::log(nd);
  switch (setting) {
    case ScheduleSetting::Thm1a:
      s.lambda = lambda0 * std::pow(nd, -1.0 / (3.0 + theta));
      s.rhoConst = logn / (s.lambda * nd);
      break;
    case ScheduleSetting::Thm1b:
      s.lambda = lambda0 * std::pow(nd, -1.0 / (2.0 + theta));
      s.rhoConst = logn / (s.lambda * nd);
      break;
    case ScheduleSetting::Thm1c:
      s.lambda = lambda0 * std::pow(nd, -1.0 / (2.0 + theta));
      s.rhoConst = 2.0 * logn / (s.lambda * nd);
      break;
    case ScheduleSetting::Thm2i:
    case ScheduleSetting::Cor1i:
      s.lambda = lambda0 * std::pow(nd, -1.0 / (2.0 + theta));
      s.rhoConst = logn / (2.0 * s.lambda * nd);
      break;
    case ScheduleSetting::Thm2ii:
    case ScheduleSetting::Cor1ii:
      s.lambda = lambda0 * std::pow(nd, -1.0 / (4.0 + theta));
      s.rhoConst = logn / (2.0 * s.lambda * nd);
      break;
    case ScheduleSetting::ConstantUnregularized:
      s.lambda = 0.0;
      s.rhoConst = 1.0 / std::sqrt(nd);
      break;
    case ScheduleSetting::Custom: break;
  }
  return s;
}

TdSchedule TdSchedule::constant(double lambda, double rho, std::size_t n) {
  if (lambda < 0.0 || !(rho > 0.0)) throw std::invalid_argument("custom schedule needs lambda >= 0 and rho > 0");
  TdSchedule s;
  s.setting = ScheduleSetting::Custom;
  s.n = n;
  s.lambda = lambda;
  s.rhoConst = rho;
  return s;
}

double TdSchedule::rho(std::size_t k) const {
  if (setting == ScheduleSetting::Thm1c && k >= n / 2) return 1.0 / (lambda * static_cast<double>(k));
  return rhoConst;
}

Averaging TdSchedule::averaging() const {
  switch (setting) {
    case ScheduleSetting::Thm1a:
    case ScheduleSetting::Custom: return Averaging::FinalIterate;
    case ScheduleSetting::Thm1c: return Averaging::Tail;
    case ScheduleSetting::ConstantUnregularized: return Averaging::Polyak;
    default: return Averaging::Exponential;
  }
}

int TdSchedule::weightFactor() const {
  switch (setting) {
    case ScheduleSetting::Thm2i:
    case ScheduleSetting::Thm2ii:
    case ScheduleSetting::Cor1i:
    case ScheduleSetting::Cor1ii: return 2;
    default: return 1;
  }
}

bool TdSchedule::usesProjection() const { return isMarkov(); }

bool TdSchedule::isSkip() const {
  return setting == ScheduleSetting::Cor1i || setting == ScheduleSetting::Cor1ii;
}

bool TdSchedule::isMarkov() const {
  return setting == ScheduleSetting::Thm2i || setting == ScheduleSetting::Thm2ii || isSkip();
}

double rho_bar(double gamma, double maxDiagonal) {
  return (1.0 - gamma) / (8.0 * maxDiagonal * (1.0 + gamma * gamma));
}

int skip_tau(double rho, double mu) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("skip_tau needs 0 < rho < 1");
  if (!(mu >= 0.0 && mu < 1.0)) throw std::invalid_argument("skip_tau needs 0 < mu < 1");
  if (mu == 0.0) return 1;
  return static_cast<int>(std::ceil(std::log(1.0 / rho) / std::log(1.0 / mu) + 1.0));
}

// --- history -----------------------------------------------------------------

AlphaHistory::AlphaHistory(KernelSpec kernel, std::vector<SamplePair> samples, double lambda, std::vector<double> rhos)
    : kernel_(kernel), samples_(std::move(samples)), lambda_(lambda), rhos_(std::move(rhos)) {
  const std::size_t n = samples_.size();
  alpha_.assign(n * (n + 1) / 2, 0.0);
}

std::span<const double> AlphaHistory::row(std::size_t k) const {
  if (k > size()) throw std::out_of_range("iterate index beyond history");
  if (k == 0) return {};
  return {alpha_.data() + (k - 1) * k / 2, k};
}

std::span<double> AlphaHistory::row(std::size_t k) {
  if (k > size()) throw std::out_of_range("iterate index beyond history");
  if (k == 0) return {};
  return {alpha_.data() + (k - 1) * k / 2, k};
}

ValueFunction AlphaHistory::iterate(std::size_t k) const {
  const auto r = row(k);
  ValueFunction v{kernel_, {}, {r.begin(), r.end()}};
  v.supportPoints.reserve(k);
  for (std::size_t j = 0; j < k; ++j) v.supportPoints.push_back(samples_[j].x);
  return v;
}

// --- recursion ---------------------------------------------------------------

namespace {

// Inner products <V, K(., y)> for the two kinds of kernel access.
class DenseAccess {
 public:
  DenseAccess(const KernelSpec& k, const std::vector<SamplePair>& s) : kernel_(k), samples_(s) {}

  double value(std::span<const double> coeffs, State y) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < coeffs.size(); ++j) acc += coeffs[j] * kernel_eval(kernel_, samples_[j].x, y);
    return acc;
  }

 private:
  const KernelSpec& kernel_;
  const std::vector<SamplePair>& samples_;
};

bool finite(double v) { return std::isfinite(v) && std::abs(v) < 1e150; }

}  // namespace

AlphaHistory td_run_samples(const KernelSpec& kernel, std::vector<SamplePair> samples, double gamma, double lambda,
                            std::span<const double> rhos, const TdRunOptions& opts) {
  const std::size_t n = samples.size();
  if (n == 0) throw std::invalid_argument("TD needs at least one sample");
  if (rhos.size() < n) throw std::invalid_argument("need one step size per sample");
  if (opts.projectionRadius && !(*opts.projectionRadius > 0.0)) throw std::invalid_argument("projection radius must be positive");
  for (std::size_t k = 0; k < n; ++k) {
    if (rhos[k] * lambda > 0.5) throw std::domain_error("step size violates contraction");
  }

  AlphaHistory hist(kernel, std::move(samples), lambda, {rhos.begin(), rhos.begin() + static_cast<std::ptrdiff_t>(n)});
  hist.rawSamples = n;
  const auto& s = hist.samples();

  // Low-rank mode: features for x_1..x_n followed by x'_1..x'_n.
  LowRankFactor factor;
  Eigen::VectorXd w;
  if (opts.approx.lowRank) {
    std::vector<State> pts;
    pts.reserve(2 * n);
    for (const auto& p : s) pts.push_back(p.x);
    for (const auto& p : s) pts.push_back(p.xNext);
    factor = incomplete_cholesky(kernel, pts, opts.approx.maxRank, opts.approx.tol);
    w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(factor.rank()));
  }
  const DenseAccess dense(kernel, s);

  double normSq = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const SamplePair& pair = s[k - 1];
    const double rho = rhos[k - 1];
    const double shrink = 1.0 - rho * lambda;

    const auto prev = hist.row(k - 1);
    double vx = 0.0;
    double vxNext = 0.0;
    double kxx = 0.0;
    if (opts.approx.lowRank) {
      const auto lx = factor.columns.row(static_cast<Eigen::Index>(k - 1));
      const auto lxn = factor.columns.row(static_cast<Eigen::Index>(n + k - 1));
      vx = w.dot(lx.transpose());
      vxNext = w.dot(lxn.transpose());
      kxx = lx.squaredNorm();
    } else {
      vx = dense.value(prev, pair.x);
      vxNext = dense.value(prev, pair.xNext);
      kxx = kernel_eval(kernel, pair.x, pair.x);
    }

    const double diag = rho * (pair.reward + gamma * vxNext - vx);
    auto cur = hist.row(k);
    for (std::size_t j = 0; j + 1 < k; ++j) cur[j] = shrink * prev[j];
    cur[k - 1] = diag;
    if (!finite(diag)) throw std::runtime_error("divergence detected");

    // ||c V + d K(x_k, .)||^2 = c^2 ||V||^2 + 2 c d V(x_k) + d^2 K(x_k, x_k)
    normSq = std::max(0.0, shrink * shrink * normSq + 2.0 * shrink * diag * vx + diag * diag * kxx);
    if (opts.approx.lowRank) {
      w = shrink * w + diag * factor.columns.row(static_cast<Eigen::Index>(k - 1)).transpose();
    }

    if (opts.projectionRadius) {
      const double norm = std::sqrt(normSq);
      if (norm > *opts.projectionRadius) {
        const double scale = *opts.projectionRadius / norm;
        for (auto& c : cur) c *= scale;
        if (opts.approx.lowRank) w *= scale;
        normSq = *opts.projectionRadius * *opts.projectionRadius;
        ++hist.projections;
      }
    }
    if (!finite(normSq)) throw std::runtime_error("divergence detected");
  }
  return hist;
}

AlphaHistory td_run(const MrpModel& model, const KernelSpec& kernel, const TdSchedule& schedule, SamplingMode mode,
                    const TdRunOptions& opts, Rng& rng) {
  model.validate();
  if (mode.kind == SamplingKind::SkipMarkov && mode.tau < 1) throw std::invalid_argument("skip interval tau must be >= 1");
  const std::size_t tau = mode.kind == SamplingKind::SkipMarkov ? static_cast<std::size_t>(mode.tau) : 1;
  const std::size_t updates = std::max<std::size_t>(1, schedule.n / tau);

  std::vector<SamplePair> samples;
  samples.reserve(updates);
  std::size_t raw = updates;
  switch (mode.kind) {
    case SamplingKind::Iid:
      for (std::size_t k = 0; k < updates; ++k) samples.push_back(sample_iid_pair(model, rng));
      break;
    case SamplingKind::Markov:
      samples = sample_trajectory(model, updates, rng);
      break;
    case SamplingKind::SkipMarkov: {
      raw = updates * tau;
      const auto traj = sample_trajectory(model, raw, rng);
      for (std::size_t k = 1; k <= updates; ++k) samples.push_back(traj[k * tau - 1]);
      break;
    }
  }

  std::vector<double> rhos(updates);
  for (std::size_t k = 1; k <= updates; ++k) rhos[k - 1] = schedule.rho(k);
  AlphaHistory hist = td_run_samples(kernel, std::move(samples), model.gamma, schedule.lambda, rhos, opts);
  hist.rawSamples = raw;
  return hist;
}

// --- averaging ---------------------------------------------------------------

ValueFunction weighted_average(const AlphaHistory& history, std::span<const double> weights) {
  const std::size_t n = history.size();
  if (weights.size() != n) throw std::invalid_argument("need one weight per iterate");
  ValueFunction out{history.kernel(), {}, std::vector<double>(n > 0 ? n - 1 : 0, 0.0)};
  out.supportPoints.reserve(out.coefficients.size());
  for (std::size_t j = 0; j + 1 < n; ++j) out.supportPoints.push_back(history.samples()[j].x);
  // alpha_j = sum_{k=j+1}^{n} w_k alpha_{k-1,j}
  for (std::size_t k = 2; k <= n; ++k) {
    const double wk = weights[k - 1];
    if (wk == 0.0) continue;
    const auto r = history.row(k - 1);
    for (std::size_t j = 0; j < r.size(); ++j) out.coefficients[j] += wk * r[j];
  }
  return out;
}

std::vector<double> exponential_weights(std::size_t n, double rho, double lambda, int weightFactor) {
  const double q = 1.0 - weightFactor * rho * lambda;
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("exponential averaging needs 0 < 1 - f rho lambda <= 1");
  std::vector<double> w(n);
  double total = 0.0;
  // w_k proportional to q^(n-k); pow underflows to 0 for far-past iterates.
  for (std::size_t k = 1; k <= n; ++k) {
    w[k - 1] = std::pow(q, static_cast<double>(n - k));
    total += w[k - 1];
  }
  for (auto& v : w) v /= total;
  return w;
}

ValueFunction exp_average(const AlphaHistory& history, double rho, double lambda, int weightFactor) {
  return weighted_average(history, exponential_weights(history.size(), rho, lambda, weightFactor));
}

ValueFunction tail_average(const AlphaHistory& history) {
  const std::size_t n = history.size();
  if (n < 2) throw std::invalid_argument("tail average needs n >= 2");
  std::vector<double> w(n, 0.0);
  const std::size_t first = n / 2;
  const double weight = 1.0 / static_cast<double>(n - first + 1);
  for (std::size_t k = first; k <= n; ++k) w[k - 1] = weight;
  return weighted_average(history, w);
}

ValueFunction polyak_average(const AlphaHistory& history) {
  const std::size_t n = history.size();
  return weighted_average(history, std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

ValueFunction averaged_iterate(const AlphaHistory& history, const TdSchedule& schedule) {
  switch (schedule.averaging()) {
    case Averaging::FinalIterate: return history.final_iterate();
    case Averaging::Exponential:
      return exp_average(history, schedule.rhoConst, schedule.lambda, schedule.weightFactor());
    case Averaging::Tail: return tail_average(history);
    case Averaging::Polyak: return polyak_average(history);
  }
  return history.final_iterate();
}

double l2_error(const ValueFunction& v, const MrpModel& model, int gridSize) {
  if (gridSize < 64) throw std::invalid_argument("l2_error needs gridSize >= 64");
  const ValueOracle vstar = value_oracle(model);
  return l2_distance_sq(v, vstar, gridSize);
}

}  // namespace ktd
