#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ktd/kernels.hpp"
#include "ktd/mrp.hpp"
#include "ktd/rng.hpp"

namespace ktd {

/// A function in the RKHS, V = sum_j coefficients[j] K(supportPoints[j], .).
/// Duplicate support points are kept as separate terms.
struct ValueFunction {
  KernelSpec kernel;
  std::vector<State> supportPoints;
  std::vector<double> coefficients;

  [[nodiscard]] double operator()(State y) const;
};

double evaluate(const ValueFunction& v, State y);

/// sqrt(alpha^T K alpha) on the support set.
double h_norm(const ValueFunction& v);

/// Radial projection onto the H-ball of radius B.
ValueFunction project_ball(const ValueFunction& v, double radius);

enum class ScheduleSetting { Thm1a, Thm1b, Thm1c, Thm2i, Thm2ii, Cor1i, Cor1ii, ConstantUnregularized, Custom };
enum class Averaging { FinalIterate, Exponential, Tail, Polyak };

std::string setting_name(ScheduleSetting s);
ScheduleSetting parse_setting(const std::string& name);

/// Regularization level and step sizes for one run.
///
/// `n` is the iteration budget that enters the formulas. For the skip
/// settings it counts raw chain samples; the learner then makes n / tau
/// updates.
struct TdSchedule {
  ScheduleSetting setting = ScheduleSetting::Thm1b;
  std::size_t n = 0;
  double theta = 0.0;
  double lambda0 = 1.0;
  std::optional<double> oracleRadius;

  double lambda = 0.0;
  double rhoConst = 0.0;

  /// Builds the schedule for a theorem setting. Throws std::invalid_argument
  /// for n < 9 on theorem schedules or theta outside [-1, 1].
  static TdSchedule make(ScheduleSetting setting, std::size_t n, double theta, double lambda0 = 1.0,
                         std::optional<double> oracleRadius = std::nullopt);

  /// Constant lambda and rho for n steps.
  static TdSchedule constant(double lambda, double rho, std::size_t n);

  /// Step size of the k-th update, k >= 1.
  [[nodiscard]] double rho(std::size_t k) const;
  [[nodiscard]] Averaging averaging() const;
  /// f in the exponential weights (1 - f rho lambda)^(n-k).
  [[nodiscard]] int weightFactor() const;
  [[nodiscard]] bool usesProjection() const;
  [[nodiscard]] bool isSkip() const;
  [[nodiscard]] bool isMarkov() const;
};

/// Step-size ceiling (1 - gamma) / (8 M_H (1 + gamma^2)).
double rho_bar(double gamma, double maxDiagonal);

/// tau = ceil(ln(1/rho) / ln(1/mu) + 1).
int skip_tau(double rho, double mu);

enum class SamplingKind { Iid, Markov, SkipMarkov };

struct SamplingMode {
  SamplingKind kind = SamplingKind::Iid;
  int tau = 1;

  static SamplingMode iid() { return {SamplingKind::Iid, 1}; }
  static SamplingMode markov() { return {SamplingKind::Markov, 1}; }
  static SamplingMode skip(int tau) { return {SamplingKind::SkipMarkov, tau}; }
};

/// Kernel entries used inside the recursion: exact, or from a pivoted
/// Cholesky factor of all visited states.
struct KernelApprox {
  bool lowRank = false;
  int maxRank = kDefaultMaxRank;
  double tol = kDefaultCholeskyTol;
};

/// Lower-triangular coefficient matrix of all iterates V_1..V_n.
/// Row k holds alpha_{k,1..k} over the support x_1..x_k.
class AlphaHistory {
 public:
  AlphaHistory(KernelSpec kernel, std::vector<SamplePair> samples, double lambda, std::vector<double> rhos);

  [[nodiscard]] std::size_t size() const { return samples_.size(); }
  [[nodiscard]] const KernelSpec& kernel() const { return kernel_; }
  [[nodiscard]] const std::vector<SamplePair>& samples() const { return samples_; }
  [[nodiscard]] double lambda() const { return lambda_; }
  [[nodiscard]] const std::vector<double>& rhos() const { return rhos_; }

  /// Coefficients of V_k; empty for k = 0.
  [[nodiscard]] std::span<const double> row(std::size_t k) const;
  [[nodiscard]] std::span<double> row(std::size_t k);

  /// V_k as a standalone function.
  [[nodiscard]] ValueFunction iterate(std::size_t k) const;
  [[nodiscard]] ValueFunction final_iterate() const { return iterate(size()); }

  /// Raw chain samples consumed to produce the history.
  std::size_t rawSamples = 0;
  /// Number of updates where the projection was active.
  std::size_t projections = 0;

 private:
  KernelSpec kernel_;
  std::vector<SamplePair> samples_;
  double lambda_;
  std::vector<double> rhos_;
  std::vector<double> alpha_;
};

struct TdRunOptions {
  std::optional<double> projectionRadius;
  KernelApprox approx;
};

/// Runs the coefficient recursion on a fixed sample sequence.
///
/// alpha_{k,j} = (1 - rho_k lambda) alpha_{k-1,j} for j < k and
/// alpha_{k,k} = rho_k (r(x_k) + gamma V_{k-1}(x'_k) - V_{k-1}(x_k)),
/// followed by the projection onto the radius-B ball when requested.
/// Throws std::domain_error("step size violates contraction") when
/// rho_k lambda > 1/2 and std::runtime_error("divergence detected") on
/// non-finite coefficients.
AlphaHistory td_run_samples(const KernelSpec& kernel, std::vector<SamplePair> samples, double gamma,
                            double lambda, std::span<const double> rhos, const TdRunOptions& opts = {});

/// Draws samples from the circle chain according to `mode` and runs TD.
AlphaHistory td_run(const MrpModel& model, const KernelSpec& kernel, const TdSchedule& schedule,
                    SamplingMode mode, const TdRunOptions& opts, Rng& rng);

/// sum_k w_k V_{k-1} for weights w_1..w_n, computed in coefficient space by
/// exchanging the order of the triangular sum.
ValueFunction weighted_average(const AlphaHistory& history, std::span<const double> weights);

/// Normalized weights (1 - f rho lambda)^(n-k) for k = 1..n.
std::vector<double> exponential_weights(std::size_t n, double rho, double lambda, int weightFactor);

ValueFunction exp_average(const AlphaHistory& history, double rho, double lambda, int weightFactor);
ValueFunction tail_average(const AlphaHistory& history);
ValueFunction polyak_average(const AlphaHistory& history);

/// The averaged (or final) iterate prescribed by the schedule.
ValueFunction averaged_iterate(const AlphaHistory& history, const TdSchedule& schedule);

/// Squared L2(p) distance to V* by the equal-weight periodic trapezoid rule.
double l2_error(const ValueFunction& v, const MrpModel& model, int gridSize);

template <class F, class G>
double l2_distance_sq(const F& f, const G& g, int gridSize) {
  double acc = 0.0;
  for (int i = 0; i < gridSize; ++i) {
    const double x = static_cast<double>(i) / gridSize;
    const double d = f(x) - g(x);
    acc += d * d;
  }
  return acc / gridSize;
}

}  // namespace ktd
