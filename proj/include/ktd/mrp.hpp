#pragma once

#include <complex>
#include <string>
#include <vector>

#include "ktd/kernels.hpp"
#include "ktd/rng.hpp"

namespace ktd {

enum class Reward { Abs, Cos };

std::string reward_name(Reward r);
Reward parse_reward(const std::string& name);

/// r_abs(x) = 2|x - 1/2|, r_cos(x) = (1 + cos 2 pi x) / 2.
double reward_eval(Reward reward, State x);

/// Complex Fourier coefficient hat r_omega of the reward on the torus.
std::complex<double> reward_fourier(Reward reward, int omega);

/// Mean over the stationary law, 1/2 for both rewards.
double reward_mean(Reward reward);

/// ||r||_{L^2(p)}: sqrt(1/3) for Abs, sqrt(3/8) for Cos.
double reward_l2_norm(Reward reward);

/// The circle restart chain: with probability epsilon jump to U[0,1),
/// otherwise stay. The invariant law is U[0,1).
struct MrpModel {
  double epsilon = 0.8;
  double gamma = 0.5;
  Reward reward = Reward::Abs;

  /// Throws std::invalid_argument unless epsilon in (0,1] and gamma in [0,1).
  void validate() const;
};

struct SamplePair {
  State x = 0.0;
  State xNext = 0.0;
  double reward = 0.0;
};

State step(const MrpModel& model, State x, Rng& rng);

SamplePair sample_iid_pair(const MrpModel& model, Rng& rng);

/// n chained pairs: pairs[k].x == pairs[k-1].xNext, x_1 ~ U[0,1).
std::vector<SamplePair> sample_trajectory(const MrpModel& model, std::size_t n, Rng& rng);

/// V*(x) = a r(x) + b.
struct ValueOracle {
  double affineScale = 1.0;
  double affineShift = 0.0;
  Reward reward = Reward::Abs;

  [[nodiscard]] double operator()(State x) const { return affineScale * reward_eval(reward, x) + affineShift; }
};

/// a = 1 / (1 - gamma (1 - eps)), b = a gamma eps rbar / (1 - gamma).
ValueOracle value_oracle(const MrpModel& model);

double true_value(const MrpModel& model, State x);

/// Smallest horizon H with gamma^H / (1 - gamma) <= budget.
int rollout_horizon(double gamma, double budget = 1e-3);

struct RolloutEstimate {
  double mean = 0.0;
  double stdError = 0.0;
};

/// Monte-Carlo mean of truncated discounted returns from x.
RolloutEstimate rollout_value(const MrpModel& model, State x, int horizon, int numRollouts, Rng& rng);

/// Binned TV distance between the law of x_n started at x_0 = 0 and U[0,1).
double mixing_diagnostic(const MrpModel& model, int n, int numChains, int bins, Rng& rng);

/// TV estimates for every n in 1..maxN from a single set of chains.
std::vector<double> mixing_profile(const MrpModel& model, int maxN, int numChains, int bins, Rng& rng);

}  // namespace ktd
