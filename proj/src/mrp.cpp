#include "ktd/mrp.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ktd {

namespace {
constexpr double kPi = std::numbers::pi;

double binned_tv(const std::vector<State>& xs, int bins, std::vector<int>& counts) {
  std::fill(counts.begin(), counts.end(), 0);
  for (State x : xs) {
    int b = static_cast<int>(x * bins);
    if (b >= bins) b = bins - 1;
    ++counts[static_cast<std::size_t>(b)];
  }
  const double total = static_cast<double>(xs.size());
  double tv = 0.0;
  for (int c : counts) tv += std::abs(c / total - 1.0 / bins);
  return 0.5 * tv;
}
}  // namespace

std::string reward_name(Reward r) { return r == Reward::Abs ? "abs" : "cos"; }

Reward parse_reward(const std::string& name) {
  if (name == "abs") return Reward::Abs;
  if (name == "cos") return Reward::Cos;
  throw std::invalid_argument("unknown reward '" + name + "'");
}

double reward_eval(Reward reward, State x) {
  if (reward == Reward::Abs) return 2.0 * std::abs(x - 0.5);
  return 0.5 * (1.0 + std::cos(2.0 * kPi * x));
}

std::complex<double> reward_fourier(Reward reward, int omega) {
  if (omega == 0) return 0.5;
  if (reward == Reward::Abs) {
    const double sign = (omega % 2 == 0) ? 1.0 : -1.0;
    const double w = static_cast<double>(omega);
    return (1.0 - sign) / (kPi * kPi * w * w);
  }
  return std::abs(omega) == 1 ? 0.25 : 0.0;
}

double reward_mean(Reward) { return 0.5; }

double reward_l2_norm(Reward reward) {
  return reward == Reward::Abs ? std::sqrt(1.0 / 3.0) : std::sqrt(3.0 / 8.0);
}

void MrpModel::validate() const {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1]");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
}

State step(const MrpModel& model, State x, Rng& rng) {
  if (rng.uniform() < model.epsilon) return rng.uniform();
  return x;
}

SamplePair sample_iid_pair(const MrpModel& model, Rng& rng) {
  const State x = rng.uniform();
  const State next = step(model, x, rng);
  return {x, next, reward_eval(model.reward, x)};
}

std::vector<SamplePair> sample_trajectory(const MrpModel& model, std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("trajectory length must be >= 1");
  std::vector<SamplePair> out;
  out.reserve(n);
  State x = rng.uniform();
  for (std::size_t k = 0; k < n; ++k) {
    const State next = step(model, x, rng);
    out.push_back({x, next, reward_eval(model.reward, x)});
    x = next;
  }
  return out;
}

ValueOracle value_oracle(const MrpModel& model) {
  const double a = 1.0 / (1.0 - model.gamma * (1.0 - model.epsilon));
  const double b = a * model.gamma * model.epsilon * reward_mean(model.reward) / (1.0 - model.gamma);
  return {a, b, model.reward};
}

double true_value(const MrpModel& model, State x) { return value_oracle(model)(x); }

int rollout_horizon(double gamma, double budget) {
  if (gamma <= 0.0) return 1;
  return static_cast<int>(std::ceil(std::log(budget * (1.0 - gamma)) / std::log(gamma)));
}

RolloutEstimate rollout_value(const MrpModel& model, State x, int horizon, int numRollouts, Rng& rng) {
  if (horizon < 1 || numRollouts < 1) throw std::invalid_argument("rollout needs horizon >= 1 and numRollouts >= 1");
  double sum = 0.0;
  double sumSq = 0.0;
  for (int i = 0; i < numRollouts; ++i) {
    State s = x;
    double ret = 0.0;
    double discount = 1.0;
    for (int t = 0; t < horizon; ++t) {
      ret += discount * reward_eval(model.reward, s);
      discount *= model.gamma;
      if (discount == 0.0) break;
      s = step(model, s, rng);
    }
    sum += ret;
    sumSq += ret * ret;
  }
  const double n = numRollouts;
  const double mean = sum / n;
  const double var = numRollouts > 1 ? std::max(0.0, (sumSq - n * mean * mean) / (n - 1.0)) : 0.0;
  return {mean, std::sqrt(var / n)};
}

std::vector<double> mixing_profile(const MrpModel& model, int maxN, int numChains, int bins, Rng& rng) {
  if (maxN < 1 || numChains < 1 || bins < 1) throw std::invalid_argument("mixing diagnostic needs n, chains, bins >= 1");
  std::vector<State> xs(static_cast<std::size_t>(numChains), 0.0);
  std::vector<int> counts(static_cast<std::size_t>(bins));
  std::vector<double> tv;
  tv.reserve(static_cast<std::size_t>(maxN));
  for (int n = 1; n <= maxN; ++n) {
    for (auto& x : xs) x = step(model, x, rng);
    tv.push_back(binned_tv(xs, bins, counts));
  }
  return tv;
}

double mixing_diagnostic(const MrpModel& model, int n, int numChains, int bins, Rng& rng) {
  return mixing_profile(model, n, numChains, bins, rng).back();
}

}  // namespace ktd
