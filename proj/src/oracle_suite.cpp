#include <cmath>
#include <functional>
#include <sstream>

#include "ktd/experiments.hpp"
#include "ktd/kernels.hpp"
#include "ktd/mrp.hpp"
#include "ktd/report.hpp"
#include "ktd/spectral.hpp"
#include "ktd/td_learner.hpp"

namespace ktd {

namespace {

constexpr double kPi = 3.14159265358979323846;

using CheckFn = std::function<CheckResult()>;

void run_check(std::vector<CheckResult>& out, const std::string& name, const CheckFn& fn) {
  try {
    CheckResult r = fn();
    r.name = name;
    out.push_back(std::move(r));
  } catch (const std::exception& e) {
    out.push_back({name, false, std::nan(""), std::nan(""), std::string("error: ") + e.what()});
  }
}

CheckResult at_most(double measured, double bound, std::string detail = {}) {
  return {"", measured <= bound, measured, bound, std::move(detail)};
}

double tail_zeta(int twoS, int omega) {
  // sum_{w > omega} w^{-2s}, summed far enough out that the remainder is below 1e-16
  double acc = 0.0;
  for (int w = 2000000; w > omega; --w) acc += std::pow(static_cast<double>(w), -twoS);
  return acc + (twoS == 2 ? 1.0 / 2000000.0 : 0.0);
}

// Two-sided normal quantile for a family-wise level split over `tests`.
double bonferroni_z(double level, int tests) {
  const double tail = level / (2.0 * tests);
  double lo = 0.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(mid / std::sqrt(2.0)) > tail ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// --- finite chains for the Dirac kernel ---

struct FiniteChain {
  std::vector<std::vector<double>> transition;
  std::vector<double> reward;

  int next(int i, Rng& rng) const {
    const double u = rng.uniform();
    double acc = 0.0;
    const auto& row = transition[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < row.size(); ++j) {
      acc += row[j];
      if (u < acc) return static_cast<int>(j);
    }
    return static_cast<int>(row.size()) - 1;
  }
};

FiniteChain random_chain(int states, Rng& rng) {
  FiniteChain c;
  c.transition.assign(static_cast<std::size_t>(states), std::vector<double>(static_cast<std::size_t>(states)));
  for (auto& row : c.transition) {
    double total = 0.0;
    for (auto& p : row) total += (p = rng.uniform() + 0.05);
    for (auto& p : row) p /= total;
  }
  for (int i = 0; i < states; ++i) c.reward.push_back(rng.uniform());
  return c;
}

// Largest deviation between Dirac-kernel TD and a plain table over all
// states and iterations.
double tabular_gap(int states, int steps, double gamma, double rho, Rng& rng) {
  const FiniteChain chain = random_chain(states, rng);
  std::vector<SamplePair> samples;
  int x = static_cast<int>(rng.uniform() * states);
  for (int k = 0; k < steps; ++k) {
    const int y = chain.next(x, rng);
    samples.push_back({static_cast<double>(x), static_cast<double>(y), chain.reward[static_cast<std::size_t>(x)]});
    x = y;
  }
  const std::vector<double> rhos(static_cast<std::size_t>(steps), rho);
  const AlphaHistory hist = td_run_samples(KernelSpec::dirac(states), samples, gamma, 0.0, rhos);

  std::vector<double> table(static_cast<std::size_t>(states), 0.0);
  double worst = 0.0;
  for (int k = 1; k <= steps; ++k) {
    const SamplePair& s = samples[static_cast<std::size_t>(k - 1)];
    const auto i = static_cast<std::size_t>(s.x);
    const auto ip = static_cast<std::size_t>(s.xNext);
    table[i] += rho * (s.reward + gamma * table[ip] - table[i]);
    std::vector<double> fromAlpha(static_cast<std::size_t>(states), 0.0);
    const auto row = hist.row(static_cast<std::size_t>(k));
    for (std::size_t j = 0; j < row.size(); ++j) fromAlpha[static_cast<std::size_t>(samples[j].x)] += row[j];
    for (int st = 0; st < states; ++st) {
      worst = std::max(worst, std::abs(fromAlpha[static_cast<std::size_t>(st)] - table[static_cast<std::size_t>(st)]));
    }
  }
  return worst;
}

// Random history and the largest relative gap between each averaging scheme
// and the direct sum of w_k V_{k-1}(y).
double averaging_gap(Rng& rng) {
  const std::size_t n = 5 + static_cast<std::size_t>(rng.uniform() * 30);
  const MrpModel model{0.5 + 0.5 * rng.uniform(), 0.9 * rng.uniform(), rng.uniform() < 0.5 ? Reward::Abs : Reward::Cos};
  std::vector<SamplePair> samples;
  for (std::size_t k = 0; k < n; ++k) samples.push_back(sample_iid_pair(model, rng));
  const double lambda = 0.5 * rng.uniform();
  const double rho = 0.2 * rng.uniform() + 0.01;
  const std::vector<double> rhos(n, rho);
  const KernelSpec kernel = KernelSpec::sobolev(rng.uniform() < 0.5 ? 1 : 2);
  const AlphaHistory hist = td_run_samples(kernel, samples, model.gamma, lambda, rhos);

  const int factor = rng.uniform() < 0.5 ? 1 : 2;
  const std::vector<double> we = exponential_weights(n, rho, lambda, factor);
  std::vector<double> wt(n, 0.0);
  for (std::size_t k = n / 2; k <= n; ++k) wt[k - 1] = 1.0 / static_cast<double>(n - n / 2 + 1);
  const std::vector<double> wp(n, 1.0 / static_cast<double>(n));

  const ValueFunction averaged[3] = {exp_average(hist, rho, lambda, factor), tail_average(hist), polyak_average(hist)};
  const std::vector<double>* weights[3] = {&we, &wt, &wp};

  double worst = 0.0;
  for (int p = 0; p < 10; ++p) {
    const double y = rng.uniform();
    std::vector<double> iterVals(n);
    for (std::size_t k = 1; k <= n; ++k) iterVals[k - 1] = hist.iterate(k - 1)(y);
    for (int s = 0; s < 3; ++s) {
      double direct = 0.0;
      for (std::size_t k = 1; k <= n; ++k) direct += (*weights[s])[k - 1] * iterVals[k - 1];
      const double gap = std::abs(averaged[s](y) - direct) / std::max(1.0, std::abs(direct));
      worst = std::max(worst, gap);
    }
  }
  return worst;
}

double tabular_equivalence_gap(int seeds, int states, int steps, std::uint64_t seed) {
  double worst = 0.0;
  for (int s = 0; s < seeds; ++s) {
    Rng rng = Rng(seed).split(static_cast<std::uint64_t>(s));
    worst = std::max(worst, tabular_gap(states, steps, 0.9, 0.1, rng));
  }
  return worst;
}

}  // namespace

std::vector<CheckResult> oracle_suite(const OracleOptions& opts) {
  std::vector<CheckResult> out;
  const Rng root(opts.seed);
  std::uint64_t stream = 0;
  auto next_rng = [&] { return root.split(++stream); };

  // ---------------- kernels ----------------
  for (int s : {1, 2}) {
    const KernelSpec spec = KernelSpec::sobolev(s);
    Rng rng = next_rng();
    run_check(out, "kernels.fourier_consistency.s" + std::to_string(s), [&] {
      double worstExcess = -INFINITY;
      for (int omega : {64, 128}) {
        const double bound = 2.0 * tail_zeta(2 * s, omega);
        for (int t = 0; t < 200; ++t) {
          const double x = rng.uniform(), y = rng.uniform();
          double partial = 1.0;
          for (int w = 1; w <= omega; ++w) partial += 2.0 * std::pow(w, -2.0 * s) * std::cos(2.0 * kPi * w * (x - y));
          worstExcess = std::max(worstExcess, std::abs(kernel_eval(spec, x, y) - partial) - bound);
        }
      }
      return at_most(worstExcess, 0.0, "max |K - truncated series| minus tail bound");
    });
    run_check(out, "kernels.max_diagonal.s" + std::to_string(s), [&] {
      double worst = 0.0;
      for (int t = 0; t < 10000; ++t) {
        const double x = rng.uniform();
        worst = std::max(worst, std::abs(kernel_eval(spec, x, x) - spec.max_diagonal()));
      }
      return at_most(worst, 1e-10, "|K(x,x) - (1 + 2 zeta(2s))|");
    });
    run_check(out, "kernels.psd.s" + std::to_string(s), [&] {
      double worst = -INFINITY;
      for (int t = 0; t < 50; ++t) {
        const int n = 2 + static_cast<int>(rng.uniform() * 63);
        std::vector<State> pts(static_cast<std::size_t>(n));
        for (auto& p : pts) p = rng.uniform();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kernel_matrix(spec, pts), Eigen::EigenvaluesOnly);
        worst = std::max(worst, -es.eigenvalues().minCoeff() / es.eigenvalues().maxCoeff());
      }
      return at_most(worst, 1e-8, "-min eig / max eig");
    });
    run_check(out, "kernels.cholesky_full_rank.s" + std::to_string(s), [&] {
      std::vector<State> pts(48);
      for (auto& p : pts) p = rng.uniform();
      const LowRankFactor f = incomplete_cholesky(spec, pts, 48, 1e-300);
      const Eigen::MatrixXd k = kernel_matrix(spec, pts);
      return at_most((k - f.columns * f.columns.transpose()).norm() / k.norm(), 1e-8, "||K - LL^T||_F / ||K||_F");
    });
  }

  // ---------------- mrp ----------------
  {
    Rng rng = next_rng();
    run_check(out, "mrp.stationarity", [&] {
      double worst = -INFINITY;
      for (double eps : {0.2, 0.8}) {
        const MrpModel model{eps, 0.5, Reward::Cos};
        const std::size_t n = 1000000;
        const std::size_t batches = 100;
        const auto traj = sample_trajectory(model, n, rng);
        auto f = [](double x) { return std::cos(2.0 * kPi * x) + x; };  // integral 1/2
        std::vector<double> means(batches, 0.0);
        for (std::size_t i = 0; i < n; ++i) means[i / (n / batches)] += f(traj[i].x) / static_cast<double>(n / batches);
        double mean = 0.0;
        for (double m : means) mean += m / batches;
        double var = 0.0;
        for (double m : means) var += (m - mean) * (m - mean) / (batches - 1);
        const double se = std::sqrt(var / batches);
        worst = std::max(worst, std::abs(mean - 0.5) / se);
      }
      return at_most(worst, 3.0, "|mean f(x_k) - int f| in batch-means standard errors");
    });
    run_check(out, "mrp.bellman_residual", [&] {
      double worst = 0.0;
      for (double gamma : {0.0, 0.5, 0.9}) {
        for (double eps : {0.2, 0.5, 0.8, 1.0}) {
          for (Reward r : {Reward::Abs, Reward::Cos}) {
            const MrpModel model{eps, gamma, r};
            const ValueOracle v = value_oracle(model);
            const double vbar = v.affineScale * reward_mean(r) + v.affineShift;
            for (int i = 0; i < 64; ++i) {
              const double x = i / 64.0;
              const double res = v(x) - reward_eval(r, x) - gamma * (eps * vbar + (1.0 - eps) * v(x));
              worst = std::max(worst, std::abs(res));
            }
          }
        }
      }
      return at_most(worst, 1e-12, "max Bellman residual of the affine V*");
    });
    run_check(out, "mrp.rollout_agreement", [&] {
      double worst = 0.0;
      for (double gamma : {0.5, 0.9}) {
        for (double eps : {0.2, 0.8}) {
          const MrpModel model{eps, gamma, Reward::Abs};
          const int horizon = rollout_horizon(gamma);
          for (int i = 0; i < 16; ++i) {
            const double x = (i + 0.5) / 16.0;
            const RolloutEstimate est = rollout_value(model, x, horizon, 4000, rng);
            // truncation bias is at most 1e-3 by the horizon choice
            worst = std::max(worst, std::max(0.0, std::abs(est.mean - true_value(model, x)) - 1e-3) / est.stdError);
          }
        }
      }
      return at_most(worst, 3.0, "max |rollout - V*| in standard errors");
    });
    run_check(out, "mrp.mixing_bound", [&] {
      double worst = -INFINITY;
      const double slack = 3.0 * std::sqrt(32.0 / 1e5);
      for (double eps : {0.2, 0.8}) {
        const auto tv = mixing_profile({eps, 0.5, Reward::Abs}, 20, 100000, 32, rng);
        for (int n = 1; n <= 20; ++n) worst = std::max(worst, tv[static_cast<std::size_t>(n - 1)] - std::pow(1.0 - eps, n));
      }
      return at_most(worst, slack, "max TV - (1-eps)^n");
    });
    run_check(out, "mrp.value_norm_bound", [&] {
      double worst = -INFINITY;
      for (double gamma : {0.0, 0.5, 0.9}) {
        for (double eps : {0.2, 0.8}) {
          for (Reward r : {Reward::Abs, Reward::Cos}) {
            const MrpModel model{eps, gamma, r};
            const ValueOracle v = value_oracle(model);
            const double vn = std::sqrt(l2_distance_sq(v, [](double) { return 0.0; }, 4096));
            worst = std::max(worst, vn - reward_l2_norm(r) / (1.0 - gamma));
          }
        }
      }
      // equality at gamma = 0, so allow for quadrature error
      return at_most(worst, 1e-6, "||V*|| - ||r||/(1-gamma)");
    });
  }

  // ---------------- td_learner ----------------
  {
    run_check(out, "td.tabular_equivalence", [&] {
      return at_most(tabular_equivalence_gap(10, 5, 1000, opts.seed + 11), 1e-12, "max |kernel TD - table|");
    });
    Rng rng = next_rng();
    run_check(out, "td.averaging_oracle", [&] {
      double worst = 0.0;
      for (int t = 0; t < 100; ++t) worst = std::max(worst, averaging_gap(rng));
      return at_most(worst, 1e-10, "max relative gap to direct function-space averages");
    });
    run_check(out, "td.projection_contract", [&] {
      double worst = -INFINITY;
      for (int t = 0; t < 50; ++t) {
        ValueFunction v{KernelSpec::sobolev(1 + (t % 2)), {}, {}};
        const int n = 1 + static_cast<int>(rng.uniform() * 20);
        for (int j = 0; j < n; ++j) {
          v.supportPoints.push_back(rng.uniform());
          v.coefficients.push_back(4.0 * rng.uniform() - 2.0);
        }
        const double radius = 0.1 + 3.0 * rng.uniform();
        const double before = h_norm(v);
        const double after = h_norm(project_ball(v, radius));
        worst = std::max(worst, std::max(after - radius * (1.0 + 1e-12), after - before * (1.0 + 1e-12)));
      }
      return at_most(worst, 0.0, "max excess of projected norm over min(B, norm)");
    });
    run_check(out, "td.replay_consistency", [&] {
      double worst = 0.0;
      for (int t = 0; t < 5; ++t) {
        const MrpModel model{0.8, 0.5, Reward::Abs};
        const std::size_t n = 60;
        const auto samples = sample_trajectory(model, n, rng);
        const double lambda = 0.3, rho = 0.2;
        const std::vector<double> rhos(n, rho);
        const KernelSpec kernel = KernelSpec::sobolev(1 + t % 2);
        const AlphaHistory hist = td_run_samples(kernel, samples, model.gamma, lambda, rhos);
        // Value-space replay on the visited states plus probes.
        std::vector<double> pts;
        for (const auto& s : samples) {
          pts.push_back(s.x);
          pts.push_back(s.xNext);
        }
        for (int p = 0; p < 10; ++p) pts.push_back(rng.uniform());
        std::vector<double> vals(pts.size(), 0.0);
        for (std::size_t k = 1; k <= n; ++k) {
          const auto& s = samples[k - 1];
          const double delta = s.reward + model.gamma * vals[2 * (k - 1) + 1] - vals[2 * (k - 1)];
          for (std::size_t p = 0; p < pts.size(); ++p) {
            vals[p] = (1.0 - rho * lambda) * vals[p] + rho * delta * kernel_eval(kernel, s.x, pts[p]);
          }
          const ValueFunction vk = hist.iterate(k);
          for (std::size_t p = 2 * n; p < pts.size(); ++p) {
            worst = std::max(worst, std::abs(vk(pts[p]) - vals[p]) / std::max(1.0, std::abs(vals[p])));
          }
        }
      }
      return at_most(worst, 1e-10, "max relative gap between coefficient rows and value replay");
    });
    run_check(out, "td.no_divergence", [&] {
      int failures = 0;
      for (auto setting : {ScheduleSetting::Thm1a, ScheduleSetting::Thm1b, ScheduleSetting::Thm1c, ScheduleSetting::Thm2i,
                           ScheduleSetting::Thm2ii, ScheduleSetting::Cor1i, ScheduleSetting::Cor1ii,
                           ScheduleSetting::ConstantUnregularized}) {
        ExperimentConfig cfg;
        cfg.setting = setting;
        cfg.kernelOrder = 1;
        cfg.theta = 0.5;
        cfg.nGrid = {2000};
        cfg.seeds = 10;
        cfg.baseSeed = opts.seed + 101;
        cfg.gridSize = 64;
        const RateFit fit = run_experiment(cfg);
        failures += fit.failures;
      }
      return at_most(failures, 0, "failed runs across 8 settings x 10 seeds at n = 2000");
    });
  }

  // ---------------- spectral ----------------
  const std::vector<double> lambdaGrid = {1e-3, std::pow(10.0, -2.5), 1e-2, std::pow(10.0, -1.5), 1e-1, std::pow(10.0, -0.5), 1.0};
  struct Cell {
    int s;
    Reward r;
    double theta;
  };
  const Cell cells[4] = {{1, Reward::Abs, 0.5}, {1, Reward::Cos, 1.0}, {2, Reward::Abs, -0.25}, {2, Reward::Cos, 1.0}};

  {
    Rng rng = next_rng();
    run_check(out, "spectral.parseval", [&] {
      double worst = 0.0;
      const SpectralModel m = build_spectral(1, 0.8, 0.5, Reward::Abs, 16);
      for (int t = 0; t < 20; ++t) {
        SpectralVector v(m.dim());
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = 2.0 * rng.uniform() - 1.0;
        const double quad = l2_distance_sq([&](double x) { return spectral_eval(v, x); }, [](double) { return 0.0; }, 128);
        worst = std::max(worst, std::abs(quad - v.squaredNorm()));
      }
      return at_most(worst, 1e-10, "|grid quadrature of f^2 - ||coeffs||^2|");
    });
    run_check(out, "spectral.isometry", [&] {
      const SpectralModel m = build_spectral(2, 0.8, 0.5, Reward::Abs, 256);
      double worst = 0.0;
      for (int t = 0; t < 20; ++t) {
        SpectralVector v(m.dim());
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = (2.0 * rng.uniform() - 1.0) / (1.0 + basis_frequency(i));
        worst = std::max(worst, std::abs(l2_norm(v) - h_norm(m, m.c.cwiseSqrt().cwiseProduct(v))));
      }
      return at_most(worst, 1e-12, "| ||f||_L2 - ||Sigma^1/2 f||_H |");
    });
    run_check(out, "spectral.whitened_lag_operator_norm", [&] {
      double worst = 0.0;
      for (double eps : {0.2, 0.5, 0.8, 1.0}) {
        for (int s : {1, 2}) {
          for (int omega : opts.omegas) worst = std::max(worst, check_lemma1(build_spectral(s, eps, 0.5, Reward::Abs, omega)));
        }
      }
      return at_most(worst, 1.0 + 1e-8, "max ||Sigma~1||_op");
    });
    run_check(out, "spectral.block_psd", [&] {
      double worst = INFINITY;
      for (double eps : {0.2, 0.8}) worst = std::min(worst, block_psd_min_eig(build_spectral(1, eps, 0.5, Reward::Abs, 256)));
      return CheckResult{"", worst >= -1e-10, worst, -1e-10, "min eigenvalue of [[S, S1], [S1^T, S]] (must be >= bound)"};
    });
    run_check(out, "spectral.transition_contraction", [&] {
      double worst = 0.0;
      for (double eps : {0.2, 0.5, 0.8, 1.0}) {
        for (int omega : opts.omegas) worst = std::max(worst, check_contraction(build_spectral(1, eps, 0.5, Reward::Abs, omega), 20, rng));
      }
      return at_most(worst, 1.0 + 1e-8, "max ||PV|| / ||V||");
    });
    run_check(out, "spectral.max_theta", [&] {
      int wrong = 0;
      std::ostringstream d;
      for (const auto& c : cells) {
        const double t = max_stable_theta(max_theta_diagnostic(build_spectral(c.s, 0.8, 0.5, c.r, 256), default_theta_grid()));
        d << "s" << c.s << "/" << reward_name(c.r) << "=" << t << " ";
        if (std::abs(t - c.theta) > 1e-12) ++wrong;
      }
      return at_most(wrong, 0, d.str());
    });
    // Norm and bias bounds at each truncation, then the truncation sensitivity.
    std::vector<std::vector<BoundRow>> biasRowsByOmega;
    run_check(out, "spectral.regularized_norm_bound", [&] {
      int violations = 0;
      double worstRatio = 0.0;
      for (const auto& c : cells) {
        for (int omega : opts.omegas) {
          for (const auto& row : check_prop3(build_spectral(c.s, 0.8, 0.5, c.r, omega), lambdaGrid)) {
            violations += row.holds ? 0 : 1;
            worstRatio = std::max(worstRatio, row.lhs / row.rhs);
          }
        }
      }
      return CheckResult{"", violations == 0, worstRatio, 1.0, "max ||V*_l||_H / (||Sigma r||_H / l)"};
    });
    run_check(out, "spectral.regularization_bias_bound", [&] {
      int violations = 0;
      double worstRatio = 0.0;
      for (const auto& c : cells) {
        for (int omega : opts.omegas) {
          auto rows = check_prop4(build_spectral(c.s, 0.8, 0.5, c.r, omega), lambdaGrid, c.theta);
          for (const auto& row : rows) {
            violations += row.holds ? 0 : 1;
            worstRatio = std::max(worstRatio, row.lhs / row.rhs);
          }
          biasRowsByOmega.push_back(std::move(rows));
        }
      }
      return CheckResult{"", violations == 0, worstRatio, 1.0, "max lhs / rhs over cells, lambdas, truncations"};
    });
    if (opts.omegas.size() >= 2) {
      run_check(out, "spectral.truncation_insensitivity", [&] {
        double worst = 0.0;
        const std::size_t per = opts.omegas.size();
        for (std::size_t c = 0; c + 1 < biasRowsByOmega.size(); c += per) {
          const auto& a = biasRowsByOmega[c];
          const auto& b = biasRowsByOmega[c + per - 1];
          for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(b[i].lhs - a[i].lhs) / a[i].lhs);
        }
        return at_most(worst, 1e-3, "max relative change of the bias between the smallest and largest truncation");
      });
    }
    run_check(out, "spectral.ode_descent", [&] {
      double worst = 0.0;
      bool ok = true;
      for (Reward r : {Reward::Abs, Reward::Cos}) {
        const SpectralModel m = build_spectral(1, 0.8, 0.5, r, 256);
        const double lambda = 0.1;
        const auto traj = ode_integrate(m, lambda, 10.0, default_ode_step(m, lambda));
        const DescentReport rep = check_descent(m, traj, lambda);
        worst = std::max(worst, rep.maxIncrease);
        ok = ok && rep.monotone;
      }
      return CheckResult{"", ok, worst, 1e-8, "max increase of W0 between checkpoints"};
    });
    run_check(out, "spectral.ode_exponential_bound", [&] {
      const SpectralModel m = build_spectral(1, 0.8, 0.5, Reward::Cos, 256);
      const double lambda = 0.1;
      const auto traj = ode_integrate(m, lambda, 10.0, default_ode_step(m, lambda));
      const BoundRow row = check_fast_ode_bound(m, traj, lambda);
      return CheckResult{"", row.holds, row.lhs, row.rhs, "||V_T - V*_l||_H^2 vs ||V*_l||_H^2 e^{-2 l T}"};
    });
    run_check(out, "spectral.ode_averaged_bound", [&] {
      const SpectralModel m = build_spectral(1, 0.8, 0.5, Reward::Cos, 256);
      const auto traj = ode_integrate(m, 0.0, 20.0, default_ode_step(m, 0.0));
      const BoundRow row = check_averaged_ode_bound(m, traj);
      return CheckResult{"", row.holds, row.lhs, row.rhs, "||Vbar_T - V*||^2 vs ||V*||_H^2 / (2 (1-gamma) T)"};
    });
    run_check(out, "spectral.sigma1_monte_carlo", [&] {
      const SpectralModel m = build_spectral(1, 0.8, 0.5, Reward::Abs, 64);
      const int block = 9;
      const Sigma1McReport rep = sigma1_monte_carlo(m, block, 1000000, rng);
      // 3 sigma family-wise over the block entries (Bonferroni)
      const double zBound = bonferroni_z(0.0027, block * block);
      std::ostringstream d;
      d << "max |MC - built| = " << rep.maxAbsDiff << ", max z = " << rep.maxZScore;
      return CheckResult{"", rep.maxAbsDiff <= 0.01 && rep.maxZScore <= zBound, rep.maxZScore, zBound, d.str()};
    });
    run_check(out, "spectral.sigma1_printed_form_rejected", [&] {
      const SpectralModel m = build_spectral(1, 0.8, 0.5, Reward::Abs, 64, Sigma1Form::PrintedRankOne);
      const Sigma1McReport rep = sigma1_monte_carlo(m, 9, 200000, rng);
      return CheckResult{"", rep.maxAbsDiff > 0.01, rep.maxAbsDiff, 0.01,
                         "max |MC - built| for the eps sqrt(c) sqrt(c)^T variant (must exceed bound)"};
    });
    run_check(out, "contract.solve_v_lambda_rejects_zero", [&] {
      const SpectralModel m = build_spectral(1, 0.8, 0.5, Reward::Abs, 16);
      try {
        (void)solve_v_lambda(m, 0.0);
      } catch (const std::invalid_argument& e) {
        return CheckResult{"", true, 0.0, 0.0, std::string("precondition error surfaced: ") + e.what()};
      }
      return CheckResult{"", false, 0.0, 0.0, "lambda = 0 was accepted"};
    });
  }
  return out;
}

std::string oracle_report_text(const std::vector<CheckResult>& checks) {
  std::ostringstream out;
  int failed = 0;
  for (const auto& c : checks) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << "  measured=" << format_double(c.measured)
        << " bound=" << format_double(c.bound);
    if (!c.detail.empty()) out << "  (" << c.detail << ")";
    out << '\n';
    failed += c.passed ? 0 : 1;
  }
  out << checks.size() - static_cast<std::size_t>(failed) << "/" << checks.size() << " checks passed\n";
  return out.str();
}

nlohmann::json oracle_report_json(const std::vector<CheckResult>& checks) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& c : checks) {
    j.push_back({{"name", c.name},
                 {"passed", c.passed},
                 {"measured", format_double(c.measured)},
                 {"bound", format_double(c.bound)},
                 {"detail", c.detail}});
  }
  return j;
}

}  // namespace ktd
