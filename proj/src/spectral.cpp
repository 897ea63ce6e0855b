#include "ktd/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ktd/kernels.hpp"

namespace ktd {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;

double basis_eval(Eigen::Index index, double x) {
  if (index == 0) return 1.0;
  const int w = basis_frequency(index);
  const double arg = 2.0 * kPi * w * x;
  return (index % 2 == 1) ? kSqrt2 * std::cos(arg) : kSqrt2 * std::sin(arg);
}
}  // namespace

int basis_frequency(Eigen::Index index) { return static_cast<int>((index + 1) / 2); }

double spectral_eval(const SpectralVector& v, double x) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += v(i) * basis_eval(i, x);
  return acc;
}

double SpectralModel::maxDiagonal() const { return KernelSpec::sobolev(order).max_diagonal(); }

Eigen::MatrixXd SpectralModel::a_matrix() const {
  Eigen::MatrixXd a = gamma * sigma1;
  a.diagonal() -= c;
  return a;
}

SpectralVector SpectralModel::b_vector() const { return c.cwiseProduct(rHat); }

SpectralModel build_spectral(int s, double epsilon, double gamma, Reward reward, int omegaMax, Sigma1Form form) {
  if (omegaMax < 8) throw std::invalid_argument("spectral truncation needs omegaMax >= 8");
  MrpModel{epsilon, gamma, reward}.validate();
  (void)KernelSpec::sobolev(s);

  SpectralModel m;
  m.omegaMax = omegaMax;
  m.order = s;
  m.epsilon = epsilon;
  m.gamma = gamma;
  m.reward = reward;

  const Eigen::Index d = 2 * omegaMax + 1;
  m.c.resize(d);
  m.rHat.resize(d);
  m.c(0) = 1.0;
  m.rHat(0) = reward_fourier(reward, 0).real();
  for (int w = 1; w <= omegaMax; ++w) {
    const double cw = std::pow(static_cast<double>(w), -2.0 * s);
    const std::complex<double> rw = reward_fourier(reward, w);
    m.c(2 * w - 1) = cw;
    m.c(2 * w) = cw;
    m.rHat(2 * w - 1) = kSqrt2 * rw.real();
    m.rHat(2 * w) = -kSqrt2 * rw.imag();
  }

  m.sigma1 = Eigen::MatrixXd::Zero(d, d);
  m.sigma1.diagonal() = (1.0 - epsilon) * m.c;
  if (form == Sigma1Form::TransitionLaw) {
    m.sigma1(0, 0) += epsilon;
  } else {
    const Eigen::VectorXd root = m.c.cwiseSqrt();
    m.sigma1 += epsilon * root * root.transpose();
  }

  const ValueOracle vstar = value_oracle({epsilon, gamma, reward});
  m.vStarHat = vstar.affineScale * m.rHat;
  m.vStarHat(0) += vstar.affineShift;
  return m;
}

double l2_norm(const SpectralVector& v) { return v.norm(); }

double h_norm(const SpectralModel& m, const SpectralVector& v) {
  return std::sqrt(v.cwiseAbs2().cwiseQuotient(m.c).sum());
}

SpectralVector solve_v_lambda(const SpectralModel& m, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("solve_v_lambda requires lambda > 0");
  Eigen::MatrixXd sys = -m.a_matrix();
  sys.diagonal().array() += lambda;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys);
  if ((lu.matrixLU().diagonal().array() == 0.0).any()) throw std::runtime_error("singular regularized TD system");
  return lu.solve(m.b_vector());
}

double source_norm(const SpectralModel& m, const SpectralVector& v, double theta) {
  if (!(theta >= -1.0 && theta <= 1.0)) throw std::invalid_argument("theta must lie in [-1, 1]");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += v(i) * v(i) / std::pow(m.c(i), 1.0 + theta);
  return std::sqrt(acc);
}

std::vector<ThetaDiagnostic> max_theta_diagnostic(const SpectralModel& m, const std::vector<double>& thetaGrid) {
  const SpectralModel doubled = build_spectral(m.order, m.epsilon, m.gamma, m.reward, 2 * m.omegaMax);
  std::vector<ThetaDiagnostic> out;
  out.reserve(thetaGrid.size());
  for (double theta : thetaGrid) {
    ThetaDiagnostic row;
    row.theta = theta;
    row.norm = source_norm(m, m.vStarHat, theta);
    row.normDoubled = source_norm(doubled, doubled.vStarHat, theta);
    row.ratio = row.normDoubled / row.norm;
    row.stable = row.ratio < 1.05;
    out.push_back(row);
  }
  return out;
}

double max_stable_theta(const std::vector<ThetaDiagnostic>& diag) {
  std::vector<ThetaDiagnostic> sorted = diag;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.theta < b.theta; });
  double best = -1.0;
  for (const auto& row : sorted) {
    if (!row.stable) break;
    best = row.theta;
  }
  return best;
}

double default_ode_step(const SpectralModel& m, double lambda) { return 0.05 / (m.maxDiagonal() + lambda); }

OdeTrajectory ode_integrate(const SpectralModel& m, double lambda, double horizon, double dt, int checkpoints) {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");
  if (!(dt > 0.0) || dt > 0.1 / (m.maxDiagonal() + lambda)) throw std::invalid_argument("ODE step above stability limit");
  if (!(horizon > 0.0) || checkpoints < 1) throw std::invalid_argument("ODE horizon and checkpoint count must be positive");

  Eigen::MatrixXd op = m.a_matrix();
  op.diagonal().array() -= lambda;
  const SpectralVector b = m.b_vector();
  const auto steps = static_cast<long>(std::ceil(horizon / dt));
  const double h = horizon / static_cast<double>(steps);
  const long stride = std::max<long>(1, steps / checkpoints);

  const Eigen::Index d = m.dim();
  SpectralVector v = SpectralVector::Zero(d);
  SpectralVector integral = SpectralVector::Zero(d);

  OdeTrajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(v);
  traj.averages.push_back(v);

  // Augmented system (V, S) with S' = V so the running average is integrated
  // to the same order as V.
  const double bound = 1e6 * (1.0 + b.norm());
  for (long i = 1; i <= steps; ++i) {
    const SpectralVector k1 = op * v + b;
    const SpectralVector& s1 = v;
    const SpectralVector v2 = v + 0.5 * h * k1;
    const SpectralVector k2 = op * v2 + b;
    const SpectralVector v3 = v + 0.5 * h * k2;
    const SpectralVector k3 = op * v3 + b;
    const SpectralVector v4 = v + h * k3;
    const SpectralVector k4 = op * v4 + b;
    integral += (h / 6.0) * (s1 + 2.0 * v2 + 2.0 * v3 + v4);
    v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!v.allFinite() || v.norm() > bound) throw std::runtime_error("ODE integration unstable");
    if (i % stride == 0 || i == steps) {
      const double t = h * static_cast<double>(i);
      traj.times.push_back(t);
      traj.states.push_back(v);
      traj.averages.push_back(integral / t);
    }
  }
  return traj;
}

double check_lemma1(const SpectralModel& m) {
  const Eigen::VectorXd inv = m.c.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd tilde = inv.asDiagonal() * m.sigma1 * inv.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tilde.transpose() * tilde, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

double block_psd_min_eig(const SpectralModel& m) {
  const Eigen::Index d = m.dim();
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  block.topLeftCorner(d, d).diagonal() = m.c;
  block.bottomRightCorner(d, d).diagonal() = m.c;
  block.topRightCorner(d, d) = m.sigma1;
  block.bottomLeftCorner(d, d) = m.sigma1.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double check_contraction(const SpectralModel& m, int trials, Rng& rng) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  const Eigen::MatrixXd p = m.c.cwiseInverse().asDiagonal() * m.sigma1;
  const Eigen::Index d = m.dim();
  double worst = 0.0;
  for (int t = 0; t <= trials; ++t) {
    SpectralVector v(d);
    if (t == 0) {
      v.setZero();
      v(0) = 1.0;
    } else {
      for (Eigen::Index i = 0; i < d; ++i) v(i) = 2.0 * rng.uniform() - 1.0;
    }
    worst = std::max(worst, (p * v).norm() / v.norm());
  }
  return worst;
}

std::vector<BoundRow> check_prop4(const SpectralModel& m, const std::vector<double>& lambdaGrid, double theta) {
  const double src = source_norm(m, m.vStarHat, theta);
  std::vector<BoundRow> rows;
  for (double lambda : lambdaGrid) {
    BoundRow r;
    r.lambda = lambda;
    r.lhs = (solve_v_lambda(m, lambda) - m.vStarHat).squaredNorm();
    r.rhs = std::pow(lambda, 1.0 + theta) * src * src / ((1.0 - m.gamma) * (1.0 - m.gamma));
    r.holds = r.lhs <= r.rhs * (1.0 + 1e-6);
    rows.push_back(r);
  }
  return rows;
}

std::vector<BoundRow> check_prop3(const SpectralModel& m, const std::vector<double>& lambdaGrid) {
  const double sigmaR = h_norm(m, m.b_vector());
  const double coarse = std::sqrt(m.maxDiagonal()) * l2_norm(m.rHat);
  std::vector<BoundRow> rows;
  for (double lambda : lambdaGrid) {
    BoundRow r;
    r.lambda = lambda;
    r.lhs = h_norm(m, solve_v_lambda(m, lambda));
    r.rhs = sigmaR / lambda;
    const double slack = 1.0 + 1e-10;
    r.holds = r.lhs <= r.rhs * slack && r.rhs <= (coarse / lambda) * slack;
    rows.push_back(r);
  }
  return rows;
}

DescentReport check_descent(const SpectralModel& m, const OdeTrajectory& traj, double lambda, double tol) {
  const SpectralVector target = solve_v_lambda(m, lambda);
  DescentReport rep;
  double prev = std::numeric_limits<double>::infinity();
  double scale = 1.0;
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const double w = std::pow(h_norm(m, traj.states[i] - target), 2);
    if (i == 0) {
      scale = std::max(1.0, w);
    } else {
      rep.maxIncrease = std::max(rep.maxIncrease, w - prev);
    }
    prev = w;
  }
  rep.monotone = rep.maxIncrease <= tol * scale;
  return rep;
}

BoundRow check_fast_ode_bound(const SpectralModel& m, const OdeTrajectory& traj, double lambda) {
  const SpectralVector target = solve_v_lambda(m, lambda);
  const double t = traj.times.back();
  BoundRow r;
  r.lambda = lambda;
  r.lhs = std::pow(h_norm(m, traj.states.back() - target), 2);
  const double vn = h_norm(m, target);
  r.rhs = vn * vn * std::exp(-2.0 * lambda * t);
  r.holds = r.lhs <= r.rhs * (1.0 + 1e-8) + 1e-12;
  return r;
}

BoundRow check_averaged_ode_bound(const SpectralModel& m, const OdeTrajectory& traj) {
  const double t = traj.times.back();
  BoundRow r;
  r.lambda = 0.0;
  r.lhs = (traj.averages.back() - m.vStarHat).squaredNorm();
  const double vn = h_norm(m, m.vStarHat);
  r.rhs = vn * vn / (2.0 * (1.0 - m.gamma) * t);
  r.holds = r.lhs <= r.rhs * (1.0 + 1e-8);
  return r;
}

Sigma1McReport sigma1_monte_carlo(const SpectralModel& m, int block, int samples, Rng& rng) {
  if (block < 1 || block > m.dim() || samples < 2) throw std::invalid_argument("invalid Monte-Carlo block or sample count");
  const MrpModel chain{m.epsilon, m.gamma, m.reward};
  const auto nb = static_cast<Eigen::Index>(block);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(nb, nb);
  Eigen::MatrixXd sumSq = Eigen::MatrixXd::Zero(nb, nb);
  Eigen::VectorXd fx(nb);
  Eigen::VectorXd fy(nb);
  for (int i = 0; i < samples; ++i) {
    const SamplePair pair = sample_iid_pair(chain, rng);
    for (Eigen::Index a = 0; a < nb; ++a) {
      fx(a) = basis_eval(a, pair.x);
      fy(a) = basis_eval(a, pair.xNext);
    }
    const Eigen::MatrixXd outer = fx * fy.transpose();
    sum += outer;
    sumSq += outer.cwiseAbs2();
  }
  const double n = samples;
  Sigma1McReport rep;
  rep.block = block;
  for (Eigen::Index a = 0; a < nb; ++a) {
    for (Eigen::Index b = 0; b < nb; ++b) {
      const double mean = sum(a, b) / n;
      const double var = std::max(0.0, (sumSq(a, b) / n - mean * mean) * n / (n - 1.0));
      const double est = m.c(a) * mean;
      const double se = m.c(a) * std::sqrt(var / n);
      const double diff = std::abs(est - m.sigma1(a, b));
      rep.maxAbsDiff = std::max(rep.maxAbsDiff, diff);
      if (se > 1e-14) {
        rep.maxZScore = std::max(rep.maxZScore, diff / se);
      } else if (diff > 1e-12) {
        rep.maxZScore = std::numeric_limits<double>::infinity();
      }
    }
  }
  return rep;
}

}  // namespace ktd
