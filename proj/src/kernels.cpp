#include <algorithm>
#include "ktd/kernels.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ktd {

namespace {

constexpr double kPi = std::numbers::pi;

// zeta(2) and zeta(4) in closed form.
double zeta_even(int twoS) {
  switch (twoS) {
    case 2: return kPi * kPi / 6.0;
    case 4: return std::pow(kPi, 4) / 90.0;
    default: throw std::invalid_argument("unsupported spline order");
  }
}

int dirac_index(const KernelSpec& spec, State x) {
  const long id = std::lround(x);
  if (id < 0 || id >= spec.stateCount) throw std::invalid_argument("state id out of range for Dirac kernel");
  return static_cast<int>(id);
}

}  // namespace

KernelSpec KernelSpec::sobolev(int s) {
  if (s < 1) throw std::invalid_argument("spline order must be >= 1");
  if (s > 2) throw std::invalid_argument("only spline orders 1 and 2 are supported");
  return KernelSpec{KernelKind::SobolevSpline, s, 0};
}

KernelSpec KernelSpec::dirac(int stateCount) {
  if (stateCount < 1) throw std::invalid_argument("Dirac kernel needs at least one state");
  return KernelSpec{KernelKind::Dirac, 0, stateCount};
}

double KernelSpec::max_diagonal() const {
  if (kind == KernelKind::Dirac) return 1.0;
  return 1.0 + 2.0 * zeta_even(2 * order);
}

std::string KernelSpec::name() const {
  if (kind == KernelKind::Dirac) return "dirac" + std::to_string(stateCount);
  return "sobolev" + std::to_string(order);
}

double bernoulli_poly(int order, double t) {
  switch (order) {
    case 2: return t * t - t + 1.0 / 6.0;
    case 4: {
      const double t2 = t * t;
      return t2 * t2 - 2.0 * t2 * t + t2 - 1.0 / 30.0;
    }
    default: throw std::invalid_argument("unsupported Bernoulli order");
  }
}

double frac_part(double x) {
  double f = x - std::floor(x);
  // x slightly below an integer can round up to exactly 1.
  if (f >= 1.0) f = 0.0;
  return f;
}

double kernel_eval(const KernelSpec& spec, State x, State y) {
  if (spec.kind == KernelKind::Dirac) {
    return dirac_index(spec, x) == dirac_index(spec, y) ? 1.0 : 0.0;
  }
  // B_2s is symmetric about 1/2; taking the smaller of the two fractional
  // parts makes K(x, y) and K(y, x) bitwise equal.
  const double t = std::min(frac_part(x - y), frac_part(y - x));
  if (spec.order == 1) {
    // (2 pi)^2 / 2! = 2 pi^2
    return 1.0 + 2.0 * kPi * kPi * bernoulli_poly(2, t);
  }
  // -(2 pi)^4 / 4! = -2 pi^4 / 3
  return 1.0 - (2.0 * std::pow(kPi, 4) / 3.0) * bernoulli_poly(4, t);
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, std::span<const State> points) {
  if (points.empty()) throw std::invalid_argument("kernel matrix needs at least one point");
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = kernel_eval(spec, points[i], points[i]);
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = kernel_eval(spec, points[i], points[j]);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

LowRankFactor incomplete_cholesky(const KernelSpec& spec, std::span<const State> points,
                                  int maxRank, double tol) {
  if (maxRank < 1) throw std::invalid_argument("maxRank must be >= 1");
  if (tol < 0.0) throw std::invalid_argument("tolerance must be non-negative");
  const auto n = static_cast<Eigen::Index>(points.size());
  const Eigen::Index cap = std::min<Eigen::Index>(maxRank, n);

  Eigen::VectorXd residual(n);
  for (Eigen::Index i = 0; i < n; ++i) residual(i) = kernel_eval(spec, points[i], points[i]);

  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, cap);
  std::vector<std::size_t> pivots;
  pivots.reserve(static_cast<std::size_t>(cap));
  double trace = residual.sum();

  Eigen::Index m = 0;
  while (m < cap && trace > tol) {
    Eigen::Index p = 0;
    const double dp = residual.maxCoeff(&p);
    if (dp < -1e-10) throw std::runtime_error("kernel matrix not PSD");
    if (dp <= 0.0) break;
    const double pivot = std::sqrt(dp);
    for (Eigen::Index i = 0; i < n; ++i) {
      double v = kernel_eval(spec, points[i], points[p]);
      if (m > 0) v -= l.row(i).head(m).dot(l.row(p).head(m));
      l(i, m) = v / pivot;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      residual(i) -= l(i, m) * l(i, m);
      if (residual(i) < -1e-10) throw std::runtime_error("kernel matrix not PSD");
    }
    residual(p) = 0.0;
    pivots.push_back(static_cast<std::size_t>(p));
    ++m;
    trace = residual.cwiseMax(0.0).sum();
  }

  LowRankFactor out;
  out.columns = l.leftCols(m);
  out.pivotOrder = std::move(pivots);
  out.residualTrace = trace;
  return out;
}

}  // namespace ktd
