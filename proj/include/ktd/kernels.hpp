#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

namespace ktd {

/// A state of the chain. Points on the torus [0,1) for the spline kernels,
/// integer-valued ids for the Dirac kernel.
using State = double;

enum class KernelKind { SobolevSpline, Dirac };

/// Positive-definite kernel descriptor.
///
/// SobolevSpline(s) is the periodic spline kernel of order s on the torus,
///   K_s(x, y) = 1 + (-1)^(s-1) (2 pi)^(2s) / (2s)! * B_2s({x - y}),
/// with B_j the Bernoulli polynomials. Only s in {1, 2} is supported.
/// Dirac(m) is the indicator kernel on the finite set {0, ..., m-1}, which
/// turns kernel TD into tabular TD.
struct KernelSpec {
  KernelKind kind = KernelKind::SobolevSpline;
  int order = 1;       // s, SobolevSpline only
  int stateCount = 0;  // Dirac only

  static KernelSpec sobolev(int s);
  static KernelSpec dirac(int stateCount);

  /// sup_x K(x, x): 1 + 2 zeta(2s) for splines, 1 for Dirac.
  [[nodiscard]] double max_diagonal() const;
  [[nodiscard]] std::string name() const;

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

/// B_2(t) or B_4(t). Throws std::invalid_argument for other orders.
double bernoulli_poly(int order, double t);

/// Fractional part in [0, 1), also for negative arguments.
double frac_part(double x);

double kernel_eval(const KernelSpec& spec, State x, State y);

/// Dense symmetric kernel matrix, full (not packed) storage.
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, std::span<const State> points);

struct LowRankFactor {
  Eigen::MatrixXd columns;           // n x m, K ~= L L^T
  std::vector<std::size_t> pivotOrder;
  double residualTrace = 0.0;        // trace(K - L L^T)

  [[nodiscard]] std::size_t rank() const { return static_cast<std::size_t>(columns.cols()); }
};

constexpr int kDefaultMaxRank = 100;
constexpr double kDefaultCholeskyTol = 1e-9;

/// Greedy pivoted (incomplete) Cholesky on the implicit kernel matrix.
///
/// Kernel columns are computed on demand for the selected pivots only; the
/// pivot is the point with the largest remaining diagonal residual. Stops
/// once the residual trace is <= tol or the rank reaches maxRank.
LowRankFactor incomplete_cholesky(const KernelSpec& spec, std::span<const State> points,
                                  int maxRank = kDefaultMaxRank,
                                  double tol = kDefaultCholeskyTol);

}  // namespace ktd
