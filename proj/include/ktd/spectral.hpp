#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ktd/mrp.hpp"
#include "ktd/rng.hpp"

namespace ktd {

/// Coefficients in the real orthonormal basis of L2(p)
///   index 0: 1, index 2w-1: sqrt2 cos(2 pi w x), index 2w: sqrt2 sin(2 pi w x).
using SpectralVector = Eigen::VectorXd;

/// How the lag-one covariance is assembled. `TransitionLaw` couples only the
/// constant mode; `PrintedRankOne` is the eps sqrt(c) sqrt(c)^T variant, kept
/// so the Monte-Carlo check can be shown to reject it.
enum class Sigma1Form { TransitionLaw, PrintedRankOne };

/// Truncated Fourier model of the circle chain with a spline kernel.
struct SpectralModel {
  int omegaMax = 256;
  int order = 1;
  double epsilon = 0.8;
  double gamma = 0.5;
  Reward reward = Reward::Abs;

  Eigen::VectorXd c;       // eigenvalues of Sigma per basis index
  Eigen::MatrixXd sigma1;  // d x d
  SpectralVector rHat;
  SpectralVector vStarHat;

  [[nodiscard]] Eigen::Index dim() const { return c.size(); }
  /// 1 + 2 zeta(2s), the untruncated sup of K(x, x).
  [[nodiscard]] double maxDiagonal() const;
  /// A = gamma Sigma1 - Sigma.
  [[nodiscard]] Eigen::MatrixXd a_matrix() const;
  /// b = Sigma r.
  [[nodiscard]] SpectralVector b_vector() const;
};

/// Frequency carried by a basis index.
int basis_frequency(Eigen::Index index);

/// Value at x of the function with coefficients v.
double spectral_eval(const SpectralVector& v, double x);

SpectralModel build_spectral(int s, double epsilon, double gamma, Reward reward, int omegaMax,
                             Sigma1Form form = Sigma1Form::TransitionLaw);

double l2_norm(const SpectralVector& v);
double h_norm(const SpectralModel& m, const SpectralVector& v);

/// Unique solution of Sigma r + (gamma Sigma1 - Sigma - lambda I) V = 0.
/// Throws std::invalid_argument for lambda <= 0.
SpectralVector solve_v_lambda(const SpectralModel& m, double lambda);

/// sqrt(sum_w v_w^2 / c_w^(1+theta)).
double source_norm(const SpectralModel& m, const SpectralVector& v, double theta);

struct ThetaDiagnostic {
  double theta = 0.0;
  double norm = 0.0;         // at omegaMax
  double normDoubled = 0.0;  // at 2 omegaMax
  double ratio = 0.0;
  bool stable = false;       // ratio < 1.05
};

/// Source norm of V* across a theta grid at Omega and 2 Omega.
std::vector<ThetaDiagnostic> max_theta_diagnostic(const SpectralModel& m, const std::vector<double>& thetaGrid);

/// Largest theta in the grid whose norm is stable, scanning upward until the
/// first unstable entry. Returns -1 if none is stable.
double max_stable_theta(const std::vector<ThetaDiagnostic>& diag);

struct OdeTrajectory {
  std::vector<double> times;
  std::vector<SpectralVector> states;    // V_t
  std::vector<SpectralVector> averages;  // (1/t) int_0^t V_u du, V_0 at t = 0
};

/// Default step 0.05 / (M_H + lambda).
double default_ode_step(const SpectralModel& m, double lambda);

/// Classical 4-stage Runge-Kutta for dV/dt = (A - lambda I) V + b, V_0 = 0.
/// Throws std::invalid_argument for dt above 0.1 / (M_H + lambda) and
/// std::runtime_error if the state blows up.
OdeTrajectory ode_integrate(const SpectralModel& m, double lambda, double horizon, double dt, int checkpoints = 200);

/// ||Sigma^{-1/2} Sigma1 Sigma^{-1/2}||_op on the truncation.
double check_lemma1(const SpectralModel& m);

/// Smallest eigenvalue of [[Sigma, Sigma1], [Sigma1^T, Sigma]].
double block_psd_min_eig(const SpectralModel& m);

/// Largest ||P V|| / ||V|| over random V (plus the constant function), with
/// P = Sigma^{-1} Sigma1.
double check_contraction(const SpectralModel& m, int trials, Rng& rng);

struct BoundRow {
  double lambda = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

/// ||V*_lambda - V*||^2 <= lambda^(1+theta) ||Sigma^{-theta/2} V*||_H^2 / (1-gamma)^2.
std::vector<BoundRow> check_prop4(const SpectralModel& m, const std::vector<double>& lambdaGrid, double theta);

/// ||V*_lambda||_H <= ||Sigma r||_H / lambda <= sqrt(M_H) ||r|| / lambda.
/// `rhs` holds the first bound; holds requires both.
std::vector<BoundRow> check_prop3(const SpectralModel& m, const std::vector<double>& lambdaGrid);

struct DescentReport {
  double maxIncrease = 0.0;  // max_i W(t_{i+1}) - W(t_i)
  bool monotone = false;
};

/// W0(t) = ||V_t - V*_lambda||_H^2 along the trajectory, non-increasing within tol.
DescentReport check_descent(const SpectralModel& m, const OdeTrajectory& traj, double lambda, double tol = 1e-8);

/// Final-time exponential bound ||V_T - V*_l||_H^2 <= ||V*_l||_H^2 exp(-2 lambda T).
BoundRow check_fast_ode_bound(const SpectralModel& m, const OdeTrajectory& traj, double lambda);

/// Averaged unregularized bound ||Vbar_T - V*||^2 <= ||V*||_H^2 / (2 (1-gamma) T).
BoundRow check_averaged_ode_bound(const SpectralModel& m, const OdeTrajectory& traj);

struct Sigma1McReport {
  double maxAbsDiff = 0.0;
  double maxZScore = 0.0;  // |MC - built| / standard error, over entries with nonzero spread
  int block = 0;
};

/// Monte-Carlo estimate of the leading block of Sigma1, entry (a,b) being
/// c_a E[phi_a(x) phi_b(x')] over stationary pairs.
Sigma1McReport sigma1_monte_carlo(const SpectralModel& m, int block, int samples, Rng& rng);

}  // namespace ktd
