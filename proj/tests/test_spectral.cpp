#include <doctest.h>

#include <cmath>

#include "ktd/spectral.hpp"
#include "ktd/td_learner.hpp"

using namespace ktd;

TEST_CASE("basis layout") {
  CHECK(basis_frequency(0) == 0);
  CHECK(basis_frequency(1) == 1);
  CHECK(basis_frequency(2) == 1);
  CHECK(basis_frequency(5) == 3);
  SpectralVector v = SpectralVector::Zero(5);
  v(1) = 1.0;
  CHECK(spectral_eval(v, 0.0) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("model reproduces reward and value") {
  for (Reward r : {Reward::Abs, Reward::Cos}) {
    const auto m = build_spectral(1, 0.8, 0.5, r, 512);
    CHECK(m.dim() == 1025);
    CHECK(m.c(0) == 1.0);
    for (double x : {0.05, 0.3, 0.61}) {
      CHECK(spectral_eval(m.rHat, x) == doctest::Approx(reward_eval(r, x)).epsilon(1e-3));
      CHECK(spectral_eval(m.vStarHat, x) == doctest::Approx(true_value({0.8, 0.5, r}, x)).epsilon(1e-3));
    }
  }
  CHECK_THROWS(build_spectral(1, 0.8, 0.5, Reward::Abs, 4));
}

TEST_CASE("sigma1 limits") {
  const auto one = build_spectral(2, 1.0, 0.5, Reward::Abs, 16);
  Eigen::MatrixXd e0 = Eigen::MatrixXd::Zero(one.dim(), one.dim());
  e0(0, 0) = 1.0;
  CHECK((one.sigma1 - e0).norm() == 0.0);
  const auto tiny = build_spectral(2, 1e-14, 0.5, Reward::Abs, 16);
  CHECK((tiny.sigma1 - Eigen::MatrixXd(tiny.c.asDiagonal())).norm() <= 1e-13);
}

TEST_CASE("regularized fixed point closed forms") {
  const double lambda = 0.1;
  const auto g0 = build_spectral(1, 0.8, 0.0, Reward::Abs, 32);
  const auto v = solve_v_lambda(g0, lambda);
  for (Eigen::Index i = 0; i < g0.dim(); ++i) CHECK(v(i) == doctest::Approx(g0.c(i) * g0.rHat(i) / (g0.c(i) + lambda)));

  const auto e1 = build_spectral(1, 1.0, 0.5, Reward::Cos, 32);
  const auto w = solve_v_lambda(e1, lambda);
  CHECK(w(0) == doctest::Approx(e1.rHat(0) / (1 + lambda - 0.5)));
  for (Eigen::Index i = 1; i < e1.dim(); ++i) CHECK(w(i) == doctest::Approx(e1.c(i) * e1.rHat(i) / (e1.c(i) + lambda)));

  const auto m = build_spectral(1, 0.8, 0.5, Reward::Abs, 256);
  for (double l : {0.01, 0.1, 1.0}) {
    CHECK(h_norm(m, solve_v_lambda(m, l)) <= std::sqrt(m.maxDiagonal()) * l2_norm(m.rHat) / l);
  }
  CHECK_THROWS_AS(solve_v_lambda(m, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(solve_v_lambda(m, -1.0), std::invalid_argument);
}

TEST_CASE("fixed point satisfies the population equation") {
  const auto m = build_spectral(2, 0.5, 0.7, Reward::Abs, 64);
  const auto v = solve_v_lambda(m, 0.05);
  const SpectralVector res = m.b_vector() + m.a_matrix() * v - 0.05 * v;
  CHECK(res.norm() <= 1e-12);
}

TEST_CASE("source norms") {
  const auto m = build_spectral(1, 0.8, 0.5, Reward::Abs, 64);
  CHECK(source_norm(m, m.vStarHat, -1.0) == doctest::Approx(l2_norm(m.vStarHat)).epsilon(1e-14));
  CHECK(source_norm(m, m.vStarHat, 0.0) == doctest::Approx(h_norm(m, m.vStarHat)).epsilon(1e-14));
  const auto c = build_spectral(1, 0.8, 0.5, Reward::Cos, 64);
  // r_cos = 1/2 + cos / 2, so the sqrt2 cos coefficient is 1/(2 sqrt2)
  CHECK(source_norm(c, c.rHat, 1.0) == doctest::Approx(std::sqrt(0.25 + 0.125)).epsilon(1e-14));
}

TEST_CASE("maximal theta per cell") {
  const auto grid = std::vector<double>{-1, -0.75, -0.5, -0.25, 0, 0.25, 0.5, 0.75, 1};
  struct Row {
    int s;
    Reward r;
    double theta;
  };
  for (const Row& row : {Row{1, Reward::Abs, 0.5}, Row{2, Reward::Abs, -0.25}, Row{1, Reward::Cos, 1.0}, Row{2, Reward::Cos, 1.0}}) {
    const auto diag = max_theta_diagnostic(build_spectral(row.s, 0.8, 0.5, row.r, 256), grid);
    CHECK(max_stable_theta(diag) == row.theta);
  }
}

TEST_CASE("whitened lag operator norm and contraction") {
  Rng rng(5);
  CHECK(check_lemma1(build_spectral(1, 1e-12, 0.5, Reward::Abs, 32)) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(check_lemma1(build_spectral(2, 1.0, 0.5, Reward::Abs, 32)) == doctest::Approx(1.0));
  const double mid = check_lemma1(build_spectral(1, 0.8, 0.5, Reward::Abs, 128));
  CHECK(mid > 0.0);
  CHECK(mid <= 1 + 1e-8);
  CHECK(check_contraction(build_spectral(1, 0.5, 0.5, Reward::Abs, 32), 20, rng) <= 1 + 1e-8);

  // restart chain maps zero-mean functions to zero
  const auto e1 = build_spectral(1, 1.0, 0.5, Reward::Abs, 32);
  SpectralVector v = SpectralVector::Random(e1.dim());
  v(0) = 0.0;
  const SpectralVector pv = e1.c.cwiseInverse().asDiagonal() * (e1.sigma1 * v);
  CHECK(pv.norm() == 0.0);
  SpectralVector one = SpectralVector::Zero(e1.dim());
  one(0) = 1.0;
  CHECK((e1.c.cwiseInverse().asDiagonal() * (e1.sigma1 * one) - one).norm() == 0.0);
}

TEST_CASE("bias and norm bounds") {
  const auto m = build_spectral(1, 0.8, 0.5, Reward::Abs, 256);
  for (const auto& row : check_prop4(m, {0.1}, 0.5)) CHECK(row.holds);
  for (const auto& row : check_prop3(m, {1e-3, 1e-2, 1e-1, 1.0})) CHECK(row.holds);
  // bias vanishes as lambda -> 0 for the smooth reward
  const auto c = build_spectral(1, 0.8, 0.5, Reward::Cos, 64);
  const auto rows = check_prop4(c, {1e-1, 1e-3, 1e-5}, 1.0);
  CHECK(rows[2].lhs < rows[1].lhs);
  CHECK(rows[1].lhs < rows[0].lhs);
  CHECK(rows[2].lhs < 1e-9);
  // gamma = 0 reduces to coordinatewise ridge shrinkage
  const auto g0 = build_spectral(1, 0.8, 0.0, Reward::Abs, 64);
  for (const auto& row : check_prop4(g0, {1e-2, 1e-1}, -1.0)) CHECK(row.holds);
}

TEST_CASE("ode integration") {
  const auto m = build_spectral(1, 0.8, 0.5, Reward::Cos, 64);
  auto zero = m;
  zero.rHat.setZero();
  zero.vStarHat.setZero();
  const auto z = ode_integrate(zero, 0.1, 5.0, default_ode_step(zero, 0.1));
  for (const auto& s : z.states) CHECK(s.norm() == 0.0);

  const auto t = ode_integrate(m, 0.1, 10.0, default_ode_step(m, 0.1));
  CHECK(check_descent(m, t, 0.1).monotone);
  CHECK(check_fast_ode_bound(m, t, 0.1).holds);
  const auto t0 = ode_integrate(m, 0.0, 20.0, default_ode_step(m, 0.0));
  CHECK(check_averaged_ode_bound(m, t0).holds);
  CHECK_THROWS(ode_integrate(m, 0.1, 1.0, 1.0));
}

TEST_CASE("sigma1 monte carlo discriminates the two forms") {
  Rng rng(17);
  const auto good = build_spectral(1, 0.8, 0.5, Reward::Abs, 16);
  const auto bad = build_spectral(1, 0.8, 0.5, Reward::Abs, 16, Sigma1Form::PrintedRankOne);
  CHECK(sigma1_monte_carlo(good, 9, 200000, rng).maxAbsDiff <= 0.01);
  CHECK(sigma1_monte_carlo(bad, 9, 200000, rng).maxAbsDiff > 0.01);
}

TEST_CASE("block psd and quadrature agreement") {
  CHECK(block_psd_min_eig(build_spectral(2, 0.3, 0.5, Reward::Abs, 32)) >= -1e-10);
  Rng rng(3);
  const auto m = build_spectral(1, 0.8, 0.5, Reward::Abs, 16);
  for (int t = 0; t < 20; ++t) {
    SpectralVector v(m.dim());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.uniform() - 0.5;
    const double q = l2_distance_sq([&](double x) { return spectral_eval(v, x); }, [](double) { return 0.0; }, 128);
    CHECK(std::abs(q - v.squaredNorm()) <= 1e-10);
    CHECK(v.squaredNorm() <= m.maxDiagonal() * std::pow(h_norm(m, v), 2));
  }
}
