#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ktd/kernels.hpp"
#include "ktd/rng.hpp"

using namespace ktd;
using std::numbers::pi;

TEST_CASE("bernoulli polynomials at closed-form points") {
  CHECK(bernoulli_poly(2, 0.0) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(bernoulli_poly(2, 0.5) == doctest::Approx(-1.0 / 12.0).epsilon(1e-15));
  CHECK(bernoulli_poly(4, 0.0) == doctest::Approx(-1.0 / 30.0).epsilon(1e-15));
  CHECK_THROWS_WITH_AS(bernoulli_poly(3, 0.2), "unsupported Bernoulli order", std::invalid_argument);
  CHECK_THROWS(bernoulli_poly(6, 0.2));
}

TEST_CASE("fractional part stays in [0,1) for negative differences") {
  CHECK(frac_part(-0.25) == doctest::Approx(0.75));
  CHECK(frac_part(1.0) == 0.0);
  CHECK(frac_part(-1e-18) < 1.0);
  CHECK(frac_part(-1e-18) >= 0.0);
}

TEST_CASE("spline kernel values") {
  const auto s1 = KernelSpec::sobolev(1);
  const auto s2 = KernelSpec::sobolev(2);
  CHECK(kernel_eval(s1, 0.0, 0.0) == doctest::Approx(1.0 + pi * pi / 3.0).epsilon(1e-14));
  CHECK(kernel_eval(s1, 0.0, 0.0) == doctest::Approx(4.289868).epsilon(1e-6));
  CHECK(kernel_eval(s1, 0.2, 0.7) == doctest::Approx(1.0 - pi * pi / 6.0).epsilon(1e-12));
  CHECK(kernel_eval(s1, 0.2, 0.7) == doctest::Approx(-0.644934).epsilon(1e-6));
  CHECK(kernel_eval(s2, 0.0, 0.0) == doctest::Approx(1.0 + std::pow(pi, 4) / 45.0).epsilon(1e-14));
  CHECK(kernel_eval(s2, 0.0, 0.0) == doctest::Approx(3.164646).epsilon(1e-6));
  // cross-check against 1 + 2 zeta(2s)
  CHECK(s1.max_diagonal() == doctest::Approx(1.0 + 2.0 * pi * pi / 6.0).epsilon(1e-14));
  CHECK(s2.max_diagonal() == doctest::Approx(1.0 + 2.0 * std::pow(pi, 4) / 90.0).epsilon(1e-14));
}

TEST_CASE("kernel is symmetric and translation invariant") {
  Rng rng(3);
  for (int s : {1, 2}) {
    const auto k = KernelSpec::sobolev(s);
    for (int t = 0; t < 100; ++t) {
      const double x = rng.uniform(), y = rng.uniform(), h = rng.uniform();
      CHECK(kernel_eval(k, x, y) == kernel_eval(k, y, x));
      CHECK(kernel_eval(k, x, y) == doctest::Approx(kernel_eval(k, frac_part(x + h), frac_part(y + h))).epsilon(1e-9));
    }
  }
}

TEST_CASE("dirac kernel matrix") {
  const std::vector<State> pts = {0, 1, 0};
  const Eigen::MatrixXd k = kernel_matrix(KernelSpec::dirac(2), pts);
  Eigen::MatrixXd expected(3, 3);
  expected << 1, 0, 1, 0, 1, 0, 1, 0, 1;
  CHECK(k == expected);
  CHECK(KernelSpec::dirac(4).max_diagonal() == 1.0);
}

TEST_CASE("spline kernel matrix") {
  const std::vector<State> pts = {0.0, 0.5};
  const Eigen::MatrixXd k = kernel_matrix(KernelSpec::sobolev(1), pts);
  CHECK(k(0, 0) == doctest::Approx(1 + pi * pi / 3));
  CHECK(k(1, 1) == doctest::Approx(1 + pi * pi / 3));
  CHECK(k(0, 1) == doctest::Approx(1 - pi * pi / 6));
  CHECK(k(0, 1) == k(1, 0));

  const std::vector<State> single = {0.3};
  const Eigen::MatrixXd k1 = kernel_matrix(KernelSpec::sobolev(1), single);
  REQUIRE(k1.rows() == 1);
  CHECK(k1(0, 0) == doctest::Approx(1 + pi * pi / 3));

  CHECK_THROWS(kernel_matrix(KernelSpec::sobolev(1), std::vector<State>{}));
}

TEST_CASE("incomplete cholesky on identity is exact") {
  std::vector<State> pts = {0, 1, 2, 3, 4, 5};
  const auto f = incomplete_cholesky(KernelSpec::dirac(6), pts, 6, 1e-12);
  CHECK(f.rank() == 6);
  CHECK(f.residualTrace <= 1e-12);
  CHECK((f.columns * f.columns.transpose() - Eigen::MatrixXd::Identity(6, 6)).norm() < 1e-14);
}

TEST_CASE("incomplete cholesky single pivot by hand") {
  const auto spec = KernelSpec::sobolev(1);
  const std::vector<State> pts = {0.1, 0.35, 0.8};
  const auto f = incomplete_cholesky(spec, pts, 1, 0.0);
  REQUIRE(f.rank() == 1);
  const Eigen::MatrixXd k = kernel_matrix(spec, pts);
  // Equal diagonals: the first maximal entry is pivoted.
  const auto p = static_cast<Eigen::Index>(f.pivotOrder.at(0));
  const double expected = k.trace() - k.col(p).squaredNorm() / k(p, p);
  CHECK(f.residualTrace == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("incomplete cholesky on 500 spline points") {
  Rng rng(11);
  std::vector<State> pts(500);
  for (auto& p : pts) p = rng.uniform();
  const auto spec = KernelSpec::sobolev(2);
  const auto f = incomplete_cholesky(spec, pts, 100, 1e-8);
  const Eigen::MatrixXd k = kernel_matrix(spec, pts);
  const double dense = (k - f.columns * f.columns.transpose()).trace();
  CHECK(f.residualTrace == doctest::Approx(dense).epsilon(1e-6));
  CHECK(f.residualTrace >= 0.0);
  // No rank-100 factor beats the sum of the discarded eigenvalues; the greedy
  // pivoting should stay within a small factor of it.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k, Eigen::EigenvaluesOnly);
  const double optimal = es.eigenvalues().head(400).sum();
  CHECK(f.rank() == 100);
  CHECK(f.residualTrace >= optimal * (1 - 1e-9));
  CHECK(f.residualTrace <= 5.0 * optimal);
  CHECK(f.residualTrace <= 1e-5 * k.trace());
  MESSAGE("relative residual trace " << f.residualTrace / k.trace() << ", optimal " << optimal / k.trace());
}

TEST_CASE("incomplete cholesky argument checks") {
  const std::vector<State> pts = {0.1, 0.2};
  CHECK_THROWS(incomplete_cholesky(KernelSpec::sobolev(1), pts, 0, 1e-9));
  CHECK_THROWS(incomplete_cholesky(KernelSpec::sobolev(1), pts, 2, -1.0));
}
