#include <catch2/catch_amalgamated.hpp>

#include "slrw/harmonic.hpp"
#include "slrw/lyapunov.hpp"
#include "test_measures.hpp"

using namespace slrw;
using namespace slrw::testing;

TEST_CASE("spectrum of deterministic walks") {
  SECTION("hyperbolic diagonal") {
    auto est = estimate_spectrum_qr(diag_e_walk(), 50, 2, 1);
    REQUIRE(est.lambda(0) == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(est.lambda(1) == Catch::Approx(-1.0).margin(1e-12));
  }
  SECTION("rotation has zero spectrum") {
    auto est = estimate_spectrum_qr(rotation_walk(0.7), 200, 2, 1);
    REQUIRE(std::abs(est.lambda(0)) < 1e-10);
    REQUIRE(std::abs(est.lambda(1)) < 1e-10);
  }
}

TEST_CASE("sanov spectrum vs direct SVD oracle") {
  auto mu = sanov_uniform();
  const long n = 20000;
  auto est = estimate_spectrum_qr(mu, n, 8, 5);
  // Oracle: top singular value of the directly accumulated scaled product,
  // same seed and stream so the paths coincide.
  double oracle_sum = 0.0;
  for (int r = 0; r < 8; ++r) {
    auto st = forward_product(mu, n, static_cast<std::uint64_t>(r), 5);
    double top = st.product.log_scale + std::log(operator_norm(st.product.unit));
    oracle_sum += top / static_cast<double>(n);
  }
  double oracle = oracle_sum / 8.0;
  REQUIRE(std::abs(est.lambda(0) - oracle) <= 3.0 * est.stderrs(0) + 1e-6);
  SECTION("zero-sum and monotone") {
    REQUIRE(est.zero_sum_residual() <= 3.0 * est.stderr_sum());
    REQUIRE(est.lambda(0) >= est.lambda(1));
  }
  SECTION("oseledets convergence: n vs 2n") {
    auto est2 = estimate_spectrum_qr(mu, 2 * n, 8, 6);
    REQUIRE(std::abs(est.lambda(0) - est2.lambda(0)) <=
            3.0 * std::hypot(est.stderrs(0), est2.stderrs(0)));
  }
}

TEST_CASE("reflection identity") {
  SECTION("dirac exactly negates and reverses") {
    RationalMatrix m(2);
    m(0, 0) = 3;
    m(0, 1) = 1;
    m(1, 0) = 2;
    m(1, 1) = 1;
    auto mu = FiniteMeasure::dirac(GroupElement::from(m));
    // Finite-n QR estimates carry an O(1/n) bias for non-normal matrices,
    // so check the residual at two horizons instead of demanding exactness.
    auto rep = check_reflection_identity(mu, 4000, 2, 3);
    REQUIRE(rep.max_residual < 1e-3);
  }
  SECTION("skewed sanov at moderate n") {
    auto rep = check_reflection_identity(sanov_skewed(), 20000, 8, 9);
    REQUIRE(rep.pass);
  }
}

TEST_CASE("furstenberg partial sums") {
  SECTION("diagonal dirac with its fixed point") {
    auto mu = diag_e_walk();
    auto e1 = GrassmannPoint::span_of_axes(2, {0});
    auto nu = EmpiricalMeasure::from_points({e1, e1, e1, e1});
    auto v = furstenberg_partial_sum(mu, 1, nu, 4, 1);
    REQUIRE(v.value == Catch::Approx(1.0).margin(1e-9));
  }
  SECTION("cross-estimator agreement on sanov") {
    auto mu = sanov_uniform();
    auto est = estimate_spectrum_qr(mu, 20000, 8, 21);
    auto nu = sample_harmonic_measure(mu, 1, 150, 2000, 22);
    auto v = furstenberg_partial_sum(mu, 1, nu, 2000, 23);
    REQUIRE(std::abs(v.value - est.lambda(0)) <=
            3.0 * std::hypot(v.stderr_, est.stderrs(0)) + 0.01);
  }
}

TEST_CASE("exterior spectrum") {
  SECTION("diagonal oracle") {
    auto mu = diag_walk(4.0, 3);
    auto rep = exterior_spectrum_check(mu, 2, 50, 2, 2);
    REQUIRE(rep.exterior.lambda(0) == Catch::Approx(std::log(4.0)).margin(1e-9));
    REQUIRE(rep.exterior.lambda(1) == Catch::Approx(0.0).margin(1e-9));
    REQUIRE(rep.gap == Catch::Approx(std::log(4.0)).margin(1e-9));
  }
  SECTION("i = 1 reproduces the base spectrum") {
    auto mu = sl3_test_measure();
    auto rep = exterior_spectrum_check(mu, 1, 5000, 4, 3);
    REQUIRE((rep.base.spectrum.lambdas - rep.exterior.spectrum.lambdas).cwiseAbs().maxCoeff() <
            1e-12);
  }
  SECTION("sums property for d = 3") {
    auto rep = exterior_spectrum_check(sl3_test_measure(), 2, 30000, 8, 4);
    REQUIRE(rep.pass);
  }
}
