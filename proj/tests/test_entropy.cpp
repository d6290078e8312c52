#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "slrw/entropy.hpp"
#include "slrw/harmonic.hpp"
#include "test_measures.hpp"

using namespace slrw;
using namespace slrw::testing;

namespace {

/// Independent oracle for the uniform walk on the free group F2: the word
/// length is a birth-death chain (+1 w.p. 3/4, -1 w.p. 1/4, reflected at 0)
/// and all reduced words of equal length are equally likely, so
/// H(mu^{*n}) = -sum_l P_n(l) log(P_n(l) / W_l), W_l = 4 * 3^(l-1).
double free_group_entropy(long n) {
  std::map<long, Rational> p{{0, Rational(1)}};
  for (long s = 0; s < n; ++s) {
    std::map<long, Rational> q;
    for (const auto& [l, w] : p) {
      if (l == 0) {
        q[1] += w;
      } else {
        q[l + 1] += w * Rational(3, 4);
        q[l - 1] += w * Rational(1, 4);
      }
    }
    p = std::move(q);
  }
  double h = 0.0;
  for (const auto& [l, w] : p) {
    double words = l == 0 ? 1.0 : 4.0 * std::pow(3.0, static_cast<double>(l - 1));
    double pw = static_cast<double>(w) / words;
    if (pw > 0) h -= static_cast<double>(w) * std::log(pw);
  }
  return h;
}

/// Walk on Z via the upper-triangular unipotents u(+-2); mu^{*n} is the
/// binomial distribution over lattice positions.
FiniteMeasure z_walk() {
  return FiniteMeasure::from_atoms(
      2, {{GroupElement::from(rat2(1, 2, 0, 1)), Rational(1, 2)},
          {GroupElement::from(rat2(1, -2, 0, 1)), Rational(1, 2)}});
}

double binomial_entropy(long n) {
  // H of Binomial(n, 1/2), computed in logs for stability.
  double h = 0.0;
  double log_choose = 0.0;  // log C(n, 0)
  for (long k = 0; k <= n; ++k) {
    double logp = log_choose - static_cast<double>(n) * std::log(2.0);
    h -= std::exp(logp) * logp;
    log_choose += std::log(static_cast<double>(n - k)) - std::log(static_cast<double>(k + 1));
  }
  return h;
}

std::vector<GrassmannPoint> circle_points(int count) {
  std::vector<GrassmannPoint> pts;
  for (int j = 0; j < count; ++j) {
    double theta = 3.14159265358979 * (static_cast<double>(j) + 0.5) / count;
    Matrix f(2, 1);
    f << std::cos(theta), std::sin(theta);
    pts.push_back(GrassmannPoint::from_frame(f));
  }
  return pts;
}

}  // namespace

TEST_CASE("asymptotic entropy") {
  SECTION("dirac walk has zero entropy at every n") {
    auto est = asymptotic_entropy(FiniteMeasure::dirac(sanov_a()), 6);
    for (double v : est.h_values) REQUIRE(v == 0.0);
    REQUIRE(est.h_estimate == 0.0);
    REQUIRE(est.h_upper == 0.0);
  }
  SECTION("free-group oracle matches the exact convolution powers") {
    auto est = asymptotic_entropy(sanov_uniform(), 7);
    double prev = 0.0;
    for (long n = 1; n <= 7; ++n) {
      double oracle = free_group_entropy(n);
      REQUIRE(est.h_values[static_cast<size_t>(n - 1)] ==
              Catch::Approx(oracle / static_cast<double>(n)).margin(1e-9));
      REQUIRE(est.h_diffs[static_cast<size_t>(n - 1)] ==
              Catch::Approx(oracle - prev).margin(1e-9));
      prev = oracle;
    }
    // Support of mu^{*7} is exactly the reduced words of odd length <= 7:
    // 4 * (1 + 9 + 81 + 729).
    REQUIRE(est.support_sizes[6] == 4 * (1 + 9 + 81 + 729));
  }
  SECTION("richardson estimate approaches (1/2) log 3 from desk-scale n") {
    auto est = asymptotic_entropy(sanov_uniform(), 8);
    double target = 0.5 * std::log(3.0);
    REQUIRE(est.h_upper > target);           // certified upper bound
    REQUIRE(std::abs(est.h_estimate - target) < 0.08);
  }
  SECTION("abelian walk: H grows like log n, h -> 0") {
    auto est = asymptotic_entropy(z_walk(), 30);
    for (long n = 1; n <= 30; ++n)
      REQUIRE(est.h_values[static_cast<size_t>(n - 1)] * static_cast<double>(n) ==
              Catch::Approx(binomial_entropy(n)).margin(1e-9));
    REQUIRE(est.h_estimate < 0.05);
  }
  SECTION("fekete and kaimanovich-vershik monotonicity") {
    auto est = asymptotic_entropy(sanov_skewed(), 7);
    for (size_t j = 1; j < est.h_values.size(); ++j)
      REQUIRE(est.h_values[j] <= est.h_values[j - 1] + 1e-12);
    for (size_t j = 1; j < est.h_diffs.size(); ++j)
      REQUIRE(est.h_diffs[j] <= est.h_diffs[j - 1] + 1e-12);
    for (double d : est.h_diffs) REQUIRE(d >= est.h_upper - 1e-12);
    // Subadditivity spot check: H(mu^{*4}) <= 2 H(mu^{*2}).
    double h2 = est.h_values[1] * 2.0, h4 = est.h_values[3] * 4.0;
    REQUIRE(h4 <= 2.0 * h2 + 1e-12);
  }
  SECTION("support cap reports the achieved horizon") {
    REQUIRE_THROWS_AS(asymptotic_entropy(sanov_uniform(), 12, 1000), ResourceError);
  }
  SECTION("irrational atoms rejected") {
    REQUIRE_THROWS_AS(asymptotic_entropy(diag_e_walk(), 3), std::invalid_argument);
  }
}

TEST_CASE("differential entropy") {
  SECTION("trivial action gives exactly zero") {
    auto cloud = EmpiricalMeasure::from_points(circle_points(64));
    auto mu = FiniteMeasure::dirac(GroupElement::from(RationalMatrix::identity(2)));
    auto est = differential_entropy(mu, 1, cloud, 4);
    REQUIRE(std::abs(est.value) < 1e-12);
  }
  SECTION("single-atom walk at its fixed point gives zero") {
    auto e1 = GrassmannPoint::span_of_axes(2, {0});
    auto cloud = EmpiricalMeasure::from_points(std::vector<GrassmannPoint>(64, e1));
    auto est = differential_entropy(diag_walk(4.0), 1, cloud, 4);
    REQUIRE(std::abs(est.value) < 1e-12);
  }
  SECTION("entropy chain on the sanov walk") {
    auto mu = sanov_uniform();
    long N = 1000;
    auto nu = sample_harmonic_measure(mu, 1, 150, N, 31);
    int k = static_cast<int>(std::ceil(std::pow(static_cast<double>(N), 1.0 / 3.0)));
    auto E = differential_entropy(mu, 1, nu, k, 32);
    auto h = asymptotic_entropy(mu, 8);
    REQUIRE(E.value >= -3.0 * E.stderr_);
    REQUIRE(E.value <= h.h_upper + 3.0 * E.stderr_);
    REQUIRE(h.h_upper <= shannon_entropy(mu) + 1e-12);
    REQUIRE(E.stderr_ > 0.0);
  }
  SECTION("self-consistency when N doubles") {
    auto mu = sanov_uniform();
    auto nu1 = sample_harmonic_measure(mu, 1, 150, 500, 33);
    auto nu2 = sample_harmonic_measure(mu, 1, 150, 1000, 33);
    auto e1 = differential_entropy(mu, 1, nu1, 8, 34);
    auto e2 = differential_entropy(mu, 1, nu2, 10, 34);
    REQUIRE(std::abs(e1.value - e2.value) <=
            3.0 * std::hypot(e1.stderr_, e2.stderr_) + 0.05);
  }
  SECTION("bad k rejected") {
    auto cloud = EmpiricalMeasure::from_points(circle_points(16));
    REQUIRE_THROWS_AS(differential_entropy(sanov_uniform(), 1, cloud, 0),
                      std::invalid_argument);
  }
}

TEST_CASE("translated mass decay") {
  auto e1 = GrassmannPoint::span_of_axes(2, {0});
  SECTION("identity walk: mass constant, rate is -log(mass)/n") {
    auto cloud = EmpiricalMeasure::from_points(circle_points(64));
    auto mu = FiniteMeasure::dirac(GroupElement::from(RationalMatrix::identity(2)));
    BallSpec A{e1, 0.5};
    auto rep = translated_mass_decay(mu, 1, cloud, A, 40, 10, 1);
    double expect = -std::log(rep.empirical_mass_of_A) / 40.0;
    for (const auto& p : rep.paths)
      REQUIRE(p.rates.back() == Catch::Approx(expect).margin(1e-12));
  }
  SECTION("fixed point inside A: mass one, rate zero") {
    auto cloud = EmpiricalMeasure::from_points(std::vector<GrassmannPoint>(32, e1));
    BallSpec A{e1, 0.5};
    auto rep = translated_mass_decay(diag_e_walk(), 1, cloud, A, 40, 10, 1);
    for (const auto& p : rep.paths)
      for (double r : p.rates) REQUIRE(std::abs(r) < 1e-12);
  }
  SECTION("sanov decay rate bounded by the differential entropy") {
    auto mu = sanov_uniform();
    auto nu = sample_harmonic_measure(mu, 1, 150, 500, 41);
    auto E = differential_entropy(mu, 1, nu, 8, 42);
    BallSpec A{nu.points[0], 0.8};
    auto rep = translated_mass_decay(mu, 1, nu, A, 50, 100, 43);
    REQUIRE(rep.rate_quantile(0.9) <= E.value + 3.0 * E.stderr_ + 0.05);
  }
  SECTION("empirically null ball rejected") {
    auto cloud = EmpiricalMeasure::from_points(std::vector<GrassmannPoint>(8, e1));
    auto e2 = GrassmannPoint::span_of_axes(2, {1});
    REQUIRE_THROWS_AS(
        translated_mass_decay(sanov_uniform(), 1, cloud, BallSpec{e2, 0.1}, 10, 4, 1),
        std::invalid_argument);
  }
}
