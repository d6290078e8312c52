#include <catch2/catch_amalgamated.hpp>

#include "slrw/walk.hpp"
#include "test_measures.hpp"

using namespace slrw;
using namespace slrw::testing;

TEST_CASE("increment sampling") {
  SECTION("dirac returns its atom for every key") {
    auto mu = FiniteMeasure::dirac(sanov_a());
    for (std::uint64_t s = 0; s < 16; ++s) {
      const auto& g = sample_increment(mu, {1, 2, s});
      REQUIRE(g.key() == sanov_a().key());
    }
  }
  SECTION("determinism: same key, same element") {
    auto mu = sanov_uniform();
    StreamKey k{42, 7, 11};
    REQUIRE(sample_increment(mu, k).key() == sample_increment(mu, k).key());
  }
  SECTION("two-atom frequencies within binomial 3-sigma") {
    auto mu = FiniteMeasure::from_atoms(
        2, {{sanov_a(), Rational(1, 2)}, {sanov_b(), Rational(1, 2)}});
    SamplerTable table(mu);
    long n = 1'000'000, hits = 0;
    for (long t = 0; t < n; ++t) {
      StreamKey k{99, 0, static_cast<std::uint64_t>(t)};
      if (table.pick(counter_uniform(k, stream_tag::kForward)) == 0) ++hits;
    }
    double freq = static_cast<double>(hits) / static_cast<double>(n);
    REQUIRE(std::abs(freq - 0.5) < 0.002);
  }
}

TEST_CASE("forward products") {
  SECTION("zero steps is the identity") {
    auto st = forward_product(sanov_uniform(), 0, 0, 1);
    REQUIRE((st.product.dense() - Matrix::Identity(2, 2)).norm() < 1e-12);
  }
  SECTION("deterministic diagonal walk reaches e^100") {
    auto st = forward_product(diag_e_walk(), 100, 0, 1);
    double log_norm = st.product.log_scale + std::log(operator_norm(st.product.unit));
    REQUIRE(log_norm == Catch::Approx(100.0).epsilon(1e-6));
  }
  SECTION("retained increments reproduce the product at small n") {
    auto st = forward_product(sanov_uniform(), 30, 3, 17, true);
    REQUIRE(st.increments->size() == 30);
    Matrix naive = Matrix::Identity(2, 2);
    for (const auto& g : *st.increments) naive = naive * g.dense();
    REQUIRE((st.product.dense() - naive).norm() < 1e-9 * naive.norm());
  }
  SECTION("renormalization drift vs exact rational product at n = 20") {
    auto st = forward_product(sanov_uniform(), 20, 5, 23, true);
    RationalMatrix exact = RationalMatrix::identity(2);
    for (const auto& g : *st.increments) exact = exact * g.rational();
    Matrix ref = exact.to_double();
    REQUIRE((st.product.dense() - ref).norm() < 1e-10 * ref.norm());
  }
  SECTION("bitwise determinism across calls") {
    auto a = forward_product(sanov_uniform(), 500, 9, 31);
    auto b = forward_product(sanov_uniform(), 500, 9, 31);
    REQUIRE(a.product.log_scale == b.product.log_scale);
    REQUIRE((a.product.unit - b.product.unit).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("backward products") {
  SECTION("constant increments give inverse powers") {
    auto mu = FiniteMeasure::dirac(sanov_a());
    auto st = backward_product(mu, 5, 0, 1);
    Matrix expect = sanov_a().rational().pow(-5).to_double();
    REQUIRE((st.product.dense() - expect).norm() < 1e-9 * expect.norm());
  }
  SECTION("zero steps is the identity") {
    auto st = backward_product(sanov_uniform(), 0, 0, 1);
    REQUIRE((st.product.dense() - Matrix::Identity(2, 2)).norm() < 1e-12);
  }
  SECTION("symmetric measure: backward norms distributed like forward") {
    auto mu = sanov_uniform();
    const int samples = 3000;
    const long n = 40;
    double fsum = 0, bsum = 0, f2 = 0, b2 = 0;
    for (int s = 0; s < samples; ++s) {
      double lf = forward_product(mu, n, static_cast<std::uint64_t>(s), 7).product.log_scale;
      double lb = backward_product(mu, n, static_cast<std::uint64_t>(s), 7).product.log_scale;
      fsum += lf;
      bsum += lb;
      f2 += lf * lf;
      b2 += lb * lb;
    }
    double fm = fsum / samples, bm = bsum / samples;
    double fv = f2 / samples - fm * fm, bv = b2 / samples - bm * bm;
    double se = std::sqrt((fv + bv) / samples);
    REQUIRE(std::abs(fm - bm) < 3.0 * se);
  }
  SECTION("independent streams: forward and backward differ pathwise") {
    auto f = forward_product(sanov_uniform(), 50, 0, 7, true);
    auto b = backward_product(sanov_uniform(), 50, 0, 7, true);
    bool differ = false;
    for (size_t j = 0; j < 50; ++j)
      if ((*f.increments)[j].key() != (*b.increments)[j].inverse().key()) differ = true;
    REQUIRE(differ);
  }
}

TEST_CASE("shift relation at small n") {
  // (T x)_n = h_1^{-1} x_{n+1}: check on retained increments.
  auto mu = sanov_skewed();
  auto st = forward_product(mu, 11, 2, 13, true);
  Matrix x_np1 = Matrix::Identity(2, 2);
  for (const auto& g : *st.increments) x_np1 = x_np1 * g.dense();
  Matrix shifted = Matrix::Identity(2, 2);
  for (size_t j = 1; j < st.increments->size(); ++j)
    shifted = shifted * (*st.increments)[j].dense();
  Matrix lhs = (*st.increments)[0].inverse().dense() * x_np1;
  REQUIRE((lhs - shifted).norm() < 1e-10 * shifted.norm());
}
