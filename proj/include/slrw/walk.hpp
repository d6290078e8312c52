#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "slrw/group.hpp"
#include "slrw/linalg.hpp"
#include "slrw/rng.hpp"

namespace slrw {

namespace stream_tag {
constexpr std::uint64_t kForward = 1;
constexpr std::uint64_t kBackward = 2;
constexpr std::uint64_t kBall = 3;
constexpr std::uint64_t kAnchor = 4;
constexpr std::uint64_t kBootstrap = 5;
}  // namespace stream_tag

/// Support of a measure flattened for fast repeated sampling: cumulative
/// weights for inverse-CDF plus the dense matrices of the atoms.
struct SamplerTable {
  std::vector<double> cumulative;
  std::vector<Matrix> dense;
  std::vector<const GroupElement*> elements;

  explicit SamplerTable(const FiniteMeasure& mu) {
    double acc = 0.0;
    cumulative.reserve(mu.atoms.size());
    dense.reserve(mu.atoms.size());
    for (const auto& [g, w] : mu.atoms) {
      acc += static_cast<double>(w);
      cumulative.push_back(acc);
      dense.push_back(g.dense());
      elements.push_back(&g);
    }
    cumulative.back() = 1.0;
  }

  size_t pick(double u) const {
    return static_cast<size_t>(
        std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
  }
};

/// Measure whose atoms are kept as products of well-conditioned factors.
/// Increments like gamma^k have condition numbers far beyond 1/eps, so any
/// routine that multiplies them in one shot loses everything to rounding;
/// applying the factors one at a time (with renormalization or
/// re-orthogonalization between them) keeps every step stable.
struct FactoredAtom {
  std::vector<Matrix> factors;      // h = factors[0] * ... * factors.back()
  std::vector<Matrix> inv_factors;  // h^{-1} x = apply inv_factors[0], then [1], ...
  double weight = 0.0;
};

struct FactoredMeasure {
  int d = 0;
  std::vector<FactoredAtom> atoms;
  std::vector<double> cumulative;

  static FactoredMeasure from(const FiniteMeasure& mu) {
    FactoredMeasure fm;
    fm.d = mu.d;
    for (const auto& [g, w] : mu.atoms) {
      FactoredAtom a;
      a.factors = {g.dense()};
      a.inv_factors = {g.inverse().dense()};
      a.weight = static_cast<double>(w);
      fm.atoms.push_back(std::move(a));
    }
    fm.finish();
    return fm;
  }

  /// mu_k = (1/2) mu + (1/4)(delta_{gamma^k} + delta_{gamma^-k}) with the
  /// gamma powers kept as k factors of gamma. Sampling this mixture is
  /// equivalent to sampling the merged measure.
  static FactoredMeasure mu_k_mixture(const FiniteMeasure& mu, const GroupElement& gamma,
                                      long k) {
    if (k < 1) throw std::invalid_argument("mu_k_mixture: k >= 1 required");
    FactoredMeasure fm;
    fm.d = mu.d;
    for (const auto& [g, w] : mu.atoms) {
      FactoredAtom a;
      a.factors = {g.dense()};
      a.inv_factors = {g.inverse().dense()};
      a.weight = 0.5 * static_cast<double>(w);
      fm.atoms.push_back(std::move(a));
    }
    Matrix gd = gamma.dense();
    Matrix gi = gamma.inverse().dense();
    FactoredAtom pos;
    pos.factors.assign(static_cast<size_t>(k), gd);
    pos.inv_factors.assign(static_cast<size_t>(k), gi);
    pos.weight = 0.25;
    FactoredAtom neg;
    neg.factors.assign(static_cast<size_t>(k), gi);
    neg.inv_factors.assign(static_cast<size_t>(k), gd);
    neg.weight = 0.25;
    fm.atoms.push_back(std::move(pos));
    fm.atoms.push_back(std::move(neg));
    fm.finish();
    return fm;
  }

  size_t pick(double u) const {
    return static_cast<size_t>(
        std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
  }

 private:
  void finish() {
    double acc = 0.0;
    cumulative.reserve(atoms.size());
    for (const auto& a : atoms) {
      acc += a.weight;
      cumulative.push_back(acc);
    }
    cumulative.back() = 1.0;
  }
};

inline const GroupElement& sample_increment(const FiniteMeasure& mu, const StreamKey& key,
                                            std::uint64_t tag = stream_tag::kForward) {
  SamplerTable table(mu);
  // One-shot convenience path; hot loops should hold their own table.
  size_t idx = table.pick(counter_uniform(key, tag));
  return mu.atoms[idx].first;
}

/// Running product of sampled increments, renormalized every step.
struct PathState {
  long n = 0;
  ScaledMatrix product;
  std::optional<std::vector<GroupElement>> increments;
};

inline void check_scale(const ScaledMatrix& m) {
  if (std::abs(m.log_scale) > tol().log_scale_max)
    throw NumericError("walk: log scale overflow, product unstable");
}

inline PathState forward_product_tagged(const FiniteMeasure& mu, long n,
                                        std::uint64_t sample_index, std::uint64_t seed,
                                        std::uint64_t tag, bool retain = false) {
  if (n < 0) throw std::invalid_argument("forward_product: negative step count");
  SamplerTable table(mu);
  PathState st;
  st.n = n;
  st.product = ScaledMatrix::identity(mu.d);
  if (retain) st.increments.emplace();
  StreamKey key{seed, sample_index, 0};
  for (long s = 1; s <= n; ++s) {
    key.step_index = static_cast<std::uint64_t>(s);
    size_t idx = table.pick(counter_uniform(key, tag));
    st.product = st.product.times(table.dense[idx]);
    if (retain) st.increments->push_back(*table.elements[idx]);
    check_scale(st.product);
  }
  return st;
}

/// x_n = h_1 ... h_n with independent mu-distributed increments.
inline PathState forward_product(const FiniteMeasure& mu, long n, std::uint64_t sample_index,
                                 std::uint64_t seed, bool retain = false) {
  return forward_product_tagged(mu, n, sample_index, seed, stream_tag::kForward, retain);
}

/// Negative part of the bilateral path: a walk driven by the reflected
/// measure on an independent stream.
inline PathState backward_product(const FiniteMeasure& mu, long n, std::uint64_t sample_index,
                                  std::uint64_t seed, bool retain = false) {
  return forward_product_tagged(reflect(mu), n, sample_index, seed, stream_tag::kBackward,
                                retain);
}

}  // namespace slrw
