#pragma once

#include <vector>

#include "slrw/group.hpp"

namespace slrw::testing {

inline RationalMatrix rat2(long a, long b, long c, long d) {
  RationalMatrix m(2);
  m(0, 0) = a;
  m(0, 1) = b;
  m(1, 0) = c;
  m(1, 1) = d;
  return m;
}

inline RationalMatrix rat3(std::initializer_list<long> vals) {
  RationalMatrix m(3);
  auto it = vals.begin();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = *it++;
  return m;
}

inline GroupElement sanov_a() { return GroupElement::from(rat2(1, 2, 0, 1)); }
inline GroupElement sanov_b() { return GroupElement::from(rat2(1, 0, 2, 1)); }

/// Uniform measure on {A, A^-1, B, B^-1}; these generate a free group.
inline FiniteMeasure sanov_uniform() {
  Rational q(1, 4);
  return FiniteMeasure::from_atoms(
      2, {{sanov_a(), q},
          {GroupElement::from(rat2(1, -2, 0, 1)), q},
          {sanov_b(), q},
          {GroupElement::from(rat2(1, 0, -2, 1)), q}});
}

/// Same support with asymmetric weights (0.4, 0.4, 0.1, 0.1).
inline FiniteMeasure sanov_skewed() {
  return FiniteMeasure::from_atoms(
      2, {{sanov_a(), Rational(2, 5)},
          {GroupElement::from(rat2(1, -2, 0, 1)), Rational(2, 5)},
          {sanov_b(), Rational(1, 10)},
          {GroupElement::from(rat2(1, 0, -2, 1)), Rational(1, 10)}});
}

/// Asymmetric measure on SL(3,Z) elementary matrices.
inline FiniteMeasure sl3_test_measure() {
  std::vector<RationalMatrix> gens = {
      rat3({1, 2, 0, 0, 1, 0, 0, 0, 1}), rat3({1, -2, 0, 0, 1, 0, 0, 0, 1}),
      rat3({1, 0, 0, 0, 1, 2, 0, 0, 1}), rat3({1, 0, 0, 0, 1, -2, 0, 0, 1}),
      rat3({1, 0, 0, 2, 1, 0, 0, 0, 1}), rat3({1, 0, 2, 0, 1, 0, 0, 0, 1})};
  std::vector<Rational> w = {Rational(3, 10), Rational(1, 10), Rational(1, 5),
                             Rational(1, 5),  Rational(1, 10), Rational(1, 10)};
  std::vector<std::pair<GroupElement, Rational>> atoms;
  for (size_t j = 0; j < gens.size(); ++j)
    atoms.emplace_back(GroupElement::from(gens[j]), w[j]);
  return FiniteMeasure::from_atoms(3, std::move(atoms));
}

/// delta_{diag(e, 1/e)} -- irrational entries, sampling operations only.
inline FiniteMeasure diag_e_walk() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = std::exp(1.0);
  m(1, 1) = std::exp(-1.0);
  return FiniteMeasure::dirac(GroupElement::from_dense(m));
}

inline FiniteMeasure diag_walk(double top, int d = 2) {
  Matrix m = Matrix::Identity(d, d);
  m(0, 0) = top;
  m(d - 1, d - 1) = 1.0 / top;
  return FiniteMeasure::dirac(GroupElement::from_dense(m));
}

inline FiniteMeasure rotation_walk(double angle) {
  Matrix m(2, 2);
  m << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return FiniteMeasure::dirac(GroupElement::from_dense(m));
}

}  // namespace slrw::testing
