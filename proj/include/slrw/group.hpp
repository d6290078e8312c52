#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "slrw/linalg.hpp"
#include "slrw/rational.hpp"

namespace slrw {

/// Element of a countable subgroup of SL(d,R). Exact rational entries when
/// available (det = 1 checked exactly); otherwise a float matrix accepted
/// only by sampling operations, which never test equality. The optional
/// word records how the element was produced from named generators
/// (index, exponent) pairs.
struct GroupElement {
  std::optional<RationalMatrix> exact;
  Matrix approx;
  std::optional<std::vector<std::pair<int, int>>> word;

  static GroupElement from(RationalMatrix mat,
                           std::optional<std::vector<std::pair<int, int>>> w = std::nullopt) {
    if (mat.determinant() != 1)
      throw std::invalid_argument("GroupElement: determinant is not 1");
    GroupElement g;
    g.approx = mat.to_double();
    g.exact = std::move(mat);
    g.word = std::move(w);
    return g;
  }

  static GroupElement from_dense(Matrix mat) {
    double det = mat.determinant();
    if (!(det > 0)) throw std::invalid_argument("GroupElement: non-positive determinant");
    // Normalize onto SL(d,R), then require the input was close to start with.
    double f = std::pow(det, 1.0 / static_cast<double>(mat.rows()));
    if (std::abs(det - 1.0) > 1e-6)
      throw std::invalid_argument("GroupElement: determinant too far from 1");
    GroupElement g;
    g.approx = mat / f;
    return g;
  }

  bool is_exact() const { return exact.has_value(); }

  GroupElement inverse() const {
    GroupElement g;
    if (exact) {
      g.exact = exact->inverse();
      g.approx = g.exact->to_double();
    } else {
      g.approx = approx.inverse();
    }
    return g;
  }

  GroupElement operator*(const GroupElement& o) const {
    GroupElement g;
    if (exact && o.exact) {
      g.exact = *exact * *o.exact;
      g.approx = g.exact->to_double();
    } else {
      g.approx = approx * o.approx;
    }
    return g;
  }

  /// Canonical merge key: reduced fractions for exact elements, raw entry
  /// bytes for float ones (only bit-identical float atoms merge).
  std::string key() const {
    if (exact) return exact->canonical_key();
    std::string s("f:");
    s.append(reinterpret_cast<const char*>(approx.data()),
             sizeof(double) * static_cast<size_t>(approx.size()));
    return s;
  }

  int dim() const { return static_cast<int>(approx.rows()); }
  const Matrix& dense() const { return approx; }
  const RationalMatrix& rational() const {
    if (!exact) throw std::invalid_argument("GroupElement: exact entries required");
    return *exact;
  }
};

/// Finitely supported probability measure on group elements. Atoms are kept
/// sorted by canonical key, so equal measures compare equal and every
/// reduction over atoms is deterministic.
struct FiniteMeasure {
  int d = 0;
  std::vector<std::pair<GroupElement, Rational>> atoms;
  bool nondegenerate_asserted = false;  // Convention: supp generates, by config

  static constexpr size_t kDefaultSupportCap = 5'000'000;

  static FiniteMeasure from_atoms(int d, std::vector<std::pair<GroupElement, Rational>> raw) {
    FiniteMeasure mu;
    mu.d = d;
    std::map<std::string, std::pair<GroupElement, Rational>> merged;
    Rational total = 0;
    for (auto& [g, w] : raw) {
      if (w <= 0) throw std::invalid_argument("FiniteMeasure: non-positive weight");
      if (g.dim() != d) throw std::invalid_argument("FiniteMeasure: dimension mismatch");
      total += w;
      auto it = merged.find(g.key());
      if (it == merged.end())
        merged.emplace(g.key(), std::make_pair(g, w));
      else
        it->second.second += w;
    }
    if (total != 1) throw std::invalid_argument("FiniteMeasure: weights must sum to 1");
    mu.atoms.reserve(merged.size());
    for (auto& [k, gw] : merged) mu.atoms.push_back(std::move(gw));
    return mu;
  }

  static FiniteMeasure dirac(GroupElement g) {
    int d = g.dim();
    return from_atoms(d, {{std::move(g), Rational(1)}});
  }

  size_t size() const { return atoms.size(); }
};

inline FiniteMeasure convolve(const FiniteMeasure& mu, const FiniteMeasure& nu,
                              size_t support_cap = FiniteMeasure::kDefaultSupportCap) {
  if (mu.d != nu.d) throw std::invalid_argument("convolve: dimension mismatch");
  for (const auto& measure : {&mu, &nu})
    for (const auto& [g, w] : measure->atoms)
      if (!g.is_exact())
        throw std::invalid_argument("convolve: exact rational atoms required");
  std::map<std::string, std::pair<GroupElement, Rational>> merged;
  for (const auto& [g, wg] : mu.atoms) {
    for (const auto& [h, wh] : nu.atoms) {
      GroupElement gh = g * h;
      Rational w = wg * wh;
      std::string k = gh.key();
      auto it = merged.find(k);
      if (it == merged.end()) {
        if (merged.size() >= support_cap)
          throw ResourceError("convolve: support cap " + std::to_string(support_cap) +
                              " exceeded");
        merged.emplace(std::move(k), std::make_pair(std::move(gh), w));
      } else {
        it->second.second += w;
      }
    }
  }
  FiniteMeasure out;
  out.d = mu.d;
  out.atoms.reserve(merged.size());
  for (auto& [k, gw] : merged) out.atoms.push_back(std::move(gw));
  return out;
}

inline FiniteMeasure reflect(const FiniteMeasure& mu) {
  std::vector<std::pair<GroupElement, Rational>> atoms;
  atoms.reserve(mu.atoms.size());
  for (const auto& [g, w] : mu.atoms) atoms.emplace_back(g.inverse(), w);
  return FiniteMeasure::from_atoms(mu.d, std::move(atoms));
}

/// H(mu) = -sum w log w, in nats.
inline double shannon_entropy(const FiniteMeasure& mu) {
  double h = 0.0;
  for (const auto& [g, w] : mu.atoms) {
    double x = static_cast<double>(w);
    h -= x * std::log(x);
  }
  return h < 0 ? 0.0 : h;
}

inline double operator_norm(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

/// First moment sum mu(g) log ||g|| with the Euclidean operator norm.
inline double first_moment(const FiniteMeasure& mu) {
  double s = 0.0;
  for (const auto& [g, w] : mu.atoms)
    s += static_cast<double>(w) * std::log(operator_norm(g.dense()));
  return s;
}

/// R-regularity report for a candidate gamma of the mu^k construction.
struct RegularityReport {
  bool r_regular = false;        // real, diagonalizable, distinct moduli
  bool weakly_regular = false;   // real-diagonalizable with some |eig| != 1
  std::vector<std::complex<double>> eigenvalues;
  Matrix diagonalizer;           // h with gamma = h^{-1} diag h
  Vector diag;                   // eigenvalues ordered by decreasing modulus
  double diag_condition = 0.0;   // ||h|| * ||h^{-1}||
};

inline RegularityReport is_r_regular(const GroupElement& gamma) {
  Matrix g = gamma.dense();
  int d = g.rows();
  Eigen::EigenSolver<Matrix> es(g);
  if (es.info() != Eigen::Success) throw NumericError("is_r_regular: eigen solver failed");
  RegularityReport rep;
  double scale = g.norm();
  std::vector<int> order(d);
  for (int i = 0; i < d; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(es.eigenvalues()(a)) > std::abs(es.eigenvalues()(b));
  });
  bool all_real = true;
  for (int i = 0; i < d; ++i) {
    auto ev = es.eigenvalues()(order[i]);
    rep.eigenvalues.push_back(ev);
    if (std::abs(ev.imag()) > tol().eig_imag_rel * scale) all_real = false;
  }
  bool distinct = true;
  bool some_off_unit = false;
  for (int i = 0; i < d; ++i) {
    double mi = std::abs(rep.eigenvalues[static_cast<size_t>(i)]);
    if (std::abs(mi - 1.0) > tol().eig_moduli_rel) some_off_unit = true;
    if (i + 1 < d) {
      double mj = std::abs(rep.eigenvalues[static_cast<size_t>(i) + 1]);
      if (mi - mj <= tol().eig_moduli_rel * std::max(1.0, mi)) distinct = false;
    }
  }
  if (all_real) {
    // Distinct moduli imply diagonalizability; build h from eigenvectors.
    Matrix vmat(d, d);
    Vector diag(d);
    for (int i = 0; i < d; ++i) {
      vmat.col(i) = es.eigenvectors().col(order[i]).real();
      vmat.col(i).normalize();
      diag(i) = rep.eigenvalues[static_cast<size_t>(i)].real();
    }
    if (std::abs(vmat.determinant()) > 1e-12) {
      rep.diagonalizer = vmat.inverse();
      rep.diag = diag;
      rep.diag_condition = operator_norm(rep.diagonalizer) *
                           operator_norm(rep.diagonalizer.inverse());
      rep.r_regular = distinct;
      rep.weakly_regular = some_off_unit;
    }
  }
  return rep;
}

/// mu^k = 1/2 mu + 1/4 (delta_{gamma^k} + delta_{gamma^-k}), exact merge.
inline FiniteMeasure build_mu_k(const FiniteMeasure& mu, const GroupElement& gamma, long k) {
  if (k <= 0) throw std::invalid_argument("build_mu_k: k must be positive");
  RegularityReport rep = is_r_regular(gamma);
  if (!rep.r_regular && !rep.weakly_regular)
    throw std::invalid_argument("build_mu_k: gamma is not (weakly) R-regular");
  GroupElement gk = GroupElement::from(gamma.rational().pow(k));
  GroupElement gmk = GroupElement::from(gamma.rational().pow(-k));
  std::vector<std::pair<GroupElement, Rational>> atoms;
  atoms.reserve(mu.atoms.size() + 2);
  for (const auto& [g, w] : mu.atoms) atoms.emplace_back(g, w / 2);
  atoms.emplace_back(std::move(gk), Rational(1, 4));
  atoms.emplace_back(std::move(gmk), Rational(1, 4));
  return FiniteMeasure::from_atoms(mu.d, std::move(atoms));
}

}  // namespace slrw
