#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "slrw/tolerances.hpp"

namespace slrw {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : Error {
  using Error::Error;
};
struct ResourceError : Error {
  using Error::Error;
};

/// Matrix held as exp(log_scale) * unit with ||unit||_F = 1. Long products
/// of group elements renormalize every step so the scale never overflows.
struct ScaledMatrix {
  Matrix unit;
  double log_scale = 0.0;

  static ScaledMatrix identity(int d) {
    ScaledMatrix s;
    s.unit = Matrix::Identity(d, d) / std::sqrt(static_cast<double>(d));
    s.log_scale = 0.5 * std::log(static_cast<double>(d));
    return s;
  }

  static ScaledMatrix from(const Matrix& m) {
    double f = m.norm();
    if (!(f > 0) || !std::isfinite(f)) throw NumericError("ScaledMatrix: zero or non-finite input");
    return ScaledMatrix{m / f, std::log(f)};
  }

  Matrix dense() const { return std::exp(log_scale) * unit; }

  ScaledMatrix times(const Matrix& rhs) const { return combine(unit * rhs, log_scale); }
  ScaledMatrix left_times(const Matrix& lhs) const { return combine(lhs * unit, log_scale); }
  ScaledMatrix times(const ScaledMatrix& rhs) const {
    return combine(unit * rhs.unit, log_scale + rhs.log_scale);
  }

 private:
  static ScaledMatrix combine(const Matrix& m, double base) {
    double f = m.norm();
    if (!(f > 0) || !std::isfinite(f)) throw NumericError("ScaledMatrix: product collapsed");
    return ScaledMatrix{m / f, base + std::log(f)};
  }
};

/// Logarithms of the Cartan (singular value) component, descending, zero-sum
/// for unimodular input.
struct CartanVector {
  Vector logs;
};

struct CartanDecomposition {
  Matrix k1;
  CartanVector a;
  Matrix k2;
};

/// g = k1 * diag(exp a) * k2 with k1, k2 special orthogonal, a descending.
/// Realized by SVD; the sign ambiguity is fixed by flipping the last
/// singular pair when det(k1) < 0.
inline CartanDecomposition cartan_decompose(const Matrix& g) {
  Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  int d = static_cast<int>(g.rows());
  if (sv(d - 1) <= 0 || !std::isfinite(sv(0)))
    throw NumericError("cartan_decompose: singular input");
  Matrix k1 = svd.matrixU();
  Matrix k2 = svd.matrixV().transpose();
  if (k1.determinant() < 0) {
    k1.col(d - 1) *= -1.0;
    k2.row(d - 1) *= -1.0;
  }
  CartanVector a;
  a.logs = sv.array().log().matrix();
  return {k1, a, k2};
}

inline long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (int j = 1; j <= k; ++j) r = r * (n - k + j) / j;
  return r;
}

/// All i-element subsets of {0,...,d-1} in lexicographic order; this fixes
/// the basis e_{j1} ^ ... ^ e_{ji} of the exterior power.
inline std::vector<std::vector<int>> lex_combinations(int d, int i) {
  std::vector<std::vector<int>> out;
  std::vector<int> c(i);
  for (int j = 0; j < i; ++j) c[j] = j;
  while (true) {
    out.push_back(c);
    int j = i - 1;
    while (j >= 0 && c[j] == d - i + j) --j;
    if (j < 0) break;
    ++c[j];
    for (int l = j + 1; l < i; ++l) c[l] = c[l - 1] + 1;
  }
  return out;
}

/// Matrix of the i-th exterior power in the lexicographic wedge basis.
/// Entry (I,J) is the minor of g on rows I, columns J.
inline Matrix exterior_power(const Matrix& g, int i) {
  int d = static_cast<int>(g.rows());
  if (i < 1 || i > d) throw std::invalid_argument("exterior_power: rank out of range");
  if (i == 1) return g;
  auto combos = lex_combinations(d, i);
  int n = static_cast<int>(combos.size());
  Matrix out(n, n);
  Matrix sub(i, i);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      for (int a = 0; a < i; ++a)
        for (int b = 0; b < i; ++b) sub(a, b) = g(combos[r][a], combos[c][b]);
      out(r, c) = sub.determinant();
    }
  }
  return out;
}

/// Plucker coordinates of the span of the frame columns, in the
/// lexicographic wedge basis. Not normalized.
inline Vector plucker(const Matrix& frame) {
  int d = static_cast<int>(frame.rows());
  int i = static_cast<int>(frame.cols());
  auto combos = lex_combinations(d, i);
  Vector w(static_cast<int>(combos.size()));
  Matrix sub(i, i);
  for (size_t r = 0; r < combos.size(); ++r) {
    for (int a = 0; a < i; ++a)
      for (int b = 0; b < i; ++b) sub(a, b) = frame(combos[r][a], b);
    w(static_cast<int>(r)) = sub.determinant();
  }
  return w;
}

/// Point of the rank-i Grassmannian: an orthonormal column frame together
/// with its unit decomposable wedge vector. The wedge is the source of
/// truth for distances, the frame for group actions.
struct GrassmannPoint {
  int rank = 0;
  Matrix frame;  // d x rank, orthonormal columns
  Vector wedge;  // unit, dimension C(d, rank)

  static GrassmannPoint from_frame(const Matrix& basis) {
    GrassmannPoint p;
    p.rank = static_cast<int>(basis.cols());
    Eigen::HouseholderQR<Matrix> qr(basis);
    Matrix q = qr.householderQ() * Matrix::Identity(basis.rows(), basis.cols());
    // Keep the orientation of the input basis.
    Matrix r = qr.matrixQR().topRows(basis.cols()).triangularView<Eigen::Upper>();
    for (int j = 0; j < p.rank; ++j) {
      if (std::abs(r(j, j)) < 1e-13)
        throw NumericError("GrassmannPoint: rank-deficient basis");
      if (r(j, j) < 0) q.col(j) *= -1.0;
    }
    p.frame = q;
    p.wedge = plucker(p.frame);
    double n = p.wedge.norm();
    p.wedge /= n;
    return p;
  }

  static GrassmannPoint span_of_axes(int d, const std::vector<int>& axes) {
    Matrix b = Matrix::Zero(d, static_cast<int>(axes.size()));
    for (size_t j = 0; j < axes.size(); ++j) b(axes[j], static_cast<int>(j)) = 1.0;
    return from_frame(b);
  }

  int ambient_dim() const { return static_cast<int>(frame.rows()); }
};

/// rho(xi, zeta) = sin of the angle between the unit wedge vectors,
/// K-invariant, valued in [0, 1].
inline double grassmann_distance(const GrassmannPoint& a, const GrassmannPoint& b) {
  if (a.rank != b.rank) throw std::invalid_argument("grassmann_distance: rank mismatch");
  double c = a.wedge.dot(b.wedge);
  double s2 = 1.0 - c * c;
  return s2 <= 0 ? 0.0 : std::sqrt(s2);
}

inline GrassmannPoint act_on_grassmann(const Matrix& g, const GrassmannPoint& p) {
  Matrix image = g * p.frame;
  try {
    return GrassmannPoint::from_frame(image);
  } catch (const NumericError&) {
    throw NumericError("act_on_grassmann: numerically rank-deficient image");
  }
}

inline GrassmannPoint orthogonal_complement(const GrassmannPoint& p) {
  int d = p.ambient_dim();
  int i = d - p.rank;
  Eigen::HouseholderQR<Matrix> qr(p.frame);
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  return GrassmannPoint::from_frame(q.rightCols(i));
}

/// Full flag as an orthonormal d x d frame; the rank-i subspace is the span
/// of the first i columns. The identity frame is the standard flag.
struct Flag {
  Matrix frame;

  static Flag standard(int d) { return Flag{Matrix::Identity(d, d)}; }
  int dim() const { return static_cast<int>(frame.rows()); }
};

inline GrassmannPoint flag_project(const Flag& v, int i) {
  int d = v.dim();
  if (i < 1 || i > d - 1) throw std::invalid_argument("flag_project: rank out of range");
  return GrassmannPoint::from_frame(v.frame.leftCols(i));
}

}  // namespace slrw
