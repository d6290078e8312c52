#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "slrw/linalg.hpp"

namespace slrw {

using Rational = boost::multiprecision::cpp_rational;

/// Dense d x d matrix over Q, row-major. Exact arithmetic only; this is the
/// layer on which convolution-support identities are decided.
class RationalMatrix {
 public:
  RationalMatrix() = default;
  explicit RationalMatrix(int d) : d_(d), e_(static_cast<size_t>(d) * d) {}

  static RationalMatrix identity(int d) {
    RationalMatrix m(d);
    for (int i = 0; i < d; ++i) m(i, i) = 1;
    return m;
  }

  int dim() const { return d_; }
  Rational& operator()(int r, int c) { return e_[static_cast<size_t>(r) * d_ + c]; }
  const Rational& operator()(int r, int c) const { return e_[static_cast<size_t>(r) * d_ + c]; }

  RationalMatrix operator*(const RationalMatrix& o) const {
    RationalMatrix out(d_);
    for (int i = 0; i < d_; ++i)
      for (int k = 0; k < d_; ++k) {
        const Rational& a = (*this)(i, k);
        if (a == 0) continue;
        for (int j = 0; j < d_; ++j) out(i, j) += a * o(k, j);
      }
    return out;
  }

  bool operator==(const RationalMatrix& o) const { return d_ == o.d_ && e_ == o.e_; }

  Rational determinant() const {
    // Fraction-free would be faster, but d is small throughout.
    RationalMatrix a = *this;
    Rational det = 1;
    for (int col = 0; col < d_; ++col) {
      int piv = -1;
      for (int r = col; r < d_; ++r)
        if (a(r, col) != 0) { piv = r; break; }
      if (piv < 0) return 0;
      if (piv != col) {
        for (int j = 0; j < d_; ++j) std::swap(a(piv, j), a(col, j));
        det = -det;
      }
      det *= a(col, col);
      for (int r = col + 1; r < d_; ++r) {
        if (a(r, col) == 0) continue;
        Rational f = a(r, col) / a(col, col);
        for (int j = col; j < d_; ++j) a(r, j) -= f * a(col, j);
      }
    }
    return det;
  }

  RationalMatrix inverse() const {
    RationalMatrix a = *this;
    RationalMatrix inv = identity(d_);
    for (int col = 0; col < d_; ++col) {
      int piv = -1;
      for (int r = col; r < d_; ++r)
        if (a(r, col) != 0) { piv = r; break; }
      if (piv < 0) throw std::domain_error("RationalMatrix: singular");
      if (piv != col)
        for (int j = 0; j < d_; ++j) {
          std::swap(a(piv, j), a(col, j));
          std::swap(inv(piv, j), inv(col, j));
        }
      Rational p = a(col, col);
      for (int j = 0; j < d_; ++j) {
        a(col, j) /= p;
        inv(col, j) /= p;
      }
      for (int r = 0; r < d_; ++r) {
        if (r == col || a(r, col) == 0) continue;
        Rational f = a(r, col);
        for (int j = 0; j < d_; ++j) {
          a(r, j) -= f * a(col, j);
          inv(r, j) -= f * inv(col, j);
        }
      }
    }
    return inv;
  }

  RationalMatrix pow(long k) const {
    if (k < 0) return inverse().pow(-k);
    RationalMatrix result = identity(d_);
    RationalMatrix base = *this;
    while (k > 0) {
      if (k & 1) result = result * base;
      base = base * base;
      k >>= 1;
    }
    return result;
  }

  Matrix to_double() const {
    Matrix m(d_, d_);
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j) m(i, j) = static_cast<double>((*this)(i, j));
    return m;
  }

  /// Reduced fractions in row-major order; used as the merge key for
  /// measure atoms, so it must be canonical. cpp_rational keeps entries
  /// normalized with positive denominator.
  std::string canonical_key() const {
    std::ostringstream os;
    for (const auto& x : e_) {
      os << numerator(x);
      if (denominator(x) != 1) os << '/' << denominator(x);
      os << ',';
    }
    return os.str();
  }

 private:
  int d_ = 0;
  std::vector<Rational> e_;
};

inline Rational parse_rational(const std::string& s) {
  auto slash = s.find('/');
  if (slash == std::string::npos)
    return Rational(boost::multiprecision::cpp_int(s));
  return Rational(boost::multiprecision::cpp_int(s.substr(0, slash)),
                  boost::multiprecision::cpp_int(s.substr(slash + 1)));
}

}  // namespace slrw
