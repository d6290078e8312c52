#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "slrw/empirical.hpp"
#include "slrw/group.hpp"
#include "slrw/walk.hpp"

namespace slrw {

struct LyapunovSpectrum {
  Vector lambdas;  // descending, zero-sum for SL(d,R) walks
};

struct SpectrumEstimate {
  LyapunovSpectrum spectrum;
  Vector stderrs;
  long n = 0;
  int replicas = 0;
  Vector gaps;  // lambda_i - lambda_{i+1}

  double lambda(int i) const { return spectrum.lambdas(i); }
  double zero_sum_residual() const { return std::abs(spectrum.lambdas.sum()); }
  double stderr_sum() const { return stderrs.sum(); }
};

namespace detail {

/// One QR re-orthogonalization step: q <- Q of qr(m q), accumulating the
/// positive R diagonal logs. The R diagonals of successive steps multiply,
/// so the accumulated logs equal those of the one-shot factorization.
inline void qr_step(Matrix& q, Vector& acc, const Matrix& m) {
  int dim = static_cast<int>(q.rows());
  Matrix b = m * q;
  Eigen::HouseholderQR<Matrix> qr(b);
  q = qr.householderQ() * Matrix::Identity(dim, dim);
  Matrix r = qr.matrixQR().topRows(dim).triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    double rj = r(j, j);
    if (rj < 0) {
      q.col(j) *= -1.0;
      rj = -rj;
    }
    if (!(rj > 0)) throw NumericError("estimate_spectrum_qr: vanishing R diagonal");
    acc(j) += std::log(rj);
  }
}

/// One replica of the QR recursion. The Cartan component of the right
/// product x_n = h_1...h_n equals the singular values of the left product
/// h_n^T...h_1^T, so feeding transposed increments into the standard
/// left-product QR recursion accumulates (1/n) log a(x_n). Increments are
/// applied factor by factor: for h = f_0...f_{m-1}, h^T is f_0^T first.
inline Vector qr_replica(const FactoredMeasure& fm, long n, std::uint64_t sample_index,
                         std::uint64_t seed, std::uint64_t tag) {
  int dim = fm.d;
  Matrix q = Matrix::Identity(dim, dim);
  Vector acc = Vector::Zero(dim);
  StreamKey key{seed, sample_index, 0};
  for (long s = 1; s <= n; ++s) {
    key.step_index = static_cast<std::uint64_t>(s);
    const FactoredAtom& atom = fm.atoms[fm.pick(counter_uniform(key, tag))];
    for (const Matrix& f : atom.factors) qr_step(q, acc, f.transpose());
  }
  return acc / static_cast<double>(n);
}

inline SpectrumEstimate spectrum_from_replicas(const std::vector<Vector>& reps, long n) {
  int dim = static_cast<int>(reps[0].size());
  int m = static_cast<int>(reps.size());
  Vector mean = Vector::Zero(dim);
  for (const auto& r : reps) mean += r;
  mean /= m;
  Vector var = Vector::Zero(dim);
  for (const auto& r : reps) var += (r - mean).array().square().matrix();
  Vector se(dim);
  for (int j = 0; j < dim; ++j) {
    double s = m > 1 ? std::sqrt(var(j) / (m - 1) / m) : 0.0;
    se(j) = std::max(s, 1e-12);
  }
  SpectrumEstimate est;
  est.spectrum.lambdas = mean;
  est.stderrs = se;
  est.n = n;
  est.replicas = m;
  est.gaps.resize(dim - 1);
  for (int j = 0; j + 1 < dim; ++j) est.gaps(j) = mean(j) - mean(j + 1);
  return est;
}

}  // namespace detail

/// Spectrum of a walk given in factored form (the only safe representation
/// when single increments like gamma^k are ill-conditioned beyond 1/eps).
inline SpectrumEstimate estimate_spectrum_factored(const FactoredMeasure& fm, long n,
                                                   int replicas, std::uint64_t seed,
                                                   std::uint64_t tag = stream_tag::kForward) {
  if (n < 1 || replicas < 1) throw std::invalid_argument("estimate_spectrum: bad n/replicas");
  std::vector<Vector> reps(static_cast<size_t>(replicas));
  for (int r = 0; r < replicas; ++r)
    reps[static_cast<size_t>(r)] =
        detail::qr_replica(fm, n, static_cast<std::uint64_t>(r), seed, tag);
  return detail::spectrum_from_replicas(reps, n);
}

/// Spectrum of a walk whose increments are arbitrary invertible matrices
/// (used both for the base walk and its exterior-power pushforward).
inline SpectrumEstimate estimate_spectrum_matrices(const std::vector<Matrix>& dense,
                                                   const std::vector<double>& weights, long n,
                                                   int replicas, std::uint64_t seed,
                                                   std::uint64_t tag = stream_tag::kForward) {
  FactoredMeasure fm;
  fm.d = static_cast<int>(dense[0].rows());
  for (size_t j = 0; j < dense.size(); ++j) {
    FactoredAtom a;
    a.factors = {dense[j]};
    a.inv_factors = {dense[j].inverse()};
    a.weight = weights[j];
    fm.atoms.push_back(std::move(a));
  }
  {
    double acc = 0.0;
    for (const auto& a : fm.atoms) {
      acc += a.weight;
      fm.cumulative.push_back(acc);
    }
    fm.cumulative.back() = 1.0;
  }
  return estimate_spectrum_factored(fm, n, replicas, seed, tag);
}

inline SpectrumEstimate estimate_spectrum_qr(const FiniteMeasure& mu, long n, int replicas,
                                             std::uint64_t seed) {
  std::vector<Matrix> dense;
  std::vector<double> weights;
  for (const auto& [g, w] : mu.atoms) {
    dense.push_back(g.dense());
    weights.push_back(static_cast<double>(w));
  }
  return estimate_spectrum_matrices(dense, weights, n, replicas, seed);
}

struct ReflectionReport {
  SpectrumEstimate forward;
  SpectrumEstimate reflected;
  double max_residual = 0.0;  // max_i |reflected_i + forward_{d+1-i}|
  double threshold = 0.0;     // 3 * combined stderr at the worst index
  bool pass = false;
};

/// Checks the spectra of mu and its reflection against
/// reflected_i = -forward_{d+1-i}.
inline ReflectionReport check_reflection_identity(const FiniteMeasure& mu, long n, int replicas,
                                                  std::uint64_t seed) {
  ReflectionReport rep;
  rep.forward = estimate_spectrum_qr(mu, n, replicas, seed);
  rep.reflected = estimate_spectrum_qr(reflect(mu), n, replicas, seed ^ 0x9d2c5680ULL);
  int d = static_cast<int>(rep.forward.spectrum.lambdas.size());
  rep.pass = true;
  for (int i = 0; i < d; ++i) {
    double res = std::abs(rep.reflected.lambda(i) + rep.forward.lambda(d - 1 - i));
    double se = 3.0 * std::hypot(rep.reflected.stderrs(i), rep.forward.stderrs(d - 1 - i));
    if (res > rep.max_residual) {
      rep.max_residual = res;
      rep.threshold = se;
    }
    if (res > se) rep.pass = false;
  }
  return rep;
}

struct MonteCarloValue {
  double value = 0.0;
  double stderr_ = 0.0;
};

/// Furstenberg formula estimate of lambda_1 + ... + lambda_i: a weighted
/// sum over atoms of the mean of log ||wedge^i(g) w|| over harmonic samples
/// w (unit wedges, so the denominator of ||gv||/||v|| is 1).
inline MonteCarloValue furstenberg_partial_sum(const FiniteMeasure& mu, int i,
                                               const EmpiricalMeasure& nu_i, long mc_samples,
                                               std::uint64_t seed) {
  if (nu_i.size() == 0) throw std::invalid_argument("furstenberg_partial_sum: empty measure");
  if (nu_i.rank != i) throw std::invalid_argument("furstenberg_partial_sum: rank mismatch");
  std::vector<Matrix> powers;
  std::vector<double> weights;
  for (const auto& [g, w] : mu.atoms) {
    powers.push_back(exterior_power(g.dense(), i));
    weights.push_back(static_cast<double>(w));
  }
  long n_points = nu_i.size();
  long m = std::min(mc_samples, n_points);
  double sum = 0.0, sum2 = 0.0;
  for (long j = 0; j < m; ++j) {
    long idx = j;
    if (m < n_points) {
      StreamKey key{seed, static_cast<std::uint64_t>(j), 0};
      idx = static_cast<long>(counter_uniform(key, stream_tag::kBootstrap) * n_points);
    }
    const Vector& w = nu_i.points[static_cast<size_t>(idx)].wedge;
    double val = 0.0;
    for (size_t a = 0; a < powers.size(); ++a)
      val += weights[a] * std::log((powers[a] * w).norm());
    sum += val;
    sum2 += val * val;
  }
  MonteCarloValue out;
  out.value = sum / m;
  double var = m > 1 ? (sum2 - sum * sum / m) / (m - 1) : 0.0;
  out.stderr_ = std::max(std::sqrt(std::max(var, 0.0) / m), 1e-12);
  return out;
}

struct ExteriorSpectrumReport {
  SpectrumEstimate base;
  SpectrumEstimate exterior;
  double top_predicted = 0.0;
  double second_predicted = 0.0;
  double gap = 0.0;  // lambda_i - lambda_{i+1} read from the exterior walk
  bool pass = false;
};

/// The wedge^i pushforward walk has spectrum {sums of i distinct base
/// exponents}; checks the top two values against the base estimate.
inline ExteriorSpectrumReport exterior_spectrum_check(const FiniteMeasure& mu, int i, long n,
                                                      int replicas, std::uint64_t seed) {
  int d = mu.d;
  if (i < 1 || i > d - 1) throw std::invalid_argument("exterior_spectrum_check: rank");
  ExteriorSpectrumReport rep;
  rep.base = estimate_spectrum_qr(mu, n, replicas, seed);
  std::vector<Matrix> dense;
  std::vector<double> weights;
  for (const auto& [g, w] : mu.atoms) {
    dense.push_back(exterior_power(g.dense(), i));
    weights.push_back(static_cast<double>(w));
  }
  rep.exterior = estimate_spectrum_matrices(dense, weights, n, replicas, seed);
  double top = 0.0, second = 0.0, top_se = 0.0, second_se = 0.0;
  for (int j = 0; j < i; ++j) {
    top += rep.base.lambda(j);
    top_se = std::hypot(top_se, rep.base.stderrs(j));
  }
  second = top - rep.base.lambda(i - 1) + rep.base.lambda(i);
  second_se = std::hypot(top_se, rep.base.stderrs(i));
  rep.top_predicted = top;
  rep.second_predicted = second;
  rep.gap = rep.exterior.lambda(0) - rep.exterior.lambda(1);
  bool top_ok = std::abs(rep.exterior.lambda(0) - top) <=
                3.0 * std::hypot(rep.exterior.stderrs(0), top_se);
  bool second_ok = std::abs(rep.exterior.lambda(1) - second) <=
                   3.0 * std::hypot(rep.exterior.stderrs(1), second_se);
  rep.pass = top_ok && second_ok;
  return rep;
}

}  // namespace slrw
