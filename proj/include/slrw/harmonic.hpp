#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "slrw/empirical.hpp"
#include "slrw/group.hpp"
#include "slrw/lyapunov.hpp"
#include "slrw/walk.hpp"

namespace slrw {

struct FlagSample {
  Flag flag;
  long n = 0;
  double convergence_gap = 0.0;  // max over i of rho between flags at n/2 and n
  bool degenerate = false;       // near-equal singular values observed
};

/// Left singular frame, det-corrected to SO(d). Flags are read from here:
/// the polar part of x_n converges to the limit flag.
inline Flag flag_from_product(const Matrix& unit, bool* degenerate = nullptr) {
  Eigen::JacobiSVD<Matrix> svd(unit, Eigen::ComputeFullU);
  Matrix u = svd.matrixU();
  int d = static_cast<int>(unit.rows());
  if (u.determinant() < 0) u.col(d - 1) *= -1.0;
  if (degenerate) {
    const Vector& sv = svd.singularValues();
    *degenerate = false;
    for (int j = 0; j + 1 < d; ++j)
      if (sv(j) - sv(j + 1) < tol().singular_gap_rel * sv(0)) *degenerate = true;
  }
  return Flag{u};
}

inline double flag_distance(const Flag& a, const Flag& b) {
  int d = a.dim();
  double m = 0.0;
  for (int i = 1; i <= d - 1; ++i)
    m = std::max(m, grassmann_distance(flag_project(a, i), flag_project(b, i)));
  return m;
}

namespace detail {

/// Orthonormal image of the standard flag under x_m = h_1...h_m, computed
/// by pulling the identity frame back through the increments in reverse
/// order with a QR re-orthogonalization after every factor. Each step only
/// multiplies by one well-conditioned factor, so the column spans stay
/// accurate long after the one-shot product (or its SVD) has lost all
/// sub-dominant directions to rounding. acc collects the log R diagonals,
/// an estimate of the log singular values of x_m.
inline Matrix pullback_flag(const std::vector<const FactoredAtom*>& path, long m, int d,
                            Vector& acc) {
  // Seed with the flag of a totally positive (Hilbert) matrix: all its
  // minors are nonzero, so the seed is transverse to every coordinate flag
  // and in particular never sits inside the repelling set of a diagonal
  // walk (the identity flag would).
  Matrix seed(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) seed(a, b) = 1.0 / static_cast<double>(a + b + 1);
  Eigen::HouseholderQR<Matrix> qr0(seed);
  Matrix q = qr0.householderQ() * Matrix::Identity(d, d);
  acc = Vector::Zero(d);
  for (long s = m; s >= 1; --s) {
    const auto& factors = path[static_cast<size_t>(s - 1)]->factors;
    for (auto it = factors.rbegin(); it != factors.rend(); ++it) qr_step(q, acc, *it);
  }
  return q;
}

}  // namespace detail

inline FlagSample sample_limit_flag_factored(const FactoredMeasure& fm, long n,
                                             std::uint64_t sample_index, std::uint64_t seed,
                                             std::uint64_t tag) {
  if (n < 2) throw std::invalid_argument("sample_limit_flag: n >= 2 required");
  int d = fm.d;
  std::vector<const FactoredAtom*> path;
  path.reserve(static_cast<size_t>(n));
  StreamKey key{seed, sample_index, 0};
  for (long s = 1; s <= n; ++s) {
    key.step_index = static_cast<std::uint64_t>(s);
    path.push_back(&fm.atoms[fm.pick(counter_uniform(key, tag))]);
  }
  Vector acc, acc_half;
  Matrix full = detail::pullback_flag(path, n, d, acc);
  Matrix half = detail::pullback_flag(path, n / 2, d, acc_half);
  FlagSample out;
  out.n = n;
  out.flag = Flag{full};
  out.convergence_gap = flag_distance(Flag{half}, out.flag);
  // Degenerate when adjacent normalized singular values nearly coincide
  // (isometric or otherwise non-contracting directions).
  out.degenerate = false;
  double top = acc.maxCoeff();
  for (int j = 0; j + 1 < d; ++j)
    if (std::exp(acc(j) - top) - std::exp(acc(j + 1) - top) < tol().singular_gap_rel)
      out.degenerate = true;
  return out;
}

inline FlagSample sample_limit_flag_tagged(const FiniteMeasure& mu, long n,
                                           std::uint64_t sample_index, std::uint64_t seed,
                                           std::uint64_t tag) {
  return sample_limit_flag_factored(FactoredMeasure::from(mu), n, sample_index, seed, tag);
}

inline FlagSample sample_limit_flag(const FiniteMeasure& mu, long n, std::uint64_t sample_index,
                                    std::uint64_t seed) {
  return sample_limit_flag_tagged(mu, n, sample_index, seed, stream_tag::kForward);
}

/// N independent limit flags projected to the rank-i Grassmannian.
inline EmpiricalMeasure sample_harmonic_measure_factored(const FactoredMeasure& fm, int i,
                                                         long n, long N, std::uint64_t seed) {
  if (N < 1) throw std::invalid_argument("sample_harmonic_measure: N >= 1 required");
  std::vector<GrassmannPoint> pts;
  pts.reserve(static_cast<size_t>(N));
  for (long j = 0; j < N; ++j) {
    FlagSample fs = sample_limit_flag_factored(fm, n, static_cast<std::uint64_t>(j), seed,
                                               stream_tag::kForward);
    pts.push_back(flag_project(fs.flag, i));
  }
  return EmpiricalMeasure::from_points(std::move(pts));
}

inline EmpiricalMeasure sample_harmonic_measure(const FiniteMeasure& mu, int i, long n, long N,
                                                std::uint64_t seed) {
  return sample_harmonic_measure_factored(FactoredMeasure::from(mu), i, n, N, seed);
}

struct StationarityReport {
  double max_discrepancy = 0.0;
  double bootstrap_stderr = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Tests mu * nu = nu against a family of 1-Lipschitz witnesses
/// f(xi) = rho(xi, anchor) with anchors drawn from the cloud itself.
inline StationarityReport stationarity_check(const FiniteMeasure& mu,
                                             const EmpiricalMeasure& nu_hat, int anchors,
                                             double tolerance, std::uint64_t seed,
                                             int bootstrap_rounds = 64) {
  long N = nu_hat.size();
  std::vector<Matrix> dense;
  std::vector<double> weights;
  for (const auto& [g, w] : mu.atoms) {
    dense.push_back(g.dense());
    weights.push_back(static_cast<double>(w));
  }
  // Per-point integrand difference f(b_j) - sum_g mu(g) f(g b_j), one column
  // per anchor; the discrepancy is the column mean and bootstrapping the
  // rows gives its sampling error.
  Matrix diff(N, anchors);
  std::vector<Vector> anchor_wedges;
  for (int a = 0; a < anchors; ++a) {
    StreamKey akey{seed, static_cast<std::uint64_t>(a), 0};
    long idx = static_cast<long>(counter_uniform(akey, stream_tag::kAnchor) * N);
    anchor_wedges.push_back(nu_hat.points[static_cast<size_t>(idx)].wedge);
  }
  for (long j = 0; j < N; ++j) {
    const GrassmannPoint& b = nu_hat.points[static_cast<size_t>(j)];
    std::vector<GrassmannPoint> images;
    images.reserve(dense.size());
    for (const auto& g : dense) images.push_back(act_on_grassmann(g, b));
    for (int a = 0; a < anchors; ++a) {
      double c0 = b.wedge.dot(anchor_wedges[static_cast<size_t>(a)]);
      double f0 = std::sqrt(std::max(0.0, 1.0 - c0 * c0));
      double fg = 0.0;
      for (size_t t = 0; t < images.size(); ++t) {
        double c = images[t].wedge.dot(anchor_wedges[static_cast<size_t>(a)]);
        fg += weights[t] * std::sqrt(std::max(0.0, 1.0 - c * c));
      }
      diff(j, a) = f0 - fg;
    }
  }
  StationarityReport rep;
  rep.tolerance = tolerance;
  Vector means = diff.colwise().mean();
  rep.max_discrepancy = means.cwiseAbs().maxCoeff();
  // Bootstrap the worst anchor.
  int worst = 0;
  means.cwiseAbs().maxCoeff(&worst);
  double s = 0.0, s2 = 0.0;
  for (int bturn = 0; bturn < bootstrap_rounds; ++bturn) {
    double acc = 0.0;
    for (long j = 0; j < N; ++j) {
      StreamKey k{seed, static_cast<std::uint64_t>(bturn) * 0x10001ULL +
                            static_cast<std::uint64_t>(j),
                  1};
      long idx = static_cast<long>(counter_uniform(k, stream_tag::kBootstrap) * N);
      acc += diff(idx, worst);
    }
    acc /= static_cast<double>(N);
    s += acc;
    s2 += acc * acc;
  }
  double var = (s2 - s * s / bootstrap_rounds) / (bootstrap_rounds - 1);
  rep.bootstrap_stderr = std::sqrt(std::max(var, 0.0));
  rep.pass = rep.max_discrepancy <= tolerance + rep.bootstrap_stderr;
  return rep;
}

/// xi_x: orthogonal complement of the rank d-i subspace of the backward
/// limit flag.
inline GrassmannPoint backward_limit_xi(const FiniteMeasure& mu, int i, long n,
                                        std::uint64_t sample_index, std::uint64_t seed) {
  FlagSample fs =
      sample_limit_flag_tagged(reflect(mu), n, sample_index, seed, stream_tag::kBackward);
  return orthogonal_complement(flag_project(fs.flag, mu.d - i));
}

/// Point at rho-distance exactly r from xi, found by scaling a Gaussian
/// frame perturbation (distance grows monotonically from 0, bisect on the
/// scale).
inline GrassmannPoint sphere_point(const GrassmannPoint& xi, double r, const StreamKey& key,
                                   std::uint64_t tag = stream_tag::kBall) {
  if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("sphere_point: need 0 < r < 1");
  int d = xi.ambient_dim();
  Matrix g(d, xi.rank);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < xi.rank; ++b) {
      StreamKey k{key.experiment_seed, key.sample_index,
                  key.step_index * 1024ULL + static_cast<std::uint64_t>(a * xi.rank + b)};
      g(a, b) = counter_normal(k, tag);
    }
  // Project onto the tangent space at xi: the distance then grows
  // monotonically from 0 toward 1 as the scale increases, so bisection
  // always brackets r < 1.
  g -= xi.frame * (xi.frame.transpose() * g);
  if (g.norm() < 1e-12) throw NumericError("sphere_point: degenerate perturbation");
  auto at = [&](double eps) {
    return GrassmannPoint::from_frame(xi.frame + eps * g);
  };
  double lo = 0.0, hi = 1.0;
  int expand = 0;
  while (grassmann_distance(at(hi), xi) < r) {
    hi *= 2.0;
    if (++expand > 60) throw NumericError("sphere_point: radius unreachable");
  }
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    if (grassmann_distance(at(mid), xi) < r)
      lo = mid;
    else
      hi = mid;
  }
  return at(0.5 * (lo + hi));
}

/// Contraction rate of one backward path: -(1/n) log diam of the image of
/// the sphere of radius r around xi_x under the wedge^i action of the
/// inverse backward product. Pairwise distances are evaluated in the log
/// domain through the second exterior lift, so rates far beyond double
/// range stay representable.
inline double contraction_rate_single(const FiniteMeasure& mu, int i, double r, long n,
                                      int boundary_samples, std::uint64_t sample_index,
                                      std::uint64_t seed) {
  if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("contraction_rate: need 0 < r < 1");
  int d = mu.d;
  FiniteMeasure refl = reflect(mu);
  SamplerTable table(refl);

  // Backward products: the limit flag comes from the same increment stream
  // that drives the mapping.
  ScaledMatrix prod = ScaledMatrix::identity(d);
  std::vector<size_t> picks(static_cast<size_t>(n));
  StreamKey key{seed, sample_index, 0};
  for (long s = 1; s <= n; ++s) {
    key.step_index = static_cast<std::uint64_t>(s);
    picks[static_cast<size_t>(s - 1)] = table.pick(counter_uniform(key, stream_tag::kBackward));
    prod = prod.times(table.dense[picks[static_cast<size_t>(s - 1)]]);
    check_scale(prod);
  }
  Flag limit = flag_from_product(prod.unit);
  GrassmannPoint xi = orthogonal_complement(flag_project(limit, d - i));

  std::vector<Vector> wedges;
  wedges.push_back(xi.wedge);
  for (int b = 0; b < boundary_samples; ++b) {
    StreamKey bk{seed, sample_index, static_cast<std::uint64_t>(b + 1)};
    wedges.push_back(sphere_point(xi, r, bk).wedge);
  }

  // A_s = wedge^i(inverse backward product), L_s its second exterior lift.
  std::vector<Matrix> inv_ext(table.dense.size());
  std::vector<Matrix> inv_lift(table.dense.size());
  for (size_t t = 0; t < table.dense.size(); ++t) {
    Matrix inv = table.dense[t].inverse();
    inv_ext[t] = exterior_power(inv, i);
    inv_lift[t] = exterior_power(inv_ext[t], 2);
  }
  ScaledMatrix a = ScaledMatrix::from(Matrix::Identity(inv_ext[0].rows(), inv_ext[0].cols()));
  ScaledMatrix lift =
      ScaledMatrix::from(Matrix::Identity(inv_lift[0].rows(), inv_lift[0].cols()));
  for (long s = 1; s <= n; ++s) {
    size_t t = picks[static_cast<size_t>(s - 1)];
    a = a.left_times(inv_ext[t]);
    lift = lift.left_times(inv_lift[t]);
  }

  int nw = static_cast<int>(inv_ext[0].rows());
  auto pair_combos = lex_combinations(nw, 2);
  double max_log_rho = -std::numeric_limits<double>::infinity();
  std::vector<double> log_norms(wedges.size());
  for (size_t j = 0; j < wedges.size(); ++j)
    log_norms[j] = a.log_scale + std::log((a.unit * wedges[j]).norm());
  Vector pair_vec(static_cast<int>(pair_combos.size()));
  for (size_t j = 0; j < wedges.size(); ++j)
    for (size_t k = j + 1; k < wedges.size(); ++k) {
      for (size_t p = 0; p < pair_combos.size(); ++p) {
        int u = pair_combos[p][0], v = pair_combos[p][1];
        pair_vec(static_cast<int>(p)) =
            wedges[j](u) * wedges[k](v) - wedges[j](v) * wedges[k](u);
      }
      double log_rho = lift.log_scale + std::log((lift.unit * pair_vec).norm()) -
                       log_norms[j] - log_norms[k];
      max_log_rho = std::max(max_log_rho, log_rho);
    }
  return -max_log_rho / static_cast<double>(n);
}

inline std::vector<double> contraction_rate(const FiniteMeasure& mu, int i, double r, long n,
                                            int boundary_samples, int paths,
                                            std::uint64_t seed) {
  std::vector<double> rates;
  rates.reserve(static_cast<size_t>(paths));
  for (int p = 0; p < paths; ++p)
    rates.push_back(contraction_rate_single(mu, i, r, n, boundary_samples,
                                            static_cast<std::uint64_t>(p), seed));
  return rates;
}

}  // namespace slrw
