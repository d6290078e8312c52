#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "slrw/empirical.hpp"
#include "slrw/group.hpp"
#include "slrw/walk.hpp"

namespace slrw {

struct AsymptoticEntropyEstimate {
  std::vector<double> h_values;  // H(mu^{*n}) / n, n = 1..n_max
  std::vector<double> h_diffs;   // H(mu^{*(n+1)}) - H(mu^{*n})
  long n_max = 0;
  double h_estimate = 0.0;       // Richardson extrapolation of the last two diffs
  double h_upper = 0.0;          // last difference: a rigorous upper bound on h
  std::vector<size_t> support_sizes;
};

/// h = lim H(mu^{*n})/n via exact convolution powers. The successive
/// differences d_n = H(mu^{*n}) - H(mu^{*(n-1)}) decrease monotonically to
/// h, so d_{n_max} is a certified upper bound; the point estimate removes
/// the leading O(1/n) tail (from the ~ (1/2) log n marginal term of the
/// word-length distribution) by first-order Richardson extrapolation:
/// h ~ n d_n - (n-1) d_{n-1}.
inline AsymptoticEntropyEstimate asymptotic_entropy(
    const FiniteMeasure& mu, long n_max,
    size_t support_cap = FiniteMeasure::kDefaultSupportCap) {
  if (n_max < 1) throw std::invalid_argument("asymptotic_entropy: n_max >= 1");
  AsymptoticEntropyEstimate est;
  est.n_max = n_max;
  FiniteMeasure power = mu;
  double prev_h = 0.0;  // H(mu^{*0}) = 0
  for (long n = 1; n <= n_max; ++n) {
    if (n > 1) {
      try {
        power = convolve(power, mu, support_cap);
      } catch (const ResourceError&) {
        throw ResourceError("asymptotic_entropy: support cap exceeded at n = " +
                            std::to_string(n) + " (achieved n_max = " + std::to_string(n - 1) +
                            ")");
      }
    }
    double h = shannon_entropy(power);
    est.h_values.push_back(h / static_cast<double>(n));
    est.h_diffs.push_back(h - prev_h);
    est.support_sizes.push_back(power.size());
    prev_h = h;
  }
  est.h_upper = est.h_diffs.back();
  if (n_max >= 2) {
    double dn = est.h_diffs[static_cast<size_t>(n_max - 1)];
    double dp = est.h_diffs[static_cast<size_t>(n_max - 2)];
    est.h_estimate = std::max(0.0, static_cast<double>(n_max) * dn -
                                       static_cast<double>(n_max - 1) * dp);
  } else {
    est.h_estimate = est.h_upper;
  }
  return est;
}

struct DifferentialEntropyEstimate {
  int rank = 0;
  double value = 0.0;
  double stderr_ = 0.0;
  int k_neighbors = 0;
  long sample_size = 0;
  long degenerate_pairs = 0;  // (atom, point) pairs at the distance resolution floor
};

/// Furstenberg entropy E_i of an empirical stationary measure via the k-NN
/// matched-radius mass-ratio estimator: at sample point z with k-th
/// leave-one-out neighbor radius r, the log Radon-Nikodym derivative of
/// g^{-1}nu against nu is read off log of the ratio of translated-cloud to
/// base-cloud counts inside B(z, r). Matching the radius (instead of
/// comparing k-th neighbor distances with a fixed ambient exponent) keeps
/// the estimator consistent when nu is singular with fractional local
/// dimension, which is the regime of interest here. Counts are +1/2
/// smoothed on both sides, so the trivial action contributes exactly zero.
inline DifferentialEntropyEstimate differential_entropy_factored(const FactoredMeasure& fm,
                                                                 int i,
                                                                 const EmpiricalMeasure& nu_hat,
                                                                 int k_neighbors,
                                                                 std::uint64_t seed = 0,
                                                                 int bootstrap_rounds = 64) {
  if (k_neighbors < 1) throw std::invalid_argument("differential_entropy: k >= 1");
  long N = nu_hat.size();

  // Per-point contribution sum_g mu(g) log ratio; bootstrap acts on these.
  Vector contrib = Vector::Zero(N);
  Vector base_dist(N);
  std::vector<long> base_cnt(static_cast<size_t>(N));
  long degenerate = 0;
  // Slightly inflated counting threshold: exact neighbor ties (lattice-like
  // clouds) must not flip when the translated cloud reproduces a point only
  // up to roundoff.
  auto thresh = [](double r) { return r + 1e-9 * r + 1e-15; };
  for (long j = 0; j < N; ++j) {
    Vector dist = nu_hat.distances_to(nu_hat.points[static_cast<size_t>(j)].wedge);
    std::vector<double> v(dist.data(), dist.data() + dist.size());
    std::nth_element(v.begin(), v.begin() + k_neighbors, v.end());
    double r0 = v[static_cast<size_t>(k_neighbors)];  // k-th LOO: self sits at distance 0
    base_dist(j) = r0;
    base_cnt[static_cast<size_t>(j)] = (dist.array() <= thresh(r0)).count() - 1;  // drop self
  }
  for (const auto& atom : fm.atoms) {
    EmpiricalMeasure translated = nu_hat;
    for (const Matrix& f : atom.inv_factors) translated = translated.mapped_by(f);
    for (long j = 0; j < N; ++j) {
      double r0 = base_dist(j);
      Vector dist = translated.distances_to(nu_hat.points[static_cast<size_t>(j)].wedge);
      long zeros = (dist.array() == 0.0).count();
      long inside = (dist.array() <= thresh(r0)).count();
      // One exact-zero entry is the point's own image (the g = identity
      // case); drop it so both sides use the same neighbor convention.
      if (zeros > 0) {
        --zeros;
        --inside;
      }
      if (r0 <= 0.0 && zeros >= k_neighbors) continue;  // duplicates on both sides: ratio 1
      if (r0 <= 0.0 || inside == 0) ++degenerate;       // at the resolution floor
      double ratio = (static_cast<double>(inside) + 0.5) /
                     (static_cast<double>(base_cnt[static_cast<size_t>(j)]) + 0.5);
      contrib(j) += atom.weight * std::log(ratio);
    }
  }

  DifferentialEntropyEstimate est;
  est.rank = i;
  est.k_neighbors = k_neighbors;
  est.sample_size = N;
  est.degenerate_pairs = degenerate;
  est.value = -contrib.mean();
  double s = 0.0, s2 = 0.0;
  for (int b = 0; b < bootstrap_rounds; ++b) {
    double acc = 0.0;
    for (long j = 0; j < N; ++j) {
      StreamKey k{seed, static_cast<std::uint64_t>(b) * 0x20003ULL + static_cast<std::uint64_t>(j),
                  2};
      long idx = static_cast<long>(counter_uniform(k, stream_tag::kBootstrap) * N);
      acc += contrib(idx);
    }
    acc = -acc / static_cast<double>(N);
    s += acc;
    s2 += acc * acc;
  }
  double var = (s2 - s * s / bootstrap_rounds) / (bootstrap_rounds - 1);
  est.stderr_ = std::max(std::sqrt(std::max(var, 0.0)), 1e-12);
  return est;
}

inline DifferentialEntropyEstimate differential_entropy(const FiniteMeasure& mu, int i,
                                                        const EmpiricalMeasure& nu_hat,
                                                        int k_neighbors,
                                                        std::uint64_t seed = 0,
                                                        int bootstrap_rounds = 64) {
  return differential_entropy_factored(FactoredMeasure::from(mu), i, nu_hat, k_neighbors, seed,
                                       bootstrap_rounds);
}

struct BallSpec {
  GrassmannPoint center;
  double radius = 0.5;
};

struct DecayPath {
  std::vector<long> checkpoints;
  std::vector<double> rates;      // -(1/n) log of translated mass at each checkpoint
  std::vector<bool> truncated;    // empirical mass was zero, continuity-corrected
};

struct DecayReport {
  std::vector<DecayPath> paths;
  double empirical_mass_of_A = 0.0;

  /// Quantile of the final-checkpoint rates over paths.
  double rate_quantile(double q) const {
    std::vector<double> finals;
    for (const auto& p : paths) finals.push_back(p.rates.back());
    std::sort(finals.begin(), finals.end());
    double pos = q * (static_cast<double>(finals.size()) - 1);
    size_t lo = static_cast<size_t>(pos);
    size_t hi = std::min(lo + 1, finals.size() - 1);
    return finals[lo] + (pos - static_cast<double>(lo)) * (finals[hi] - finals[lo]);
  }
};

/// Decay of the nu_i-mass of A translated along backward paths: the mass of
/// x_n-translated nu_i on A is evaluated by pushing the sample cloud
/// forward and counting hits in A.
inline DecayReport translated_mass_decay(const FiniteMeasure& mu, int i,
                                         const EmpiricalMeasure& nu_hat, const BallSpec& A,
                                         long n_max, int paths, std::uint64_t seed) {
  DecayReport rep;
  rep.empirical_mass_of_A = nu_hat.ball_mass(A.center, A.radius);
  if (rep.empirical_mass_of_A <= 0.0)
    throw std::invalid_argument("translated_mass_decay: A is empirically null");
  FiniteMeasure refl = reflect(mu);
  SamplerTable table(refl);
  std::vector<Matrix> ext_atoms(table.dense.size());
  for (size_t t = 0; t < table.dense.size(); ++t)
    ext_atoms[t] = exterior_power(table.dense[t], i);
  std::vector<long> checkpoints;
  for (long c : {n_max / 4, n_max / 2, n_max})
    if (c >= 1 && (checkpoints.empty() || c != checkpoints.back())) checkpoints.push_back(c);
  long N = nu_hat.size();
  for (int p = 0; p < paths; ++p) {
    DecayPath path;
    path.checkpoints = checkpoints;
    ScaledMatrix ext = ScaledMatrix::from(Matrix::Identity(ext_atoms[0].rows(),
                                                           ext_atoms[0].cols()));
    StreamKey key{seed, static_cast<std::uint64_t>(p), 0};
    size_t next_cp = 0;
    for (long s = 1; s <= n_max && next_cp < checkpoints.size(); ++s) {
      key.step_index = static_cast<std::uint64_t>(s);
      size_t t = table.pick(counter_uniform(key, stream_tag::kBackward));
      ext = ext.times(ext_atoms[t]);  // wedge^i(x_s) = wedge^i(x_{s-1}) wedge^i(h_s)
      if (s == checkpoints[next_cp]) {
        // mass of { b : x_s b in A } over the cloud
        Matrix imaged = nu_hat.wedges * ext.unit.transpose();
        long hits = 0;
        for (long j = 0; j < N; ++j) {
          double norm = imaged.row(j).norm();
          if (norm <= 0) continue;
          double c = imaged.row(j).dot(A.center.wedge) / norm;
          double rho = std::sqrt(std::max(0.0, 1.0 - c * c));
          if (rho <= A.radius) ++hits;
        }
        double mass = static_cast<double>(hits) / static_cast<double>(N);
        bool trunc = hits == 0;
        if (trunc) mass = 0.5 / static_cast<double>(N);
        path.rates.push_back(-std::log(mass) / static_cast<double>(s));
        path.truncated.push_back(trunc);
        ++next_cp;
      }
    }
    rep.paths.push_back(std::move(path));
  }
  return rep;
}

}  // namespace slrw
