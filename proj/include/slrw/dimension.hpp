#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "slrw/empirical.hpp"
#include "slrw/entropy.hpp"

namespace slrw {

/// Radii below c * N^{-1/m} are under the sample resolution; ball masses
/// there are dominated by the nearest-neighbor gap and read as dimension 0.
inline double resolution_floor(long N, double m_intrinsic, double c = 2.0) {
  return c * std::pow(static_cast<double>(N), -1.0 / std::max(m_intrinsic, 1.0));
}

struct PointwiseDims {
  std::vector<double> radii;   // decreasing, after the resolution-floor cut
  Matrix ratios;               // N x R, log m B(z,r) / log r; NaN where the ball was empty
  Vector slopes;               // per-point least-squares slope of log mass vs log r
};

/// Per-point curves log m B(z,r) / log r with leave-one-out masses.
inline PointwiseDims pointwise_dims(const EmpiricalMeasure& m, std::vector<double> radii,
                                    double m_intrinsic = -1.0) {
  long N = m.size();
  if (m_intrinsic <= 0)
    m_intrinsic = static_cast<double>(m.rank * (m.ambient - m.rank));
  double floor_r = resolution_floor(N, m_intrinsic);
  std::sort(radii.begin(), radii.end(), std::greater<double>());
  std::vector<double> kept;
  for (double r : radii)
    if (r >= floor_r && r > 0.0 && r < 1.0) kept.push_back(r);
  if (kept.empty()) throw std::invalid_argument("pointwise_dims: no radius above resolution floor");

  PointwiseDims out;
  out.radii = kept;
  int R = static_cast<int>(kept.size());
  out.ratios.resize(N, R);
  out.slopes.resize(N);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (long j = 0; j < N; ++j) {
    Vector dist = m.distances_to(m.points[static_cast<size_t>(j)].wedge);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int used = 0;
    for (int t = 0; t < R; ++t) {
      long cnt = (dist.array() <= kept[static_cast<size_t>(t)]).count() - 1;
      if (cnt <= 0) {
        out.ratios(j, t) = nan;
        continue;
      }
      double mass = static_cast<double>(cnt) / static_cast<double>(N - 1);
      double lr = std::log(kept[static_cast<size_t>(t)]);
      double lm = std::log(mass);
      out.ratios(j, t) = lm / lr;
      sx += lr;
      sy += lm;
      sxx += lr * lr;
      sxy += lr * lm;
      ++used;
    }
    if (used >= 2) {
      double denom = used * sxx - sx * sx;
      out.slopes(j) = denom != 0.0 ? (used * sxy - sx * sy) / denom : 0.0;
    } else if (used == 1) {
      // Single usable radius: fall back to the plain ratio.
      for (int t = 0; t < R; ++t)
        if (std::isfinite(out.ratios(j, t))) out.slopes(j) = out.ratios(j, t);
    } else {
      out.slopes(j) = 0.0;
    }
  }
  return out;
}

/// [lower, upper] mean dimension from the quantiles of per-point scaling
/// exponents; q is the mass tail excluded on each side. The limit interval
/// is defined through convergence in probability, so every fixed q in
/// (0, 1/2) estimates the same interval; the quartile default trades tail
/// coverage for bias, because at reachable radii the small-q endpoints sit
/// inside the large-deviation tail of the exponent distribution, whose
/// exceedance mass vanishes only like a slow power of r.
inline std::pair<double, double> mean_dimension_interval(const PointwiseDims& pd,
                                                         double q = 0.25) {
  if (!(q > 0.0 && q < 0.5)) throw std::invalid_argument("mean_dimension_interval: q in (0,0.5)");
  std::vector<double> s(pd.slopes.data(), pd.slopes.data() + pd.slopes.size());
  std::sort(s.begin(), s.end());
  auto quant = [&](double p) {
    double pos = p * (static_cast<double>(s.size()) - 1);
    size_t lo = static_cast<size_t>(pos);
    size_t hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
  };
  double lower = std::max(0.0, quant(q));
  double upper = std::max(lower, quant(1.0 - q));
  return {lower, upper};
}

/// Greedy ball cover until mass >= 1 - eps: repeatedly takes the sample
/// point whose r-ball has maximal uncovered mass, ties broken by the
/// lexicographically smallest wedge coordinates so the count is invariant
/// under relabeling of the samples. Upper bound on the true covering
/// number.
inline long covering_number(const EmpiricalMeasure& m, double r, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("covering_number: eps in (0,1)");
  long N = m.size();
  // Neighbor lists within r.
  std::vector<std::vector<int>> nbr(static_cast<size_t>(N));
  for (long j = 0; j < N; ++j) {
    Vector dist = m.distances_to(m.points[static_cast<size_t>(j)].wedge);
    for (long t = 0; t < N; ++t)
      if (dist(t) <= r) nbr[static_cast<size_t>(j)].push_back(static_cast<int>(t));
  }
  // Index-free tie-break rank: position of each point's wedge row in
  // lexicographic order (duplicates are interchangeable for the count).
  std::vector<int> order(static_cast<size_t>(N));
  for (long j = 0; j < N; ++j) order[static_cast<size_t>(j)] = static_cast<int>(j);
  auto lex_less = [&](int a, int b) {
    for (long c = 0; c < m.wedges.cols(); ++c) {
      if (m.wedges(a, c) != m.wedges(b, c)) return m.wedges(a, c) < m.wedges(b, c);
    }
    return false;
  };
  std::sort(order.begin(), order.end(), lex_less);
  std::vector<int> rank(static_cast<size_t>(N));
  for (long j = 0; j < N; ++j) rank[static_cast<size_t>(order[static_cast<size_t>(j)])] =
      static_cast<int>(j);
  std::vector<char> covered(static_cast<size_t>(N), 0);
  std::vector<long> gain(static_cast<size_t>(N));
  // Lazy-greedy: gains only decrease, so a stale heap entry re-checked at
  // pop time is safe.
  using Entry = std::pair<long, int>;  // (gain, -rank) so ties pick smallest rank
  std::priority_queue<Entry> heap;
  for (long j = 0; j < N; ++j) {
    gain[static_cast<size_t>(j)] = static_cast<long>(nbr[static_cast<size_t>(j)].size());
    heap.emplace(gain[static_cast<size_t>(j)], -rank[static_cast<size_t>(j)]);
  }
  long need = static_cast<long>(std::ceil((1.0 - eps) * static_cast<double>(N)));
  long covered_count = 0;
  long balls = 0;
  while (covered_count < need && !heap.empty()) {
    auto [g, negj] = heap.top();
    heap.pop();
    int j = order[static_cast<size_t>(-negj)];
    long fresh = 0;
    for (int t : nbr[static_cast<size_t>(j)])
      if (!covered[static_cast<size_t>(t)]) ++fresh;
    if (fresh != g) {
      if (fresh > 0) heap.emplace(fresh, negj);
      continue;
    }
    if (fresh == 0) continue;
    ++balls;
    for (int t : nbr[static_cast<size_t>(j)])
      if (!covered[static_cast<size_t>(t)]) {
        covered[static_cast<size_t>(t)] = 1;
        ++covered_count;
      }
  }
  return balls;
}

struct BoxSummary {
  std::vector<double> radii;
  std::vector<double> epsilons;
  Matrix counts;                 // epsilons x radii, greedy covering numbers
  double lower_ledrappier = 0.0;  // sup over eps of min over r of log N / log(1/r)
  double upper_ledrappier = 0.0;  // sup over eps of max over r
  double lower_box = 0.0;         // proxies at the smallest eps (near-full mass cover)
  double upper_box = 0.0;
};

inline BoxSummary ledrappier_box_summary(const EmpiricalMeasure& m, std::vector<double> radii,
                                         std::vector<double> epsilons) {
  if (radii.empty() || epsilons.empty())
    throw std::invalid_argument("ledrappier_box_summary: empty grid");
  std::sort(radii.begin(), radii.end(), std::greater<double>());
  std::sort(epsilons.begin(), epsilons.end(), std::greater<double>());
  BoxSummary out;
  out.radii = radii;
  out.epsilons = epsilons;
  out.counts.resize(static_cast<long>(epsilons.size()), static_cast<long>(radii.size()));
  out.lower_ledrappier = 0.0;
  out.upper_ledrappier = 0.0;
  for (size_t e = 0; e < epsilons.size(); ++e) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (size_t t = 0; t < radii.size(); ++t) {
      long n = covering_number(m, radii[t], epsilons[e]);
      out.counts(static_cast<long>(e), static_cast<long>(t)) = static_cast<double>(n);
      double ratio = std::log(static_cast<double>(n)) / std::log(1.0 / radii[t]);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    out.lower_ledrappier = std::max(out.lower_ledrappier, lo);
    out.upper_ledrappier = std::max(out.upper_ledrappier, hi);
    if (e + 1 == epsilons.size()) {  // smallest eps: fixed near-full-mass set
      out.lower_box = lo;
      out.upper_box = hi;
    }
  }
  return out;
}

struct ValueWithError {
  double value = 0.0;
  double stderr_ = 0.0;
};

/// E_i / (lambda_i - lambda_{i+1}) with first-order error propagation.
/// Requires a simple gap (Zariski-dense hypothesis) to be meaningful.
inline ValueWithError dimension_bound(const DifferentialEntropyEstimate& E, double gap,
                                      double gap_stderr) {
  if (!(gap > 3.0 * gap_stderr))
    throw std::invalid_argument("dimension_bound: spectral gap not resolved (non-simple?)");
  ValueWithError out;
  out.value = E.value / gap;
  double a = E.stderr_ / gap;
  double b = E.value * gap_stderr / (gap * gap);
  out.stderr_ = std::hypot(a, b);
  return out;
}

struct DimensionReport {
  std::vector<double> radii_grid;
  PointwiseDims pointwise;
  std::pair<double, double> mean_dim_interval{0.0, 0.0};
  BoxSummary box;
  double hausdorff_proxy = 0.0;  // essential-sup style: upper quantile of slopes
  ValueWithError bound;          // E_i / gap_i when supplied
};

inline double hausdorff_proxy_from(const PointwiseDims& pd, double q = 0.1) {
  std::vector<double> s(pd.slopes.data(), pd.slopes.data() + pd.slopes.size());
  std::sort(s.begin(), s.end());
  size_t idx = static_cast<size_t>((1.0 - q) * (static_cast<double>(s.size()) - 1));
  return std::max(0.0, s[idx]);
}

}  // namespace slrw
