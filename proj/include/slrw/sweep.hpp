#pragma once

#include <future>
#include <string>
#include <vector>

#include "slrw/dimension.hpp"
#include "slrw/entropy.hpp"
#include "slrw/harmonic.hpp"
#include "slrw/io.hpp"
#include "slrw/lyapunov.hpp"

namespace slrw {

struct SweepRow {
  long k = 0;
  bool failed = false;
  std::string error;
  double H = 0.0;
  Vector lambdas;
  Vector stderrs;
  Vector gaps;
  std::vector<double> E;          // per rank i = 1..d-1
  std::vector<double> E_stderr;
  std::vector<double> bound;      // E_i / gap_i
  std::vector<double> bound_stderr;
  std::vector<double> upper_mean_dim;
  double min_bound = 0.0;
  // Metadata to re-run the cell in isolation.
  long n = 0;
  long N = 0;
  long flags_n = 0;
  int replicas = 0;
  int k_neighbors = 0;
  std::uint64_t seed = 0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  int d = 0;

  CsvTable to_csv() const {
    CsvTable t;
    t.header = {"k", "failed", "H_mu_k"};
    for (int j = 1; j <= d; ++j) t.header.push_back("lambda_" + std::to_string(j));
    for (int j = 1; j <= d; ++j) t.header.push_back("stderr_" + std::to_string(j));
    for (int j = 1; j < d; ++j) t.header.push_back("gap_" + std::to_string(j));
    for (int j = 1; j < d; ++j) t.header.push_back("E_" + std::to_string(j));
    for (int j = 1; j < d; ++j) t.header.push_back("bound_" + std::to_string(j));
    for (int j = 1; j < d; ++j) t.header.push_back("upper_mean_dim_" + std::to_string(j));
    t.header.insert(t.header.end(),
                    {"min_bound", "n", "N", "flags_n", "replicas", "k_neighbors", "seed"});
    for (const auto& r : rows) {
      std::vector<std::string> row{std::to_string(r.k), r.failed ? "1" : "0",
                                   r.failed ? "" : fmt_double(r.H)};
      auto push_vec = [&](auto getter, int count) {
        for (int j = 0; j < count; ++j) row.push_back(r.failed ? "" : getter(j));
      };
      push_vec([&](int j) { return fmt_double(r.lambdas(j)); }, d);
      push_vec([&](int j) { return fmt_double(r.stderrs(j)); }, d);
      push_vec([&](int j) { return fmt_double(r.gaps(j)); }, d - 1);
      push_vec([&](int j) { return fmt_double(r.E[static_cast<size_t>(j)]); }, d - 1);
      push_vec([&](int j) { return fmt_double(r.bound[static_cast<size_t>(j)]); }, d - 1);
      push_vec([&](int j) { return fmt_double(r.upper_mean_dim[static_cast<size_t>(j)]); },
               d - 1);
      row.push_back(r.failed ? r.error : fmt_double(r.min_bound));
      row.push_back(std::to_string(r.n));
      row.push_back(std::to_string(r.N));
      row.push_back(std::to_string(r.flags_n));
      row.push_back(std::to_string(r.replicas));
      row.push_back(std::to_string(r.k_neighbors));
      row.push_back(std::to_string(r.seed));
      t.rows.push_back(std::move(row));
    }
    return t;
  }

  Json to_json() const {
    Json rows_j = Json::array();
    for (const auto& r : rows) {
      Json jr{{"k", r.k},     {"failed", r.failed}, {"n", r.n},
              {"N", r.N},     {"flags_n", r.flags_n}, {"replicas", r.replicas},
              {"k_neighbors", r.k_neighbors}, {"seed", r.seed}};
      if (r.failed) {
        jr["error"] = r.error;
      } else {
        jr["H_mu_k"] = r.H;
        jr["lambda"] = std::vector<double>(r.lambdas.data(), r.lambdas.data() + r.lambdas.size());
        jr["stderr"] = std::vector<double>(r.stderrs.data(), r.stderrs.data() + r.stderrs.size());
        jr["gap"] = std::vector<double>(r.gaps.data(), r.gaps.data() + r.gaps.size());
        jr["E"] = r.E;
        jr["E_stderr"] = r.E_stderr;
        jr["bound"] = r.bound;
        jr["bound_stderr"] = r.bound_stderr;
        jr["upper_mean_dim"] = r.upper_mean_dim;
        jr["min_bound"] = r.min_bound;
      }
      rows_j.push_back(std::move(jr));
    }
    return Json{{"schema", 1}, {"d", d}, {"rows", std::move(rows_j)}};
  }
};

struct SweepParams {
  long spectrum_n = 20000;
  int replicas = 8;
  long flags_n = 300;
  long N = 2000;
  int k_neighbors = 0;  // 0 = ceil(N^(1/3))
  std::vector<double> radii{0.3, 0.2, 0.15, 0.1, 0.07, 0.05};
  double mass_tail = 0.25;
  std::uint64_t seed = 1;
  int threads = 1;
};

namespace detail {

inline SweepRow sweep_cell(const FiniteMeasure& mu, const GroupElement& gamma, long k,
                           const SweepParams& p) {
  SweepRow row;
  row.k = k;
  row.n = p.spectrum_n;
  row.N = p.N;
  row.flags_n = p.flags_n;
  row.replicas = p.replicas;
  row.seed = p.seed + static_cast<std::uint64_t>(k) * 0x1000ULL;
  int kn = p.k_neighbors > 0
               ? p.k_neighbors
               : static_cast<int>(std::ceil(std::pow(static_cast<double>(p.N), 1.0 / 3.0)));
  row.k_neighbors = kn;
  try {
    row.H = shannon_entropy(build_mu_k(mu, gamma, k));
    // Everything numeric runs on the factored mixture: gamma^k applied as k
    // well-conditioned factors, never as one matrix.
    FactoredMeasure fk = FactoredMeasure::mu_k_mixture(mu, gamma, k);
    auto spec = estimate_spectrum_factored(fk, p.spectrum_n, p.replicas, row.seed);
    row.lambdas = spec.spectrum.lambdas;
    row.stderrs = spec.stderrs;
    row.gaps = spec.gaps;
    int d = mu.d;
    row.min_bound = std::numeric_limits<double>::infinity();
    for (int i = 1; i < d; ++i) {
      auto nu = sample_harmonic_measure_factored(fk, i, p.flags_n, p.N,
                                                 row.seed + static_cast<std::uint64_t>(i));
      auto E = differential_entropy_factored(fk, i, nu, kn,
                                             row.seed + 100 + static_cast<std::uint64_t>(i));
      auto b = dimension_bound(E, spec.gaps(i - 1), spec.stderrs(i - 1) + spec.stderrs(i));
      row.E.push_back(E.value);
      row.E_stderr.push_back(E.stderr_);
      row.bound.push_back(b.value);
      row.bound_stderr.push_back(b.stderr_);
      row.min_bound = std::min(row.min_bound, b.value);
      auto pd = pointwise_dims(nu, p.radii);
      row.upper_mean_dim.push_back(mean_dimension_interval(pd, p.mass_tail).second);
    }
  } catch (const std::exception& e) {
    row.failed = true;
    row.error = e.what();
    row.lambdas = Vector::Zero(mu.d);
    row.stderrs = Vector::Zero(mu.d);
    row.gaps = Vector::Zero(mu.d - 1);
    row.E.assign(static_cast<size_t>(mu.d - 1), 0.0);
    row.E_stderr = row.E;
    row.bound = row.E;
    row.bound_stderr = row.E;
    row.upper_mean_dim = row.E;
  }
  return row;
}

}  // namespace detail

/// The paper's singularity mechanism, measured: for each k the entropy of
/// mu^k stays bounded while the Lyapunov vector stretches, so the dimension
/// bounds E_i / gap_i collapse. Cells run independently (optionally in
/// parallel) and per-k failures are recorded without aborting the sweep.
inline SweepReport run_singularity_sweep(const FiniteMeasure& mu, const GroupElement& gamma,
                                         std::vector<long> ks, const SweepParams& p) {
  std::sort(ks.begin(), ks.end());
  SweepReport rep;
  rep.d = mu.d;
  if (p.threads > 1) {
    std::vector<std::future<SweepRow>> futs;
    for (long k : ks)
      futs.push_back(std::async(std::launch::async,
                                [&, k] { return detail::sweep_cell(mu, gamma, k, p); }));
    for (auto& f : futs) rep.rows.push_back(f.get());
  } else {
    for (long k : ks) rep.rows.push_back(detail::sweep_cell(mu, gamma, k, p));
  }
  return rep;
}

struct GkClaimReport {
  long trials = 0;
  long violations = 0;
  double min_margin = 0.0;  // min over trials of LHS - bound
  double bound = 0.0;       // -2 (log ||h|| + log ||h^-1||)
};

/// log ||gamma^k v|| + log ||gamma^-k v|| >= -2(log||h|| + log||h^-1||) for
/// unit v, where h diagonalizes gamma. Audited over random (v, k <= k_max).
inline GkClaimReport claim_gk_check(const GroupElement& gamma, long k_max, long trials,
                                    std::uint64_t seed) {
  auto reg = is_r_regular(gamma);
  if (!reg.r_regular && !reg.weakly_regular)
    throw std::invalid_argument("claim_gk_check: gamma not diagonalizable over R");
  double log_h = std::log(operator_norm(reg.diagonalizer));
  double log_hi = std::log(operator_norm(reg.diagonalizer.inverse()));
  GkClaimReport rep;
  rep.trials = trials;
  rep.bound = -2.0 * (log_h + log_hi);
  rep.min_margin = std::numeric_limits<double>::infinity();
  int d = gamma.dim();
  // Powers stay exact; the audit itself is float.
  std::vector<Matrix> pos(static_cast<size_t>(k_max) + 1), neg(pos.size());
  pos[0] = neg[0] = Matrix::Identity(d, d);
  RationalMatrix gk = RationalMatrix::identity(d);
  for (long k = 1; k <= k_max; ++k) {
    gk = gk * gamma.rational();
    pos[static_cast<size_t>(k)] = gk.to_double();
    neg[static_cast<size_t>(k)] = gk.inverse().to_double();
  }
  for (long t = 0; t < trials; ++t) {
    Vector v(d);
    for (int j = 0; j < d; ++j) {
      StreamKey key{seed, static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(j)};
      v(j) = counter_normal(key);
    }
    v.normalize();
    StreamKey kk{seed, static_cast<std::uint64_t>(t), 1000};
    long k = 1 + static_cast<long>(counter_uniform(kk) * static_cast<double>(k_max));
    if (k > k_max) k = k_max;
    double lhs = std::log((pos[static_cast<size_t>(k)] * v).norm()) +
                 std::log((neg[static_cast<size_t>(k)] * v).norm());
    double margin = lhs - (rep.bound - 1e-6);
    rep.min_margin = std::min(rep.min_margin, margin);
    if (margin < 0) ++rep.violations;
  }
  return rep;
}

struct OpensClaimReport {
  std::vector<long> ks;
  std::vector<double> mass;  // empirical nu_1^k(U)
  double min_mass = 0.0;
  bool any_zero = false;
};

/// nu_1^k(U) for the open set U of directions whose first and last
/// coordinates in the gamma eigenbasis both exceed beta (projectively:
/// either sign of the representative).
inline OpensClaimReport claim_opens_estimate(const FiniteMeasure& mu, const GroupElement& gamma,
                                             const std::vector<long>& ks, double beta, long n,
                                             long N, std::uint64_t seed) {
  auto reg = is_r_regular(gamma);
  if (!reg.r_regular && !reg.weakly_regular)
    throw std::invalid_argument("claim_opens_estimate: gamma not diagonalizable over R");
  const Matrix& h = reg.diagonalizer;
  int d = mu.d;
  OpensClaimReport rep;
  rep.ks = ks;
  rep.min_mass = std::numeric_limits<double>::infinity();
  for (size_t t = 0; t < ks.size(); ++t) {
    FactoredMeasure fk = FactoredMeasure::mu_k_mixture(mu, gamma, ks[t]);
    auto nu = sample_harmonic_measure_factored(fk, 1, n, N,
                                               seed + static_cast<std::uint64_t>(ks[t]));
    long hits = 0;
    for (const auto& p : nu.points) {
      Vector w = h * p.frame.col(0);
      w.normalize();
      bool in_plus = w(0) > beta && w(d - 1) > beta;
      bool in_minus = -w(0) > beta && -w(d - 1) > beta;
      if (in_plus || in_minus) ++hits;
    }
    double m = static_cast<double>(hits) / static_cast<double>(N);
    rep.mass.push_back(m);
    rep.min_mass = std::min(rep.min_mass, m);
    if (m == 0.0) rep.any_zero = true;
  }
  return rep;
}

}  // namespace slrw
