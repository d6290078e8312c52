// slrw: numerical laboratory for random walks on SL(d,R).
//
// Subcommands share one JSON config (see configs/default.json) and write
// their results under --out. Every flag can also be set through an
// environment variable with the SLRW_ prefix (SLRW_CONFIG, SLRW_SEED,
// SLRW_OUT, SLRW_THREADS, SLRW_STAGE).

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>

#include "slrw/io.hpp"
#include "slrw/sweep.hpp"

namespace fs = std::filesystem;
using namespace slrw;

namespace {

struct GlobalArgs {
  std::string config_path = "configs/default.json";
  std::uint64_t seed = 0;  // 0 = take the config's seed
  std::string out_dir;     // empty = take the config's out_dir
  int threads = 1;
  bool with_timestamp = false;
};

ExperimentConfig load_config(const GlobalArgs& a) {
  ExperimentConfig cfg = ExperimentConfig::load(a.config_path);
  if (a.seed != 0) cfg.seed = a.seed;
  if (!a.out_dir.empty()) cfg.out_dir = a.out_dir;
  return cfg;
}

std::string timestamp(const GlobalArgs& a) {
  if (!a.with_timestamp) return "";
  auto now = std::chrono::system_clock::now().time_since_epoch();
  return std::to_string(std::chrono::duration_cast<std::chrono::seconds>(now).count());
}

void write_json_report(const ExperimentConfig& cfg, const std::string& name, const Json& j) {
  fs::path dir = fs::path(cfg.out_dir) / "reports";
  fs::create_directories(dir);
  write_text_atomic(dir / (name + ".json"), j.dump(2) + "\n");
  std::cout << "wrote " << (dir / (name + ".json")).string() << "\n";
}

SweepParams sweep_params(const ExperimentConfig& cfg, int threads) {
  SweepParams p;
  p.spectrum_n = cfg.spectrum_n;
  p.replicas = cfg.spectrum_replicas;
  p.flags_n = cfg.harmonic_n;
  p.N = cfg.harmonic_N;
  p.k_neighbors = cfg.k_neighbors;
  p.radii = cfg.radii;
  p.mass_tail = cfg.mass_tail;
  p.seed = cfg.seed;
  p.threads = threads;
  return p;
}

int run_spectrum(const GlobalArgs& a) {
  auto cfg = load_config(a);
  auto est = estimate_spectrum_qr(cfg.mu, cfg.spectrum_n, cfg.spectrum_replicas, cfg.seed);
  Json j{{"n", est.n},
         {"replicas", est.replicas},
         {"lambda", std::vector<double>(est.spectrum.lambdas.data(),
                                        est.spectrum.lambdas.data() + cfg.mu.d)},
         {"stderr", std::vector<double>(est.stderrs.data(), est.stderrs.data() + cfg.mu.d)},
         {"zero_sum_residual", est.zero_sum_residual()}};
  write_json_report(cfg, "spectrum", j);
  return 0;
}

int run_harmonic(const GlobalArgs& a) {
  auto cfg = load_config(a);
  fs::path banks = fs::path(cfg.out_dir) / "banks";
  fs::create_directories(banks);
  for (int i = 1; i < cfg.mu.d; ++i) {
    auto nu = sample_harmonic_measure(cfg.mu, i, cfg.harmonic_n, cfg.harmonic_N, cfg.seed);
    FlagBank bank{cfg.mu.d, i, cfg.harmonic_n, cfg.seed, measure_hash(cfg.mu), nu};
    fs::path path = banks / ("gr" + std::to_string(i) + ".flags");
    save_flag_bank(path, bank);
    std::cout << "wrote " << path.string() << " (" << nu.size() << " samples)\n";
  }
  return 0;
}

int run_entropy(const GlobalArgs& a) {
  auto cfg = load_config(a);
  auto h = asymptotic_entropy(cfg.mu, cfg.entropy_n_max);
  Json j{{"n_max", h.n_max},
         {"h_estimate", h.h_estimate},
         {"h_upper", h.h_upper},
         {"h_values", h.h_values},
         {"h_diffs", h.h_diffs},
         {"H_mu", shannon_entropy(cfg.mu)}};
  // Differential entropies from existing banks when present, else fresh.
  Json diff = Json::array();
  for (int i = 1; i < cfg.mu.d; ++i) {
    fs::path bank_path = fs::path(cfg.out_dir) / "banks" / ("gr" + std::to_string(i) + ".flags");
    EmpiricalMeasure nu =
        fs::exists(bank_path)
            ? load_flag_bank(bank_path).cloud
            : sample_harmonic_measure(cfg.mu, i, cfg.harmonic_n, cfg.harmonic_N, cfg.seed);
    int kn = cfg.k_neighbors > 0
                 ? cfg.k_neighbors
                 : static_cast<int>(std::ceil(std::pow(static_cast<double>(nu.size()), 1.0 / 3)));
    auto E = differential_entropy(cfg.mu, i, nu, kn, cfg.seed + 7);
    diff.push_back(Json{{"i", i},
                        {"value", E.value},
                        {"stderr", E.stderr_},
                        {"k_neighbors", E.k_neighbors},
                        {"sample_size", E.sample_size}});
  }
  j["differential"] = std::move(diff);
  write_json_report(cfg, "entropy", j);
  return 0;
}

int run_dimension(const GlobalArgs& a) {
  auto cfg = load_config(a);
  Json j = Json::array();
  CsvTable curves;
  curves.header = {"i", "point", "radius", "ratio"};
  for (int i = 1; i < cfg.mu.d; ++i) {
    fs::path bank_path = fs::path(cfg.out_dir) / "banks" / ("gr" + std::to_string(i) + ".flags");
    EmpiricalMeasure nu =
        fs::exists(bank_path)
            ? load_flag_bank(bank_path).cloud
            : sample_harmonic_measure(cfg.mu, i, cfg.harmonic_n, cfg.harmonic_N, cfg.seed);
    auto pd = pointwise_dims(nu, cfg.radii);
    auto interval = mean_dimension_interval(pd, cfg.mass_tail);
    auto box = ledrappier_box_summary(nu, pd.radii, cfg.epsilons);
    j.push_back(Json{{"i", i},
                     {"radii", pd.radii},
                     {"mean_dim_lower", interval.first},
                     {"mean_dim_upper", interval.second},
                     {"hausdorff_proxy", hausdorff_proxy_from(pd)},
                     {"lower_ledrappier", box.lower_ledrappier},
                     {"upper_ledrappier", box.upper_ledrappier},
                     {"lower_box", box.lower_box},
                     {"upper_box", box.upper_box}});
    for (long pnt = 0; pnt < pd.ratios.rows(); ++pnt)
      for (int t = 0; t < static_cast<int>(pd.radii.size()); ++t)
        curves.rows.push_back({std::to_string(i), std::to_string(pnt),
                               fmt_double(pd.radii[static_cast<size_t>(t)]),
                               fmt_double(pd.ratios(pnt, t))});
  }
  write_json_report(cfg, "dimension", Json{{"grassmannians", std::move(j)}});
  fs::create_directories(cfg.out_dir);
  write_text_atomic(fs::path(cfg.out_dir) / "dimension_curves.csv",
                    curves.to_string(timestamp(a)));
  return 0;
}

int run_sweep(const GlobalArgs& a) {
  auto cfg = load_config(a);
  auto rep = run_singularity_sweep(cfg.mu, cfg.gamma, cfg.k_list, sweep_params(cfg, a.threads));
  fs::create_directories(cfg.out_dir);
  write_text_atomic(fs::path(cfg.out_dir) / "sweep.csv", rep.to_csv().to_string(timestamp(a)));
  std::cout << "wrote " << (fs::path(cfg.out_dir) / "sweep.csv").string() << "\n";
  write_json_report(cfg, "sweep", rep.to_json());
  for (const auto& r : rep.rows)
    if (r.failed) std::cerr << "k=" << r.k << " failed: " << r.error << "\n";
  return 0;
}

int run_claims(const GlobalArgs& a) {
  auto cfg = load_config(a);
  auto gk = claim_gk_check(cfg.gamma, cfg.claims_k_max, cfg.claims_trials, cfg.seed);
  auto opens = claim_opens_estimate(cfg.mu, cfg.gamma, cfg.k_list, cfg.beta, cfg.harmonic_n,
                                    cfg.harmonic_N, cfg.seed);
  Json j{{"gk", Json{{"trials", gk.trials},
                     {"violations", gk.violations},
                     {"min_margin", gk.min_margin},
                     {"bound", gk.bound}}},
         {"opens", Json{{"k", opens.ks},
                        {"mass", opens.mass},
                        {"min_mass", opens.min_mass},
                        {"any_zero", opens.any_zero}}}};
  write_json_report(cfg, "claims", j);
  return gk.violations == 0 && !opens.any_zero ? 0 : 1;
}

int run_verify(const GlobalArgs& a) {
  auto cfg = load_config(a);
  Json results = Json::object();
  bool ok = true;
  auto record = [&](const std::string& name, bool pass, const Json& detail) {
    results[name] = Json{{"pass", pass}, {"detail", detail}};
    if (!pass) ok = false;
    std::cout << (pass ? "PASS " : "FAIL ") << name << "\n";
  };

  auto spec = estimate_spectrum_qr(cfg.mu, cfg.spectrum_n, cfg.spectrum_replicas, cfg.seed);
  record("spectrum_zero_sum", spec.zero_sum_residual() <= 3.0 * spec.stderr_sum(),
         Json{{"residual", spec.zero_sum_residual()}});
  auto refl = check_reflection_identity(cfg.mu, cfg.spectrum_n, cfg.spectrum_replicas, cfg.seed);
  record("reflection_identity", refl.pass, Json{{"max_residual", refl.max_residual}});
  auto nu = sample_harmonic_measure(cfg.mu, 1, cfg.harmonic_n, cfg.harmonic_N, cfg.seed);
  auto stat = stationarity_check(cfg.mu, nu, 16,
                                 4.0 / std::sqrt(static_cast<double>(cfg.harmonic_N)), cfg.seed);
  record("stationarity", stat.pass, Json{{"max_discrepancy", stat.max_discrepancy}});
  auto fp = furstenberg_partial_sum(cfg.mu, 1, nu, cfg.harmonic_N, cfg.seed + 3);
  record("furstenberg_formula",
         std::abs(fp.value - spec.lambda(0)) <=
             3.0 * std::hypot(fp.stderr_, spec.stderrs(0)) + 0.02,
         Json{{"estimate", fp.value}, {"lambda_1", spec.lambda(0)}});
  try {
    auto gk = claim_gk_check(cfg.gamma, cfg.claims_k_max, cfg.claims_trials / 10, cfg.seed);
    record("claim_gk", gk.violations == 0, Json{{"violations", gk.violations}});
  } catch (const std::exception& e) {
    record("claim_gk", false, Json{{"error", e.what()}});
  }

  fs::create_directories(fs::path(cfg.out_dir) / "reports");
  write_text_atomic(fs::path(cfg.out_dir) / "reports" / "verify.json",
                    Json{{"ok", ok}, {"results", results}}.dump(2) + "\n");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"random walks on SL(d,R): spectra, harmonic measures, entropies, dimensions"};
  app.require_subcommand(1);

  GlobalArgs args;
  app.add_option("--config", args.config_path, "experiment config JSON")
      ->envname("SLRW_CONFIG");
  app.add_option("--seed", args.seed, "override the config seed (0 keeps the config value)")
      ->envname("SLRW_SEED");
  app.add_option("--out", args.out_dir, "override the output directory")->envname("SLRW_OUT");
  app.add_option("--threads", args.threads, "worker threads for sweep cells")
      ->envname("SLRW_THREADS");
  app.add_flag("--timestamp", args.with_timestamp,
               "prefix CSV outputs with a generated_at comment line");
  std::string stage;
  app.add_option("--stage", stage,
                 "run one stage by name (alternative to the subcommand form)")
      ->envname("SLRW_STAGE");

  app.add_subcommand("spectrum", "Lyapunov spectrum of the configured walk");
  app.add_subcommand("harmonic", "sample harmonic measures and persist flag banks");
  app.add_subcommand("entropy", "asymptotic and differential entropies");
  app.add_subcommand("dimension", "dimension estimators over the flag banks");
  app.add_subcommand("sweep", "singularity sweep over the configured k list");
  app.add_subcommand("claims", "audit the g^k lower bound and the open-set mass");
  app.add_subcommand("verify", "invariant suite; nonzero exit on failure");
  // Let "slrw spectrum --out X" work like "slrw --out X spectrum".
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);
  std::string cmd = stage.empty() ? app.get_subcommands().front()->get_name() : stage;

  try {
    if (cmd == "spectrum") return run_spectrum(args);
    if (cmd == "harmonic") return run_harmonic(args);
    if (cmd == "entropy") return run_entropy(args);
    if (cmd == "dimension") return run_dimension(args);
    if (cmd == "sweep") return run_sweep(args);
    if (cmd == "claims") return run_claims(args);
    if (cmd == "verify") return run_verify(args);
    std::cerr << "unknown stage: " << cmd << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
