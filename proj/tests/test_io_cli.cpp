#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "slrw/harmonic.hpp"
#include "slrw/io.hpp"
#include "slrw/sweep.hpp"
#include "test_measures.hpp"

using namespace slrw;
using namespace slrw::testing;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  fs::path p = fs::temp_directory_path() / "slrw_io_test";
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("measure json round trip") {
  auto mu = sanov_skewed();
  Json j = measure_to_json(mu);
  auto back = measure_from_json(j);
  REQUIRE(back.size() == mu.size());
  for (size_t t = 0; t < mu.atoms.size(); ++t) {
    REQUIRE(back.atoms[t].first.key() == mu.atoms[t].first.key());
    REQUIRE(back.atoms[t].second == mu.atoms[t].second);
  }
  SECTION("file round trip") {
    fs::path p = temp_dir() / "measure.json";
    save_measure(p, mu);
    auto loaded = load_measure(p);
    REQUIRE(measure_hash(loaded) == measure_hash(mu));
  }
}

TEST_CASE("measure json validation") {
  SECTION("det != 1 rejected") {
    Json bad = Json::parse(R"({"d":2,"atoms":[{"matrix":[[2,0],[0,1]],"weight":"1"}]})");
    REQUIRE_THROWS_AS(measure_from_json(bad), std::invalid_argument);
  }
  SECTION("float entries rejected") {
    Json bad = Json::parse(R"({"d":2,"atoms":[{"matrix":[[1.5,0],[0,1]],"weight":"1"}]})");
    REQUIRE_THROWS_AS(measure_from_json(bad), std::invalid_argument);
  }
  SECTION("weights must sum to one") {
    Json bad = Json::parse(R"({"d":2,"atoms":[{"matrix":[[1,0],[0,1]],"weight":"1/2"}]})");
    REQUIRE_THROWS_AS(measure_from_json(bad), std::invalid_argument);
  }
  SECTION("fraction strings accepted") {
    Json ok = Json::parse(
        R"({"d":2,"atoms":[{"matrix":[["1/1","2/1"],[0,1]],"weight":"1"}]})");
    auto mu = measure_from_json(ok);
    REQUIRE(mu.atoms[0].first.key() == sanov_a().key());
  }
}

TEST_CASE("flag bank round trip") {
  auto nu = sample_harmonic_measure(sanov_uniform(), 1, 100, 50, 3);
  FlagBank bank{2, 1, 100, 3, measure_hash(sanov_uniform()), nu};
  fs::path p = temp_dir() / "gr1.flags";
  save_flag_bank(p, bank);
  auto loaded = load_flag_bank(p);
  REQUIRE(loaded.d == 2);
  REQUIRE(loaded.i == 1);
  REQUIRE(loaded.n == 100);
  REQUIRE(loaded.seed == 3);
  REQUIRE(loaded.mu_hash == bank.mu_hash);
  REQUIRE(loaded.cloud.size() == nu.size());
  for (long j = 0; j < nu.size(); ++j)
    REQUIRE(grassmann_distance(loaded.cloud.points[static_cast<size_t>(j)],
                               nu.points[static_cast<size_t>(j)]) < 1e-12);
}

TEST_CASE("atomic writes") {
  fs::path p = temp_dir() / "atomic.txt";
  write_text_atomic(p, "hello\n");
  REQUIRE(read_text(p) == "hello\n");
  REQUIRE_FALSE(fs::exists(p.string() + ".tmp"));
  write_text_atomic(p, "replaced\n");
  REQUIRE(read_text(p) == "replaced\n");
}

TEST_CASE("csv determinism and timestamp stripping") {
  CsvTable t;
  t.header = {"a", "b"};
  t.rows = {{"1", fmt_double(0.1)}, {"2", fmt_double(0.25)}};
  std::string plain = t.to_string();
  std::string stamped = t.to_string("1700000000");
  REQUIRE(plain != stamped);
  REQUIRE(strip_timestamp_lines(stamped) == plain);
  REQUIRE(t.to_string() == plain);  // byte-identical on re-render
}

TEST_CASE("experiment config") {
  Json j = Json::parse(read_text(fs::path(SLRW_SOURCE_DIR) / "configs" / "default.json"));
  auto cfg = ExperimentConfig::from_json(j);
  REQUIRE(cfg.mu.size() == 4);
  REQUIRE(cfg.gamma.key() == (sanov_a() * sanov_b()).key());
  REQUIRE(cfg.k_list == std::vector<long>{1, 2, 4, 8, 16});
  REQUIRE(cfg.seed == 1);
  SECTION("non-positive k rejected") {
    Json bad = j;
    bad["k_list"] = {0};
    REQUIRE_THROWS_AS(ExperimentConfig::from_json(bad), std::invalid_argument);
  }
  SECTION("wrong schema rejected") {
    Json bad = j;
    bad["schema_version"] = 2;
    REQUIRE_THROWS_AS(ExperimentConfig::from_json(bad), std::invalid_argument);
  }
}

TEST_CASE("sweep report plumbing") {
  auto mu = sanov_uniform();
  auto gamma = sanov_a() * sanov_b();
  SweepParams p;
  p.spectrum_n = 2000;
  p.replicas = 3;
  p.flags_n = 80;
  p.N = 200;
  p.seed = 9;
  auto rep = run_singularity_sweep(mu, gamma, {2, 1}, p);
  REQUIRE(rep.rows.size() == 2);
  REQUIRE(rep.rows[0].k == 1);  // ordered by k regardless of input order
  REQUIRE(rep.rows[1].k == 2);
  for (const auto& r : rep.rows) {
    REQUIRE_FALSE(r.failed);
    REQUIRE(r.H == Catch::Approx(2.5 * std::log(2.0)));
    REQUIRE(r.lambdas(0) > 0.0);
    REQUIRE(r.min_bound > 0.0);
  }
  SECTION("csv output is deterministic") {
    auto rep2 = run_singularity_sweep(mu, gamma, {1, 2}, p);
    REQUIRE(rep.to_csv().to_string() == rep2.to_csv().to_string());
    REQUIRE(strip_timestamp_lines(rep.to_csv().to_string("123")) ==
            rep.to_csv().to_string());
  }
  SECTION("threaded run matches sequential") {
    SweepParams pt = p;
    pt.threads = 2;
    auto rep2 = run_singularity_sweep(mu, gamma, {1, 2}, pt);
    REQUIRE(rep.to_csv().to_string() == rep2.to_csv().to_string());
  }
  SECTION("failures are isolated per cell") {
    // gamma = unipotent is rejected by build_mu_k; the other cell survives.
    auto rep3 = run_singularity_sweep(mu, sanov_a(), {1}, p);
    REQUIRE(rep3.rows[0].failed);
    REQUIRE_FALSE(rep3.rows[0].error.empty());
  }
}

TEST_CASE("claim checks") {
  auto gamma = GroupElement::from(rat2(2, 1, 1, 1));
  SECTION("gk bound audited with zero violations") {
    auto rep = claim_gk_check(gamma, 16, 2000, 5);
    REQUIRE(rep.violations == 0);
    REQUIRE(rep.min_margin >= 0.0);
    REQUIRE(rep.bound <= 0.0);
  }
  SECTION("diagonal gamma has nonnegative lhs always") {
    RationalMatrix m(2);
    m(0, 0) = 2;
    m(1, 1) = Rational(1, 2);
    auto rep = claim_gk_check(GroupElement::from(m), 8, 500, 6);
    REQUIRE(rep.violations == 0);
    // ||d^k v|| ||d^-k v|| >= ||v||^2 = 1, so lhs >= 0 >= bound with slack.
    REQUIRE(rep.min_margin >= -rep.bound - 1e-6);
  }
  SECTION("non-diagonalizable gamma rejected") {
    REQUIRE_THROWS_AS(claim_gk_check(sanov_a(), 4, 10, 1), std::invalid_argument);
  }
  SECTION("open set mass positive for the sanov family") {
    auto rep = claim_opens_estimate(sanov_uniform(), sanov_a() * sanov_b(), {1, 4}, 0.5, 100,
                                    400, 7);
    REQUIRE_FALSE(rep.any_zero);
    REQUIRE(rep.min_mass > 0.0);
  }
}
