#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "slrw/empirical.hpp"
#include "slrw/group.hpp"

namespace slrw {

using Json = nlohmann::json;

/// Write-then-rename so readers never observe a torn file.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_text_atomic: cannot open " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write_text_atomic: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_text: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Full-precision, locale-independent double formatting for reports.
inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// Measure files: { "d": int, "atoms": [ { "matrix": [[num or "p/q"]],
// "weight": "p/q" } ] }. Entries must be exact (integers or fraction
// strings) so the det = 1 validation is meaningful.
// ---------------------------------------------------------------------------

inline Rational rational_from_json(const Json& v) {
  if (v.is_number_integer()) return Rational(v.get<long long>());
  if (v.is_string()) return parse_rational(v.get<std::string>());
  throw std::invalid_argument("measure file: entries must be integers or \"p/q\" strings");
}

inline std::string rational_to_string(const Rational& r) {
  std::ostringstream ss;
  ss << r;
  return ss.str();
}

inline Json measure_to_json(const FiniteMeasure& mu) {
  Json atoms = Json::array();
  for (const auto& [g, w] : mu.atoms) {
    const RationalMatrix& m = g.rational();
    Json rows = Json::array();
    for (int r = 0; r < mu.d; ++r) {
      Json row = Json::array();
      for (int c = 0; c < mu.d; ++c) row.push_back(rational_to_string(m(r, c)));
      rows.push_back(std::move(row));
    }
    atoms.push_back(Json{{"matrix", std::move(rows)}, {"weight", rational_to_string(w)}});
  }
  return Json{{"d", mu.d}, {"atoms", std::move(atoms)}};
}

inline FiniteMeasure measure_from_json(const Json& j) {
  if (!j.contains("d") || !j.contains("atoms"))
    throw std::invalid_argument("measure file: missing d/atoms");
  int d = j.at("d").get<int>();
  std::vector<std::pair<GroupElement, Rational>> atoms;
  for (const auto& a : j.at("atoms")) {
    RationalMatrix m(d);
    const Json& rows = a.at("matrix");
    if (static_cast<int>(rows.size()) != d)
      throw std::invalid_argument("measure file: matrix row count != d");
    for (int r = 0; r < d; ++r) {
      if (static_cast<int>(rows[static_cast<size_t>(r)].size()) != d)
        throw std::invalid_argument("measure file: matrix column count != d");
      for (int c = 0; c < d; ++c)
        m(r, c) = rational_from_json(rows[static_cast<size_t>(r)][static_cast<size_t>(c)]);
    }
    atoms.emplace_back(GroupElement::from(std::move(m)),
                       rational_from_json(a.at("weight")));
  }
  return FiniteMeasure::from_atoms(d, std::move(atoms));
}

inline void save_measure(const std::filesystem::path& path, const FiniteMeasure& mu) {
  write_text_atomic(path, measure_to_json(mu).dump(2) + "\n");
}

inline FiniteMeasure load_measure(const std::filesystem::path& path) {
  return measure_from_json(Json::parse(read_text(path)));
}

/// Stable identifier of a measure (canonical atom keys and weights).
inline std::string measure_hash(const FiniteMeasure& mu) {
  std::string blob = std::to_string(mu.d);
  for (const auto& [g, w] : mu.atoms) {
    blob += '|';
    blob += g.key();
    blob += '=';
    blob += rational_to_string(w);
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016zx", std::hash<std::string>{}(blob));
  return buf;
}

// ---------------------------------------------------------------------------
// Flag banks: persisted harmonic-measure samples. Header carries everything
// needed to re-derive the bank; frames are stored so group actions remain
// possible after reload.
// ---------------------------------------------------------------------------

struct FlagBank {
  int d = 0;
  int i = 0;
  long n = 0;
  std::uint64_t seed = 0;
  std::string mu_hash;
  EmpiricalMeasure cloud;
};

inline void save_flag_bank(const std::filesystem::path& path, const FlagBank& bank) {
  Json frames = Json::array();
  for (const auto& p : bank.cloud.points) {
    Json f = Json::array();
    for (int r = 0; r < p.frame.rows(); ++r)
      for (int c = 0; c < p.frame.cols(); ++c) f.push_back(p.frame(r, c));
    frames.push_back(std::move(f));
  }
  Json j{{"schema", 1},   {"d", bank.d},       {"i", bank.i},
         {"n", bank.n},   {"seed", bank.seed}, {"mu_hash", bank.mu_hash},
         {"frames", std::move(frames)}};
  write_text_atomic(path, j.dump() + "\n");
}

inline FlagBank load_flag_bank(const std::filesystem::path& path) {
  Json j = Json::parse(read_text(path));
  if (!j.contains("schema") || j.at("schema").get<int>() != 1)
    throw std::invalid_argument("flag bank: unsupported schema");
  FlagBank bank;
  bank.d = j.at("d").get<int>();
  bank.i = j.at("i").get<int>();
  bank.n = j.at("n").get<long>();
  bank.seed = j.at("seed").get<std::uint64_t>();
  bank.mu_hash = j.at("mu_hash").get<std::string>();
  std::vector<GrassmannPoint> pts;
  for (const auto& f : j.at("frames")) {
    if (static_cast<int>(f.size()) != bank.d * bank.i)
      throw std::invalid_argument("flag bank: frame size mismatch");
    Matrix frame(bank.d, bank.i);
    size_t t = 0;
    for (int r = 0; r < bank.d; ++r)
      for (int c = 0; c < bank.i; ++c) frame(r, c) = f[t++].get<double>();
    pts.push_back(GrassmannPoint::from_frame(frame));
  }
  bank.cloud = EmpiricalMeasure::from_points(std::move(pts));
  return bank;
}

// ---------------------------------------------------------------------------
// CSV: deterministic rows; the optional timestamp comment line is the only
// non-reproducible content and is excluded from byte comparisons.
// ---------------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_string(const std::string& timestamp_comment = "") const {
    std::ostringstream ss;
    if (!timestamp_comment.empty()) ss << "# generated_at " << timestamp_comment << "\n";
    for (size_t j = 0; j < header.size(); ++j) ss << (j ? "," : "") << header[j];
    ss << "\n";
    for (const auto& row : rows) {
      for (size_t j = 0; j < row.size(); ++j) ss << (j ? "," : "") << row[j];
      ss << "\n";
    }
    return ss.str();
  }
};

/// Drops "# generated_at ..." lines so reruns compare byte-identical.
inline std::string strip_timestamp_lines(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line))
    if (line.rfind("# generated_at", 0) != 0) {
      out += line;
      out += '\n';
    }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment configuration, one JSON document with a schema version.
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  int schema_version = 1;
  FiniteMeasure mu;
  GroupElement gamma;
  std::vector<long> k_list;
  // Per-stage parameters.
  long spectrum_n = 20000;
  int spectrum_replicas = 8;
  long harmonic_n = 300;
  long harmonic_N = 2000;
  long entropy_n_max = 8;
  int k_neighbors = 0;  // 0 = ceil(N^(1/3))
  std::vector<double> radii{0.3, 0.2, 0.15, 0.1, 0.07, 0.05};
  std::vector<double> epsilons{0.1, 0.05};
  double mass_tail = 0.25;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  long claims_trials = 100000;
  long claims_k_max = 64;
  double beta = 0.5;

  static ExperimentConfig from_json(const Json& j) {
    ExperimentConfig c;
    if (j.at("schema_version").get<int>() != 1)
      throw std::invalid_argument("config: unsupported schema_version");
    c.mu = measure_from_json(j.at("measure"));
    {
      const Json& g = j.at("gamma");
      RationalMatrix m(c.mu.d);
      for (int r = 0; r < c.mu.d; ++r)
        for (int col = 0; col < c.mu.d; ++col)
          m(r, col) = rational_from_json(g[static_cast<size_t>(r)][static_cast<size_t>(col)]);
      c.gamma = GroupElement::from(std::move(m));
    }
    for (const auto& k : j.at("k_list")) {
      long kv = k.get<long>();
      if (kv <= 0) throw std::invalid_argument("config: k values must be positive");
      c.k_list.push_back(kv);
    }
    auto opt = [&](const char* name, auto& field) {
      if (j.contains(name)) field = j.at(name).get<std::decay_t<decltype(field)>>();
    };
    opt("spectrum_n", c.spectrum_n);
    opt("spectrum_replicas", c.spectrum_replicas);
    opt("harmonic_n", c.harmonic_n);
    opt("harmonic_N", c.harmonic_N);
    opt("entropy_n_max", c.entropy_n_max);
    opt("k_neighbors", c.k_neighbors);
    opt("radii", c.radii);
    opt("epsilons", c.epsilons);
    opt("mass_tail", c.mass_tail);
    opt("seed", c.seed);
    opt("out_dir", c.out_dir);
    opt("claims_trials", c.claims_trials);
    opt("claims_k_max", c.claims_k_max);
    opt("beta", c.beta);
    return c;
  }

  static ExperimentConfig load(const std::filesystem::path& path) {
    return from_json(Json::parse(read_text(path)));
  }
};

}  // namespace slrw
