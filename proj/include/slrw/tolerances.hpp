#pragma once

namespace slrw {

/// Numeric tolerances used across the library. Defaults are desk-scale;
/// override per run through ExperimentConfig when reproducing results.
struct Tolerances {
  double det_one = 1e-9;           // |det - 1| for float group elements
  double unit_norm = 1e-12;        // ScaledMatrix unit part, wedge norms
  double chamber_sum = 1e-9;       // sum of Cartan logs
  double frame_orthonormal = 1e-10;
  double cartan_roundtrip = 1e-9;
  double functorial = 1e-10;
  double complement = 1e-10;
  double eig_imag_rel = 1e-9;      // R-regularity: imaginary part, relative
  double eig_moduli_rel = 1e-6;    // R-regularity: moduli separation, relative
  double weight_sum = 1e-12;
  double log_scale_max = 1e8;      // walk overflow guard
  double singular_gap_rel = 1e-12; // degenerate-flag warning threshold
};

inline const Tolerances& tol() {
  static Tolerances t;
  return t;
}

}  // namespace slrw
