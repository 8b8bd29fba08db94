#pragma once

#include <optional>

#include "cqed/types.hpp"

namespace cqed {

// Physical inputs in the laboratory convention: every rate is the
// ordinary frequency value/2π in MHz, the usual laboratory convention.
struct SystemParams {
  double g = 38.0;         // atom-field coupling
  double kappa = 8.7;      // cavity field decay
  double gamma = 3.0;      // atomic inversion decay
  double epsilon = 0.0;    // drive amplitude
  int n_atoms = 1;         // 1 or 2
  int n_max = 3;           // photon-number truncation
  double r = 0.5;          // fraction of output tapped to the APD
  double theta = 0.0;      // local oscillator phase (rad)
  double gamma_bw = 100.0; // balanced homodyne detector bandwidth
  double eta = 1.0;        // BHD coupling efficiency

  // Throws ConfigError describing the first violated invariant.
  void validate() const;
};

// Angular rates in rad/µs. The only place the 2π conversion happens.
struct Rates {
  double g;
  double kappa;
  double gamma;
  double epsilon;
  double gamma_bw;

  static Rates from(const SystemParams& p);
};

struct DerivedParams {
  double c1;        // single-atom cooperativity g²/κγ
  double n0;        // saturation photon number γ²/8g²
  double c;         // N·C1
  double c1_prime;  // C1/(1+γ/2κ)
  double y;         // ε/(κ√n0)
  double big_y;     // y²
  // Field and intensity with atoms; only available once a steady state
  // has been supplied.
  std::optional<double> x;
  std::optional<double> big_x;
};

DerivedParams derived_params(const SystemParams& p);

// Same as above with the steady-state field ⟨a⟩ and photon number filled in.
DerivedParams derived_params(const SystemParams& p, double field, double n_bar);

}  // namespace cqed
