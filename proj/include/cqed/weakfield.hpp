#pragma once

#include <span>
#include <vector>

#include "cqed/hilbert.hpp"

namespace cqed {

// Closed-form constants of the weak-drive limit. Rates are angular; the
// dimensionless combinations are convention free.
struct WeakFieldConstants {
  int n_atoms;
  double c1_prime;
  double c;
  double phi_per_lambda;  // φ/λ = −2√N g/γ
  double alpha;           // 1 − 2C₁′
  double beta;            // (1+2C)/(1+2C−2C₁′)
  double zeta_cavity;     // −4C₁′C/(1+2C−2C₁′)
  double zeta_spont;      // 2C₁′/(1+2C−2C₁′)
  double omega;           // √(Ng² − (κ−γ/2)²/4), rad/µs
  double damping;         // (κ+γ/2)/2, rad/µs
  double phase_cavity;    // Φ after a cavity emission
  double phase_spont;     // Φ after a spontaneous emission
  double q;               // √(1 − 1/N)

  double omega_mhz() const { return omega / kTwoPi; }
};

// Throws DomainError when Ng² ≤ (κ−γ/2)²/4 (overdamped, Ω imaginary).
WeakFieldConstants weak_field_constants(const SystemParams& p);

enum class EmissionKind { cavity, spontaneous };

struct RegressionWaveform {
  EmissionKind kind;
  std::vector<double> tau;     // µs
  std::vector<double> values;  // ⟨A₀⟩(τ)/λ = 1 + ζ f(τ)
};

// f(τ) = e^{−(κ+γ/2)τ/2}(cos Ωτ − Φ sin Ωτ).
double regression_envelope(const WeakFieldConstants& k, EmissionKind kind, double tau);
RegressionWaveform waveform(const WeakFieldConstants& k, EmissionKind kind,
                            std::span<const double> tau);

// Second-order weak-drive equilibrium state, normalized:
// [|0⟩ + λ|1⟩ + (λ²/√2)αβ|2⟩]|G⟩ + [φ|0⟩ + λφβ|1⟩]|E⟩, with |E⟩ the symmetric
// single-excitation atomic state. Needs n_max ≥ 2.
Vector equilibrium_state(const Model& model, double lambda);

// P_spont / P_cavity = 2NC₁.
double emission_ratio(const SystemParams& p);

}  // namespace cqed
