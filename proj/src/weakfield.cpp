#include "cqed/weakfield.hpp"

#include <cmath>

namespace cqed {

WeakFieldConstants weak_field_constants(const SystemParams& p) {
  const Rates w = Rates::from(p);
  const DerivedParams d = derived_params(p);
  const int n = p.n_atoms;
  const double ng2 = n * w.g * w.g;
  const double detune = w.kappa - 0.5 * w.gamma;
  const double omega_sq = ng2 - 0.25 * detune * detune;
  if (!(omega_sq > 0.0)) throw DomainError("overdamped regime: Omega is imaginary");

  WeakFieldConstants k{};
  k.n_atoms = n;
  k.c1_prime = d.c1_prime;
  k.c = d.c;
  k.phi_per_lambda = -2.0 * std::sqrt(static_cast<double>(n)) * w.g / w.gamma;
  k.alpha = 1.0 - 2.0 * d.c1_prime;
  const double denom = 1.0 + 2.0 * d.c - 2.0 * d.c1_prime;
  k.beta = (1.0 + 2.0 * d.c) / denom;
  k.zeta_cavity = -4.0 * d.c1_prime * d.c / denom;
  k.zeta_spont = 2.0 * d.c1_prime / denom;
  k.omega = std::sqrt(omega_sq);
  k.damping = 0.5 * (w.kappa + 0.5 * w.gamma);
  k.q = std::sqrt(1.0 - 1.0 / n);
  k.phase_cavity = -(2.0 * w.kappa + w.gamma) / (4.0 * k.omega);
  k.phase_spont = (2.0 * w.kappa - w.gamma) / (4.0 * k.omega) +
                  2.0 * ng2 * (k.q * k.beta / std::sqrt(2.0) - 1.0) /
                      (w.gamma * k.omega * (k.beta - 1.0));
  return k;
}

double regression_envelope(const WeakFieldConstants& k, EmissionKind kind, double tau) {
  const double phase = kind == EmissionKind::cavity ? k.phase_cavity : k.phase_spont;
  return std::exp(-k.damping * tau) *
         (std::cos(k.omega * tau) - phase * std::sin(k.omega * tau));
}

RegressionWaveform waveform(const WeakFieldConstants& k, EmissionKind kind,
                            std::span<const double> tau) {
  const double zeta = kind == EmissionKind::cavity ? k.zeta_cavity : k.zeta_spont;
  RegressionWaveform out{kind, {tau.begin(), tau.end()}, std::vector<double>(tau.size())};
  for (std::size_t i = 0; i < tau.size(); ++i) {
    out.values[i] = 1.0 + zeta * regression_envelope(k, kind, tau[i]);
  }
  return out;
}

Vector equilibrium_state(const Model& model, double lambda) {
  const HilbertSpace& s = model.space();
  if (s.n_max() < 2) throw DomainError("equilibrium state needs n_max >= 2");
  const WeakFieldConstants k = weak_field_constants(model.params());
  const double phi = k.phi_per_lambda * lambda;
  const double excited_amp = 1.0 / std::sqrt(static_cast<double>(s.n_atoms()));

  Vector psi = Vector::Zero(s.dim());
  psi(s.index(0, 0)) = 1.0;
  psi(s.index(1, 0)) = lambda;
  psi(s.index(2, 0)) = lambda * lambda / std::sqrt(2.0) * k.alpha * k.beta;
  for (int j = 1; j <= s.n_atoms(); ++j) {
    const int bits = 1 << (j - 1);
    psi(s.index(0, bits)) = phi * excited_amp;
    psi(s.index(1, bits)) = lambda * phi * k.beta * excited_amp;
  }
  return psi / psi.norm();
}

double emission_ratio(const SystemParams& p) {
  return 2.0 * p.n_atoms * derived_params(p).c1;
}

}  // namespace cqed
