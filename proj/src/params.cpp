#include "cqed/params.hpp"

#include <cmath>

namespace cqed {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void SystemParams::validate() const {
  require(std::isfinite(g) && g > 0.0, "g must be positive");
  require(std::isfinite(kappa) && kappa > 0.0, "kappa must be positive");
  require(std::isfinite(gamma) && gamma > 0.0, "gamma must be positive");
  require(std::isfinite(gamma_bw) && gamma_bw > 0.0, "Gamma_bw must be positive");
  require(std::isfinite(epsilon) && epsilon >= 0.0, "epsilon must be non-negative");
  require(n_atoms == 1 || n_atoms == 2, "N must be 1 or 2");
  require(n_max >= 2, "n_max must be at least 2");
  require(r >= 0.0 && r <= 1.0, "r must lie in [0, 1]");
  require(eta > 0.0 && eta <= 1.0, "eta must lie in (0, 1]");
  require(std::isfinite(theta), "theta must be finite");
}

Rates Rates::from(const SystemParams& p) {
  return Rates{kTwoPi * p.g, kTwoPi * p.kappa, kTwoPi * p.gamma, kTwoPi * p.epsilon,
               kTwoPi * p.gamma_bw};
}

DerivedParams derived_params(const SystemParams& p) {
  DerivedParams d{};
  d.c1 = p.g * p.g / (p.kappa * p.gamma);
  d.n0 = p.gamma * p.gamma / (8.0 * p.g * p.g);
  d.c = p.n_atoms * d.c1;
  d.c1_prime = d.c1 / (1.0 + p.gamma / (2.0 * p.kappa));
  d.y = p.epsilon / (p.kappa * std::sqrt(d.n0));
  d.big_y = d.y * d.y;
  return d;
}

DerivedParams derived_params(const SystemParams& p, double field, double n_bar) {
  DerivedParams d = derived_params(p);
  d.x = field / std::sqrt(d.n0);
  d.big_x = n_bar / d.n0;
  return d;
}

}  // namespace cqed
