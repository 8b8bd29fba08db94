#pragma once

#include <cmath>
#include <random>

#include "cqed/params.hpp"
#include "cqed/types.hpp"

namespace cqed::test {

// (g, κ, γ, Γ)/2π = (38.0, 8.7, 3.0, 100) MHz.
inline SystemParams fig5_params(int n_atoms = 1) {
  SystemParams p;
  p.g = n_atoms == 1 ? 38.0 : 38.0 / std::sqrt(2.0);
  p.kappa = 8.7;
  p.gamma = 3.0;
  p.gamma_bw = 100.0;
  p.n_atoms = n_atoms;
  p.n_max = 3;
  p.r = 0.5;
  return p;
}

inline Matrix random_density(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = Complex(normal(rng), normal(rng));
  Matrix rho = m * m.adjoint();
  return rho / rho.trace();
}

inline Matrix random_hermitian(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = Complex(normal(rng), normal(rng));
  return 0.5 * (m + m.adjoint());
}

}  // namespace cqed::test

#include "cqed/steady_state.hpp"

namespace cqed::test {

// fig5 preset parameters with the drive tuned to intracavity intensity X.
inline SystemParams calibrated(int n_atoms, double target_x, int n_max = 3) {
  SystemParams p = fig5_params(n_atoms);
  p.n_max = n_max;
  p.epsilon = calibrate_drive(p, target_x);
  return p;
}

}  // namespace cqed::test
