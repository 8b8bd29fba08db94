#pragma once

#include <functional>

#include "cqed/hilbert.hpp"

namespace cqed {

class DensityOperator {
 public:
  explicit DensityOperator(Matrix rho);

  const Matrix& matrix() const { return rho_; }
  int dim() const { return static_cast<int>(rho_.rows()); }
  Complex trace() const { return rho_.trace(); }
  double hermiticity_defect() const;
  double min_eigenvalue() const;
  Complex expect(const Matrix& op) const { return (op * rho_).trace(); }

  // Tr ρ = 1, Hermitian and positive within the truncation tolerances.
  void check_invariants() const;

 private:
  Matrix rho_;
};

inline constexpr double kTraceTolerance = 1e-10;
inline constexpr double kHermiticityTolerance = 1e-10;
inline constexpr double kPositivityTolerance = 1e-8;

struct SteadyMoments {
  Complex field;  // λ = ⟨a⟩
  double n_bar;   // ⟨a†a⟩
  double n_inc;   // ⟨Δa†Δa⟩ = n_bar − |λ|²
  double big_x;   // n_bar / n0
  double flux;    // F = 2κ n_bar, photons per µs
};

// Null vector of the Liouvillian, normalized to unit trace: from the
// smallest singular value up to kDenseSteadyMaxRows rows, from a sparse LU of
// the trace-bordered Liouvillian beyond. Throws ConvergenceError when the
// null space is not one-dimensional or the residual exceeds 1e-10.
inline constexpr int kDenseSteadyMaxRows = 400;

DensityOperator steady_state(const Matrix& liouvillian);
DensityOperator steady_state(const Eigen::SparseMatrix<Complex>& liouvillian);
DensityOperator steady_state(const Model& model);

SteadyMoments moments(const DensityOperator& rho, const Model& model);

// Smallest n_max ≥ `n_min` such that raising it by 2 changes `observable`
// by less than `rel_tol` (relative). The observable receives parameters
// with n_max overwritten.
using NmaxObservable = std::function<double(const SystemParams&)>;
int converge_nmax(const SystemParams& p, const NmaxObservable& observable, double rel_tol = 5e-4,
                  int n_min = 2, int n_cap = 40);

// Photon-number observable for converge_nmax.
double steady_photon_number(const SystemParams& p);

// Drive ε (MHz) giving the target intracavity intensity X = n_bar/n0,
// found by false position (Illinois) on [0, 20κ].
double calibrate_drive(const SystemParams& p, double target_x, double rel_tol = 1e-7);

}  // namespace cqed
