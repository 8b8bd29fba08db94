#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Sparse>

#include "cqed/hilbert.hpp"
#include "cqed/steady_state.hpp"

namespace cqed {

// Uniform grid τ_k = k·step, k = 0..count-1 (µs).
struct TauGrid {
  double step;
  int count;

  double at(int k) const { return k * step; }
  double max() const { return (count - 1) * step; }
  std::vector<double> values() const;
};

// dτ = 1/(20·max(g,κ,γ)) with rates in MHz; τ_max = 12/((κ+γ/2)/2) in
// angular units.
TauGrid default_tau_grid(const SystemParams& p);

// Evaluates scalar traces Tr[A e^{𝓛τ}(X)] for a fixed Liouvillian. Small
// Liouvillians use their eigendecomposition when the eigenvector basis is
// well conditioned; larger ones, or ill-conditioned bases, use a sparse
// Taylor stepper with substeps of norm at most kSubstepNorm.
class LiouvillePropagator {
 public:
  static constexpr int kEigenMaxRows = 256;
  static constexpr double kSubstepNorm = 2.0;

  explicit LiouvillePropagator(const Matrix& liouvillian);

  bool uses_eigenbasis() const { return eigen_ok_; }
  int dim() const { return dim_; }

  // Tr[observable · e^{𝓛τ}(seed)] on the grid.
  std::vector<Complex> trace_series(const Matrix& observable, const Matrix& seed,
                                    const TauGrid& grid) const;
  // Same for several seeds sharing one observable.
  std::vector<std::vector<Complex>> trace_series(const Matrix& observable,
                                                 std::span<const Matrix> seeds,
                                                 const TauGrid& grid) const;
  Matrix evolve(const Matrix& rho, double tau) const;

 private:
  // e^{𝓛τ}v, or e^{𝓛ᵀτ}v when `transposed`.
  Vector taylor(Vector v, double tau, bool transposed) const;

  int dim_;
  Eigen::SparseMatrix<Complex> sparse_;
  Eigen::SparseMatrix<Complex> sparse_t_;
  double norm1_ = 0.0;
  double norm_inf_ = 0.0;
  bool eigen_ok_ = false;
  Vector eigenvalues_;
  Matrix eigenvectors_;
  Eigen::PartialPivLU<Matrix> lu_;
};

// ⟨:ΔQ_θ(0)ΔQ_θ(τ):⟩ for τ on the grid, from the quantum regression theorem.
std::vector<double> two_time_corr(const DensityOperator& rho_ss, const Model& model,
                                  const LiouvillePropagator& propagator, double theta,
                                  const TauGrid& grid);

enum class SeriesSource { qrt, trajectory };

// h_θ(τ) on a symmetric grid τ = −τ_max..τ_max.
struct CorrelationSeries {
  std::vector<double> tau;
  std::vector<double> h;
  std::vector<double> stderr_h;  // empty for noiseless series
  double lambda = 0.0;
  double n_inc = 0.0;
  SeriesSource source = SeriesSource::qrt;

  // Index of τ = 0.
  std::size_t center() const { return tau.size() / 2; }
};

// h(τ) = 1 + 2C_N(|τ|)/(λ² + ⟨Δa†Δa⟩), mirrored to τ < 0.
CorrelationSeries h_from_qrt(std::span<const double> c_n, const TauGrid& grid,
                             const SteadyMoments& moments);

// Full QRT route for h_θ(τ). Starts from `grid` and doubles τ_max (same
// step) until |h − 1| < tail_tol over the last 10% of the grid; throws
// ConvergenceError after `max_doublings`.
CorrelationSeries qrt_correlation(const DensityOperator& rho_ss, const Model& model,
                                  const LiouvillePropagator& propagator, double theta,
                                  TauGrid grid, double tail_tol = 1e-4, int max_doublings = 6);

// Conditional field after a collapse, ⟨A_θ⟩(τ)/λ from e^{𝓛τ} acting on the
// collapsed density operator JρJ†/Tr. The oracle for the regression waveforms.
std::vector<double> conditioned_field(const DensityOperator& rho_ss, const Model& model,
                                      const LiouvillePropagator& propagator,
                                      const Matrix& jump, double theta, const TauGrid& grid);

}  // namespace cqed
