#include "cqed/qrt.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cqed {

std::vector<double> TauGrid::values() const {
  std::vector<double> out(count);
  for (int k = 0; k < count; ++k) out[k] = at(k);
  return out;
}

TauGrid default_tau_grid(const SystemParams& p) {
  const Rates w = Rates::from(p);
  const double step = 1.0 / (20.0 * std::max({p.g, p.kappa, p.gamma}));
  const double tau_max = 12.0 / ((w.kappa + 0.5 * w.gamma) / 2.0);
  return TauGrid{step, static_cast<int>(std::ceil(tau_max / step)) + 1};
}

LiouvillePropagator::LiouvillePropagator(const Matrix& liouvillian)
    : dim_(static_cast<int>(std::lround(std::sqrt(static_cast<double>(liouvillian.rows()))))) {
  sparse_ = liouvillian.sparseView(0.0, 0.0);
  sparse_.makeCompressed();
  sparse_t_ = sparse_.transpose();
  sparse_t_.makeCompressed();
  norm1_ = liouvillian.cwiseAbs().colwise().sum().maxCoeff();
  norm_inf_ = liouvillian.cwiseAbs().rowwise().sum().maxCoeff();
  if (liouvillian.rows() > kEigenMaxRows) return;

  Eigen::ComplexEigenSolver<Matrix> es(liouvillian);
  if (es.info() != Eigen::Success) return;
  eigenvalues_ = es.eigenvalues();
  eigenvectors_ = es.eigenvectors();
  lu_.compute(eigenvectors_);

  // Near exceptional points the eigenvector basis degenerates; accept it only
  // if a random vector survives the round trip through the basis.
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> normal;
  Vector probe(liouvillian.rows());
  for (Eigen::Index i = 0; i < probe.size(); ++i) probe(i) = Complex(normal(rng), normal(rng));
  const Vector coeffs = lu_.solve(probe);
  const double round_trip = (eigenvectors_ * coeffs - probe).norm() / probe.norm();
  const double residual =
      (liouvillian * eigenvectors_ - eigenvectors_ * eigenvalues_.asDiagonal()).cwiseAbs().maxCoeff() /
      std::max(1.0, liouvillian.cwiseAbs().maxCoeff());
  eigen_ok_ = round_trip < 1e-9 && residual < 1e-10 && coeffs.norm() < 1e7 * probe.norm();
}

Vector LiouvillePropagator::taylor(Vector v, double tau, bool transposed) const {
  if (tau == 0.0) return v;
  const auto& op = transposed ? sparse_t_ : sparse_;
  const double norm = transposed ? norm_inf_ : norm1_;
  const int substeps = std::max(1, static_cast<int>(std::ceil(norm * std::abs(tau) / kSubstepNorm)));
  const double h = tau / substeps;
  Vector term(v.size()), acc(v.size());
  for (int s = 0; s < substeps; ++s) {
    acc = v;
    term = v;
    for (int k = 1; k < 80; ++k) {
      term = (op * term) * (h / k);
      acc += term;
      if (term.cwiseAbs().maxCoeff() <= 1e-17 * acc.cwiseAbs().maxCoeff()) break;
    }
    v.swap(acc);
  }
  return v;
}

std::vector<std::vector<Complex>> LiouvillePropagator::trace_series(
    const Matrix& observable, std::span<const Matrix> seeds, const TauGrid& grid) const {
  // Tr(A B) = vec(Aᵀ)ᵀ vec(B).
  const Vector row = vectorize(observable.transpose());
  std::vector<std::vector<Complex>> out(seeds.size(), std::vector<Complex>(grid.count));
  if (eigen_ok_) {
    const Vector left = (row.transpose() * eigenvectors_).transpose();
    for (std::size_t j = 0; j < seeds.size(); ++j) {
      const Vector amps = left.cwiseProduct(lu_.solve(vectorize(seeds[j])));
      for (int k = 0; k < grid.count; ++k) {
        const double tau = grid.at(k);
        Complex acc = 0.0;
        for (Eigen::Index m = 0; m < amps.size(); ++m) acc += amps(m) * std::exp(eigenvalues_(m) * tau);
        out[j][k] = acc;
      }
    }
    return out;
  }
  // Heisenberg picture: one propagation of the observable, e^{𝓛ᵀτ}row,
  // serves every seed.
  std::vector<Vector> cols;
  for (const Matrix& seed : seeds) cols.push_back(vectorize(seed));
  Vector v = row;
  for (int k = 0; k < grid.count; ++k) {
    for (std::size_t j = 0; j < seeds.size(); ++j) out[j][k] = v.cwiseProduct(cols[j]).sum();
    if (k + 1 < grid.count) v = taylor(std::move(v), grid.step, true);
  }
  return out;
}

std::vector<Complex> LiouvillePropagator::trace_series(const Matrix& observable,
                                                       const Matrix& seed,
                                                       const TauGrid& grid) const {
  return trace_series(observable, std::span<const Matrix>(&seed, 1), grid).front();
}

Matrix LiouvillePropagator::evolve(const Matrix& rho, double tau) const {
  if (!eigen_ok_) return unvectorize(taylor(vectorize(rho), tau, false), dim_);
  const Vector coeffs = lu_.solve(vectorize(rho));
  Vector scaled(coeffs.size());
  for (Eigen::Index m = 0; m < coeffs.size(); ++m) scaled(m) = coeffs(m) * std::exp(eigenvalues_(m) * tau);
  return unvectorize(eigenvectors_ * scaled, dim_);
}

std::vector<double> two_time_corr(const DensityOperator& rho_ss, const Model& model,
                                  const LiouvillePropagator& propagator, double theta,
                                  const TauGrid& grid) {
  const Matrix& rho = rho_ss.matrix();
  const Complex lambda = rho_ss.expect(model.a());
  const Matrix da = model.a() - lambda * Matrix::Identity(model.dim(), model.dim());
  const Matrix seeds[] = {da * rho, rho * da.adjoint()};
  const auto series = propagator.trace_series(da, seeds, grid);
  const std::vector<Complex>& g1 = series[0];
  const std::vector<Complex>& g2 = series[1];
  const Complex phase = std::polar(1.0, -2.0 * theta);
  std::vector<double> out(grid.count);
  for (int k = 0; k < grid.count; ++k) {
    out[k] = 0.25 * (2.0 * (phase * g1[k]).real() + 2.0 * g2[k].real());
  }
  return out;
}

CorrelationSeries h_from_qrt(std::span<const double> c_n, const TauGrid& grid,
                             const SteadyMoments& m) {
  if (std::abs(m.field) == 0.0) throw DomainError("h is undefined for a vanishing mean field");
  if (static_cast<int>(c_n.size()) != grid.count) throw DomainError("series does not match grid");
  const double denom = std::norm(m.field) + m.n_inc;
  CorrelationSeries out;
  out.lambda = std::abs(m.field);
  out.n_inc = m.n_inc;
  out.source = SeriesSource::qrt;
  const int n = grid.count;
  out.tau.resize(2 * n - 1);
  out.h.resize(2 * n - 1);
  for (int k = 0; k < n; ++k) {
    const double h = 1.0 + 2.0 * c_n[k] / denom;
    out.tau[n - 1 + k] = grid.at(k);
    out.tau[n - 1 - k] = -grid.at(k);
    out.h[n - 1 + k] = h;
    out.h[n - 1 - k] = h;
  }
  return out;
}

CorrelationSeries qrt_correlation(const DensityOperator& rho_ss, const Model& model,
                                  const LiouvillePropagator& propagator, double theta,
                                  TauGrid grid, double tail_tol, int max_doublings) {
  const SteadyMoments m = moments(rho_ss, model);
  for (int attempt = 0; attempt <= max_doublings; ++attempt) {
    const std::vector<double> c_n = two_time_corr(rho_ss, model, propagator, theta, grid);
    CorrelationSeries h = h_from_qrt(c_n, grid, m);
    const int tail = std::max(1, grid.count / 10);
    double worst = 0.0;
    for (int k = 0; k < tail; ++k) worst = std::max(worst, std::abs(h.h[h.h.size() - 1 - k] - 1.0));
    if (worst < tail_tol) return h;
    grid.count = 2 * grid.count - 1;
  }
  throw ConvergenceError("h did not regress to 1 within the extended tau grid");
}

std::vector<double> conditioned_field(const DensityOperator& rho_ss, const Model& model,
                                      const LiouvillePropagator& propagator,
                                      const Matrix& jump, double theta, const TauGrid& grid) {
  const Matrix quad = model.quadrature(theta);
  const double mean = rho_ss.expect(quad).real();
  Matrix collapsed = jump * rho_ss.matrix() * jump.adjoint();
  collapsed /= collapsed.trace();
  const std::vector<Complex> series = propagator.trace_series(quad, collapsed, grid);
  std::vector<double> out(grid.count);
  for (int k = 0; k < grid.count; ++k) out[k] = series[k].real() / mean;
  return out;
}

}  // namespace cqed
