#include "cqed/steady_state.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include <Eigen/SVD>
#include <Eigen/SparseLU>

namespace cqed {

DensityOperator::DensityOperator(Matrix rho) : rho_(std::move(rho)) {}

double DensityOperator::hermiticity_defect() const {
  return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
}

double DensityOperator::min_eigenvalue() const {
  const Matrix herm = 0.5 * (rho_ + rho_.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void DensityOperator::check_invariants() const {
  std::ostringstream msg;
  if (std::abs(trace() - 1.0) > kTraceTolerance) {
    msg << "density operator trace deviates from 1 by " << std::abs(trace() - 1.0);
    throw ConvergenceError(msg.str());
  }
  if (hermiticity_defect() > kHermiticityTolerance) {
    msg << "density operator not Hermitian (defect " << hermiticity_defect() << ")";
    throw ConvergenceError(msg.str());
  }
  if (min_eigenvalue() < -kPositivityTolerance) {
    msg << "density operator has negative eigenvalue " << min_eigenvalue()
        << "; raise n_max";
    throw ConvergenceError(msg.str());
  }
}

namespace {

// Unique null vector from the smallest singular value.
Vector null_vector_svd(const Matrix& l) {
  Eigen::BDCSVD<Matrix> svd(l, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const Eigen::Index last = sv.size() - 1;
  const double scale = sv(0);
  // A unique steady state leaves exactly one singular value at round-off level.
  if (sv(last) > 1e-9 * scale || sv(last - 1) < 1e-9 * scale) {
    std::ostringstream msg;
    msg << "Liouvillian null space is not one-dimensional (smallest singular values "
        << sv(last - 1) << ", " << sv(last) << ")";
    throw ConvergenceError(msg.str());
  }
  return svd.matrixV().col(last);
}

// Null vector by sparse LU of 𝓛 with its first row replaced by the trace
// functional. The bordered system is singular exactly when the null space
// is not one-dimensional.
Vector null_vector_sparse(const Eigen::SparseMatrix<Complex>& l, int dim) {
  const Eigen::Index rows = l.rows();
  std::vector<Eigen::Triplet<Complex>> entries;
  entries.reserve(l.nonZeros() + dim);
  for (int c = 0; c < l.outerSize(); ++c) {
    for (Eigen::SparseMatrix<Complex>::InnerIterator it(l, c); it; ++it) {
      if (it.row() != 0) entries.emplace_back(static_cast<int>(it.row()), c, it.value());
    }
  }
  for (int i = 0; i < dim; ++i) entries.emplace_back(0, i * dim + i, 1.0);
  Eigen::SparseMatrix<Complex> a(rows, rows);
  a.setFromTriplets(entries.begin(), entries.end());
  a.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<Complex>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) {
    throw ConvergenceError("Liouvillian null space is not one-dimensional (singular bordered system)");
  }
  Vector rhs = Vector::Zero(rows);
  rhs(0) = 1.0;
  return lu.solve(rhs);
}

int state_dim(Eigen::Index rows, Eigen::Index cols) {
  const int dim = static_cast<int>(std::lround(std::sqrt(static_cast<double>(rows))));
  if (static_cast<Eigen::Index>(dim) * dim != rows || rows != cols) {
    throw DomainError("Liouvillian is not a square superoperator on a square state space");
  }
  return dim;
}

template <class L>
DensityOperator finish(const L& l, const Vector& v, int dim) {
  Matrix rho = unvectorize(v, dim);
  rho /= rho.trace();
  rho = 0.5 * (rho + rho.adjoint()).eval();

  const Vector lr = l * vectorize(rho);
  const double residual = lr.cwiseAbs().maxCoeff();
  if (residual > 1e-10) {
    std::ostringstream msg;
    msg << "steady-state residual " << residual << " exceeds tolerance";
    throw ConvergenceError(msg.str());
  }
  DensityOperator out(std::move(rho));
  out.check_invariants();
  return out;
}

}  // namespace

DensityOperator steady_state(const Matrix& l) {
  const int dim = state_dim(l.rows(), l.cols());
  if (l.rows() <= kDenseSteadyMaxRows) return finish(l, null_vector_svd(l), dim);
  const Eigen::SparseMatrix<Complex> sparse = l.sparseView(0.0, 0.0);
  return finish(sparse, null_vector_sparse(sparse, dim), dim);
}

DensityOperator steady_state(const Eigen::SparseMatrix<Complex>& l) {
  const int dim = state_dim(l.rows(), l.cols());
  if (l.rows() <= kDenseSteadyMaxRows) {
    const Matrix dense(l);
    return finish(dense, null_vector_svd(dense), dim);
  }
  return finish(l, null_vector_sparse(l, dim), dim);
}

DensityOperator steady_state(const Model& model) { return steady_state(model.sparse_liouvillian()); }

SteadyMoments moments(const DensityOperator& rho, const Model& model) {
  const Matrix& a = model.a();
  SteadyMoments m{};
  m.field = rho.expect(a);
  m.n_bar = rho.expect(a.adjoint() * a).real();
  m.n_inc = m.n_bar - std::norm(m.field);
  m.big_x = m.n_bar / derived_params(model.params()).n0;
  m.flux = 2.0 * model.rates().kappa * m.n_bar;
  return m;
}

double steady_photon_number(const SystemParams& p) {
  const HilbertSpace space = build_space(p);
  const Matrix rho = steady_state(sparse_liouvillian(p, space)).matrix();
  double n = 0.0;
  for (int i = 0; i < space.dim(); ++i) n += space.photons(i) * rho(i, i).real();
  return n;
}

int converge_nmax(const SystemParams& p, const NmaxObservable& observable, double rel_tol,
                  int n_min, int n_cap) {
  std::map<int, double> cache;
  auto value = [&](int n) {
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    SystemParams q = p;
    q.n_max = n;
    return cache[n] = observable(q);
  };
  for (int n = n_min; n + 2 <= n_cap; ++n) {
    const double current = value(n);
    const double raised = value(n + 2);
    const double scale = std::max(std::abs(current), std::abs(raised));
    // Round-off floor so a vanishing observable counts as converged.
    if (std::abs(raised - current) <= rel_tol * scale + 1e-14) return n;
  }
  std::ostringstream msg;
  msg << "n_max sweep did not converge below the cap " << n_cap
      << "; the drive is too strong for a dense truncated basis";
  throw ConvergenceError(msg.str());
}

double calibrate_drive(const SystemParams& p, double target_x, double rel_tol) {
  if (!(target_x > 0.0)) throw ConfigError("target X must be positive");
  const double n0 = derived_params(p).n0;
  auto intensity = [&](double eps) {
    SystemParams q = p;
    q.epsilon = eps;
    return steady_photon_number(q) / n0;
  };
  // Illinois false position on √X − √X_target, which is close to linear in
  // ε at weak drive; the bracket [0, 20κ] shrinks every step.
  const double root_target = std::sqrt(target_x);
  double lo = 0.0, f_lo = -root_target;
  double hi = 20.0 * p.kappa, f_hi = std::sqrt(intensity(hi)) - root_target;
  if (f_hi < 0.0) throw ConvergenceError("target X is not reachable with epsilon <= 20 kappa");
  int side = 0;
  for (int it = 0; it < 200; ++it) {
    const double mid = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
    const double f_mid = std::sqrt(intensity(mid)) - root_target;
    if (std::abs(f_mid) <= 0.5 * rel_tol * root_target || hi - lo <= rel_tol * mid) return mid;
    if (f_mid < 0.0) {
      lo = mid;
      f_lo = f_mid;
      if (side == -1) f_hi *= 0.5;
      side = -1;
    } else {
      hi = mid;
      f_hi = f_mid;
      if (side == 1) f_lo *= 0.5;
      side = 1;
    }
  }
  throw ConvergenceError("drive calibration did not converge");
}

}  // namespace cqed
