#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"

#include "cqed/qrt.hpp"
#include "cqed/steady_state.hpp"

using namespace cqed;

TEST_CASE("undriven steady state is the vacuum") {
  SystemParams p = test::fig5_params(2);
  p.epsilon = 0.0;
  const Model model(p);
  const DensityOperator rho = steady_state(model);
  CHECK(std::abs(rho.matrix()(0, 0) - 1.0) < 1e-10);
  CHECK(rho.matrix().cwiseAbs().sum() == doctest::Approx(1.0).epsilon(1e-10));
  const SteadyMoments m = moments(rho, model);
  CHECK(std::abs(m.field) < 1e-10);
  CHECK(std::abs(m.n_bar) < 1e-10);
  CHECK(std::abs(m.flux) < 1e-8);
}

TEST_CASE("empty driven cavity settles in a coherent state") {
  SystemParams p = test::fig5_params();
  p.g = 1e-9;
  p.epsilon = 2.0;
  p.n_max = 12;
  const Model model(p);
  const DensityOperator rho = steady_state(model);
  const SteadyMoments m = moments(rho, model);
  CHECK(m.field.real() == doctest::Approx(p.epsilon / p.kappa).epsilon(1e-6));
  CHECK(std::abs(m.field.imag()) < 1e-8);
  CHECK(std::abs(m.n_inc) < 1e-6);
}

TEST_CASE("steady-state invariants at strong drive") {
  SystemParams p = test::fig5_params(2);
  p.epsilon = 0.975 * p.kappa;
  p.n_max = 6;
  const Model model(p);
  const DensityOperator rho = steady_state(model);
  CHECK(std::abs(rho.trace() - 1.0) < kTraceTolerance);
  CHECK(rho.hermiticity_defect() < kHermiticityTolerance);
  CHECK(rho.min_eigenvalue() >= -kPositivityTolerance);
  CHECK((model.liouvillian() * vectorize(rho.matrix())).cwiseAbs().maxCoeff() < 1e-10);
  const SteadyMoments m = moments(rho, model);
  CHECK(m.n_inc >= -1e-8);
  CHECK(m.flux >= 0.0);
  CHECK(std::abs(m.field.imag()) < 1e-8);
  CHECK(m.field.real() > 0.0);
}

TEST_CASE("broken Liouvillian is rejected") {
  SystemParams p = test::fig5_params();
  p.epsilon = 0.5;
  const Model model(p);
  // Two decoupled copies: a two-dimensional null space.
  const int n = static_cast<int>(model.liouvillian().rows());
  Matrix doubled = Matrix::Zero(2 * n, 2 * n);
  doubled.topLeftCorner(n, n) = model.liouvillian();
  doubled.bottomRightCorner(n, n) = model.liouvillian();
  CHECK_THROWS_AS(steady_state(doubled), DomainError);
  // Same defect on a square state space: atom-free copies of a driven mode
  // padded by an isolated, undamped level (dim 9 → 81 rows).
  SystemParams q = test::fig5_params();
  q.epsilon = 0.5;
  q.n_max = 3;
  const Model small(q);
  const int d = small.dim();
  Matrix h_big = Matrix::Zero(d + 1, d + 1);
  h_big.topLeftCorner(d, d) = small.hamiltonian();
  const Matrix id = Matrix::Identity(d + 1, d + 1);
  Matrix l_big = -kI * (kron(id, h_big) - kron(h_big.transpose(), id));
  CHECK_THROWS_AS(steady_state(l_big), ConvergenceError);
}

TEST_CASE("large Liouvillians take the sparse route and relax to the same state") {
  SystemParams p = test::fig5_params(2);
  p.epsilon = 0.975 * p.kappa;
  p.n_max = 5;
  const Model model(p);
  REQUIRE(model.liouvillian().rows() > kDenseSteadyMaxRows);
  const DensityOperator rho = steady_state(model);
  CHECK((model.liouvillian() * vectorize(rho.matrix())).cwiseAbs().maxCoeff() < 1e-10);
  // Oracle: the vacuum propagated for many lifetimes.
  const LiouvillePropagator prop(model.liouvillian());
  Matrix start = Matrix::Zero(model.dim(), model.dim());
  start(0, 0) = 1.0;
  const Matrix late = prop.evolve(start, 40.0 / Rates::from(p).gamma);
  CHECK((late - rho.matrix()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("density operator invariant checks") {
  Matrix bad = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(DensityOperator(bad).check_invariants(), ConvergenceError);
  bad(0, 0) = 1.5;
  bad(1, 1) = -0.5;
  CHECK_THROWS_AS(DensityOperator(bad).check_invariants(), ConvergenceError);
  bad = Matrix::Identity(2, 2) * 0.5;
  bad(0, 1) = 0.1;
  CHECK_THROWS_AS(DensityOperator(bad).check_invariants(), ConvergenceError);
}

TEST_CASE("weak-field calibration to the fig5 preset intensity") {
  SystemParams p = test::fig5_params();
  p.epsilon = calibrate_drive(p, 2.99e-4);
  const Model model(p);
  const SteadyMoments m = moments(steady_state(model), model);
  CHECK(m.big_x == doctest::Approx(2.99e-4).epsilon(1e-5));
  CHECK(m.n_bar == doctest::Approx(2.33e-7).epsilon(0.003));
  // Pure-state limit: x² reproduces X.
  const DerivedParams d = derived_params(p, m.field.real(), m.n_bar);
  CHECK(*d.x * *d.x == doctest::Approx(*d.big_x).epsilon(0.01));
  CHECK(std::abs(m.field.imag()) < 1e-8);
}

TEST_CASE("n_max convergence sweep") {
  SystemParams p = test::fig5_params();
  p.epsilon = 0.0;
  CHECK(converge_nmax(p, steady_photon_number) == 2);

  p.epsilon = calibrate_drive(p, 2.99e-4);
  const int n = converge_nmax(p, steady_photon_number);
  CHECK(n <= 3);

  // Increments shrink as the truncation grows.
  p.epsilon = 1.5 * p.kappa;
  double prev = steady_photon_number([&] { auto q = p; q.n_max = 3; return q; }());
  double last_step = INFINITY;
  for (int nm = 4; nm <= 8; ++nm) {
    SystemParams q = p;
    q.n_max = nm;
    const double v = steady_photon_number(q);
    const double step = std::abs(v - prev);
    CHECK(step < last_step);
    last_step = step;
    prev = v;
  }

  CHECK_THROWS_AS(converge_nmax(p, steady_photon_number, 5e-4, 2, 4), ConvergenceError);
}
