#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"

#include "cqed/hilbert.hpp"

using namespace cqed;

TEST_CASE("space dimension and ordering") {
  CHECK(HilbertSpace(1, 1).dim() == 4);
  CHECK(HilbertSpace(3, 2).dim() == 16);
  CHECK(HilbertSpace(10, 2).dim() == 44);

  const HilbertSpace s(3, 2);
  CHECK(s.index(0, 0) == 0);
  CHECK(s.index(0, 1) == 1);  // atom 1 excited, fastest index
  CHECK(s.index(1, 0) == 4);
  CHECK(s.excited(s.index(2, 2), 2));
  CHECK_FALSE(s.excited(s.index(2, 2), 1));

  CHECK_THROWS_AS(HilbertSpace(3, 3), ConfigError);
  CHECK_THROWS_AS(HilbertSpace(0, 1), ConfigError);
  SystemParams p = test::fig5_params();
  p.n_max = 1;
  CHECK_THROWS_AS(build_space(p), ConfigError);
}

TEST_CASE("field operators") {
  const HilbertSpace small(1, 1);
  const Matrix a = annihilation(small);
  CHECK(a(small.index(0, 0), small.index(1, 0)) == Complex(1.0));
  CHECK(a(small.index(0, 1), small.index(1, 1)) == Complex(1.0));
  CHECK(a.cwiseAbs().sum() == doctest::Approx(2.0));

  const HilbertSpace s(4, 2);
  const Matrix b = annihilation(s);
  const Matrix number = b.adjoint() * b;
  for (int i = 0; i < s.dim(); ++i) CHECK(number(i, i).real() == doctest::Approx(s.photons(i)));

  // [a, a†] is the identity except on the top Fock level, where it is −n_max.
  const Matrix comm = b * b.adjoint() - b.adjoint() * b;
  for (int i = 0; i < s.dim(); ++i) {
    for (int j = 0; j < s.dim(); ++j) {
      Complex expected = 0.0;
      if (i == j) expected = s.photons(i) == s.n_max() ? Complex(-s.n_max()) : Complex(1.0);
      CHECK(std::abs(comm(i, j) - expected) < 1e-14);
    }
  }
}

TEST_CASE("atomic operators") {
  const HilbertSpace one(2, 1);
  const auto ops = atomic_ops(one, 1);
  const Matrix anti = ops.lower * ops.raise + ops.raise * ops.lower;
  CHECK((anti - identity(one)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((ops.raise * ops.lower - ops.lower * ops.raise - ops.z).cwiseAbs().maxCoeff() < 1e-15);

  const HilbertSpace two(2, 2);
  const auto a1 = atomic_ops(two, 1);
  const auto a2 = atomic_ops(two, 2);
  CHECK((a1.lower * a2.lower - a2.lower * a1.lower).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(atomic_ops(two, 3), DomainError);
  CHECK_THROWS_AS(atomic_ops(two, 0), DomainError);

  // S₊S₋ on the symmetric single-excitation state (|eg⟩+|ge⟩)/√2 gives twice the state.
  Vector sym = Vector::Zero(two.dim());
  sym(two.index(0, 0b01)) = 1.0 / std::sqrt(2.0);
  sym(two.index(0, 0b10)) = 1.0 / std::sqrt(2.0);
  const Vector out = collective_raise(two) * collective_lower(two) * sym;
  CHECK((out - 2.0 * sym).norm() < 1e-15);
}

TEST_CASE("hamiltonian") {
  SystemParams p = test::fig5_params();
  p.epsilon = 0.7;
  const HilbertSpace s = build_space(p);
  const Matrix h = hamiltonian(p, s);
  CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-12);

  SystemParams dark = p;
  dark.g = 1e-300;  // validate() rejects 0; coupling is numerically absent
  dark.epsilon = 0.0;
  CHECK(hamiltonian(dark, s).cwiseAbs().maxCoeff() < 1e-290);

  // First excited doublet of the undriven N=1 system sits at ±g.
  SystemParams bare = p;
  bare.epsilon = 0.0;
  const Matrix hb = hamiltonian(bare, s);
  Eigen::Matrix2cd doublet;
  const int i0 = s.index(1, 0), i1 = s.index(0, 1);
  doublet << hb(i0, i0), hb(i0, i1), hb(i1, i0), hb(i1, i1);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(doublet);
  const double g = kTwoPi * p.g;
  CHECK(std::abs(es.eigenvalues()(0) + g) / g < 1e-10);
  CHECK(std::abs(es.eigenvalues()(1) - g) / g < 1e-10);
  CHECK(std::abs((es.eigenvalues()(1) - es.eigenvalues()(0)) - 2.0 * g) / (2.0 * g) < 1e-10);
}

TEST_CASE("liouvillian preserves trace and hermiticity") {
  std::mt19937_64 rng(7);
  for (int n_atoms : {1, 2}) {
    SystemParams p = test::fig5_params(n_atoms);
    p.epsilon = 2.3;
    const Model model(p);
    const Matrix& l = model.liouvillian();
    CHECK(l.rows() == model.dim() * model.dim());
    for (int k = 0; k < 10; ++k) {
      const Matrix rho = test::random_density(model.dim(), rng);
      const Matrix out = unvectorize(l * vectorize(rho), model.dim());
      CHECK(std::abs(out.trace()) < 1e-12 * l.cwiseAbs().maxCoeff());
      CHECK((out - out.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("dissipators map Hermitian to Hermitian") {
  std::mt19937_64 rng(11);
  SystemParams p = test::fig5_params(2);
  const HilbertSpace s = build_space(p);
  const Matrix a = annihilation(s);
  for (int k = 0; k < 10; ++k) {
    const Matrix x = test::random_hermitian(s.dim(), rng);
    for (const Matrix& c : {Matrix(a), atomic_ops(s, 1).lower, atomic_ops(s, 2).lower}) {
      const Matrix d = c * x * c.adjoint() - 0.5 * (c.adjoint() * c * x + x * c.adjoint() * c);
      CHECK((d - d.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("vacuum is dark without drive") {
  SystemParams p = test::fig5_params(2);
  p.epsilon = 0.0;
  const Model model(p);
  Matrix rho = Matrix::Zero(model.dim(), model.dim());
  rho(0, 0) = 1.0;
  CHECK((model.liouvillian() * vectorize(rho)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("empty cavity field obeys d<a>/dt = -kappa <a> + epsilon") {
  std::mt19937_64 rng(3);
  SystemParams p = test::fig5_params();
  p.g = 1e-12;
  p.epsilon = 1.3;
  const Model model(p);
  const Rates w = model.rates();
  for (int k = 0; k < 5; ++k) {
    const Matrix rho = test::random_density(model.dim(), rng);
    const Matrix drho = unvectorize(model.liouvillian() * vectorize(rho), model.dim());
    const Complex lhs = (model.a() * drho).trace();
    const Complex a_mean = (model.a() * rho).trace();
    // Truncation: a†a ρ at the top level adds a correction proportional to ρ(n_max, ·).
    const int top = model.space().n_max();
    Complex trunc = 0.0;
    for (int b = 0; b < model.space().atom_states(); ++b) {
      const int i = model.space().index(top, b);
      trunc += rho(i, i);
    }
    const Complex rhs = -w.kappa * a_mean + w.epsilon * (1.0 - (top + 1.0) * trunc);
    CHECK(std::abs(lhs - rhs) < 1e-9 * w.kappa);
  }
}

TEST_CASE("derived parameters") {
  const SystemParams p = test::fig5_params();
  const DerivedParams d = derived_params(p);
  CHECK(d.c1 == doctest::Approx(55.33).epsilon(0.01 / 55.33));
  CHECK(d.n0 == doctest::Approx(7.79e-4).epsilon(0.001));
  CHECK(d.c == doctest::Approx(d.c1));

  const DerivedParams d2 = derived_params(test::fig5_params(2));
  CHECK(d2.c == doctest::Approx(d.c1).epsilon(1e-12));
  CHECK(d2.c1 == doctest::Approx(d.c1 / 2.0).epsilon(1e-12));

  const DerivedParams dx = derived_params(p, 0.01, 2e-4);
  CHECK(*dx.big_x == doctest::Approx(2e-4 / d.n0));
  CHECK(*dx.x * *dx.x == doctest::Approx(1e-4 / d.n0));
}
