#pragma once

#include <vector>

#include <Eigen/Sparse>

#include "cqed/params.hpp"
#include "cqed/types.hpp"

namespace cqed {

// Truncated field ⊗ atoms space. Basis index = n·2^N + bits, where bit
// (j-1) of `bits` is set when atom j is excited (atom 1 varies fastest).
class HilbertSpace {
 public:
  HilbertSpace(int n_max, int n_atoms);

  int n_max() const { return n_max_; }
  int n_atoms() const { return n_atoms_; }
  int atom_states() const { return 1 << n_atoms_; }
  int dim() const { return (n_max_ + 1) * atom_states(); }

  int index(int photons, int atom_bits) const { return photons * atom_states() + atom_bits; }
  int photons(int idx) const { return idx / atom_states(); }
  int atom_bits(int idx) const { return idx % atom_states(); }
  bool excited(int idx, int atom) const { return (atom_bits(idx) >> (atom - 1)) & 1; }

  bool operator==(const HilbertSpace&) const = default;

 private:
  int n_max_;
  int n_atoms_;
};

HilbertSpace build_space(const SystemParams& p);

// Operators on the full space (dim × dim).
Matrix annihilation(const HilbertSpace& space);
Matrix identity(const HilbertSpace& space);

struct AtomicOps {
  Matrix lower;  // σ₋ʲ
  Matrix raise;  // σ₊ʲ
  Matrix z;      // σzʲ = |e⟩⟨e| − |g⟩⟨g|
};

// Operators of atom j (1-based).
AtomicOps atomic_ops(const HilbertSpace& space, int atom);
Matrix collective_lower(const HilbertSpace& space);
Matrix collective_raise(const HilbertSpace& space);

// H/ħ = −i g (S₊a − a†S₋) + i ε (a† − a) in the resonant interaction
// picture, angular units.
Matrix hamiltonian(const SystemParams& p, const HilbertSpace& space);

// Column-stacked Liouvillian: vec(𝓛ρ) = L·vec(ρ), with vec(AρB) = (Bᵀ⊗A)vec(ρ).
Eigen::SparseMatrix<Complex> sparse_liouvillian(const SystemParams& p, const HilbertSpace& space);
Matrix liouvillian(const SystemParams& p, const HilbertSpace& space);

Matrix kron(const Matrix& a, const Matrix& b);
Vector vectorize(const Matrix& rho);
Matrix unvectorize(const Vector& v, int dim);

// Everything the numerical routes need for one parameter set, built once
// and shared read-only afterwards.
class Model {
 public:
  explicit Model(const SystemParams& p);

  const SystemParams& params() const { return params_; }
  const Rates& rates() const { return rates_; }
  const HilbertSpace& space() const { return space_; }
  int dim() const { return space_.dim(); }

  const Matrix& a() const { return a_; }
  const Matrix& sigma_lower(int atom) const { return sigma_lower_[atom - 1]; }
  const Matrix& hamiltonian() const { return h_; }
  const Matrix& liouvillian() const { return l_; }
  const Eigen::SparseMatrix<Complex>& sparse_liouvillian() const { return l_sparse_; }

  // Quadrature A_θ = (a e^{−iθ} + a† e^{iθ})/2.
  Matrix quadrature(double theta) const;

 private:
  SystemParams params_;
  Rates rates_;
  HilbertSpace space_;
  Matrix a_;
  std::vector<Matrix> sigma_lower_;
  Matrix h_;
  Eigen::SparseMatrix<Complex> l_sparse_;
  Matrix l_;
};

}  // namespace cqed
