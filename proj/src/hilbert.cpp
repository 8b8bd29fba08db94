#include "cqed/hilbert.hpp"

#include <cmath>

namespace cqed {

HilbertSpace::HilbertSpace(int n_max, int n_atoms) : n_max_(n_max), n_atoms_(n_atoms) {
  if (n_atoms != 1 && n_atoms != 2) throw ConfigError("N must be 1 or 2");
  if (n_max < 1) throw ConfigError("n_max must be at least 1");
}

HilbertSpace build_space(const SystemParams& p) {
  p.validate();
  return HilbertSpace(p.n_max, p.n_atoms);
}

Matrix identity(const HilbertSpace& space) { return Matrix::Identity(space.dim(), space.dim()); }

Matrix annihilation(const HilbertSpace& space) {
  Matrix a = Matrix::Zero(space.dim(), space.dim());
  for (int n = 1; n <= space.n_max(); ++n) {
    for (int bits = 0; bits < space.atom_states(); ++bits) {
      a(space.index(n - 1, bits), space.index(n, bits)) = std::sqrt(static_cast<double>(n));
    }
  }
  return a;
}

AtomicOps atomic_ops(const HilbertSpace& space, int atom) {
  if (atom < 1 || atom > space.n_atoms()) throw DomainError("atom index out of range");
  const int d = space.dim();
  const int mask = 1 << (atom - 1);
  AtomicOps ops{Matrix::Zero(d, d), Matrix::Zero(d, d), Matrix::Zero(d, d)};
  for (int idx = 0; idx < d; ++idx) {
    const int bits = space.atom_bits(idx);
    if (bits & mask) {
      ops.lower(space.index(space.photons(idx), bits & ~mask), idx) = 1.0;
      ops.z(idx, idx) = 1.0;
    } else {
      ops.z(idx, idx) = -1.0;
    }
  }
  ops.raise = ops.lower.adjoint();
  return ops;
}

Matrix collective_lower(const HilbertSpace& space) {
  Matrix s = Matrix::Zero(space.dim(), space.dim());
  for (int j = 1; j <= space.n_atoms(); ++j) s += atomic_ops(space, j).lower;
  return s;
}

Matrix collective_raise(const HilbertSpace& space) { return collective_lower(space).adjoint(); }

Matrix hamiltonian(const SystemParams& p, const HilbertSpace& space) {
  const Rates w = Rates::from(p);
  const Matrix a = annihilation(space);
  const Matrix ad = a.adjoint();
  const Matrix s_minus = collective_lower(space);
  const Matrix s_plus = s_minus.adjoint();
  return -kI * w.g * (s_plus * a - ad * s_minus) + kI * w.epsilon * (ad - a);
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Vector vectorize(const Matrix& rho) {
  return Eigen::Map<const Vector>(rho.data(), rho.size());
}

Matrix unvectorize(const Vector& v, int dim) {
  return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

namespace {

using Sparse = Eigen::SparseMatrix<Complex>;

Sparse sparse_of(const Matrix& m) {
  Sparse out = m.sparseView(0.0, 0.0);
  out.makeCompressed();
  return out;
}

// Triplets of coeff·(A ⊗ B) for sparse A, B.
void add_kron(std::vector<Eigen::Triplet<Complex>>& out, Complex coeff, const Sparse& a, const Sparse& b) {
  for (int ka = 0; ka < a.outerSize(); ++ka) {
    for (Sparse::InnerIterator ia(a, ka); ia; ++ia) {
      for (int kb = 0; kb < b.outerSize(); ++kb) {
        for (Sparse::InnerIterator ib(b, kb); ib; ++ib) {
          out.emplace_back(static_cast<int>(ia.row() * b.rows() + ib.row()),
                           static_cast<int>(ia.col() * b.cols() + ib.col()),
                           coeff * ia.value() * ib.value());
        }
      }
    }
  }
}

// Adds the dissipator D[C]ρ = CρC† − ½C†Cρ − ½ρC†C.
void add_dissipator(std::vector<Eigen::Triplet<Complex>>& out, const Matrix& c, const Sparse& id) {
  const Matrix cdc = c.adjoint() * c;
  add_kron(out, 1.0, sparse_of(c.conjugate()), sparse_of(c));
  add_kron(out, -0.5, id, sparse_of(cdc));
  add_kron(out, -0.5, sparse_of(cdc.transpose()), id);
}

}  // namespace

Eigen::SparseMatrix<Complex> sparse_liouvillian(const SystemParams& p, const HilbertSpace& space) {
  const Rates w = Rates::from(p);
  const Sparse id = sparse_of(identity(space));
  const Matrix h = hamiltonian(p, space);
  std::vector<Eigen::Triplet<Complex>> entries;
  add_kron(entries, -kI, id, sparse_of(h));
  add_kron(entries, kI, sparse_of(h.transpose()), id);
  add_dissipator(entries, std::sqrt(2.0 * w.kappa) * annihilation(space), id);
  for (int j = 1; j <= space.n_atoms(); ++j) {
    add_dissipator(entries, std::sqrt(w.gamma) * atomic_ops(space, j).lower, id);
  }
  const int rows = space.dim() * space.dim();
  Sparse l(rows, rows);
  l.setFromTriplets(entries.begin(), entries.end());
  l.prune(Complex(0.0));
  l.makeCompressed();
  return l;
}

Matrix liouvillian(const SystemParams& p, const HilbertSpace& space) {
  return Matrix(sparse_liouvillian(p, space));
}

Model::Model(const SystemParams& p)
    : params_(p), rates_(Rates::from(p)), space_(build_space(p)), a_(annihilation(space_)) {
  for (int j = 1; j <= space_.n_atoms(); ++j) sigma_lower_.push_back(atomic_ops(space_, j).lower);
  h_ = cqed::hamiltonian(params_, space_);
  l_sparse_ = cqed::sparse_liouvillian(params_, space_);
  l_ = Matrix(l_sparse_);
}

Matrix Model::quadrature(double theta) const {
  const Complex phase = std::polar(1.0, -theta);
  return 0.5 * (phase * a_ + std::conj(phase) * a_.adjoint());
}

}  // namespace cqed
