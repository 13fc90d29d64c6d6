#pragma once

// Operator algebra on truncated qubit/resonator product spaces.
//
// Basis convention: sites are ordered qubits first, then resonators, each in
// declaration order. Site 0 is the most significant factor of the Kronecker
// product, so for (qubit, qubit) the basis is |00>, |01>, |10>, |11> with the
// qubit basis |0> = sigma_z eigenvalue +1.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "hqa/error.hpp"

namespace hqa {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

struct Site {
  enum class Kind { qubit, resonator };

  Kind kind = Kind::qubit;
  std::size_t dim = 2;

  static Site qubit() { return {Kind::qubit, 2}; }

  static Site resonator(std::size_t truncation) {
    if (truncation < 2)
      throw error(errc::invalid_truncation,
                  "resonator truncation must be >= 2, got " + std::to_string(truncation));
    return {Kind::resonator, truncation};
  }

  bool operator==(const Site&) const = default;
};

class HilbertSpace {
 public:
  HilbertSpace() = default;

  explicit HilbertSpace(std::vector<Site> sites) : sites_(std::move(sites)) {
    bool seen_resonator = false;
    for (const auto& s : sites_) {
      if (s.kind == Site::Kind::resonator) {
        if (s.dim < 2)
          throw error(errc::invalid_truncation, "resonator truncation must be >= 2");
        seen_resonator = true;
      } else {
        if (s.dim != 2) throw error(errc::invalid_argument, "qubit sites have dimension 2");
        if (seen_resonator)
          throw error(errc::invalid_argument,
                      "site order must list all qubits before resonators");
      }
      dim_ *= s.dim;
    }
  }

  static HilbertSpace qubits_and_resonators(std::size_t qubits, std::size_t resonators,
                                            std::size_t truncation) {
    std::vector<Site> sites(qubits, Site::qubit());
    for (std::size_t m = 0; m < resonators; ++m) sites.push_back(Site::resonator(truncation));
    return HilbertSpace(std::move(sites));
  }

  const std::vector<Site>& sites() const noexcept { return sites_; }
  std::size_t site_count() const noexcept { return sites_.size(); }
  std::size_t dim() const noexcept { return dim_; }

  const Site& site(std::size_t i) const {
    if (i >= sites_.size())
      throw error(errc::index_out_of_range, "site index " + std::to_string(i) +
                                                " out of range for " + std::to_string(sites_.size()) +
                                                " sites");
    return sites_[i];
  }

  std::size_t qubit_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(
        sites_.begin(), sites_.end(), [](const Site& s) { return s.kind == Site::Kind::qubit; }));
  }
  std::size_t resonator_count() const noexcept { return sites_.size() - qubit_count(); }

  /// Site index of the k-th qubit.
  std::size_t qubit_site(std::size_t k) const {
    if (k >= qubit_count()) throw error(errc::index_out_of_range, "qubit index out of range");
    return k;
  }
  /// Site index of the m-th resonator.
  std::size_t resonator_site(std::size_t m) const {
    if (m >= resonator_count())
      throw error(errc::index_out_of_range, "resonator index out of range");
    return qubit_count() + m;
  }

  std::string describe() const {
    std::string out;
    for (std::size_t i = 0; i < sites_.size(); ++i) {
      if (i) out += ",";
      out += sites_[i].kind == Site::Kind::qubit
                 ? std::string("qubit")
                 : "resonator(" + std::to_string(sites_[i].dim) + ")";
    }
    return out;
  }

  bool operator==(const HilbertSpace& o) const { return sites_ == o.sites_; }

 private:
  std::vector<Site> sites_;
  std::size_t dim_ = 1;
};

namespace detail {

inline void require_same_space(const HilbertSpace& a, const HilbertSpace& b, const char* what) {
  if (!(a == b))
    throw error(errc::space_mismatch, std::string(what) + ": operands live on different spaces (" +
                                          a.describe() + " vs " + b.describe() + ")");
}

inline double sparsity(const Matrix& m) {
  const auto nnz = (m.array() != cplx(0.0)).count();
  return static_cast<double>(nnz) / static_cast<double>(m.size());
}

}  // namespace detail

class LinOp {
 public:
  LinOp(HilbertSpace space, Matrix matrix) : space_(std::move(space)), matrix_(std::move(matrix)) {
    const auto n = static_cast<Eigen::Index>(space_.dim());
    if (matrix_.rows() != n || matrix_.cols() != n)
      throw error(errc::dimension_mismatch,
                  "matrix is " + std::to_string(matrix_.rows()) + "x" +
                      std::to_string(matrix_.cols()) + " but space dim is " + std::to_string(n));
  }

  static LinOp zero(const HilbertSpace& space) {
    const auto n = static_cast<Eigen::Index>(space.dim());
    return LinOp(space, Matrix::Zero(n, n));
  }

  const HilbertSpace& space() const noexcept { return space_; }
  const Matrix& matrix() const noexcept { return matrix_; }
  std::size_t dim() const noexcept { return space_.dim(); }

  LinOp adjoint() const { return LinOp(space_, matrix_.adjoint()); }

  /// max_ij |M - M^dagger|
  double hermiticity_error() const {
    if (matrix_.size() == 0) return 0.0;
    return (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
  }

  bool is_real() const { return matrix_.imag().cwiseAbs().maxCoeff() == 0.0; }

  LinOp& operator+=(const LinOp& o) {
    detail::require_same_space(space_, o.space_, "operator+");
    matrix_ += o.matrix_;
    return *this;
  }
  LinOp& operator-=(const LinOp& o) {
    detail::require_same_space(space_, o.space_, "operator-");
    matrix_ -= o.matrix_;
    return *this;
  }
  LinOp& operator*=(cplx s) {
    matrix_ *= s;
    return *this;
  }

  friend LinOp operator+(LinOp a, const LinOp& b) { return a += b; }
  friend LinOp operator-(LinOp a, const LinOp& b) { return a -= b; }
  friend LinOp operator*(LinOp a, cplx s) { return a *= s; }
  friend LinOp operator*(cplx s, LinOp a) { return a *= s; }
  friend LinOp operator*(LinOp a, double s) { return a *= cplx(s); }
  friend LinOp operator*(double s, LinOp a) { return a *= cplx(s); }
  friend LinOp operator-(LinOp a) { return a *= cplx(-1.0); }

  // Operator products are the expensive step when building penalty squares on
  // the doubled truncation, so sparse operands go through a sparse product.
  friend LinOp operator*(const LinOp& a, const LinOp& b) {
    detail::require_same_space(a.space_, b.space_, "operator*");
    const bool large = a.dim() >= 64;
    if (large && detail::sparsity(a.matrix_) < 0.1 && detail::sparsity(b.matrix_) < 0.1) {
      Eigen::SparseMatrix<cplx> sa = a.matrix_.sparseView();
      Eigen::SparseMatrix<cplx> sb = b.matrix_.sparseView();
      Eigen::SparseMatrix<cplx> prod = sa * sb;
      return LinOp(a.space_, Matrix(prod));
    }
    return LinOp(a.space_, a.matrix_ * b.matrix_);
  }

 private:
  HilbertSpace space_;
  Matrix matrix_;
};

class StateVector {
 public:
  StateVector(HilbertSpace space, Vector amplitudes)
      : space_(std::move(space)), amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.size() != static_cast<Eigen::Index>(space_.dim()))
      throw error(errc::dimension_mismatch, "state has " + std::to_string(amplitudes_.size()) +
                                                " amplitudes but space dim is " +
                                                std::to_string(space_.dim()));
  }

  /// Computational basis state |index>.
  static StateVector basis(const HilbertSpace& space, std::size_t index) {
    if (index >= space.dim()) throw error(errc::index_out_of_range, "basis index out of range");
    Vector v = Vector::Zero(static_cast<Eigen::Index>(space.dim()));
    v(static_cast<Eigen::Index>(index)) = 1.0;
    return StateVector(space, std::move(v));
  }

  const HilbertSpace& space() const noexcept { return space_; }
  const Vector& amplitudes() const noexcept { return amplitudes_; }
  double norm() const { return amplitudes_.norm(); }

  StateVector normalized() const {
    const double n = norm();
    if (n == 0.0) throw error(errc::invalid_argument, "cannot normalize the zero vector");
    return StateVector(space_, amplitudes_ / n);
  }

  /// Overlap <this|other>.
  cplx inner(const StateVector& other) const {
    detail::require_same_space(space_, other.space_, "inner");
    return amplitudes_.dot(other.amplitudes_);
  }

 private:
  HilbertSpace space_;
  Vector amplitudes_;
};

// ---------------------------------------------------------------------------
// Single-site operators

inline LinOp annihilation(std::size_t truncation) {
  const Site site = Site::resonator(truncation);
  const auto n = static_cast<Eigen::Index>(truncation);
  Matrix a = Matrix::Zero(n, n);
  for (Eigen::Index k = 0; k + 1 < n; ++k) a(k, k + 1) = std::sqrt(static_cast<double>(k + 1));
  return LinOp(HilbertSpace({site}), std::move(a));
}

inline LinOp creation(std::size_t truncation) { return annihilation(truncation).adjoint(); }

inline LinOp number(std::size_t truncation) {
  const Site site = Site::resonator(truncation);
  const auto n = static_cast<Eigen::Index>(truncation);
  Matrix m = Matrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) m(k, k) = static_cast<double>(k);
  return LinOp(HilbertSpace({site}), std::move(m));
}

enum class Axis { x, y, z };

inline LinOp pauli(Axis axis) {
  Matrix m(2, 2);
  switch (axis) {
    case Axis::x: m << 0.0, 1.0, 1.0, 0.0; break;
    case Axis::y: m << 0.0, cplx(0, -1), cplx(0, 1), 0.0; break;
    case Axis::z: m << 1.0, 0.0, 0.0, -1.0; break;
  }
  return LinOp(HilbertSpace({Site::qubit()}), std::move(m));
}

inline LinOp identity(const HilbertSpace& space) {
  const auto n = static_cast<Eigen::Index>(space.dim());
  return LinOp(space, Matrix::Identity(n, n));
}

inline LinOp identity(const Site& site) { return identity(HilbertSpace({site})); }

// ---------------------------------------------------------------------------
// Composite-space operations

/// Lift a single-site operator to identity x ... x local x ... x identity.
inline LinOp embed(const HilbertSpace& space, std::size_t site_index, const LinOp& local) {
  const Site& target = space.site(site_index);
  if (local.space().site_count() != 1 || local.dim() != target.dim)
    throw error(errc::dimension_mismatch,
                "local operator of dim " + std::to_string(local.dim()) + " cannot act on site " +
                    std::to_string(site_index) + " of dim " + std::to_string(target.dim));

  std::size_t left = 1, right = 1;
  for (std::size_t i = 0; i < site_index; ++i) left *= space.sites()[i].dim;
  for (std::size_t i = site_index + 1; i < space.site_count(); ++i) right *= space.sites()[i].dim;
  const std::size_t d = target.dim;

  const auto n = static_cast<Eigen::Index>(space.dim());
  Matrix out = Matrix::Zero(n, n);
  const Matrix& m = local.matrix();
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const cplx v = m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      if (v == cplx(0.0)) continue;
      for (std::size_t l = 0; l < left; ++l) {
        const std::size_t row0 = (l * d + r) * right;
        const std::size_t col0 = (l * d + c) * right;
        for (std::size_t k = 0; k < right; ++k)
          out(static_cast<Eigen::Index>(row0 + k), static_cast<Eigen::Index>(col0 + k)) = v;
      }
    }
  }
  return LinOp(space, std::move(out));
}

inline LinOp commutator(const LinOp& a, const LinOp& b) { return a * b - b * a; }

inline double max_abs(const LinOp& op) {
  return op.matrix().size() ? op.matrix().cwiseAbs().maxCoeff() : 0.0;
}

struct Expectation {
  double value = 0.0;
  /// |Im <psi|O|psi>|; stays below ~1e-12 for Hermitian O and normalized psi.
  double imag_residue = 0.0;
};

inline cplx expectation_value(const LinOp& op, const StateVector& psi) {
  detail::require_same_space(op.space(), psi.space(), "expectation");
  return psi.amplitudes().dot(op.matrix() * psi.amplitudes());
}

inline Expectation expectation(const LinOp& op, const StateVector& psi) {
  const cplx v = expectation_value(op, psi);
  return {v.real(), std::abs(v.imag())};
}

/// Fock-basis expansion of |alpha> truncated to N levels and renormalized.
inline StateVector coherent_state(std::size_t truncation, cplx alpha) {
  const Site site = Site::resonator(truncation);
  Vector v(static_cast<Eigen::Index>(truncation));
  cplx term = std::exp(-0.5 * std::norm(alpha));
  for (std::size_t n = 0; n < truncation; ++n) {
    if (n > 0) term *= alpha / std::sqrt(static_cast<double>(n));
    v(static_cast<Eigen::Index>(n)) = term;
  }
  return StateVector(HilbertSpace({site}), v).normalized();
}

/// Product state from per-site local vectors, in site order.
inline StateVector product_state(const HilbertSpace& space, const std::vector<Vector>& locals) {
  if (locals.size() != space.site_count())
    throw error(errc::dimension_mismatch, "need one local vector per site");
  Vector out = Vector::Ones(1);
  for (std::size_t i = 0; i < locals.size(); ++i) {
    if (locals[i].size() != static_cast<Eigen::Index>(space.sites()[i].dim))
      throw error(errc::dimension_mismatch, "local vector dim mismatch at site " + std::to_string(i));
    Vector next(out.size() * locals[i].size());
    for (Eigen::Index a = 0; a < out.size(); ++a)
      next.segment(a * locals[i].size(), locals[i].size()) = out(a) * locals[i];
    out = std::move(next);
  }
  return StateVector(space, std::move(out));
}

}  // namespace hqa
