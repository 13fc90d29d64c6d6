#pragma once

// Test-side reference constructions, written without the library's
// embed/builders so that they can serve as independent oracles.

#include <complex>
#include <cstddef>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace ref {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Mat eye(Eigen::Index n) { return Mat::Identity(n, n); }

inline Mat lowering(std::size_t n) {
  Mat a = Mat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k + 1 < n; ++k)
    a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k + 1)) = std::sqrt(static_cast<double>(k + 1));
  return a;
}

inline Mat sigma_z() {
  Mat m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

inline Mat sigma_x() {
  Mat m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

/// Place `local` at position `site` among `dims`, identity elsewhere.
inline Mat place(const std::vector<std::size_t>& dims, std::size_t site, const Mat& local) {
  Mat out = Mat::Identity(1, 1);
  for (std::size_t i = 0; i < dims.size(); ++i)
    out = kron(out, i == site ? local : eye(static_cast<Eigen::Index>(dims[i])));
  return out;
}

inline Mat random_hermitian(Eigen::Index n, std::mt19937& rng) {
  std::normal_distribution<double> nd;
  Mat m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = cplx(nd(rng), nd(rng));
  return 0.5 * (m + m.adjoint());
}

inline Vec random_state(Eigen::Index n, std::mt19937& rng) {
  std::normal_distribution<double> nd;
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(nd(rng), nd(rng));
  return v / v.norm();
}

inline double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace ref
