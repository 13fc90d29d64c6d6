#pragma once

// Classical ground truth for the production-planning program: every binary
// sector is an unconstrained convex quadratic in x, minimized in closed form.
// grid_check is an independent brute-force minimizer over a box.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "hqa/mip.hpp"

namespace hqa {

struct SectorSolution {
  BinaryVector y;
  std::vector<double> x;
  double cost = 0.0;
  double stationarity_residual = 0.0;  // ||grad f(x*)||_inf
  bool nonnegative = true;
  double condition_number = 1.0;      // of the Hessian
};

struct OracleSolution {
  std::vector<SectorSolution> sectors;  // enumeration order: y as a binary number, y_0 most significant
  std::size_t best = 0;

  const SectorSolution& global() const { return sectors.at(best); }
};

namespace detail {

inline Eigen::MatrixXd sector_hessian(const MipInstance& inst) {
  const auto k = static_cast<Eigen::Index>(inst.K());
  Eigen::MatrixXd H = Eigen::MatrixXd::Constant(k, k, 2.0 * inst.penalty);
  for (Eigen::Index i = 0; i < k; ++i) H(i, i) += 2.0 * inst.d[static_cast<std::size_t>(i)];
  return H;
}

inline Eigen::VectorXd sector_gradient(const MipInstance& inst, const BinaryVector& y,
                                       const Eigen::VectorXd& x) {
  const auto k = static_cast<Eigen::Index>(inst.K());
  const double excess = x.sum() - inst.A;
  Eigen::VectorXd grad(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto u = static_cast<std::size_t>(i);
    grad(i) = inst.c[u] - inst.c_tilde[u] * y[u] + 2.0 * inst.d[u] * x(i) + 2.0 * inst.penalty * excess;
  }
  return grad;
}

inline BinaryVector sector_bits(std::size_t code, std::size_t k) {
  BinaryVector y(k);
  for (std::size_t i = 0; i < k; ++i) y[i] = static_cast<int>((code >> (k - 1 - i)) & 1u);
  return y;
}

}  // namespace detail

/// Minimizer of the penalized cost for a fixed binary assignment y:
/// (2 diag(d) + 2 penalty 11^T) x = -(c - c~ o y) + 2 penalty A 1.
inline SectorSolution solve_sector(const MipInstance& inst, const BinaryVector& y) {
  if (y.size() != inst.K())
    throw error(errc::shape_mismatch, "y must have length K=" + std::to_string(inst.K()));
  try {
    inst.validate();
  } catch (const error& e) {
    throw error(errc::ill_posed_instance, std::string("ill-posed instance: ") + e.what());
  }

  const auto k = static_cast<Eigen::Index>(inst.K());
  const Eigen::MatrixXd H = detail::sector_hessian(inst);
  Eigen::VectorXd rhs(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto u = static_cast<std::size_t>(i);
    rhs(i) = -(inst.c[u] - inst.c_tilde[u] * y[u]) + 2.0 * inst.penalty * inst.A;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || !std::isfinite(hi / lo))
    throw error(errc::ill_posed_instance, "sector Hessian is not positive definite");

  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success)
    throw error(errc::ill_posed_instance, "Cholesky factorization failed");
  const Eigen::VectorXd x = llt.solve(rhs);

  SectorSolution out;
  out.y = y;
  out.x.assign(x.data(), x.data() + x.size());
  out.cost = penalized_cost(inst, y, out.x);
  out.stationarity_residual = detail::sector_gradient(inst, y, x).cwiseAbs().maxCoeff();
  out.condition_number = hi / lo;
  for (double v : out.x)
    if (v < 0.0) out.nonnegative = false;
  return out;
}

/// Enumerate all 2^K sectors. Ties go to the lexicographically smallest y.
inline OracleSolution solve(const MipInstance& inst, std::size_t max_K = 20) {
  const std::size_t k = inst.K();
  if (k > max_K)
    throw error(errc::too_many_sectors, "K=" + std::to_string(k) + " exceeds the enumeration budget of " +
                                            std::to_string(max_K));
  OracleSolution out;
  const std::size_t count = std::size_t{1} << k;
  out.sectors.reserve(count);
  for (std::size_t code = 0; code < count; ++code) {
    out.sectors.push_back(solve_sector(inst, detail::sector_bits(code, k)));
    // Costs equal up to rounding count as ties and keep the earlier sector.
    const double incumbent = out.sectors[out.best].cost;
    if (out.sectors.back().cost < incumbent - 1e-12 * std::max(1.0, std::abs(incumbent))) out.best = code;
  }
  return out;
}

/// Minimizer of the sector cost restricted to x >= 0, by active-set
/// elimination. Offered for instances whose interior optimum is infeasible.
inline SectorSolution solve_sector_nonnegative(const MipInstance& inst, const BinaryVector& y) {
  SectorSolution unconstrained = solve_sector(inst, y);
  if (unconstrained.nonnegative) return unconstrained;

  const std::size_t k = inst.K();
  std::vector<bool> active(k, false);
  for (std::size_t round = 0; round <= k; ++round) {
    std::vector<Eigen::Index> free;
    for (std::size_t i = 0; i < k; ++i)
      if (!active[i]) free.push_back(static_cast<Eigen::Index>(i));

    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    if (!free.empty()) {
      const auto f = static_cast<Eigen::Index>(free.size());
      Eigen::MatrixXd H = Eigen::MatrixXd::Constant(f, f, 2.0 * inst.penalty);
      Eigen::VectorXd rhs(f);
      for (Eigen::Index a = 0; a < f; ++a) {
        const auto u = static_cast<std::size_t>(free[static_cast<std::size_t>(a)]);
        H(a, a) += 2.0 * inst.d[u];
        rhs(a) = -(inst.c[u] - inst.c_tilde[u] * y[u]) + 2.0 * inst.penalty * inst.A;
      }
      const Eigen::VectorXd xf = H.llt().solve(rhs);
      for (Eigen::Index a = 0; a < f; ++a) x(free[static_cast<std::size_t>(a)]) = xf(a);
    }

    // Drop the most negative free variable; otherwise check the KKT multipliers.
    Eigen::Index worst = -1;
    for (Eigen::Index i : free)
      if (x(i) < 0.0 && (worst < 0 || x(i) < x(worst))) worst = i;
    if (worst >= 0) {
      active[static_cast<std::size_t>(worst)] = true;
      continue;
    }
    const Eigen::VectorXd grad = detail::sector_gradient(inst, y, x);
    Eigen::Index release = -1;
    for (std::size_t i = 0; i < k; ++i)
      if (active[i] && grad(static_cast<Eigen::Index>(i)) < 0.0 &&
          (release < 0 || grad(static_cast<Eigen::Index>(i)) < grad(release)))
        release = static_cast<Eigen::Index>(i);
    if (release >= 0 && round < k) {
      active[static_cast<std::size_t>(release)] = false;
      continue;
    }

    SectorSolution out = unconstrained;
    out.x.assign(x.data(), x.data() + x.size());
    out.cost = penalized_cost(inst, y, out.x);
    double residual = 0.0;
    for (std::size_t i = 0; i < k; ++i)
      if (!active[i]) residual = std::max(residual, std::abs(grad(static_cast<Eigen::Index>(i))));
    out.stationarity_residual = residual;
    out.nonnegative = true;
    return out;
  }
  throw error(errc::ill_posed_instance, "active-set iteration did not settle");
}

struct GridResult {
  std::vector<double> x;
  double cost = std::numeric_limits<double>::infinity();
};

/// Exhaustive search over the uniform grid {lo + j (hi - lo)/(resolution - 1)}^K.
inline GridResult grid_check(const MipInstance& inst, const BinaryVector& y, double lo, double hi,
                             std::size_t resolution) {
  if (resolution < 100)
    throw error(errc::invalid_argument, "grid resolution must be >= 100 per axis");
  if (!(hi > lo)) throw error(errc::invalid_argument, "grid range must satisfy lo < hi");
  const std::size_t k = inst.K();
  if (y.size() != k) throw error(errc::shape_mismatch, "y must have length K");
  double points = std::pow(static_cast<double>(resolution), static_cast<double>(k));
  if (points > 5e8) throw error(errc::invalid_argument, "grid too large");

  const double step = (hi - lo) / static_cast<double>(resolution - 1);
  std::vector<std::size_t> idx(k, 0);
  std::vector<double> x(k, lo);
  GridResult best;
  while (true) {
    for (std::size_t i = 0; i < k; ++i) x[i] = lo + step * static_cast<double>(idx[i]);
    const double v = penalized_cost(inst, y, x);
    if (v < best.cost) {
      best.cost = v;
      best.x = x;
    }
    std::size_t i = k;
    while (i-- > 0) {
      if (++idx[i] < resolution) break;
      idx[i] = 0;
    }
    if (i == static_cast<std::size_t>(-1)) break;
  }
  return best;
}

}  // namespace hqa
