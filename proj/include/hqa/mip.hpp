#pragma once

// Production-planning mixed-integer program and its encoding onto qubits
// (investment decisions y_i) and resonators (production quantities x_i).
//
//   cost(y, x) = sum (c_i - c~_i y_i) x_i + sum d_i x_i^2 + sum b_i y_i
//              + penalty * (sum x_i - A)^2
//
// with x_i -> (a_i + a_i^dag)/2, x_i^2 -> a_i^dag a_i, y_i -> (1 + sigma_z)/2.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hqa/hilbert.hpp"
#include "hqa/model.hpp"

namespace hqa {

using BinaryVector = std::vector<int>;

struct MipInstance {
  double A = 0.0;                // required total production
  std::vector<double> b;         // investment costs
  std::vector<double> c;         // linear unit costs
  std::vector<double> c_tilde;   // unit cost reduction when invested
  std::vector<double> d;         // quadratic cost coefficients
  double penalty = 1.0;          // weight of the relaxed equality constraint

  std::size_t K() const noexcept { return d.size(); }

  /// The penalty weight must be positive for the oracle; the Hamiltonian
  /// itself is well defined at zero, which encode() allows.
  void validate(bool require_positive_penalty = true) const {
    const std::size_t k = K();
    if (k == 0) throw error(errc::invalid_argument, "instance needs at least one production line");
    if (b.size() != k || c.size() != k || c_tilde.size() != k)
      throw error(errc::shape_mismatch, "b, c, c_tilde and d must all have length K=" +
                                            std::to_string(k));
    for (std::size_t i = 0; i < k; ++i)
      if (!(d[i] > 0.0))
        throw error(errc::invalid_argument, "d[" + std::to_string(i) + "] must be > 0");
    if (require_positive_penalty ? !(penalty > 0.0) : !(penalty >= 0.0))
      throw error(errc::invalid_argument, require_positive_penalty ? "penalty weight must be > 0"
                                                                   : "penalty weight must be >= 0");
    auto finite = [](const std::vector<double>& v) {
      for (double x : v)
        if (!std::isfinite(x)) return false;
      return true;
    };
    if (!finite(b) || !finite(c) || !finite(c_tilde) || !finite(d) || !std::isfinite(A))
      throw error(errc::invalid_argument, "instance has non-finite data");
  }

  /// The two-line instance used for the annealing demonstration.
  static MipInstance production_planning_k2() {
    return MipInstance{
        .A = 2.0,
        .b = {1.0, 2.0},
        .c = {2.1, 2.2},
        .c_tilde = {1.8, 2.0},
        .d = {3.3, 3.8},
        .penalty = 15.0,
    };
  }
};

/// Transverse-field strengths B_i (applied as B_i/2 sigma_x) and resonator
/// frequencies for the driver Hamiltonian.
struct DriverParameters {
  std::vector<double> B;
  std::vector<double> omega;
};

inline double penalized_cost(const MipInstance& inst, std::span<const int> y,
                             std::span<const double> x) {
  const std::size_t k = inst.K();
  if (y.size() != k || x.size() != k)
    throw error(errc::shape_mismatch, "y and x must have length K=" + std::to_string(k));
  double cost = 0.0, total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    cost += (inst.c[i] - inst.c_tilde[i] * y[i]) * x[i] + inst.d[i] * x[i] * x[i] + inst.b[i] * y[i];
    total += x[i];
  }
  return cost + inst.penalty * (total - inst.A) * (total - inst.A);
}

struct MipEncoding {
  MipInstance instance;
  DriverParameters driver;

  // Everything in H_P except the penalty square and the constant sum b_i/2
  // fits the generic hybrid form:
  //   h_i = b_i/2, g~_ii = -c~_i/4, lambda_i = (c_i - c~_i/2)/2, omega_c = d,
  // with B_i/2 and omega_i as the driver coefficients.
  HybridProblemSpec spec;

  std::size_t K() const noexcept { return instance.K(); }

  HilbertSpace space(std::size_t truncation) const {
    return HilbertSpace::qubits_and_resonators(K(), K(), truncation);
  }

  /// H_P assembled term by term from the operator replacements, with the
  /// penalty formed as the matrix square of (sum quadratures - A).
  LinOp problem_hamiltonian(const HilbertSpace& space) const {
    detail::require_spec_space(spec, space);
    const SiteOperators ops(space);
    const std::size_t k = K();
    const MipInstance& in = instance;

    LinOp H = LinOp::zero(space);
    LinOp constraint = -in.A * ops.id();
    for (std::size_t i = 0; i < k; ++i) {
      const LinOp x = ops.quadrature(i);
      const LinOp y = ops.occupation(i);
      H += (in.c[i] * ops.id() - in.c_tilde[i] * y) * x;
      H += in.d[i] * ops.n(i);
      H += in.b[i] * y;
      constraint += x;
    }
    H += in.penalty * (constraint * constraint);
    return H;
  }

  /// H_D = sum (B_i/2) sigma_x + omega_i a^dag a
  LinOp driver_hamiltonian(const HilbertSpace& space) const {
    return build_driver_hamiltonian(spec, space);
  }

  /// Constant dropped by the generic form: sum b_i / 2.
  double constant_offset() const {
    double s = 0.0;
    for (double v : instance.b) s += 0.5 * v;
    return s;
  }
};

inline MipEncoding encode(const MipInstance& inst, const DriverParameters& driver) {
  inst.validate(false);
  const std::size_t k = inst.K();
  if (driver.B.size() != k || driver.omega.size() != k)
    throw error(errc::shape_mismatch, "driver B and omega must have length K=" + std::to_string(k));

  HybridProblemSpec spec = HybridProblemSpec::zeros(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    spec.h[i] = 0.5 * inst.b[i];
    spec.g_tilde(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = -0.25 * inst.c_tilde[i];
    spec.lambda_drive[i] = 0.5 * (inst.c[i] - 0.5 * inst.c_tilde[i]);
    spec.omega_c[i] = inst.d[i];
    spec.B[i] = 0.5 * driver.B[i];
  }
  spec.omega_d = driver.omega;
  return MipEncoding{inst, driver, std::move(spec)};
}

struct DecodedSolution {
  std::vector<double> y;      // <(1 + sigma_z)/2>
  std::vector<double> x;      // <(a + a^dag)/2>
  BinaryVector y_rounded;     // threshold 0.5, ties (within 1e-9) go to 0
  double cost = 0.0;          // penalized cost at (y_rounded, x)
  bool nonnegative = true;    // all x_i >= 0
};

inline DecodedSolution decode(const MipInstance& inst, const StateVector& psi) {
  const HilbertSpace& space = psi.space();
  const std::size_t k = inst.K();
  if (space.qubit_count() != k || space.resonator_count() != k)
    throw error(errc::shape_mismatch, "state space does not match a K=" + std::to_string(k) +
                                          " encoding");
  const SiteOperators ops(space);
  DecodedSolution out;
  for (std::size_t i = 0; i < k; ++i) {
    out.y.push_back(expectation(ops.occupation(i), psi).value);
    out.x.push_back(expectation(ops.quadrature(i), psi).value);
    out.y_rounded.push_back(out.y.back() > 0.5 + 1e-9 ? 1 : 0);
    if (out.x.back() < 0.0) out.nonnegative = false;
  }
  out.cost = penalized_cost(inst, out.y_rounded, out.x);
  return out;
}

}  // namespace hqa
