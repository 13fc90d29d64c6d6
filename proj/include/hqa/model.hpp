#pragma once

// Hamiltonian builders for hybrid qubit/resonator annealing.
//
// hbar = 1. Every coefficient shares one energy unit and time is its inverse.
// The static problem form uses h_i sigma_z; the driven (lab-frame) forms use
// h_i/2 sigma_z. Each builder follows its own form literally.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hqa/hilbert.hpp"

namespace hqa {

struct HybridProblemSpec {
  std::size_t qubits = 0;
  std::size_t resonators = 0;

  std::vector<double> h;        // [L] longitudinal qubit fields
  Eigen::MatrixXd J;            // [L x L] qubit couplings, strictly upper triangular
  Eigen::MatrixXd g;            // [L x M] sigma_z a^dag a couplings
  Eigen::MatrixXd g_tilde;      // [L x M] sigma_z (a + a^dag) couplings
  std::vector<double> omega_c;  // [M] resonator frequencies
  std::vector<double> lambda_drive;  // [M] displacement drives
  Eigen::MatrixXd J_tilde;      // [M x M] resonator hopping, strictly upper triangular
  std::vector<double> B;        // [L] transverse fields
  std::vector<double> omega_d;  // [M] driver frequencies; empty means reuse omega_c
  std::optional<double> omega_mw;  // oscillating-field frequency (driven forms only)

  /// All-zero spec with every array shaped for L qubits and M resonators.
  static HybridProblemSpec zeros(std::size_t L, std::size_t M) {
    HybridProblemSpec s;
    s.qubits = L;
    s.resonators = M;
    s.h.assign(L, 0.0);
    s.J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(L));
    s.g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(M));
    s.g_tilde = s.g;
    s.omega_c.assign(M, 0.0);
    s.lambda_drive.assign(M, 0.0);
    s.J_tilde = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(M));
    s.B.assign(L, 0.0);
    return s;
  }

  const std::vector<double>& driver_frequencies() const {
    return omega_d.empty() ? omega_c : omega_d;
  }

  void validate() const {
    const auto L = static_cast<Eigen::Index>(qubits);
    const auto M = static_cast<Eigen::Index>(resonators);
    auto shape = [](const std::string& name, std::size_t got, std::size_t want) {
      if (got != want)
        throw error(errc::shape_mismatch, name + " has length " + std::to_string(got) +
                                              ", expected " + std::to_string(want));
    };
    auto mshape = [](const std::string& name, const Eigen::MatrixXd& m, Eigen::Index r,
                     Eigen::Index c) {
      if (m.rows() != r || m.cols() != c)
        throw error(errc::shape_mismatch, name + " is " + std::to_string(m.rows()) + "x" +
                                              std::to_string(m.cols()) + ", expected " +
                                              std::to_string(r) + "x" + std::to_string(c));
    };
    shape("h", h.size(), qubits);
    shape("omega_c", omega_c.size(), resonators);
    shape("lambda", lambda_drive.size(), resonators);
    shape("B", B.size(), qubits);
    if (!omega_d.empty()) shape("omega_d", omega_d.size(), resonators);
    mshape("J", J, L, L);
    mshape("g", g, L, M);
    mshape("g_tilde", g_tilde, L, M);
    mshape("J_tilde", J_tilde, M, M);

    auto upper = [](const std::string& name, const Eigen::MatrixXd& m) {
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j <= i; ++j)
          if (m(i, j) != 0.0)
            throw error(errc::shape_mismatch, name + " must be strictly upper triangular");
    };
    upper("J", J);
    upper("J_tilde", J_tilde);

    auto finite = [](const std::string& name, auto begin, auto end) {
      for (auto it = begin; it != end; ++it)
        if (!std::isfinite(*it)) throw error(errc::invalid_argument, name + " has non-finite entry");
    };
    finite("h", h.begin(), h.end());
    finite("omega_c", omega_c.begin(), omega_c.end());
    finite("lambda", lambda_drive.begin(), lambda_drive.end());
    finite("B", B.begin(), B.end());
    finite("omega_d", omega_d.begin(), omega_d.end());
    for (const auto* m : {&J, &g, &g_tilde, &J_tilde})
      if (!m->allFinite()) throw error(errc::invalid_argument, "coupling matrix has non-finite entry");
    if (omega_mw && !std::isfinite(*omega_mw))
      throw error(errc::invalid_argument, "omega_mw is not finite");
  }
};

/// Space matching a spec: L qubits then M resonators with a shared truncation.
inline HilbertSpace space_for(const HybridProblemSpec& spec, std::size_t truncation) {
  return HilbertSpace::qubits_and_resonators(spec.qubits, spec.resonators, truncation);
}

struct ScheduleSample {
  double t = 0.0;
  double s = 0.0;

  static ScheduleSample at(double t, double total_time) {
    if (!(total_time > 0.0)) throw error(errc::invalid_argument, "total time must be positive");
    return {t, t / total_time};
  }
};

/// Embedded single-site operators for a spec-shaped space, built once.
class SiteOperators {
 public:
  explicit SiteOperators(const HilbertSpace& space) : space_(space), id_(identity(space)) {
    for (std::size_t k = 0; k < space.qubit_count(); ++k) {
      sz_.push_back(embed(space, space.qubit_site(k), pauli(Axis::z)));
      sx_.push_back(embed(space, space.qubit_site(k), pauli(Axis::x)));
    }
    for (std::size_t m = 0; m < space.resonator_count(); ++m) {
      const std::size_t site = space.resonator_site(m);
      const std::size_t n = space.sites()[site].dim;
      a_.push_back(embed(space, site, annihilation(n)));
      ad_.push_back(embed(space, site, creation(n)));
      num_.push_back(embed(space, site, number(n)));
    }
  }

  const HilbertSpace& space() const noexcept { return space_; }
  const LinOp& id() const noexcept { return id_; }
  const LinOp& sz(std::size_t k) const { return sz_.at(k); }
  const LinOp& sx(std::size_t k) const { return sx_.at(k); }
  const LinOp& a(std::size_t m) const { return a_.at(m); }
  const LinOp& ad(std::size_t m) const { return ad_.at(m); }
  const LinOp& n(std::size_t m) const { return num_.at(m); }
  /// a + a^dag on resonator m.
  LinOp displacement(std::size_t m) const { return a_.at(m) + ad_.at(m); }
  /// (a + a^dag)/2 on resonator m.
  LinOp quadrature(std::size_t m) const { return 0.5 * displacement(m); }
  /// (1 + sigma_z)/2 on qubit k.
  LinOp occupation(std::size_t k) const { return 0.5 * (id_ + sz_.at(k)); }

 private:
  HilbertSpace space_;
  LinOp id_;
  std::vector<LinOp> sz_, sx_, a_, ad_, num_;
};

namespace detail {

inline void require_spec_space(const HybridProblemSpec& spec, const HilbertSpace& space) {
  spec.validate();
  if (space.qubit_count() != spec.qubits || space.resonator_count() != spec.resonators)
    throw error(errc::shape_mismatch,
                "space " + space.describe() + " does not match spec with " +
                    std::to_string(spec.qubits) + " qubits and " + std::to_string(spec.resonators) +
                    " resonators");
}

inline double require_drive(const HybridProblemSpec& spec) {
  if (!spec.omega_mw)
    throw error(errc::missing_drive_frequency, "oscillating-field frequency omega_mw is not set");
  return *spec.omega_mw;
}

inline LinOp hopping(const SiteOperators& ops, std::size_t i, std::size_t j) {
  return ops.a(i) * ops.ad(j) + ops.ad(i) * ops.a(j);
}

/// Terms shared by every problem form: J sigma_z sigma_z, g sigma_z a^dag a,
/// and the resonator hopping.
inline LinOp static_couplings(const HybridProblemSpec& spec, const SiteOperators& ops) {
  LinOp H = LinOp::zero(ops.space());
  for (std::size_t i = 0; i < spec.qubits; ++i)
    for (std::size_t j = i + 1; j < spec.qubits; ++j)
      if (double Jij = spec.J(i, j); Jij != 0.0) H += Jij * (ops.sz(i) * ops.sz(j));
  for (std::size_t i = 0; i < spec.qubits; ++i)
    for (std::size_t m = 0; m < spec.resonators; ++m)
      if (double gim = spec.g(i, m); gim != 0.0) H += gim * (ops.sz(i) * ops.n(m));
  for (std::size_t i = 0; i < spec.resonators; ++i)
    for (std::size_t j = i + 1; j < spec.resonators; ++j)
      if (double t = spec.J_tilde(i, j); t != 0.0) H += t * hopping(ops, i, j);
  return H;
}

/// sum g~ sigma_z (a + a^dag) + sum lambda (a + a^dag)
inline LinOp displacement_terms(const HybridProblemSpec& spec, const SiteOperators& ops) {
  LinOp H = LinOp::zero(ops.space());
  for (std::size_t i = 0; i < spec.qubits; ++i)
    for (std::size_t m = 0; m < spec.resonators; ++m)
      if (double gt = spec.g_tilde(i, m); gt != 0.0) H += gt * (ops.sz(i) * ops.displacement(m));
  for (std::size_t m = 0; m < spec.resonators; ++m)
    if (spec.lambda_drive[m] != 0.0) H += spec.lambda_drive[m] * ops.displacement(m);
  return H;
}

inline LinOp qubit_fields(const std::vector<double>& coeff, const SiteOperators& ops, Axis axis) {
  LinOp H = LinOp::zero(ops.space());
  for (std::size_t k = 0; k < coeff.size(); ++k)
    if (coeff[k] != 0.0) H += coeff[k] * (axis == Axis::z ? ops.sz(k) : ops.sx(k));
  return H;
}

inline LinOp resonator_energies(const std::vector<double>& freq, const SiteOperators& ops) {
  LinOp H = LinOp::zero(ops.space());
  for (std::size_t m = 0; m < freq.size(); ++m)
    if (freq[m] != 0.0) H += freq[m] * ops.n(m);
  return H;
}

template <class F>
std::vector<double> map_values(const std::vector<double>& v, F f) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = f(v[i]);
  return out;
}

}  // namespace detail

/// H_P = H_discrete + H_continuous + H_interaction.
inline LinOp build_problem_hamiltonian(const HybridProblemSpec& spec, const HilbertSpace& space) {
  detail::require_spec_space(spec, space);
  const SiteOperators ops(space);
  return detail::qubit_fields(spec.h, ops, Axis::z) + detail::static_couplings(spec, ops) +
         detail::displacement_terms(spec, ops) + detail::resonator_energies(spec.omega_c, ops);
}

/// H_D = sum omega a^dag a + sum B_j sigma_x^(j). Uses omega_d when set,
/// omega_c otherwise.
inline LinOp build_driver_hamiltonian(const HybridProblemSpec& spec, const HilbertSpace& space) {
  detail::require_spec_space(spec, space);
  const SiteOperators ops(space);
  return detail::resonator_energies(spec.driver_frequencies(), ops) +
         detail::qubit_fields(spec.B, ops, Axis::x);
}

/// (1 - s) H_D + s H_P
inline LinOp total_hamiltonian(const LinOp& driver, const LinOp& problem, ScheduleSample sample) {
  if (!(sample.s >= 0.0 && sample.s <= 1.0))
    throw error(errc::invalid_argument, "schedule fraction s=" + std::to_string(sample.s) +
                                            " outside [0, 1]");
  detail::require_same_space(driver.space(), problem.space(), "total_hamiltonian");
  if (sample.s == 0.0) return driver;
  if (sample.s == 1.0) return problem;
  return (1.0 - sample.s) * driver + sample.s * problem;
}

/// Lab-frame operators split as static + cos(omega t) * drive.
struct LabFrameParts {
  LinOp problem_static;
  LinOp problem_drive;
  LinOp driver_static;
  LinOp driver_drive;
  double omega = 0.0;
};

inline LabFrameParts lab_frame_parts(const HybridProblemSpec& spec, const HilbertSpace& space) {
  detail::require_spec_space(spec, space);
  const double omega = detail::require_drive(spec);
  const SiteOperators ops(space);
  const auto half_h = detail::map_values(spec.h, [](double v) { return 0.5 * v; });
  const LinOp qubit_z = detail::qubit_fields(half_h, ops, Axis::z);
  const LinOp cavity = detail::resonator_energies(spec.omega_c, ops);
  return LabFrameParts{
      .problem_static = qubit_z + detail::static_couplings(spec, ops) + cavity,
      .problem_drive = detail::displacement_terms(spec, ops),
      .driver_static = qubit_z + cavity,
      .driver_drive = detail::qubit_fields(spec.B, ops, Axis::x),
      .omega = omega,
  };
}

struct LabFrameHamiltonian {
  LinOp problem;  // H'_P(t)
  LinOp driver;   // H'_D(t)
  LinOp total;    // (1 - t/T) H'_D(t) + (t/T) H'_P(t)
};

inline LabFrameHamiltonian build_lab_frame(const HybridProblemSpec& spec, const HilbertSpace& space,
                                           ScheduleSample sample) {
  const LabFrameParts parts = lab_frame_parts(spec, space);
  const double c = std::cos(parts.omega * sample.t);
  LinOp problem = parts.problem_static + c * parts.problem_drive;
  LinOp driver = parts.driver_static + c * parts.driver_drive;
  LinOp total = total_hamiltonian(driver, problem, sample);
  return {std::move(problem), std::move(driver), std::move(total)};
}

struct EffectiveHamiltonians {
  LinOp problem;
  LinOp driver;
};

/// Rotating-frame Hamiltonians after the rotating wave approximation:
/// detuned qubit and cavity energies, halved displacement couplings and
/// halved transverse field.
inline EffectiveHamiltonians build_effective(const HybridProblemSpec& spec,
                                             const HilbertSpace& space) {
  detail::require_spec_space(spec, space);
  const double omega = detail::require_drive(spec);
  const SiteOperators ops(space);

  const auto qubit_detuning = detail::map_values(spec.h, [&](double v) { return 0.5 * (v - omega); });
  const auto cavity_detuning = detail::map_values(spec.omega_c, [&](double v) { return v - omega; });

  HybridProblemSpec halved = spec;
  halved.g_tilde *= 0.5;
  for (auto& l : halved.lambda_drive) l *= 0.5;
  const auto half_B = detail::map_values(spec.B, [](double v) { return 0.5 * v; });

  const LinOp qubit_z = detail::qubit_fields(qubit_detuning, ops, Axis::z);
  const LinOp cavity = detail::resonator_energies(cavity_detuning, ops);
  return {
      qubit_z + detail::static_couplings(spec, ops) + detail::displacement_terms(halved, ops) +
          cavity,
      qubit_z + detail::qubit_fields(half_B, ops, Axis::x) + cavity,
  };
}

/// U(t) = exp(i omega t (sum sigma_z/2 + sum a^dag a)). The generator is
/// diagonal in the product basis, so U is assembled entry by entry.
inline LinOp rotating_transform(const HybridProblemSpec& spec, const HilbertSpace& space, double t) {
  detail::require_spec_space(spec, space);
  const double omega = detail::require_drive(spec);
  const auto n = static_cast<Eigen::Index>(space.dim());
  Matrix U = Matrix::Zero(n, n);

  std::vector<std::size_t> digits(space.site_count(), 0);
  for (Eigen::Index idx = 0; idx < n; ++idx) {
    double weight = 0.0;
    for (std::size_t i = 0; i < space.site_count(); ++i) {
      if (space.sites()[i].kind == Site::Kind::qubit)
        weight += digits[i] == 0 ? 0.5 : -0.5;
      else
        weight += static_cast<double>(digits[i]);
    }
    const double phase = omega * t * weight;
    U(idx, idx) = cplx(std::cos(phase), std::sin(phase));
    // advance the mixed-radix counter, last site fastest
    for (std::size_t i = space.site_count(); i-- > 0;) {
      if (++digits[i] < space.sites()[i].dim) break;
      digits[i] = 0;
    }
  }
  return LinOp(space, std::move(U));
}

/// Smallest t' >= 0 with omega t' = 2 n pi closest to t.
inline double nearest_stroboscopic_time(double omega, double t) {
  const double period = 2.0 * std::numbers::pi / omega;
  return std::round(t / period) * period;
}

}  // namespace hqa
