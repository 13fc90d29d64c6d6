#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hqa/hilbert.hpp"
#include "hqa/integrator.hpp"
#include "hqa/model.hpp"

namespace hqa {

// ---------------------------------------------------------------------------
// Exact diagonalization

struct EigenPairs {
  Eigen::VectorXd values;            // ascending
  std::vector<StateVector> vectors;  // unit norm, largest component real positive
};

namespace detail {

inline double hermitian_tolerance(const LinOp& H) { return 1e-10 * std::max(1.0, max_abs(H)); }

inline void fix_phase(Vector& v) {
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  const cplx p = v(arg);
  if (std::abs(p) > 0.0) v *= std::conj(p) / std::abs(p);
}

}  // namespace detail

/// Lowest k eigenpairs of a Hermitian operator (all of them when k == 0).
inline EigenPairs spectrum(const LinOp& H, std::size_t k = 0) {
  if (H.hermiticity_error() > detail::hermitian_tolerance(H))
    throw error(errc::not_hermitian, "spectrum: operator is not Hermitian (max |H - H^dag| = " +
                                         std::to_string(H.hermiticity_error()) + ")");
  const auto n = static_cast<Eigen::Index>(H.dim());
  const Eigen::Index count = k == 0 ? n : std::min<Eigen::Index>(n, static_cast<Eigen::Index>(k));

  EigenPairs out;
  Matrix vecs;
  if (H.is_real()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.matrix().real());
    out.values = es.eigenvalues().head(count);
    vecs = es.eigenvectors().leftCols(count).cast<cplx>();
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(H.matrix());
    out.values = es.eigenvalues().head(count);
    vecs = es.eigenvectors().leftCols(count);
  }
  for (Eigen::Index j = 0; j < count; ++j) {
    Vector v = vecs.col(j);
    v.normalize();
    detail::fix_phase(v);
    out.vectors.emplace_back(H.space(), std::move(v));
  }
  return out;
}

struct GroundState {
  double energy = 0.0;
  StateVector state;
};

inline GroundState ground_state(const LinOp& H) {
  EigenPairs p = spectrum(H, 1);
  return {p.values(0), std::move(p.vectors.front())};
}

// ---------------------------------------------------------------------------
// Time-dependent Hamiltonians H(t) = sum_k f_k(t) O_k

struct HamiltonianTerm {
  std::function<double(double)> coefficient;
  LinOp op;
};

class TimeDependentHamiltonian {
 public:
  TimeDependentHamiltonian(HilbertSpace space, std::vector<HamiltonianTerm> terms)
      : space_(std::move(space)), terms_(std::move(terms)) {
    if (terms_.empty()) throw error(errc::invalid_argument, "Hamiltonian needs at least one term");
    for (const auto& term : terms_) detail::require_same_space(space_, term.op.space(), "H(t)");
    build_stack();
  }

  const HilbertSpace& space() const noexcept { return space_; }
  std::size_t term_count() const noexcept { return terms_.size(); }

  LinOp at(double t) const {
    LinOp H = LinOp::zero(space_);
    for (const auto& term : terms_) H += term.coefficient(t) * term.op;
    return H;
  }

  /// out = H(t) psi, one sparse product per term.
  void apply(double t, const Vector& psi, Vector& out) const {
    const cplx* x = psi.data();
    cplx* y = out.data();
    const auto rows = space_.dim();
    std::fill(y, y + rows, cplx(0.0));
    for (std::size_t k = 0; k < terms_.size(); ++k) {
      const double c = terms_[k].coefficient(t);
      if (c == 0.0) continue;
      const SparseTerm& m = sparse_[k];
      if (m.real) {
        const double* vals = m.real_values.data();
        for (std::size_t r = 0; r < rows; ++r) {
          double re = 0.0, im = 0.0;
          for (std::size_t e = m.row_ptr[r]; e < m.row_ptr[r + 1]; ++e) {
            re += vals[e] * x[m.cols[e]].real();
            im += vals[e] * x[m.cols[e]].imag();
          }
          y[r] += cplx(c * re, c * im);
        }
      } else {
        const cplx* vals = m.complex_values.data();
        for (std::size_t r = 0; r < rows; ++r) {
          cplx acc = 0.0;
          for (std::size_t e = m.row_ptr[r]; e < m.row_ptr[r + 1]; ++e) acc += vals[e] * x[m.cols[e]];
          y[r] += c * acc;
        }
      }
    }
  }

  std::size_t nonzeros() const noexcept {
    std::size_t n = 0;
    for (const auto& m : sparse_) n += m.cols.size();
    return n;
  }

 private:
  struct SparseTerm {
    bool real = true;
    std::vector<std::size_t> row_ptr, cols;
    std::vector<double> real_values;
    std::vector<cplx> complex_values;
  };

  void build_stack() {
    const auto n = static_cast<Eigen::Index>(space_.dim());
    for (const auto& t : terms_) {
      SparseTerm m;
      m.real = t.op.is_real();
      m.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
      for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < n; ++c) {
          const cplx v = t.op.matrix()(r, c);
          if (v == cplx(0.0)) continue;
          m.cols.push_back(static_cast<std::size_t>(c));
          if (m.real)
            m.real_values.push_back(v.real());
          else
            m.complex_values.push_back(v);
        }
        m.row_ptr[static_cast<std::size_t>(r) + 1] = m.cols.size();
      }
      sparse_.push_back(std::move(m));
    }
  }

  HilbertSpace space_;
  std::vector<HamiltonianTerm> terms_;
  std::vector<SparseTerm> sparse_;
};

/// H(t) = (1 - t/T) H_D + (t/T) H_P
inline TimeDependentHamiltonian anneal_schedule(const LinOp& driver, const LinOp& problem,
                                                double total_time) {
  if (!(total_time > 0.0)) throw error(errc::invalid_argument, "total time must be positive");
  return TimeDependentHamiltonian(
      driver.space(), {{[T = total_time](double t) { return 1.0 - t / T; }, driver},
                       {[T = total_time](double t) { return t / T; }, problem}});
}

/// H'(t) = (1 - t/T) H'_D(t) + (t/T) H'_P(t) with the cos(omega t) drives.
inline TimeDependentHamiltonian lab_frame_schedule(const HybridProblemSpec& spec,
                                                   const HilbertSpace& space, double total_time) {
  if (!(total_time > 0.0)) throw error(errc::invalid_argument, "total time must be positive");
  LabFrameParts p = lab_frame_parts(spec, space);
  const double T = total_time, w = p.omega;
  return TimeDependentHamiltonian(
      space, {
                 {[T](double t) { return 1.0 - t / T; }, std::move(p.driver_static)},
                 {[T, w](double t) { return (1.0 - t / T) * std::cos(w * t); },
                  std::move(p.driver_drive)},
                 {[T](double t) { return t / T; }, std::move(p.problem_static)},
                 {[T, w](double t) { return t / T * std::cos(w * t); }, std::move(p.problem_drive)},
             });
}

/// H^eff(t) = (1 - t/T) H_D^eff + (t/T) H_P^eff
inline TimeDependentHamiltonian effective_schedule(const HybridProblemSpec& spec,
                                                   const HilbertSpace& space, double total_time) {
  const EffectiveHamiltonians eff = build_effective(spec, space);
  return anneal_schedule(eff.driver, eff.problem, total_time);
}

// ---------------------------------------------------------------------------
// Evolution

enum class HamiltonianSource { standard, lab_frame, effective };

struct AnnealRun {
  double total_time = 1.0;
  HamiltonianSource source = HamiltonianSource::standard;
  std::vector<double> sample_times;
  double integrator_tol = 1e-8;
  std::size_t max_steps = 50'000'000;
  bool renormalize = false;
  bool keep_states = true;

  void validate() const {
    if (!(total_time > 0.0)) throw error(errc::invalid_argument, "total time must be positive");
    if (!(integrator_tol > 0.0)) throw error(errc::invalid_argument, "integrator tolerance must be > 0");
    if (sample_times.empty()) throw error(errc::invalid_argument, "need at least one sample time");
    const double slack = 1e-12 * total_time;
    for (std::size_t i = 0; i < sample_times.size(); ++i) {
      if (sample_times[i] < -slack || sample_times[i] > total_time + slack)
        throw error(errc::invalid_argument, "sample time outside [0, T]");
      if (i && !(sample_times[i] > sample_times[i - 1]))
        throw error(errc::invalid_argument, "sample times must be strictly increasing");
    }
  }
};

/// count points uniformly spaced on [0, T], both ends included.
inline std::vector<double> uniform_samples(double total_time, std::size_t count) {
  if (count < 2) throw error(errc::invalid_argument, "need at least two samples");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = total_time * static_cast<double>(i) / static_cast<double>(count - 1);
  out.back() = total_time;
  return out;
}

/// t_n = 2 pi n / omega for n = 0, stride, 2 stride, ... up to T. The last
/// stroboscopic time not exceeding T is always included.
inline std::vector<double> stroboscopic_samples(double omega, double total_time,
                                                std::size_t stride = 1) {
  if (stride == 0) throw error(errc::invalid_argument, "stride must be >= 1");
  const double period = 2.0 * std::numbers::pi / omega;
  const auto last = static_cast<std::size_t>(std::floor(total_time / period * (1.0 + 1e-12)));
  std::vector<double> out;
  for (std::size_t n = 0; n <= last; n += stride) out.push_back(period * static_cast<double>(n));
  if (out.back() != period * static_cast<double>(last)) out.push_back(period * static_cast<double>(last));
  if (out.back() > total_time) out.back() = total_time;
  return out;
}

struct NamedObservable {
  std::string name;
  LinOp op;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<StateVector> states;  // empty unless AnnealRun::keep_states
  std::map<std::string, std::vector<double>> observables;  // always includes "norm"
  IntegratorStats stats;
  StateVector final_state{HilbertSpace{}, Vector::Ones(1)};
};

inline Trajectory evolve(const TimeDependentHamiltonian& H, const AnnealRun& run,
                         const StateVector& psi0,
                         const std::vector<NamedObservable>& observables = {}) {
  run.validate();
  detail::require_same_space(H.space(), psi0.space(), "evolve");
  if (std::abs(psi0.norm() - 1.0) > 1e-9)
    throw error(errc::invalid_argument, "initial state must be normalized");
  for (const auto& o : observables) detail::require_same_space(H.space(), o.op.space(), o.name.c_str());

  Trajectory traj;
  for (const auto& o : observables) traj.observables[o.name].reserve(run.sample_times.size());
  traj.observables["norm"].reserve(run.sample_times.size());

  std::vector<double> times;
  times.reserve(run.sample_times.size() + 1);
  if (run.sample_times.front() > 0.0) times.push_back(0.0);
  times.insert(times.end(), run.sample_times.begin(), run.sample_times.end());
  const std::size_t skip = times.size() - run.sample_times.size();

  Vector y = psi0.amplitudes();
  Vector scratch(y.size());
  auto rhs = [&H](double t, const Vector& psi, Vector& dpsi) {
    H.apply(t, psi, dpsi);
    dpsi *= cplx(0.0, -1.0);
  };
  auto on_sample = [&](std::size_t idx, double t, const Vector& psi) {
    if (idx < skip) return;
    traj.times.push_back(t);
    const double nrm = psi.norm();
    traj.observables["norm"].push_back(nrm);
    for (const auto& o : observables) {
      const cplx v = psi.dot(o.op.matrix() * psi) / (nrm * nrm);
      traj.observables[o.name].push_back(v.real());
    }
    if (run.keep_states) traj.states.emplace_back(H.space(), psi);
  };

  IntegratorOptions opt;
  opt.tol = run.integrator_tol;
  opt.max_steps = run.max_steps;
  opt.renormalize = run.renormalize;
  traj.stats = integrate_dp5(rhs, y, times, opt, on_sample);
  traj.final_state = StateVector(H.space(), std::move(y));
  return traj;
}

// ---------------------------------------------------------------------------
// Adiabaticity and spectra along the schedule

/// |<E1(t)| dH/dt |E0(t)>| / (E1 - E0)^2 for H(t) = (1 - t/T) H_D + (t/T) H_P.
/// A degenerate first excited level contributes the norm of the projection of
/// dH/dt |E0> onto the whole level, which keeps the value basis-independent.
inline double adiabaticity_metric(const LinOp& driver, const LinOp& problem, double total_time,
                                  double t) {
  if (!(total_time > 0.0)) throw error(errc::invalid_argument, "total time must be positive");
  const ScheduleSample sample = ScheduleSample::at(t, total_time);
  const LinOp H = total_hamiltonian(driver, problem, sample);
  const EigenPairs p = spectrum(H);
  const double gap = p.values(1) - p.values(0);
  if (gap < 1e-12)
    throw error(errc::degenerate_gap, "ground level is degenerate at t=" + std::to_string(t));

  const Vector dH0 = ((problem.matrix() - driver.matrix()) / total_time) * p.vectors[0].amplitudes();
  const double level_tol = 1e-9 * std::max(1.0, std::abs(p.values(1)));
  double proj2 = 0.0;
  for (Eigen::Index j = 1; j < p.values.size() && p.values(j) - p.values(1) <= level_tol; ++j)
    proj2 += std::norm(p.vectors[static_cast<std::size_t>(j)].amplitudes().dot(dH0));
  return std::sqrt(proj2) / (gap * gap);
}

struct EnergyDiagram {
  std::vector<double> s;
  std::vector<std::vector<double>> energies;  // [grid point][level]
  double min_gap = std::numeric_limits<double>::infinity();
  double min_gap_s = 0.0;
};

inline EnergyDiagram energy_diagram(const std::function<LinOp(double)>& hamiltonian_at,
                                    const std::vector<double>& s_grid, std::size_t k) {
  if (k < 2) throw error(errc::invalid_argument, "energy diagram needs at least two levels");
  EnergyDiagram out;
  for (double s : s_grid) {
    const EigenPairs p = spectrum(hamiltonian_at(s), k);
    std::vector<double> row(p.values.data(), p.values.data() + p.values.size());
    const double gap = row[1] - row[0];
    if (gap < out.min_gap) {
      out.min_gap = gap;
      out.min_gap_s = s;
    }
    out.s.push_back(s);
    out.energies.push_back(std::move(row));
  }
  return out;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
  if (count < 2) throw error(errc::invalid_argument, "linspace needs at least two points");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  out.back() = hi;
  return out;
}

// ---------------------------------------------------------------------------
// Lab frame vs rotating frame

struct StroboscopicOptions {
  double lab_tol = 1e-10;
  double effective_tol = 1e-10;
  std::size_t stride = 1;  // sample every stride-th drive period
  std::size_t max_steps = 200'000'000;
};

struct StroboscopicComparison {
  double total_time = 0.0;  // T adjusted to a whole number of drive periods
  std::vector<double> times;
  std::map<std::string, std::vector<double>> lab;        // psi(t) under H'(t)
  std::map<std::string, std::vector<double>> effective;  // phi(t) under H^eff(t)
  std::map<std::string, std::vector<double>> difference; // lab - effective
  double ground_energy = 0.0;        // E0 of H_P^eff
  double spectrum_width = 0.0;       // E_max - E_min of H_P^eff
  IntegratorStats lab_stats, effective_stats;
  StateVector lab_final{HilbertSpace{}, Vector::Ones(1)};
  StateVector effective_final{HilbertSpace{}, Vector::Ones(1)};
};

/// Observables compared between frames: H_P^eff, sigma_z per qubit and
/// a + a^dag per resonator.
inline std::vector<NamedObservable> frame_observables(const HybridProblemSpec& spec,
                                                      const HilbertSpace& space,
                                                      const LinOp& effective_problem) {
  const SiteOperators ops(space);
  std::vector<NamedObservable> out{{"HP_eff", effective_problem}};
  for (std::size_t k = 0; k < spec.qubits; ++k)
    out.push_back({"sigma_z_" + std::to_string(k + 1), ops.sz(k)});
  for (std::size_t m = 0; m < spec.resonators; ++m)
    out.push_back({"a_plus_adag_" + std::to_string(m + 1), ops.displacement(m)});
  return out;
}

inline StroboscopicComparison stroboscopic_compare(const HybridProblemSpec& spec,
                                                   const HilbertSpace& space, double total_time,
                                                   const StroboscopicOptions& opt = {}) {
  const double omega = detail::require_drive(spec);
  StroboscopicComparison out;
  out.total_time = nearest_stroboscopic_time(omega, total_time);
  if (!(out.total_time > 0.0))
    throw error(errc::invalid_argument, "total time shorter than half a drive period");

  const EffectiveHamiltonians eff = build_effective(spec, space);
  const EigenPairs problem_spec = spectrum(eff.problem);
  out.ground_energy = problem_spec.values(0);
  out.spectrum_width = problem_spec.values(problem_spec.values.size() - 1) - problem_spec.values(0);
  const StateVector psi0 = ground_state(eff.driver).state;

  AnnealRun run;
  run.total_time = out.total_time;
  run.sample_times = stroboscopic_samples(omega, out.total_time, opt.stride);
  run.max_steps = opt.max_steps;
  run.keep_states = false;
  const auto observables = frame_observables(spec, space, eff.problem);

  run.source = HamiltonianSource::lab_frame;
  run.integrator_tol = opt.lab_tol;
  Trajectory lab = evolve(lab_frame_schedule(spec, space, out.total_time), run, psi0, observables);

  run.source = HamiltonianSource::effective;
  run.integrator_tol = opt.effective_tol;
  Trajectory rot = evolve(anneal_schedule(eff.driver, eff.problem, out.total_time), run, psi0, observables);

  out.times = lab.times;
  out.lab = std::move(lab.observables);
  out.effective = std::move(rot.observables);
  for (const auto& [name, series] : out.lab) {
    const auto& other = out.effective.at(name);
    std::vector<double> d(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) d[i] = series[i] - other[i];
    out.difference[name] = std::move(d);
  }
  out.lab_stats = lab.stats;
  out.effective_stats = rot.stats;
  out.lab_final = std::move(lab.final_state);
  out.effective_final = std::move(rot.final_state);
  return out;
}

}  // namespace hqa
