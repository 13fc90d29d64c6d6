#pragma once

// Experiment configs, presets, runners and their artifacts.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "hqa/config.hpp"
#include "hqa/dynamics.hpp"
#include "hqa/mip.hpp"
#include "hqa/model.hpp"
#include "hqa/oracle.hpp"
#include "hqa/report.hpp"

namespace hqa {

using json = nlohmann::ordered_json;

enum class Mode { mip_anneal, appendix_lab_vs_eff, energy_diagram, oracle_only };

inline std::string mode_name(Mode m) {
  switch (m) {
    case Mode::mip_anneal: return "mip-anneal";
    case Mode::appendix_lab_vs_eff: return "appendix-lab-vs-eff";
    case Mode::energy_diagram: return "energy-diagram";
    case Mode::oracle_only: return "oracle-only";
  }
  return "?";
}

inline Mode parse_mode(const std::string& s, std::size_t line = 0) {
  for (Mode m : {Mode::mip_anneal, Mode::appendix_lab_vs_eff, Mode::energy_diagram, Mode::oracle_only})
    if (mode_name(m) == s) return m;
  throw config_error("unknown mode '" + s +
                         "' (expected mip-anneal, appendix-lab-vs-eff, energy-diagram or oracle-only)",
                     line, "mode");
}

struct ExperimentConfig {
  std::string name = "experiment";
  Mode mode = Mode::mip_anneal;
  std::optional<MipInstance> mip;
  DriverParameters driver;
  std::optional<HybridProblemSpec> hybrid;
  std::size_t truncation = 8;
  double total_time = 1.0;
  double tol = 1e-8;
  std::size_t samples = 400;             // uniform trajectory samples (mip-anneal)
  std::size_t stride = 1;                // stroboscopic sampling every stride-th period
  std::size_t continuous_samples = 0;    // extra uniform-grid lab/effective run, 0 = off
  std::size_t diagram_points = 200;      // s-grid for energy diagrams
  std::size_t diagram_levels = 4;
  std::size_t adiabaticity_points = 0;   // s-grid for the adiabaticity metric, 0 = off
  std::size_t max_steps = 200'000'000;
  bool plots = true;
  std::optional<std::vector<double>> reference_y, reference_x;
  std::string output;                    // empty = default directory

  void validate() const {
    if (name.empty()) throw config_error("name must not be empty", 0, "name");
    if (truncation < 2) throw config_error("truncation must be >= 2", 0, "truncation");
    if (!(total_time > 0.0) || !std::isfinite(total_time)) throw config_error("T must be > 0", 0, "T");
    if (!(tol > 0.0)) throw config_error("tol must be > 0", 0, "tol");
    if (samples < 2) throw config_error("samples must be >= 2", 0, "samples");
    if (stride < 1) throw config_error("stride must be >= 1", 0, "stride");
    if (diagram_points < 2) throw config_error("diagram points must be >= 2", 0, "diagram.points");
    if (diagram_levels < 2) throw config_error("diagram levels must be >= 2", 0, "diagram.levels");
    if (continuous_samples == 1)
      throw config_error("continuous_samples must be 0 or >= 2", 0, "continuous_samples");

    const bool needs_mip = mode == Mode::mip_anneal || mode == Mode::oracle_only;
    if (needs_mip && !mip) throw config_error(mode_name(mode) + " needs a [mip] instance", 0, "mip");
    if (mode == Mode::appendix_lab_vs_eff && !hybrid)
      throw config_error("appendix-lab-vs-eff needs a [hybrid] spec", 0, "hybrid");
    if (mode == Mode::energy_diagram && !mip && !hybrid)
      throw config_error("energy-diagram needs a [mip] instance or a [hybrid] spec", 0, "mip");

    if (mip) {
      try {
        mip->validate();
      } catch (const error& e) {
        throw config_error(e.what(), 0, "mip");
      }
      const std::size_t k = mip->K();
      if (mode == Mode::mip_anneal || (mode == Mode::energy_diagram && !hybrid)) {
        if (driver.B.size() != k) throw config_error("driver B must have length K", 0, "driver.B");
        if (driver.omega.size() != k)
          throw config_error("driver omega must have length K", 0, "driver.omega");
      }
      if (reference_y && reference_y->size() != k)
        throw config_error("reference y must have length K", 0, "reference.y");
      if (reference_x && reference_x->size() != k)
        throw config_error("reference x must have length K", 0, "reference.x");
    }
    if (hybrid) {
      try {
        hybrid->validate();
      } catch (const error& e) {
        throw config_error(e.what(), 0, "hybrid");
      }
      if (mode == Mode::appendix_lab_vs_eff && !hybrid->omega_mw)
        throw config_error("appendix-lab-vs-eff needs hybrid.omega_mw", 0, "hybrid.omega_mw");
    }
  }
};

// ---------------------------------------------------------------------------
// Presets

inline std::vector<std::string> preset_names() { return {"paper-fig1-3", "paper-appendix"}; }

inline ExperimentConfig preset(const std::string& name) {
  ExperimentConfig cfg;
  cfg.name = name;
  if (name == "paper-fig1-3") {
    cfg.mode = Mode::mip_anneal;
    cfg.mip = MipInstance::production_planning_k2();
    cfg.driver = DriverParameters{{1.0, 1.0}, {1.0, 1.0}};
    cfg.truncation = 8;
    cfg.total_time = 4000.0;
    cfg.tol = 1e-8;
    cfg.samples = 400;
    cfg.adiabaticity_points = 200;
    cfg.reference_y = std::vector<double>{1.0, 0.0};
    cfg.reference_x = std::vector<double>{1.07, 0.69};
    return cfg;
  }
  if (name == "paper-appendix") {
    HybridProblemSpec s = HybridProblemSpec::zeros(1, 1);
    s.h = {153.7};
    s.omega_c = {154.1};
    s.B = {0.55};
    s.lambda_drive = {0.30};
    s.g(0, 0) = 0.15;
    s.g_tilde(0, 0) = 0.25;
    s.omega_mw = 153.9;
    cfg.mode = Mode::appendix_lab_vs_eff;
    cfg.hybrid = std::move(s);
    cfg.truncation = 10;
    cfg.total_time = 408.2;
    cfg.tol = 1e-10;
    return cfg;
  }
  throw config_error("unknown preset '" + name + "'", 0, "preset");
}

// ---------------------------------------------------------------------------
// Config files

namespace detail {

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys{
      "base", "name", "mode", "truncation", "T", "tol", "samples", "stride", "continuous_samples",
      "max_steps", "plots", "output", "adiabaticity_points",
      "diagram.points", "diagram.levels",
      "mip.A", "mip.b", "mip.c", "mip.c_tilde", "mip.d", "mip.penalty",
      "driver.B", "driver.omega",
      "reference.y", "reference.x",
      "hybrid.qubits", "hybrid.resonators", "hybrid.h", "hybrid.J", "hybrid.g", "hybrid.g_tilde",
      "hybrid.omega_c", "hybrid.lambda", "hybrid.J_tilde", "hybrid.B", "hybrid.omega_d",
      "hybrid.omega_mw"};
  return keys;
}

inline Eigen::MatrixXd to_matrix(const ConfigDocument& doc, const std::string& key,
                                 std::size_t rows, std::size_t cols) {
  const auto m = doc.matrix(key);
  const std::size_t line = doc.line_of(key);
  if (m.size() != rows)
    throw config_error("expected " + std::to_string(rows) + " rows", line, key);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (m[r].size() != cols)
      throw config_error("expected " + std::to_string(cols) + " columns in row " + std::to_string(r + 1),
                         line, key);
    for (std::size_t c = 0; c < cols; ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m[r][c];
  }
  return out;
}

inline std::vector<double> sized_vector(const ConfigDocument& doc, const std::string& key,
                                        std::size_t n) {
  auto v = doc.vector(key);
  if (v.size() != n)
    throw config_error("expected " + std::to_string(n) + " entries", doc.line_of(key), key);
  return v;
}

inline bool any_key_in(const ConfigDocument& doc, const std::string& section) {
  for (const auto& [k, e] : doc.entries())
    if (k.rfind(section + ".", 0) == 0) return true;
  return false;
}

}  // namespace detail

/// Parse a config text. A `base = "<preset>"` key starts from that preset.
inline ExperimentConfig parse_experiment(std::string_view text) {
  const ConfigDocument doc = ConfigDocument::parse(text);
  doc.reject_unknown(detail::known_config_keys());

  ExperimentConfig cfg = doc.has("base") ? preset(doc.string("base")) : ExperimentConfig{};
  if (doc.has("name")) cfg.name = doc.string("name");
  if (doc.has("mode")) cfg.mode = parse_mode(doc.string("mode"), doc.line_of("mode"));
  if (doc.has("truncation")) cfg.truncation = doc.count("truncation");
  if (doc.has("T")) cfg.total_time = doc.number("T");
  if (doc.has("tol")) cfg.tol = doc.number("tol");
  if (doc.has("samples")) cfg.samples = doc.count("samples");
  if (doc.has("stride")) cfg.stride = doc.count("stride");
  if (doc.has("continuous_samples")) cfg.continuous_samples = doc.count("continuous_samples");
  if (doc.has("max_steps")) cfg.max_steps = doc.count("max_steps");
  if (doc.has("plots")) cfg.plots = doc.boolean("plots");
  if (doc.has("output")) cfg.output = doc.string("output");
  if (doc.has("adiabaticity_points")) cfg.adiabaticity_points = doc.count("adiabaticity_points");
  if (doc.has("diagram.points")) cfg.diagram_points = doc.count("diagram.points");
  if (doc.has("diagram.levels")) cfg.diagram_levels = doc.count("diagram.levels");

  if (detail::any_key_in(doc, "mip")) {
    MipInstance inst;
    if (cfg.mip) {
      inst = *cfg.mip;
    } else {
      for (const char* k : {"mip.A", "mip.b", "mip.c", "mip.c_tilde", "mip.d"})
        if (!doc.has(k)) throw config_error("missing required key", 0, k);
    }
    if (doc.has("mip.A")) inst.A = doc.number("mip.A");
    if (doc.has("mip.b")) inst.b = doc.vector("mip.b");
    if (doc.has("mip.c")) inst.c = doc.vector("mip.c");
    if (doc.has("mip.c_tilde")) inst.c_tilde = doc.vector("mip.c_tilde");
    if (doc.has("mip.d")) inst.d = doc.vector("mip.d");
    if (doc.has("mip.penalty")) inst.penalty = doc.number("mip.penalty");
    cfg.mip = std::move(inst);
  }
  if (doc.has("driver.B")) cfg.driver.B = doc.vector("driver.B");
  if (doc.has("driver.omega")) cfg.driver.omega = doc.vector("driver.omega");
  if (doc.has("reference.y")) cfg.reference_y = doc.vector("reference.y");
  if (doc.has("reference.x")) cfg.reference_x = doc.vector("reference.x");

  if (detail::any_key_in(doc, "hybrid")) {
    const bool reshape = doc.has("hybrid.qubits") || doc.has("hybrid.resonators") || !cfg.hybrid;
    HybridProblemSpec s;
    if (reshape) {
      for (const char* k : {"hybrid.qubits", "hybrid.resonators"})
        if (!doc.has(k)) throw config_error("missing required key", 0, k);
      s = HybridProblemSpec::zeros(doc.count("hybrid.qubits"), doc.count("hybrid.resonators"));
    } else {
      s = *cfg.hybrid;
    }
    const std::size_t L = s.qubits, M = s.resonators;
    if (doc.has("hybrid.h")) s.h = detail::sized_vector(doc, "hybrid.h", L);
    if (doc.has("hybrid.B")) s.B = detail::sized_vector(doc, "hybrid.B", L);
    if (doc.has("hybrid.omega_c")) s.omega_c = detail::sized_vector(doc, "hybrid.omega_c", M);
    if (doc.has("hybrid.lambda")) s.lambda_drive = detail::sized_vector(doc, "hybrid.lambda", M);
    if (doc.has("hybrid.omega_d")) s.omega_d = detail::sized_vector(doc, "hybrid.omega_d", M);
    if (doc.has("hybrid.J")) s.J = detail::to_matrix(doc, "hybrid.J", L, L);
    if (doc.has("hybrid.g")) s.g = detail::to_matrix(doc, "hybrid.g", L, M);
    if (doc.has("hybrid.g_tilde")) s.g_tilde = detail::to_matrix(doc, "hybrid.g_tilde", L, M);
    if (doc.has("hybrid.J_tilde")) s.J_tilde = detail::to_matrix(doc, "hybrid.J_tilde", M, M);
    if (doc.has("hybrid.omega_mw")) s.omega_mw = doc.number("hybrid.omega_mw");
    cfg.hybrid = std::move(s);
  }

  try {
    cfg.validate();
  } catch (const config_error& e) {
    throw config_error(e.what(), doc.line_of(e.field()), e.field());
  }
  return cfg;
}

inline ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot read config file " + path.string(), 0, "config");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_experiment(ss.str());
}

/// --out > config `output` > $HQA_OUT/<name> > hqa_out/<name>.
inline std::filesystem::path default_output_dir(const ExperimentConfig& cfg) {
  if (!cfg.output.empty()) return cfg.output;
  if (const char* env = std::getenv("HQA_OUT"); env && *env)
    return std::filesystem::path(env) / cfg.name;
  return std::filesystem::path("hqa_out") / cfg.name;
}

// ---------------------------------------------------------------------------
// Results

struct Check {
  std::string name;
  double value = 0.0;
  std::string relation;  // "<" or ">"
  double limit = 0.0;
  bool pass = false;
};

inline Check check_below(std::string name, double value, double limit) {
  return {std::move(name), value, "<", limit, std::isfinite(value) && value < limit};
}

inline Check check_above(std::string name, double value, double limit) {
  return {std::move(name), value, ">", limit, std::isfinite(value) && value > limit};
}

struct MipAnnealResult {
  ExperimentConfig config;
  Trajectory trajectory;  // observables "HP", "y<i>", "x<i>", "norm"
  double ground_energy = 0.0;
  DecodedSolution ground_decoded;
  DecodedSolution final_decoded;
  double final_energy = 0.0;
  OracleSolution oracle;
  double initial_product_overlap = std::numeric_limits<double>::quiet_NaN();
  double max_adiabaticity = std::numeric_limits<double>::quiet_NaN();
  double max_adiabaticity_s = std::numeric_limits<double>::quiet_NaN();
  std::vector<Check> checks;
};

struct ContinuousCurves {
  std::vector<double> times;
  std::map<std::string, std::vector<double>> lab, effective;
};

struct AppendixResult {
  ExperimentConfig config;
  StroboscopicComparison comparison;
  double rwa_budget = 0.0;
  std::vector<std::string> observable_names;  // comparison order
  std::optional<ContinuousCurves> continuous;
  std::vector<Check> checks;
};

struct DiagramResult {
  ExperimentConfig config;
  std::string hamiltonian;  // which pair was interpolated
  EnergyDiagram diagram;
  std::vector<Check> checks;
};

struct OracleResult {
  ExperimentConfig config;
  OracleSolution oracle;
  std::optional<GridResult> grid;
  double grid_bound = 0.0;
  std::vector<Check> checks;
};

using ExperimentResult = std::variant<MipAnnealResult, AppendixResult, DiagramResult, OracleResult>;

inline const ExperimentConfig& config_of(const ExperimentResult& r) {
  return std::visit([](const auto& x) -> const ExperimentConfig& { return x.config; }, r);
}

inline const std::vector<Check>& checks_of(const ExperimentResult& r) {
  return std::visit([](const auto& x) -> const std::vector<Check>& { return x.checks; }, r);
}

inline bool all_checks_pass(const ExperimentResult& r) {
  const auto& c = checks_of(r);
  return std::all_of(c.begin(), c.end(), [](const Check& k) { return k.pass; });
}

// ---------------------------------------------------------------------------
// Runners

inline MipAnnealResult run_mip_anneal(const ExperimentConfig& cfg) {
  cfg.validate();
  const MipInstance& inst = *cfg.mip;
  const MipEncoding enc = encode(inst, cfg.driver);
  const HilbertSpace space = enc.space(cfg.truncation);
  const LinOp HP = enc.problem_hamiltonian(space);
  const LinOp HD = enc.driver_hamiltonian(space);
  const std::size_t k = inst.K();

  MipAnnealResult r;
  r.config = cfg;
  r.oracle = solve(inst);

  const GroundState gp = ground_state(HP);
  r.ground_energy = gp.energy;
  r.ground_decoded = decode(inst, gp.state);

  const GroundState g0 = ground_state(HD);
  if (std::all_of(cfg.driver.B.begin(), cfg.driver.B.end(), [](double b) { return b > 0.0; }) &&
      std::all_of(cfg.driver.omega.begin(), cfg.driver.omega.end(), [](double w) { return w > 0.0; })) {
    // Analytic ground state: |-> on every qubit, vacuum on every resonator.
    std::vector<Vector> locals;
    for (std::size_t i = 0; i < k; ++i) {
      Vector minus(2);
      minus << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
      locals.push_back(minus);
    }
    for (std::size_t i = 0; i < k; ++i) {
      Vector vac = Vector::Zero(static_cast<Eigen::Index>(cfg.truncation));
      vac(0) = 1.0;
      locals.push_back(vac);
    }
    r.initial_product_overlap = std::abs(product_state(space, locals).inner(g0.state));
  }

  const SiteOperators ops(space);
  std::vector<NamedObservable> obs{{"HP", HP}};
  for (std::size_t i = 0; i < k; ++i) obs.push_back({"y" + std::to_string(i + 1), ops.occupation(i)});
  for (std::size_t i = 0; i < k; ++i) obs.push_back({"x" + std::to_string(i + 1), ops.quadrature(i)});

  AnnealRun run;
  run.total_time = cfg.total_time;
  run.sample_times = uniform_samples(cfg.total_time, cfg.samples);
  run.integrator_tol = cfg.tol;
  run.max_steps = cfg.max_steps;
  run.keep_states = false;
  r.trajectory = evolve(anneal_schedule(HD, HP, cfg.total_time), run, g0.state, obs);

  const StateVector final_state = r.trajectory.final_state.normalized();
  r.final_decoded = decode(inst, final_state);
  r.final_energy = expectation(HP, final_state).value;

  if (cfg.adiabaticity_points >= 2) {
    r.max_adiabaticity = 0.0;
    for (double s : linspace(0.0, 1.0, cfg.adiabaticity_points)) {
      const double m = adiabaticity_metric(HD, HP, cfg.total_time, s * cfg.total_time);
      if (m > r.max_adiabaticity) {
        r.max_adiabaticity = m;
        r.max_adiabaticity_s = s;
      }
    }
  }

  const SectorSolution& best = r.oracle.global();
  r.checks.push_back(check_below("final_excess_energy", std::abs(r.final_energy - r.ground_energy), 1e-2));
  r.checks.push_back(check_below("variational_bound", r.ground_energy - r.final_energy, 1e-9));
  for (std::size_t i = 0; i < k; ++i) {
    const std::string idx = std::to_string(i + 1);
    r.checks.push_back(check_below("final_y" + idx + "_vs_oracle",
                                   std::abs(r.final_decoded.y[i] - best.y[i]), 0.05));
    r.checks.push_back(check_below("final_x" + idx + "_vs_oracle",
                                   std::abs(r.final_decoded.x[i] - best.x[i]), 0.02));
    if (cfg.reference_y)
      r.checks.push_back(check_below("final_y" + idx + "_vs_reference",
                                     std::abs(r.final_decoded.y[i] - (*cfg.reference_y)[i]), 0.05));
    if (cfg.reference_x)
      r.checks.push_back(check_below("final_x" + idx + "_vs_reference",
                                     std::abs(r.final_decoded.x[i] - (*cfg.reference_x)[i]), 0.02));
  }
  r.checks.push_back(check_below("norm_deviation", r.trajectory.stats.max_norm_deviation, 1e-6));
  if (cfg.adiabaticity_points >= 2)
    r.checks.push_back(check_below("max_adiabaticity_metric", r.max_adiabaticity, 0.1));
  return r;
}

/// 5 max(|g~|, |lambda|, |B|) / omega_mw times the spectrum width of H_P^eff.
inline double rwa_budget(const HybridProblemSpec& spec, double spectrum_width) {
  double coupling = 0.0;
  if (spec.g_tilde.size()) coupling = std::max(coupling, spec.g_tilde.cwiseAbs().maxCoeff());
  for (double v : spec.lambda_drive) coupling = std::max(coupling, std::abs(v));
  for (double v : spec.B) coupling = std::max(coupling, std::abs(v));
  return 5.0 * coupling / detail::require_drive(spec) * spectrum_width;
}

inline AppendixResult run_appendix(const ExperimentConfig& cfg) {
  cfg.validate();
  const HybridProblemSpec& spec = *cfg.hybrid;
  const HilbertSpace space = space_for(spec, cfg.truncation);

  AppendixResult r;
  r.config = cfg;
  StroboscopicOptions opt;
  opt.lab_tol = cfg.tol;
  opt.effective_tol = cfg.tol;
  opt.stride = cfg.stride;
  opt.max_steps = cfg.max_steps;
  r.comparison = stroboscopic_compare(spec, space, cfg.total_time, opt);
  r.rwa_budget = rwa_budget(spec, r.comparison.spectrum_width);

  const EffectiveHamiltonians eff = build_effective(spec, space);
  const auto observables = frame_observables(spec, space, eff.problem);
  for (const auto& o : observables) r.observable_names.push_back(o.name);

  if (cfg.continuous_samples >= 2) {
    const StateVector psi0 = ground_state(eff.driver).state;
    AnnealRun run;
    run.total_time = r.comparison.total_time;
    run.sample_times = uniform_samples(run.total_time, cfg.continuous_samples);
    run.integrator_tol = cfg.tol;
    run.max_steps = cfg.max_steps;
    run.keep_states = false;
    ContinuousCurves c;
    Trajectory lab = evolve(lab_frame_schedule(spec, space, run.total_time), run, psi0, observables);
    Trajectory rot = evolve(anneal_schedule(eff.driver, eff.problem, run.total_time), run, psi0, observables);
    c.times = lab.times;
    c.lab = std::move(lab.observables);
    c.effective = std::move(rot.observables);
    r.continuous = std::move(c);
  }

  const auto& cmp = r.comparison;
  double max_diff = 0.0;
  for (double d : cmp.difference.at("HP_eff")) max_diff = std::max(max_diff, std::abs(d));
  r.checks.push_back(check_below("stroboscopic_HP_eff_difference", max_diff, r.rwa_budget));
  r.checks.push_back(check_below("final_lab_HP_eff_vs_ground",
                                 std::abs(cmp.lab.at("HP_eff").back() - cmp.ground_energy), r.rwa_budget));
  r.checks.push_back(check_below("final_effective_HP_eff_vs_ground",
                                 std::abs(cmp.effective.at("HP_eff").back() - cmp.ground_energy),
                                 r.rwa_budget));
  r.checks.push_back(check_below("lab_norm_deviation", cmp.lab_stats.max_norm_deviation, 1e-6));
  r.checks.push_back(check_below("effective_norm_deviation", cmp.effective_stats.max_norm_deviation, 1e-6));
  return r;
}

inline DiagramResult run_energy_diagram(const ExperimentConfig& cfg) {
  cfg.validate();
  DiagramResult r;
  r.config = cfg;
  LinOp HD = LinOp::zero(HilbertSpace{}), HP = HD;
  if (cfg.hybrid) {
    const HilbertSpace space = space_for(*cfg.hybrid, cfg.truncation);
    if (cfg.hybrid->omega_mw) {
      const EffectiveHamiltonians eff = build_effective(*cfg.hybrid, space);
      HD = eff.driver;
      HP = eff.problem;
      r.hamiltonian = "effective";
    } else {
      HD = build_driver_hamiltonian(*cfg.hybrid, space);
      HP = build_problem_hamiltonian(*cfg.hybrid, space);
      r.hamiltonian = "static";
    }
  } else {
    const MipEncoding enc = encode(*cfg.mip, cfg.driver);
    const HilbertSpace space = enc.space(cfg.truncation);
    HD = enc.driver_hamiltonian(space);
    HP = enc.problem_hamiltonian(space);
    r.hamiltonian = "mip";
  }
  r.diagram = energy_diagram(
      [&](double s) { return total_hamiltonian(HD, HP, ScheduleSample{s, s}); },
      linspace(0.0, 1.0, cfg.diagram_points), cfg.diagram_levels);
  r.checks.push_back(check_above("min_gap", r.diagram.min_gap, 0.0));
  return r;
}

inline OracleResult run_oracle(const ExperimentConfig& cfg) {
  cfg.validate();
  const MipInstance& inst = *cfg.mip;
  OracleResult r;
  r.config = cfg;
  r.oracle = solve(inst);
  const SectorSolution& best = r.oracle.global();

  double residual = 0.0;
  for (const auto& s : r.oracle.sectors) residual = std::max(residual, s.stationarity_residual);
  r.checks.push_back(check_below("max_stationarity_residual", residual, 1e-10));

  // Brute-force cross-check of the winning sector while the grid stays small.
  const std::size_t k = inst.K();
  std::size_t resolution = 400;
  while (resolution >= 100 && std::pow(static_cast<double>(resolution), static_cast<double>(k)) > 2e7)
    resolution /= 2;
  if (resolution >= 100) {
    double lo = 0.0, hi = inst.A;
    for (double x : best.x) lo = std::min(lo, x), hi = std::max(hi, x);
    if (!(hi > lo)) hi = lo + 1.0;
    r.grid = grid_check(inst, best.y, lo, hi, resolution);
    const double spacing = (hi - lo) / static_cast<double>(resolution - 1);
    const double hess = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                            detail::sector_hessian(inst), Eigen::EigenvaluesOnly)
                            .eigenvalues()
                            .maxCoeff();
    r.grid_bound = spacing * spacing * hess;
    r.checks.push_back(check_above("grid_cost_minus_oracle_cost", r.grid->cost - best.cost, -1e-9));
    r.checks.push_back(check_below("grid_cost_gap", r.grid->cost - best.cost, r.grid_bound));
  }
  for (std::size_t i = 0; i < k; ++i) {
    const std::string idx = std::to_string(i + 1);
    if (cfg.reference_y)
      r.checks.push_back(check_below("y" + idx + "_vs_reference",
                                     std::abs(best.y[i] - (*cfg.reference_y)[i]), 0.5));
    if (cfg.reference_x)
      r.checks.push_back(check_below("x" + idx + "_vs_reference",
                                     std::abs(best.x[i] - (*cfg.reference_x)[i]), 0.02));
  }
  return r;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.mode) {
    case Mode::mip_anneal: return run_mip_anneal(cfg);
    case Mode::appendix_lab_vs_eff: return run_appendix(cfg);
    case Mode::energy_diagram: return run_energy_diagram(cfg);
    case Mode::oracle_only: return run_oracle(cfg);
  }
  throw error(errc::invalid_argument, "unknown mode");
}

// ---------------------------------------------------------------------------
// JSON

inline json to_json(const IntegratorStats& s) {
  return json{{"accepted_steps", s.accepted},
              {"rejected_steps", s.rejected},
              {"max_error_estimate", s.max_error_estimate},
              {"max_norm_deviation", s.max_norm_deviation}};
}

inline json to_json(const SectorSolution& s) {
  return json{{"y", s.y},
              {"x", s.x},
              {"cost", s.cost},
              {"stationarity_residual", s.stationarity_residual},
              {"nonnegative", s.nonnegative},
              {"condition_number", s.condition_number}};
}

inline json to_json(const OracleSolution& o) {
  json sectors = json::array();
  for (const auto& s : o.sectors) sectors.push_back(to_json(s));
  const auto& g = o.global();
  return json{{"global", json{{"y", g.y}, {"x", g.x}, {"cost", g.cost}}}, {"sectors", sectors}};
}

inline json to_json(const DecodedSolution& d) {
  return json{{"y", d.y}, {"x", d.x}, {"y_rounded", d.y_rounded}, {"cost", d.cost},
              {"nonnegative", d.nonnegative}};
}

inline json to_json(const Check& c) {
  return json{{"name", c.name}, {"value", c.value}, {"relation", c.relation}, {"limit", c.limit},
              {"pass", c.pass}};
}

namespace detail {

inline json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline std::vector<std::vector<double>> rows_of(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(r)].push_back(m(r, c));
  return out;
}

}  // namespace detail

inline json to_json(const ExperimentConfig& cfg) {
  json j{{"name", cfg.name},
         {"mode", mode_name(cfg.mode)},
         {"truncation", cfg.truncation},
         {"T", cfg.total_time},
         {"tol", cfg.tol},
         {"samples", cfg.samples},
         {"stride", cfg.stride},
         {"continuous_samples", cfg.continuous_samples},
         {"diagram_points", cfg.diagram_points},
         {"diagram_levels", cfg.diagram_levels},
         {"adiabaticity_points", cfg.adiabaticity_points},
         {"max_steps", cfg.max_steps}};
  if (cfg.mip) {
    const auto& m = *cfg.mip;
    j["mip"] = json{{"A", m.A}, {"b", m.b}, {"c", m.c}, {"c_tilde", m.c_tilde}, {"d", m.d},
                    {"penalty", m.penalty}};
    j["driver"] = json{{"B", cfg.driver.B}, {"omega", cfg.driver.omega}};
  }
  if (cfg.hybrid) {
    const auto& s = *cfg.hybrid;
    j["hybrid"] = json{{"qubits", s.qubits},
                       {"resonators", s.resonators},
                       {"h", s.h},
                       {"J", detail::rows_of(s.J)},
                       {"g", detail::rows_of(s.g)},
                       {"g_tilde", detail::rows_of(s.g_tilde)},
                       {"omega_c", s.omega_c},
                       {"lambda", s.lambda_drive},
                       {"J_tilde", detail::rows_of(s.J_tilde)},
                       {"B", s.B},
                       {"omega_d", s.omega_d},
                       {"omega_mw", s.omega_mw ? json(*s.omega_mw) : json(nullptr)}};
  }
  if (cfg.reference_y) j["reference_y"] = *cfg.reference_y;
  if (cfg.reference_x) j["reference_x"] = *cfg.reference_x;
  return j;
}

inline json summary_json(const ExperimentResult& result) {
  json j{{"name", config_of(result).name}, {"mode", mode_name(config_of(result).mode)},
         {"config", to_json(config_of(result))}};

  std::visit(
      [&](const auto& r) {
        using R = std::decay_t<decltype(r)>;
        json res;
        if constexpr (std::is_same_v<R, MipAnnealResult>) {
          res["final_expectations"] = json{{"HP", r.final_energy},
                                           {"y", r.final_decoded.y},
                                           {"x", r.final_decoded.x},
                                           {"y_rounded", r.final_decoded.y_rounded},
                                           {"cost", r.final_decoded.cost}};
          res["ground_state"] = json{{"energy", r.ground_energy},
                                     {"y", r.ground_decoded.y},
                                     {"x", r.ground_decoded.x},
                                     {"y_rounded", r.ground_decoded.y_rounded}};
          res["final_excess_energy"] = r.final_energy - r.ground_energy;
          res["initial_state_product_overlap"] = detail::nullable(r.initial_product_overlap);
          res["max_adiabaticity_metric"] = detail::nullable(r.max_adiabaticity);
          res["max_adiabaticity_s"] = detail::nullable(r.max_adiabaticity_s);
          res["oracle"] = to_json(r.oracle);
          res["integrator"] = to_json(r.trajectory.stats);
        } else if constexpr (std::is_same_v<R, AppendixResult>) {
          const auto& c = r.comparison;
          json finals, maxdiff;
          for (const auto& name : r.observable_names) {
            finals[name] = json{{"lab", c.lab.at(name).back()}, {"effective", c.effective.at(name).back()}};
            double m = 0.0;
            for (double d : c.difference.at(name)) m = std::max(m, std::abs(d));
            maxdiff[name] = m;
          }
          res["adjusted_T"] = c.total_time;
          res["stroboscopic_samples"] = c.times.size();
          res["ground_energy_HP_eff"] = c.ground_energy;
          res["spectrum_width_HP_eff"] = c.spectrum_width;
          res["rwa_budget"] = r.rwa_budget;
          res["final_expectations"] = finals;
          res["max_abs_difference"] = maxdiff;
          res["lab_integrator"] = to_json(c.lab_stats);
          res["effective_integrator"] = to_json(c.effective_stats);
        } else if constexpr (std::is_same_v<R, DiagramResult>) {
          res["hamiltonian"] = r.hamiltonian;
          res["points"] = r.diagram.s.size();
          res["min_gap"] = r.diagram.min_gap;
          res["min_gap_s"] = r.diagram.min_gap_s;
          res["ground_energy_s0"] = r.diagram.energies.front().front();
          res["ground_energy_s1"] = r.diagram.energies.back().front();
        } else {
          res["oracle"] = to_json(r.oracle);
          if (r.grid)
            res["grid_check"] = json{{"x", r.grid->x}, {"cost", r.grid->cost}, {"bound", r.grid_bound}};
        }
        j["results"] = res;
        json checks = json::array();
        for (const auto& c : r.checks) checks.push_back(to_json(c));
        j["checks"] = checks;
      },
      result);
  j["pass"] = all_checks_pass(result);
  return j;
}

// ---------------------------------------------------------------------------
// Artifacts

namespace detail {

inline void write_mip_artifacts(const MipAnnealResult& r, const std::filesystem::path& dir,
                                std::vector<std::string>& files) {
  const std::size_t k = r.config.mip->K();
  const auto& tr = r.trajectory;
  std::vector<std::string> header{"t", "s", "expect_HP"};
  for (std::size_t i = 0; i < k; ++i) header.push_back("expect_y" + std::to_string(i + 1));
  for (std::size_t i = 0; i < k; ++i) header.push_back("expect_x" + std::to_string(i + 1));
  header.push_back("norm");
  CsvTable csv(header);
  for (std::size_t n = 0; n < tr.times.size(); ++n) {
    std::vector<double> row{tr.times[n], tr.times[n] / r.config.total_time, tr.observables.at("HP")[n]};
    for (std::size_t i = 0; i < k; ++i) row.push_back(tr.observables.at("y" + std::to_string(i + 1))[n]);
    for (std::size_t i = 0; i < k; ++i) row.push_back(tr.observables.at("x" + std::to_string(i + 1))[n]);
    row.push_back(tr.observables.at("norm")[n]);
    csv.row(row);
  }
  write_text_file(dir / "trajectory.csv", csv.str());
  files.push_back("trajectory.csv");
  if (!r.config.plots) return;

  const auto& pal = plot_palette();
  write_text_file(dir / "energy.svg",
                  svg_line_plot("<H_P>(t)", "t", "energy",
                                {{"<H_P>", tr.times, tr.observables.at("HP"), pal[0]},
                                 {"E0(H_P)", {tr.times.front(), tr.times.back()},
                                  {r.ground_energy, r.ground_energy}, pal[3], true}}));
  std::vector<PlotSeries> ys, xs;
  for (std::size_t i = 0; i < k; ++i) {
    const std::string idx = std::to_string(i + 1);
    ys.push_back({"y" + idx, tr.times, tr.observables.at("y" + idx), pal[i % pal.size()]});
    xs.push_back({"x" + idx, tr.times, tr.observables.at("x" + idx), pal[i % pal.size()]});
  }
  write_text_file(dir / "qubits.svg", svg_line_plot("<(1+sigma_z)/2>(t)", "t", "y", ys));
  write_text_file(dir / "resonators.svg", svg_line_plot("<(a+a^dag)/2>(t)", "t", "x", xs));
  files.insert(files.end(), {"energy.svg", "qubits.svg", "resonators.svg"});
}

inline void write_appendix_artifacts(const AppendixResult& r, const std::filesystem::path& dir,
                                     std::vector<std::string>& files) {
  const auto& c = r.comparison;
  std::vector<std::string> header{"t", "s"};
  for (const auto& name : r.observable_names)
    for (const char* frame : {"lab_", "eff_", "diff_"}) header.push_back(frame + name);
  header.insert(header.end(), {"lab_norm", "eff_norm"});
  CsvTable csv(header);
  for (std::size_t n = 0; n < c.times.size(); ++n) {
    std::vector<double> row{c.times[n], c.times[n] / c.total_time};
    for (const auto& name : r.observable_names) {
      row.push_back(c.lab.at(name)[n]);
      row.push_back(c.effective.at(name)[n]);
      row.push_back(c.difference.at(name)[n]);
    }
    row.push_back(c.lab.at("norm")[n]);
    row.push_back(c.effective.at("norm")[n]);
    csv.row(row);
  }
  write_text_file(dir / "stroboscopic.csv", csv.str());
  files.push_back("stroboscopic.csv");

  if (r.continuous) {
    std::vector<std::string> h{"t", "s"};
    for (const auto& name : r.observable_names)
      for (const char* frame : {"lab_", "eff_"}) h.push_back(frame + name);
    CsvTable cc(h);
    const auto& cu = *r.continuous;
    for (std::size_t n = 0; n < cu.times.size(); ++n) {
      std::vector<double> row{cu.times[n], cu.times[n] / c.total_time};
      for (const auto& name : r.observable_names) {
        row.push_back(cu.lab.at(name)[n]);
        row.push_back(cu.effective.at(name)[n]);
      }
      cc.row(row);
    }
    write_text_file(dir / "continuous.csv", cc.str());
    files.push_back("continuous.csv");
  }
  if (!r.config.plots) return;

  const auto& pal = plot_palette();
  for (const auto& name : r.observable_names) {
    std::vector<PlotSeries> s{{"lab frame", c.times, c.lab.at(name), pal[0]},
                              {"effective", c.times, c.effective.at(name), pal[1], true}};
    if (name == "HP_eff")
      s.push_back({"E0(H_P^eff)", {c.times.front(), c.times.back()}, {c.ground_energy, c.ground_energy},
                   pal[3], true});
    write_text_file(dir / ("stroboscopic_" + name + ".svg"),
                    svg_line_plot("<" + name + "> at t = 2 pi n / omega", "t", name, s));
    files.push_back("stroboscopic_" + name + ".svg");
    if (r.continuous) {
      const auto& cu = *r.continuous;
      write_text_file(dir / ("continuous_" + name + ".svg"),
                      svg_line_plot("<" + name + ">(t)", "t", name,
                                    {{"lab frame", cu.times, cu.lab.at(name), pal[0]},
                                     {"effective", cu.times, cu.effective.at(name), pal[1], true}}));
      files.push_back("continuous_" + name + ".svg");
    }
  }
}

inline void write_diagram_artifacts(const DiagramResult& r, const std::filesystem::path& dir,
                                    std::vector<std::string>& files) {
  const auto& d = r.diagram;
  const std::size_t levels = d.energies.front().size();
  std::vector<std::string> header{"s"};
  for (std::size_t l = 0; l < levels; ++l) header.push_back("E" + std::to_string(l));
  header.push_back("gap");
  CsvTable csv(header);
  for (std::size_t n = 0; n < d.s.size(); ++n) {
    std::vector<double> row{d.s[n]};
    row.insert(row.end(), d.energies[n].begin(), d.energies[n].end());
    row.push_back(d.energies[n][1] - d.energies[n][0]);
    csv.row(row);
  }
  csv.raw({"min_gap", format_double(d.min_gap), format_double(d.min_gap_s)});
  write_text_file(dir / "energy_diagram.csv", csv.str());
  files.push_back("energy_diagram.csv");
  if (!r.config.plots) return;

  const auto& pal = plot_palette();
  std::vector<PlotSeries> s;
  for (std::size_t l = 0; l < levels; ++l) {
    PlotSeries p{"E" + std::to_string(l), d.s, {}, pal[l % pal.size()]};
    for (const auto& row : d.energies) p.y.push_back(row[l]);
    s.push_back(std::move(p));
  }
  write_text_file(dir / "energy_diagram.svg", svg_line_plot("Energy levels along s", "s", "energy", s));
  files.push_back("energy_diagram.svg");
}

}  // namespace detail

/// Write every artifact of a run into dir; returns the file names written.
inline std::vector<std::string> write_artifacts(const ExperimentResult& result,
                                                const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> files;
  std::visit(
      [&](const auto& r) {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, MipAnnealResult>) {
          detail::write_mip_artifacts(r, dir, files);
        } else if constexpr (std::is_same_v<R, AppendixResult>) {
          detail::write_appendix_artifacts(r, dir, files);
        } else if constexpr (std::is_same_v<R, DiagramResult>) {
          detail::write_diagram_artifacts(r, dir, files);
        } else {
          write_text_file(dir / "oracle.json", to_json(r.oracle).dump(2) + "\n");
          files.push_back("oracle.json");
        }
      },
      result);
  write_text_file(dir / "summary.json", summary_json(result).dump(2) + "\n");
  files.push_back("summary.json");
  return files;
}

// ---------------------------------------------------------------------------
// Convergence

/// Final values that the acceptance tolerances are stated on.
inline std::vector<std::pair<std::string, double>> acceptance_observables(const ExperimentResult& result) {
  std::vector<std::pair<std::string, double>> out;
  std::visit(
      [&](const auto& r) {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, MipAnnealResult>) {
          out.emplace_back("final_HP", r.final_energy);
          out.emplace_back("ground_energy", r.ground_energy);
          out.emplace_back("final_excess_energy", r.final_energy - r.ground_energy);
          for (std::size_t i = 0; i < r.final_decoded.y.size(); ++i)
            out.emplace_back("final_y" + std::to_string(i + 1), r.final_decoded.y[i]);
          for (std::size_t i = 0; i < r.final_decoded.x.size(); ++i)
            out.emplace_back("final_x" + std::to_string(i + 1), r.final_decoded.x[i]);
          for (std::size_t i = 0; i < r.ground_decoded.x.size(); ++i)
            out.emplace_back("ground_x" + std::to_string(i + 1), r.ground_decoded.x[i]);
        } else if constexpr (std::is_same_v<R, AppendixResult>) {
          const auto& c = r.comparison;
          out.emplace_back("ground_energy_HP_eff", c.ground_energy);
          for (const auto& name : r.observable_names) {
            out.emplace_back("final_lab_" + name, c.lab.at(name).back());
            out.emplace_back("final_eff_" + name, c.effective.at(name).back());
          }
          double m = 0.0;
          for (double d : c.difference.at("HP_eff")) m = std::max(m, std::abs(d));
          out.emplace_back("max_abs_diff_HP_eff", m);
        } else if constexpr (std::is_same_v<R, DiagramResult>) {
          out.emplace_back("min_gap", r.diagram.min_gap);
          out.emplace_back("ground_energy_s1", r.diagram.energies.back().front());
        } else {
          const auto& g = r.oracle.global();
          out.emplace_back("cost", g.cost);
          for (std::size_t i = 0; i < g.x.size(); ++i) out.emplace_back("x" + std::to_string(i + 1), g.x[i]);
        }
      },
      result);
  return out;
}

struct ConvergenceRow {
  std::string observable;
  double base = 0.0;
  double doubled_truncation = 0.0;
  double halved_tolerance = 0.0;
  double delta_truncation = 0.0;
  double delta_tolerance = 0.0;
  bool pass = false;
};

struct ConvergenceReport {
  std::string name;
  std::size_t truncation = 0;
  double tol = 0.0;
  double threshold = 1e-4;
  std::vector<ConvergenceRow> rows;

  bool pass() const {
    return std::all_of(rows.begin(), rows.end(), [](const ConvergenceRow& r) { return r.pass; });
  }
};

/// Repeat a run at (N, tol), (2N, tol) and (N, tol/2) and compare the
/// acceptance observables. `baseline`, when given, must be the (N, tol) run.
inline ConvergenceReport convergence_report(ExperimentConfig cfg, const ExperimentResult* baseline = nullptr,
                                            double threshold = 1e-4) {
  cfg.plots = false;
  cfg.continuous_samples = 0;
  cfg.adiabaticity_points = 0;
  cfg.validate();

  ExperimentConfig doubled = cfg, halved = cfg;
  doubled.truncation = 2 * cfg.truncation;
  halved.tol = 0.5 * cfg.tol;

  const auto base = acceptance_observables(baseline ? *baseline : run_experiment(cfg));
  const auto dn = acceptance_observables(run_experiment(doubled));
  const auto dt = acceptance_observables(run_experiment(halved));

  ConvergenceReport rep;
  rep.name = cfg.name;
  rep.truncation = cfg.truncation;
  rep.tol = cfg.tol;
  rep.threshold = threshold;
  for (std::size_t i = 0; i < base.size(); ++i) {
    ConvergenceRow row;
    row.observable = base[i].first;
    row.base = base[i].second;
    row.doubled_truncation = dn.at(i).second;
    row.halved_tolerance = dt.at(i).second;
    row.delta_truncation = std::abs(row.doubled_truncation - row.base);
    row.delta_tolerance = std::abs(row.halved_tolerance - row.base);
    row.pass = row.delta_truncation < threshold && row.delta_tolerance < threshold;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

inline json to_json(const ConvergenceReport& rep) {
  json rows = json::array();
  for (const auto& r : rep.rows)
    rows.push_back(json{{"observable", r.observable},
                        {"base", r.base},
                        {"doubled_truncation", r.doubled_truncation},
                        {"halved_tolerance", r.halved_tolerance},
                        {"delta_truncation", r.delta_truncation},
                        {"delta_tolerance", r.delta_tolerance},
                        {"pass", r.pass}});
  return json{{"name", rep.name}, {"truncation", rep.truncation}, {"tol", rep.tol},
              {"threshold", rep.threshold}, {"rows", rows}, {"pass", rep.pass()}};
}

inline std::string convergence_table(const ConvergenceReport& rep) {
  CsvTable csv({"observable", "base", "doubled_truncation", "halved_tolerance", "delta_truncation",
                "delta_tolerance", "pass"});
  for (const auto& r : rep.rows)
    csv.raw({r.observable, format_double(r.base), format_double(r.doubled_truncation),
             format_double(r.halved_tolerance), format_double(r.delta_truncation),
             format_double(r.delta_tolerance), r.pass ? "1" : "0"});
  return csv.str();
}

}  // namespace hqa
