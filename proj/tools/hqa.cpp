// hqa: run annealing experiments and write their artifacts.
//
//   hqa run --preset paper-fig1-3 --check
//   hqa run --mode oracle-only --preset paper-fig1-3
//   hqa run --config my.cfg --truncation 12 --out results/
//   hqa run --preset paper-fig1-3 --preset paper-appendix --sweep
//   hqa convergence --preset paper-appendix
//   hqa presets

#include <cstdio>
#include <exception>
#include <filesystem>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hqa/experiment.hpp"

namespace fs = std::filesystem;

namespace {

enum exit_code { ok = 0, check_failed = 1, usage_error = 2, runtime_failure = 3 };

struct Selection {
  std::vector<std::string> presets;
  std::vector<std::string> configs;
  std::string mode;
  std::string out;
  std::optional<std::size_t> truncation;
  std::optional<double> tol;
  bool check = false;
};

void add_selection_flags(CLI::App& cmd, Selection& sel) {
  cmd.add_option("--preset", sel.presets, "Built-in preset (repeatable)");
  cmd.add_option("--config", sel.configs, "Config file (repeatable)")->check(CLI::ExistingFile);
  cmd.add_option("--mode", sel.mode,
                 "Override the mode: mip-anneal, appendix-lab-vs-eff, energy-diagram, oracle-only");
  cmd.add_option("--out", sel.out, "Output directory");
  cmd.add_option("--truncation", sel.truncation, "Override the Fock truncation N");
  cmd.add_option("--tol", sel.tol, "Override the integrator tolerance");
  cmd.add_flag("--check", sel.check, "Exit nonzero unless every acceptance check passes");
}

std::vector<hqa::ExperimentConfig> resolve(const Selection& sel) {
  std::vector<hqa::ExperimentConfig> out;
  for (const auto& p : sel.presets) out.push_back(hqa::preset(p));
  for (const auto& c : sel.configs) out.push_back(hqa::load_experiment(c));
  if (out.empty()) throw hqa::config_error("give at least one --preset or --config", 0, "preset");

  std::map<std::string, int> seen;
  for (auto& cfg : out) {
    if (!sel.mode.empty()) cfg.mode = hqa::parse_mode(sel.mode);
    if (sel.truncation) cfg.truncation = *sel.truncation;
    if (sel.tol) cfg.tol = *sel.tol;
    if (const int n = seen[cfg.name]++; n > 0) cfg.name += "-" + std::to_string(n + 1);
    if (!sel.out.empty()) cfg.output = out.size() == 1 ? sel.out : (fs::path(sel.out) / cfg.name).string();
    cfg.validate();
  }
  return out;
}

struct Outcome {
  std::string log;
  bool pass = false;
};

Outcome run_one(const hqa::ExperimentConfig& cfg) {
  std::ostringstream log;
  const fs::path dir = hqa::default_output_dir(cfg);
  const hqa::ExperimentResult result = hqa::run_experiment(cfg);
  const auto files = hqa::write_artifacts(result, dir);
  log << cfg.name << " [" << hqa::mode_name(cfg.mode) << "] -> " << dir.string() << "\n";
  for (const auto& c : hqa::checks_of(result))
    log << "  " << (c.pass ? "PASS" : "FAIL") << "  " << c.name << " = " << hqa::format_double(c.value)
        << " (" << c.relation << " " << hqa::format_double(c.limit) << ")\n";
  for (const auto& f : files) log << "  wrote " << f << "\n";
  return {log.str(), hqa::all_checks_pass(result)};
}

int report_failure(const std::exception& e) {
  if (const auto* ce = dynamic_cast<const hqa::config_error*>(&e)) {
    std::cerr << "config error";
    if (ce->line()) std::cerr << " at line " << ce->line();
    if (!ce->field().empty()) std::cerr << " (" << ce->field() << ")";
    std::cerr << ": " << ce->what() << "\n";
    return usage_error;
  }
  if (const auto* ie = dynamic_cast<const hqa::integration_failure*>(&e)) {
    std::cerr << "integration failure: " << ie->what() << "\n  reached t = " << ie->reached_time()
              << ", error estimate = " << ie->error_estimate() << ", steps = " << ie->steps() << "\n";
    return runtime_failure;
  }
  std::cerr << "error: " << e.what() << "\n";
  return runtime_failure;
}

int cmd_run(const Selection& sel, bool sweep) {
  const auto configs = resolve(sel);
  std::vector<Outcome> outcomes;
  if (sweep && configs.size() > 1) {
    std::vector<std::future<Outcome>> jobs;
    for (const auto& cfg : configs) jobs.push_back(std::async(std::launch::async, run_one, cfg));
    for (auto& j : jobs) outcomes.push_back(j.get());
  } else {
    for (const auto& cfg : configs) {
      outcomes.push_back(run_one(cfg));
      std::cout << outcomes.back().log << std::flush;
    }
  }
  bool pass = true;
  for (const auto& o : outcomes) {
    if (sweep && configs.size() > 1) std::cout << o.log;
    pass = pass && o.pass;
  }
  return sel.check && !pass ? check_failed : ok;
}

int cmd_convergence(const Selection& sel) {
  bool pass = true;
  for (const auto& cfg : resolve(sel)) {
    const auto rep = hqa::convergence_report(cfg);
    const fs::path dir = hqa::default_output_dir(cfg);
    hqa::write_text_file(dir / "convergence.csv", hqa::convergence_table(rep));
    hqa::write_text_file(dir / "convergence.json", hqa::to_json(rep).dump(2) + "\n");
    std::cout << cfg.name << ": N " << rep.truncation << " -> " << 2 * rep.truncation << ", tol "
              << hqa::format_double(rep.tol) << " -> " << hqa::format_double(rep.tol / 2)
              << ", threshold " << hqa::format_double(rep.threshold) << "\n";
    for (const auto& r : rep.rows)
      std::cout << "  " << (r.pass ? "PASS" : "FAIL") << "  " << r.observable
                << "  dN=" << hqa::format_double(r.delta_truncation)
                << "  dtol=" << hqa::format_double(r.delta_tolerance) << "\n";
    std::cout << "  wrote " << (dir / "convergence.csv").string() << "\n";
    pass = pass && rep.pass();
  }
  return sel.check && !pass ? check_failed : ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid qubit/resonator annealing experiments"};
  app.require_subcommand(1);

  Selection run_sel, conv_sel;
  bool sweep = false;
  auto* run = app.add_subcommand("run", "Run experiments and write CSV/JSON/SVG artifacts");
  add_selection_flags(*run, run_sel);
  run->add_flag("--sweep", sweep, "Run several configs concurrently, each in its own directory");

  auto* conv = app.add_subcommand("convergence", "Compare runs at N, 2N and tol, tol/2");
  add_selection_flags(*conv, conv_sel);

  auto* list = app.add_subcommand("presets", "List built-in presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_sel, sweep);
    if (*conv) return cmd_convergence(conv_sel);
    if (*list) {
      for (const auto& name : hqa::preset_names()) {
        const auto cfg = hqa::preset(name);
        std::cout << name << "  mode=" << hqa::mode_name(cfg.mode) << " N=" << cfg.truncation
                  << " T=" << cfg.total_time << " tol=" << cfg.tol << "\n";
      }
      return ok;
    }
  } catch (const std::exception& e) {
    return report_failure(e);
  }
  return ok;
}
