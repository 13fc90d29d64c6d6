// Acceptance suite: runs the full-size experiments and prints one PASS/FAIL
// line per criterion, followed by the individual measurements. Exit status is
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "hqa/experiment.hpp"

using namespace hqa;

namespace {

struct Criterion {
  int id;
  std::string title;
  std::vector<Check> checks;
  std::vector<std::string> notes;
  double seconds = 0.0;

  bool pass() const {
    return !checks.empty() &&
           std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
};

double max_abs_series(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

HybridProblemSpec generic_spec() {
  HybridProblemSpec s = HybridProblemSpec::zeros(2, 2);
  s.h = {1.1, 0.9};
  s.J(0, 1) = 0.35;
  s.g << 0.10, 0.20, 0.30, 0.05;
  s.g_tilde << 0.25, -0.15, 0.12, 0.40;
  s.omega_c = {1.3, 1.5};
  s.lambda_drive = {0.30, -0.20};
  s.J_tilde(0, 1) = 0.07;
  s.B = {0.55, 0.45};
  s.omega_mw = 1.05;
  return s;
}

void add_convergence(Criterion& c, const ConvergenceReport& rep) {
  for (const auto& row : rep.rows) {
    c.checks.push_back(check_below(rep.name + ": " + row.observable + " (N->2N)", row.delta_truncation,
                                   rep.threshold));
    c.checks.push_back(check_below(rep.name + ": " + row.observable + " (tol->tol/2)", row.delta_tolerance,
                                   rep.threshold));
  }
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  const std::filesystem::path out_dir = std::filesystem::current_path() / "acceptance_out";
  std::vector<Criterion> criteria;
  auto timed = [](Criterion& c, auto&& body) {
    const auto t0 = clock::now();
    body();
    c.seconds = std::chrono::duration<double>(clock::now() - t0).count();
  };

  // The long anneal feeds criteria 1, 2, 7 and 8.
  ExperimentConfig fig = preset("paper-fig1-3");
  fig.plots = false;
  Criterion c1{1, "anneal reaches the ground energy of H_P (paper-fig1-3, N=8)", {}, {}};
  Criterion c2{2, "anneal decodes to the reference solution (paper-fig1-3, N=8)", {}, {}};
  MipAnnealResult fig_run;
  timed(c1, [&] { fig_run = run_mip_anneal(fig); });
  write_artifacts(fig_run, out_dir / fig.name);
  {
    const double excess = fig_run.final_energy - fig_run.ground_energy;
    c1.checks.push_back(check_below("|final <H_P> - E0|", std::abs(excess), 1e-2));
    c1.notes.push_back("E0 = " + fmt("%.10f", fig_run.ground_energy) + ", final <H_P> = " +
                       fmt("%.10f", fig_run.final_energy) + ", steps = " +
                       std::to_string(fig_run.trajectory.stats.accepted));
    const std::vector<double> y_ref{1.0, 0.0}, x_ref{1.07, 0.69};
    for (std::size_t i = 0; i < 2; ++i) {
      const std::string idx = std::to_string(i + 1);
      c2.checks.push_back(check_below("|y" + idx + " - " + fmt("%g", y_ref[i]) + "|",
                                      std::abs(fig_run.final_decoded.y[i] - y_ref[i]), 0.05));
      c2.checks.push_back(check_below("|x" + idx + " - " + fmt("%g", x_ref[i]) + "|",
                                      std::abs(fig_run.final_decoded.x[i] - x_ref[i]), 0.02));
    }
    c2.seconds = c1.seconds;
  }

  Criterion c3{3, "oracle and encoded ground state agree", {}, {}};
  timed(c3, [&] {
    const MipInstance inst = *fig.mip;
    const OracleSolution o = solve(inst);
    const SectorSolution& best = o.global();
    c3.checks.push_back(check_below("oracle y* == (1,0)", best.y == BinaryVector{1, 0} ? 0.0 : 1.0, 0.5));
    c3.checks.push_back(check_below("|x1* - 1.0726|", std::abs(best.x[0] - 1.0726), 1e-4));
    c3.checks.push_back(check_below("|x2* - 0.6814|", std::abs(best.x[1] - 0.6814), 1e-4));
    c3.notes.push_back("x* = (" + fmt("%.8f", best.x[0]) + ", " + fmt("%.8f", best.x[1]) + ")");
    const GridResult grid = grid_check(inst, best.y, 0.0, 2.0, 400);
    c3.checks.push_back(check_above("grid cost - oracle cost", grid.cost - best.cost, -1e-9));

    const MipEncoding enc = encode(inst, fig.driver);
    for (const auto& [N, tol] : {std::pair<std::size_t, double>{8, 1e-3}, {16, 1e-4}}) {
      const DecodedSolution d = decode(inst, ground_state(enc.problem_hamiltonian(enc.space(N))).state);
      const std::string tag = "N=" + std::to_string(N) + ": ";
      c3.checks.push_back(check_below(tag + "decoded y == y*", d.y_rounded == best.y ? 0.0 : 1.0, 0.5));
      c3.checks.push_back(check_below(tag + "max |y - y*|",
                                      std::max(std::abs(d.y[0] - best.y[0]), std::abs(d.y[1] - best.y[1])),
                                      1e-9));
      for (std::size_t i = 0; i < 2; ++i)
        c3.checks.push_back(check_below(tag + "|x" + std::to_string(i + 1) + " - x*|",
                                        std::abs(d.x[i] - best.x[i]), tol));
    }
  });

  ExperimentConfig app = preset("paper-appendix");
  app.plots = false;
  Criterion c4{4, "lab and rotating frames agree stroboscopically (paper-appendix)", {}, {}};
  AppendixResult app_run;
  timed(c4, [&] {
    app_run = run_appendix(app);
    const auto& cmp = app_run.comparison;
    const double budget = app_run.rwa_budget;
    c4.checks.push_back(check_below("max_t |<H_P^eff>_lab - <H_P^eff>_eff|",
                                    max_abs_series(cmp.difference.at("HP_eff")), budget));
    c4.checks.push_back(
        check_below("|final lab <H_P^eff> - E0|", std::abs(cmp.lab.at("HP_eff").back() - cmp.ground_energy), budget));
    c4.checks.push_back(check_below("|final eff <H_P^eff> - E0|",
                                    std::abs(cmp.effective.at("HP_eff").back() - cmp.ground_energy), budget));
    c4.notes.push_back("T = " + fmt("%.6f", cmp.total_time) + ", samples = " + std::to_string(cmp.times.size()) +
                       ", E0 = " + fmt("%.8f", cmp.ground_energy) + ", budget = " + fmt("%.6g", budget));
    for (const auto& name : app_run.observable_names)
      c4.notes.push_back("max |lab - eff| " + name + " = " + fmt("%.3e", max_abs_series(cmp.difference.at(name))));
  });
  write_artifacts(app_run, out_dir / app.name);

  Criterion c5{5, "energy gap stays open along the schedule (paper-appendix)", {}, {}};
  timed(c5, [&] {
    ExperimentConfig cfg = app;
    cfg.mode = Mode::energy_diagram;
    cfg.diagram_points = 200;
    const DiagramResult r = run_energy_diagram(cfg);
    c5.checks.push_back(check_above("min_s (E1 - E0)", r.diagram.min_gap, 0.0));
    c5.notes.push_back("min gap " + fmt("%.8f", r.diagram.min_gap) + " at s = " + fmt("%.4f", r.diagram.min_gap_s));
    write_artifacts(r, out_dir / "paper-appendix-diagram");
  });

  Criterion c6{6, "operator identities", {}, {}};
  timed(c6, [&] {
    const HybridProblemSpec& a = *app.hybrid;
    const HilbertSpace sa = space_for(a, app.truncation);
    const EffectiveHamiltonians eff = build_effective(a, sa);
    const double period = 2.0 * std::numbers::pi / *a.omega_mw;
    double inv = 0.0;
    for (double n : {1.0, 2.0, 10.0, 1000.0, 9998.0}) {
      const LinOp U = rotating_transform(a, sa, n * period);
      inv = std::max(inv, max_abs(U.adjoint() * eff.problem * U - eff.problem));
    }
    c6.checks.push_back(check_below("max_n |U^dag H_P^eff U - H_P^eff|", inv, 1e-10));

    const MipEncoding enc = encode(*fig.mip, fig.driver);
    const HilbertSpace sf = enc.space(fig.truncation);
    const LinOp HP = enc.problem_hamiltonian(sf);
    const SiteOperators ops(sf);
    double comm = 0.0;
    for (std::size_t i = 0; i < 2; ++i) comm = std::max(comm, max_abs(commutator(HP, ops.sz(i))));
    c6.checks.push_back(check_below("max_i |[H_P, sigma_z_i]|", comm, 1e-12));

    double ladder = 0.0;
    for (std::size_t n = 2; n <= 16; ++n) {
      Matrix expected = Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      expected(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(n - 1)) = 1.0 - static_cast<double>(n);
      ladder = std::max(ladder,
                        (commutator(annihilation(n), creation(n)).matrix() - expected).cwiseAbs().maxCoeff());
    }
    c6.checks.push_back(check_below("max_N |[a, a^dag] - diag(1,..,1,1-N)|", ladder, 1e-12));

    double herm = 0.0;
    auto track = [&](const LinOp& op) { herm = std::max(herm, op.hermiticity_error()); };
    for (const HybridProblemSpec& s : {a, generic_spec()}) {
      const HilbertSpace sp = space_for(s, 5);
      track(build_problem_hamiltonian(s, sp));
      track(build_driver_hamiltonian(s, sp));
      const EffectiveHamiltonians e = build_effective(s, sp);
      track(e.problem);
      track(e.driver);
      for (double t : {0.0, 0.37, 5.0, 123.4}) {
        const LabFrameHamiltonian lab = build_lab_frame(s, sp, ScheduleSample::at(t, 200.0));
        track(lab.problem);
        track(lab.driver);
        track(lab.total);
      }
    }
    track(HP);
    track(enc.driver_hamiltonian(sf));
    c6.checks.push_back(check_below("max |H - H^dag| over builders", herm, 1e-12));
  });

  Criterion c7{7, "results converge in truncation and tolerance (both presets)", {}, {}};
  ConvergenceReport fig_conv;
  timed(c7, [&] {
    const ExperimentResult baseline = fig_run;
    fig_conv = convergence_report(fig, &baseline);
    add_convergence(c7, fig_conv);
    ExperimentConfig app8 = app;
    app8.truncation = 8;
    add_convergence(c7, convergence_report(app8));
  });

  Criterion c8{8, "anneal is adiabatic and longer anneals do no worse (paper-fig1-3)", {}, {}};
  timed(c8, [&] {
    c8.checks.push_back(check_below("max_s adiabaticity metric (T=4000)", fig_run.max_adiabaticity, 0.1));
    c8.notes.push_back("max metric at s = " + fmt("%.3f", fig_run.max_adiabaticity_s));

    // "Within integrator tolerance": the nominal tolerance, or the measured
    // tolerance-halving change of the excess at T=4000 when that is larger.
    double slack = fig.tol;
    for (const auto& row : fig_conv.rows)
      if (row.observable == "final_excess_energy") slack = std::max(slack, row.delta_tolerance);
    std::vector<double> excess;
    for (double T : {1000.0, 2000.0}) {
      ExperimentConfig cfg = fig;
      cfg.total_time = T;
      cfg.adiabaticity_points = 0;
      const MipAnnealResult r = run_mip_anneal(cfg);
      excess.push_back(r.final_energy - r.ground_energy);
    }
    excess.push_back(fig_run.final_energy - fig_run.ground_energy);
    c8.notes.push_back("excess at T = 1000, 2000, 4000: " + fmt("%.6e", excess[0]) + ", " + fmt("%.6e", excess[1]) +
                       ", " + fmt("%.6e", excess[2]) + " (slack " + fmt("%.1e", slack) + ")");
    c8.checks.push_back(check_below("excess(2000) - excess(1000)", excess[1] - excess[0], slack));
    c8.checks.push_back(check_below("excess(4000) - excess(2000)", excess[2] - excess[1], slack));
  });

  criteria = {c1, c2, c3, c4, c5, c6, c7, c8};
  bool all = true;
  for (const auto& c : criteria) {
    all = all && c.pass();
    std::printf("%s  criterion %d: %s  [%.1f s]\n", c.pass() ? "PASS" : "FAIL", c.id, c.title.c_str(), c.seconds);
  }
  std::printf("\n");
  for (const auto& c : criteria) {
    std::printf("criterion %d details:\n", c.id);
    for (const auto& k : c.checks)
      std::printf("  %s %s = %.6e %s %.3e\n", k.pass ? "ok  " : "FAIL", k.name.c_str(), k.value, k.relation.c_str(),
                  k.limit);
    for (const auto& n : c.notes) std::printf("  note: %s\n", n.c_str());
  }
  std::printf("\n%s: %zu/%zu criteria pass; artifacts in %s\n", all ? "ACCEPTED" : "NOT ACCEPTED",
              static_cast<std::size_t>(std::count_if(criteria.begin(), criteria.end(),
                                                     [](const Criterion& c) { return c.pass(); })),
              criteria.size(), out_dir.string().c_str());
  return all ? 0 : 1;
}
