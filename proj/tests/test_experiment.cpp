#include <catch2/catch.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hqa/experiment.hpp"

using namespace hqa;
namespace fs = std::filesystem;

namespace {

config_error parse_error(const std::string& text) {
  try {
    parse_experiment(text);
  } catch (const config_error& e) {
    return e;
  }
  FAIL("expected a config_error for:\n" << text);
  throw;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* tiny_anneal = R"(
name = "tiny"
mode = "mip-anneal"
truncation = 4
T = 5.0
samples = 11
plots = false

[mip]
A = 1.0
b = [0.3]
c = [1.0]
c_tilde = [0.5]
d = [2.0]
penalty = 4.0

[driver]
B = [1.0]
omega = [1.0]
)";

}  // namespace

TEST_CASE("presets carry the reference parameters", "[experiment]") {
  const ExperimentConfig fig = preset("paper-fig1-3");
  CHECK(fig.mode == Mode::mip_anneal);
  CHECK(fig.truncation == 8);
  CHECK(fig.total_time == 4000.0);
  const MipInstance& m = *fig.mip;
  CHECK(m.A == 2.0);
  CHECK(m.b == std::vector<double>{1.0, 2.0});
  CHECK(m.c == std::vector<double>{2.1, 2.2});
  CHECK(m.c_tilde == std::vector<double>{1.8, 2.0});
  CHECK(m.d == std::vector<double>{3.3, 3.8});
  CHECK(m.penalty == 15.0);
  CHECK(fig.driver.B == std::vector<double>{1.0, 1.0});
  CHECK(fig.driver.omega == std::vector<double>{1.0, 1.0});

  const ExperimentConfig app = preset("paper-appendix");
  CHECK(app.mode == Mode::appendix_lab_vs_eff);
  const HybridProblemSpec& s = *app.hybrid;
  CHECK(s.h == std::vector<double>{153.7});
  CHECK(s.omega_c == std::vector<double>{154.1});
  CHECK(s.B == std::vector<double>{0.55});
  CHECK(s.lambda_drive == std::vector<double>{0.30});
  CHECK(s.g(0, 0) == 0.15);
  CHECK(s.g_tilde(0, 0) == 0.25);
  CHECK(*s.omega_mw == 153.9);
  CHECK(app.total_time == 408.2);

  CHECK_THROWS_AS(preset("nope"), config_error);
  for (const auto& name : preset_names()) CHECK_NOTHROW(preset(name).validate());
}

TEST_CASE("config files parse and override a preset", "[experiment][config]") {
  const ExperimentConfig cfg = parse_experiment(R"(
# a comment
base = "paper-fig1-3"
name = "short"   # trailing comment
T = 100
truncation = 6

[mip]
penalty = 20
)");
  CHECK(cfg.name == "short");
  CHECK(cfg.total_time == 100.0);
  CHECK(cfg.truncation == 6);
  CHECK(cfg.mip->penalty == 20.0);
  CHECK(cfg.mip->d == std::vector<double>{3.3, 3.8});

  const ExperimentConfig h = parse_experiment(R"(
mode = "appendix-lab-vs-eff"
T = 10
[hybrid]
qubits = 2
resonators = 1
h = [1.0, 2.0]
J = [[0, 0.1], [0, 0]]
g = [[0.1], [0.2]]
omega_c = [3.0]
B = [0.5, 0.5]
omega_mw = 2.5
)");
  CHECK(h.hybrid->J(0, 1) == 0.1);
  CHECK(h.hybrid->g(1, 0) == 0.2);
  CHECK(h.hybrid->lambda_drive == std::vector<double>{0.0});
}

TEST_CASE("config errors name the line and the field", "[experiment][config]") {
  auto e = parse_error("name = \"x\"\nT = 1.2.3\n");
  CHECK(e.line() == 2);
  CHECK(e.field() == "T");

  e = parse_error("base = \"paper-fig1-3\"\n\nfoo = 1\n");
  CHECK(e.line() == 3);
  CHECK(e.field() == "foo");

  e = parse_error("T = 1\nT = 2\n");
  CHECK(e.line() == 2);

  e = parse_error("[mip]\nA = 1\nb = [1, 2\n");
  CHECK(e.line() == 3);

  e = parse_error("mode = \"oracle-only\"\n[mip]\nA = 1\nb = [1]\nc = [1]\nd = [1]\n");
  CHECK(e.field() == "mip.c_tilde");

  e = parse_error("mode = \"appendix-lab-vs-eff\"\n[hybrid]\nqubits = 1\nresonators = 1\ng = [[1], [2]]\n");
  CHECK(e.line() == 5);
  CHECK(e.field() == "hybrid.g");

  e = parse_error("mode = \"sideways\"\n");
  CHECK(e.line() == 1);

  e = parse_error("base = \"paper-fig1-3\"\ntruncation = 1\n");
  CHECK(e.line() == 2);
  CHECK(e.field() == "truncation");

  e = parse_error("base = \"paper-fig1-3\"\n[driver]\nB = [1, 1, 1]\n");
  CHECK(e.line() == 3);
  CHECK(e.field() == "driver.B");

  e = parse_error("base = \"paper-fig1-3\"\n[mip]\nd = [3.3, -1]\n");
  CHECK(e.field() == "mip");
}

TEST_CASE("oracle-only run", "[experiment]") {
  ExperimentConfig cfg = preset("paper-fig1-3");
  cfg.mode = Mode::oracle_only;
  const ExperimentResult r = run_experiment(cfg);
  const auto& o = std::get<OracleResult>(r);
  CHECK(o.oracle.global().y == BinaryVector{1, 0});
  REQUIRE(o.grid);
  CHECK(o.grid->cost >= o.oracle.global().cost - 1e-9);
  CHECK(all_checks_pass(r));

  const json s = summary_json(r);
  CHECK(s["mode"] == "oracle-only");
  CHECK(s["pass"] == true);
}

TEST_CASE("energy-diagram run on the rotating-frame pair", "[experiment]") {
  ExperimentConfig cfg = preset("paper-appendix");
  cfg.mode = Mode::energy_diagram;
  cfg.truncation = 6;
  cfg.diagram_points = 21;
  const auto r = std::get<DiagramResult>(run_experiment(cfg));
  CHECK(r.diagram.s.size() == 21);
  CHECK(r.diagram.min_gap > 0.0);
  CHECK(r.diagram.energies.front().size() == 4);
}

TEST_CASE("mip-anneal artifacts are deterministic", "[experiment]") {
  const ExperimentConfig cfg = parse_experiment(tiny_anneal);
  const fs::path root = fs::temp_directory_path() / "hqa_test_artifacts";
  fs::remove_all(root);
  const auto r1 = run_experiment(cfg);
  const auto r2 = run_experiment(cfg);
  write_artifacts(r1, root / "a");
  const auto files = write_artifacts(r2, root / "b");
  CHECK(files == std::vector<std::string>{"trajectory.csv", "summary.json"});
  const std::string a = slurp(root / "a" / "trajectory.csv");
  CHECK(a == slurp(root / "b" / "trajectory.csv"));
  CHECK(a.rfind("t,s,expect_HP,expect_y1,expect_x1,norm\n", 0) == 0);
  CHECK(std::count(a.begin(), a.end(), '\n') == 12);
  fs::remove_all(root);

  const auto& m = std::get<MipAnnealResult>(r1);
  CHECK(m.trajectory.times.size() == 11);
  CHECK(m.final_energy >= m.ground_energy - 1e-9);
}

TEST_CASE("convergence report on an oracle-only run has zero deltas", "[experiment]") {
  ExperimentConfig cfg = preset("paper-fig1-3");
  cfg.mode = Mode::oracle_only;
  const ConvergenceReport rep = convergence_report(cfg);
  REQUIRE(!rep.rows.empty());
  for (const auto& row : rep.rows) {
    CHECK(row.delta_truncation == 0.0);
    CHECK(row.delta_tolerance == 0.0);
  }
  CHECK(rep.pass());
  const std::string table = convergence_table(rep);
  CHECK(table.rfind("observable,base,doubled_truncation,halved_tolerance,delta_truncation,delta_tolerance,pass\n", 0) == 0);
}

TEST_CASE("checks and output directories", "[experiment]") {
  CHECK(check_below("a", 1.0, 2.0).pass);
  CHECK_FALSE(check_below("a", 2.0, 2.0).pass);
  CHECK_FALSE(check_below("a", std::nan(""), 2.0).pass);
  CHECK(check_above("a", 3.0, 2.0).pass);

  ExperimentConfig cfg;
  cfg.name = "x";
  cfg.output = "somewhere";
  CHECK(default_output_dir(cfg) == fs::path("somewhere"));
  CHECK(parse_mode("energy-diagram") == Mode::energy_diagram);
  CHECK(mode_name(Mode::appendix_lab_vs_eff) == "appendix-lab-vs-eff");
}
