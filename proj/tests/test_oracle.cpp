#include <catch2/catch.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "hqa/oracle.hpp"

using namespace hqa;

namespace {

// Stationarity of the two-variable sector cost, solved by Cramer's rule.
std::vector<double> cramer_k2(const MipInstance& in, const BinaryVector& y) {
  const double l = in.penalty;
  const double a11 = 2 * in.d[0] + 2 * l, a12 = 2 * l, a22 = 2 * in.d[1] + 2 * l;
  const double r1 = -(in.c[0] - in.c_tilde[0] * y[0]) + 2 * l * in.A;
  const double r2 = -(in.c[1] - in.c_tilde[1] * y[1]) + 2 * l * in.A;
  const double det = a11 * a22 - a12 * a12;
  return {(r1 * a22 - a12 * r2) / det, (a11 * r2 - a12 * r1) / det};
}

MipInstance random_instance(std::mt19937& rng, std::size_t k) {
  std::uniform_real_distribution<double> u(0.1, 3.0);
  MipInstance in;
  in.A = u(rng);
  in.penalty = 5.0 * u(rng);
  for (std::size_t i = 0; i < k; ++i) {
    in.b.push_back(u(rng));
    in.c.push_back(u(rng));
    in.c_tilde.push_back(u(rng));
    in.d.push_back(u(rng));
  }
  return in;
}

}  // namespace

TEST_CASE("one-variable sector has the calculus minimizer", "[oracle]") {
  MipInstance in;
  in.A = 1.0;
  in.b = {0.0};
  in.c = {0.0};
  in.c_tilde = {0.0};
  in.d = {1.0};
  in.penalty = 1.0;
  const SectorSolution s = solve_sector(in, {0});
  CHECK(std::abs(s.x[0] - 0.5) < 1e-15);
  CHECK(std::abs(s.cost - 0.5) < 1e-15);
  CHECK(s.nonnegative);
}

TEST_CASE("two-line instance sectors match the closed-form solve", "[oracle]") {
  const MipInstance in = MipInstance::production_planning_k2();
  const OracleSolution sol = solve(in);
  REQUIRE(sol.sectors.size() == 4);
  for (const auto& s : sol.sectors) {
    const auto x = cramer_k2(in, s.y);
    CHECK(std::abs(s.x[0] - x[0]) < 1e-12);
    CHECK(std::abs(s.x[1] - x[1]) < 1e-12);
    CHECK(s.stationarity_residual < 1e-10);
    CHECK(s.condition_number >= 1.0);
  }
  const SectorSolution& best = sol.global();
  CHECK(best.y == BinaryVector{1, 0});
  CHECK(std::abs(best.x[0] - 1.0726) < 1e-4);
  CHECK(std::abs(best.x[1] - 0.6814) < 1e-4);
  CHECK(sol.sectors[sol.best].y == BinaryVector{1, 0});
}

TEST_CASE("sector enumeration order has y_1 most significant", "[oracle]") {
  const OracleSolution sol = solve(MipInstance::production_planning_k2());
  CHECK(sol.sectors[0].y == BinaryVector{0, 0});
  CHECK(sol.sectors[1].y == BinaryVector{0, 1});
  CHECK(sol.sectors[2].y == BinaryVector{1, 0});
  CHECK(sol.sectors[3].y == BinaryVector{1, 1});
}

TEST_CASE("investment never pays without a cost reduction", "[oracle]") {
  MipInstance in = MipInstance::production_planning_k2();
  in.c_tilde = {0.0, 0.0};
  CHECK(solve(in).global().y == BinaryVector{0, 0});
}

TEST_CASE("asymmetric costs break the symmetry of x", "[oracle]") {
  MipInstance in = MipInstance::production_planning_k2();
  in.d = {3.0, 3.0};
  in.c = {2.0, 2.5};
  in.c_tilde = {0.0, 0.0};
  const auto x = solve_sector(in, {0, 0}).x;
  CHECK(std::abs(x[0] - x[1]) > 1e-3);
}

TEST_CASE("exact ties go to the lexicographically smallest y", "[oracle]") {
  MipInstance in;
  in.A = 2.0;
  in.penalty = 10.0;
  in.b = {1.5, 1.5};
  in.c = {2.0, 2.0};
  in.c_tilde = {1.9, 1.9};
  in.d = {3.0, 3.0};
  const OracleSolution sol = solve(in);
  CHECK(std::abs(sol.sectors[1].cost - sol.sectors[2].cost) < 1e-12);
  // one investment pays off, two do not
  REQUIRE(sol.sectors[1].cost < sol.sectors[0].cost);
  REQUIRE(sol.sectors[1].cost < sol.sectors[3].cost);
  CHECK(sol.best == 1);
  CHECK(sol.global().y == BinaryVector{0, 1});
}

TEST_CASE("grid search never beats the closed form", "[oracle][property]") {
  const MipInstance in = MipInstance::production_planning_k2();
  const OracleSolution sol = solve(in);
  for (const auto& s : sol.sectors) {
    const GridResult g = grid_check(in, s.y, 0.0, 2.0, 400);
    CHECK(g.cost >= s.cost - 1e-9);
    // nearest grid point is within h/2 per axis; f - f* <= lambda_max |dx|^2 / 2,
    // and the trace bounds lambda_max of the positive definite Hessian
    const double h = 2.0 / 399.0;
    const double trace = 2 * (in.d[0] + in.d[1]) + 2 * 2 * in.penalty;
    CHECK(g.cost - s.cost <= 0.5 * trace * 2 * (h / 2) * (h / 2) + 1e-12);
  }
  // a finer grid gets at least as close on the winning sector
  const auto coarse = grid_check(in, sol.global().y, 0.0, 2.0, 100);
  const auto fine = grid_check(in, sol.global().y, 0.0, 2.0, 800);
  CHECK(fine.cost - sol.global().cost <= coarse.cost - sol.global().cost + 1e-15);
}

TEST_CASE("grid containing the minimizer agrees exactly", "[oracle]") {
  MipInstance in;
  in.A = 1.0;
  in.b = {0.0};
  in.c = {0.0};
  in.c_tilde = {0.0};
  in.d = {1.0};
  in.penalty = 1.0;
  const GridResult g = grid_check(in, {0}, 0.0, 1.0, 101);  // contains x = 0.5
  CHECK(std::abs(g.x[0] - 0.5) < 1e-15);
  CHECK(std::abs(g.cost - 0.5) < 1e-15);
  CHECK_THROWS_AS(grid_check(in, {0}, 0.0, 1.0, 99), error);
  CHECK_THROWS_AS(grid_check(in, {0}, 1.0, 1.0, 100), error);
}

TEST_CASE("global optimum is below random feasible points", "[oracle][property]") {
  const MipInstance in = MipInstance::production_planning_k2();
  const double best = solve(in).global().cost;
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> ux(-1.0, 3.0);
  std::bernoulli_distribution uy(0.5);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::vector<int> y{uy(rng) ? 1 : 0, uy(rng) ? 1 : 0};
    const std::vector<double> x{ux(rng), ux(rng)};
    CHECK(best <= penalized_cost(in, y, x));
  }
}

TEST_CASE("random instances: stationarity and sector optimality", "[oracle][property]") {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const MipInstance in = random_instance(rng, 1 + trial % 4);
    const OracleSolution sol = solve(in);
    for (const auto& s : sol.sectors) {
      CHECK(s.stationarity_residual < 1e-10);
      CHECK(sol.global().cost <= s.cost);
    }
  }
}

TEST_CASE("oracle errors", "[oracle]") {
  std::mt19937 rng(5);
  CHECK_THROWS_AS(solve(random_instance(rng, 21)), error);
  try {
    solve(random_instance(rng, 21));
  } catch (const error& e) {
    CHECK(e.code() == errc::too_many_sectors);
  }
  MipInstance bad = MipInstance::production_planning_k2();
  bad.d[0] = -1.0;
  try {
    solve_sector(bad, {0, 0});
    FAIL("expected ill_posed_instance");
  } catch (const error& e) {
    CHECK(e.code() == errc::ill_posed_instance);
  }
}

TEST_CASE("negative minimizers are flagged and projected on request", "[oracle]") {
  MipInstance in;
  in.A = 1.0;
  in.penalty = 2.0;
  in.b = {0.0, 0.0};
  in.c = {0.0, 8.0};
  in.c_tilde = {0.0, 0.0};
  in.d = {1.0, 1.0};
  const SectorSolution free = solve_sector(in, {0, 0});
  CHECK_FALSE(free.nonnegative);

  const SectorSolution proj = solve_sector_nonnegative(in, {0, 0});
  CHECK(proj.nonnegative);
  for (double x : proj.x) CHECK(x >= 0.0);
  const GridResult g = grid_check(in, {0, 0}, 0.0, 2.0, 401);
  CHECK(proj.cost <= g.cost + 1e-12);
  CHECK(g.cost - proj.cost < 1e-3);
}
