#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mspmdp/examples.hpp"
#include "mspmdp/lipschitz.hpp"
#include "mspmdp/oracle.hpp"
#include "mspmdp/solver.hpp"

#include <random>

using namespace mspmdp;

namespace {

SolverConfig cfg() {
  SolverConfig c;
  c.tolerance = 1e-6;
  return c;
}

}  // namespace

TEST_CASE("stage minimization of a linear objective over a box") {
  FeasibleRegion region;
  region.box_lower = Vector::Constant(2, -5.0);
  region.box_upper = Vector::Constant(2, 5.0);
  const StageResult r =
      stage_minimize([](const Vector& x) { return x.sum(); }, region, cfg());
  CHECK(r.x[0] == doctest::Approx(-5.0).epsilon(1e-9));
  CHECK(r.x[1] == doctest::Approx(-5.0).epsilon(1e-9));
  CHECK(r.value == doctest::Approx(-10.0).epsilon(1e-9));
}

TEST_CASE("stage minimization respects affine constraints") {
  // The stage-2 subproblem of the constrained linear instance at the origin:
  // minimize x over x >= (0 + 0 + 0 - 11)/10, so the optimum is -1.1 per coordinate.
  const BuiltExample ex = build_example("4.2a", false);
  const ProblemInstance& inst = ex.instance;
  const Vector s2 = Vector::Zero(2), x1 = Vector::Zero(2), xi2 = Vector::Zero(2);
  std::vector<Vector> hist{Vector::Zero(2), xi2};
  FeasibleRegion region;
  region.box_lower = Vector::Constant(2, -5.0);
  region.box_upper = Vector::Constant(2, 5.0);
  region.residual = [&](const Vector& x) {
    return feasibility_residual(inst, 2, s2, x, x1, hist).maxCoeff();
  };
  const StageResult r =
      stage_minimize([](const Vector& x) { return x.sum(); }, region, cfg());
  CHECK(r.x[0] == doctest::Approx(-1.1).epsilon(1e-7));
  CHECK(r.x[1] == doctest::Approx(-1.1).epsilon(1e-7));
}

TEST_CASE("stage minimization on the quadratic constraint") {
  const BuiltExample ex = build_example("4.3", false);
  const Vector s2 = Vector::Zero(2), x1 = Vector::Zero(2), xi2 = Vector::Zero(2);
  std::vector<Vector> hist{Vector::Zero(2), xi2};
  FeasibleRegion region;
  region.box_lower = Vector::Constant(2, -5.0);
  region.box_upper = Vector::Constant(2, 5.0);
  region.residual = [&](const Vector& x) {
    return feasibility_residual(ex.instance, 2, s2, x, x1, hist).maxCoeff();
  };
  const StageResult r =
      stage_minimize([](const Vector& x) { return x.sum(); }, region, cfg());
  CHECK(r.x[0] == doctest::Approx(-std::sqrt(11.0)).epsilon(1e-6));
  CHECK(r.x[1] == doctest::Approx(-std::sqrt(11.0)).epsilon(1e-6));
}

TEST_CASE("empty feasible interval reports infeasibility") {
  FeasibleRegion region;
  region.box_lower = Vector::Constant(1, -1.0);
  region.box_upper = Vector::Constant(1, 1.0);
  region.residual = [](const Vector&) { return 1.0; };
  CHECK_THROWS_AS((void)stage_minimize([](const Vector& x) { return x[0]; }, region, cfg()),
                  Error);
}

TEST_CASE("nested solve of the worked linear instances") {
  SUBCASE("box-only instance hits the stated values") {
    const BuiltExample base = build_example("4.1", false);
    const SolveReport r =
        solve_auto(base.instance, Branching::uniform(2, 3, 3), QuadratureRule::Midpoint, cfg());
    CHECK(std::abs(r.value - (-78.0)) <= 0.05);
    const BuiltExample pert = build_example("4.1", true);
    const SolveReport rp =
        solve_auto(pert.instance, Branching::uniform(2, 3, 3), QuadratureRule::Midpoint, cfg());
    CHECK(std::abs(rp.value - (-77.92)) <= 0.05);
  }
  SUBCASE("constrained instance") {
    const BuiltExample base = build_example("4.2a", false);
    const SolveReport r =
        solve_auto(base.instance, Branching::uniform(2, 3, 3), QuadratureRule::Midpoint, cfg());
    CHECK(std::abs(r.value - (-62.12)) <= 0.05);
  }
  SUBCASE("reported value matches the recorded policy") {
    const BuiltExample base = build_example("4.2a", false);
    const SolveReport r =
        solve_auto(base.instance, Branching::uniform(2, 2, 2), QuadratureRule::GaussLegendre, cfg());
    double replay = 0.0;
    for (const auto& c : r.coordinates) {
      const ProblemInstance slice = slice_coordinate(base.instance, 0);
      replay += evaluate_policy(slice, c.tree, c.policy);
    }
    CHECK(std::abs(replay - r.value) <= 1e-6);
  }
}

TEST_CASE("policy evaluation") {
  const BuiltExample base = build_example("4.1", false);
  const ProblemInstance slice = slice_coordinate(base.instance, 0);
  const ScenarioTree tree =
      build_joint_tree(slice, Branching::uniform(2, 1, 1), QuadratureRule::Midpoint);
  Policy constant;
  for (int i = 0; i < tree.size(); ++i)
    if (tree[i].kind == NodeKind::Root || tree[i].kind == NodeKind::ExoBranch)
      constant.decisions[i] = Vector::Constant(1, -5.0);
  // Exact-mean tree, all -5 policy: the coordinate value is -39.
  CHECK(2.0 * evaluate_policy(slice, tree, constant) == doctest::Approx(-78.0).epsilon(1e-9));

  SUBCASE("zero-cost instance evaluates to zero") {
    ProblemInstance zero = slice;
    for (int t = 0; t <= 2; ++t) {
      AffineCost c;
      c.a_s = Vector::Zero(1);
      c.a_x = Vector::Zero(1);
      c.a_z = Vector::Zero(1);
      if (t >= 1) c.a_xi = Vector::Zero(t);
      zero.stages[static_cast<size_t>(t)].cost = c;
    }
    CHECK(evaluate_policy(zero, tree, constant) == doctest::Approx(0.0));
  }
  SUBCASE("infeasible decisions are rejected") {
    Policy bad = constant;
    bad.decisions[tree.root()] = Vector::Constant(1, 7.0);
    CHECK_THROWS_AS((void)evaluate_policy(slice, tree, bad), Error);
  }
}

TEST_CASE("analytic policies reproduce the stated values") {
  CHECK(std::abs(analytic_solve("4.2a", false, 16).value - (-62.12)) <= 0.02);
  CHECK(std::abs(analytic_solve("4.2a", true, 16).value - (-62.0296)) <= 0.02);
  CHECK(std::abs(analytic_solve("4.3", false, 16).value - (-71.36)) <= 0.02);
  CHECK(std::abs(analytic_solve("4.3", true, 16).value - (-71.28)) <= 0.02);
  CHECK(std::abs(analytic_solve("4.1", false, 8).value - (-78.0)) <= 1e-9);
  CHECK_THROWS_AS((void)analytic_solve("nope", false, 8), Error);
}

TEST_CASE("time consistency against grid enumeration") {
  const BuiltExample base = build_example("4.1", false);
  const ProblemInstance slice = slice_coordinate(base.instance, 0);
  const ScenarioTree tree =
      build_joint_tree(slice, Branching::uniform(2, 2, 2), QuadratureRule::GaussLegendre);
  const SolveReport nested = solve_nested(slice, tree, cfg());
  const SolveReport grid = brute_force_solve(slice, tree, 21);
  CHECK(std::abs(nested.value - grid.value) <= 1e-6);
}

TEST_CASE("sampled value functions obey the structural properties") {
  const BuiltExample base = build_example("4.2a", false);
  const ProblemInstance slice = slice_coordinate(base.instance, 0);
  const ScenarioTree tree =
      build_joint_tree(slice, Branching::uniform(2, 2, 2), QuadratureRule::GaussLegendre);
  const RegularityData reg = *slice.regularity;
  const ConstantTable table = value_function_constants(reg, 2);

  // An xi node per stage.
  std::vector<int> xi_nodes;
  for (int i = 0; i < tree.size() && xi_nodes.size() < 2; ++i)
    if (tree[i].kind == NodeKind::ExoBranch &&
        (xi_nodes.empty() || tree[i].stage != tree[xi_nodes.back()].stage))
      xi_nodes.push_back(i);
  REQUIRE(xi_nodes.size() == 2);

  std::mt19937_64 rng(23);
  auto u = [&rng](double lo, double hi) { return lo + (hi - lo) * ((rng() >> 11) * 0x1.0p-53); };
  for (int node : xi_nodes) {
    const int t = tree[node].stage;
    const double L_t = table.L[t - 1];
    for (int trial = 0; trial < 60; ++trial) {
      const Vector s1 = Vector::Constant(1, u(-3, 3)), s2 = Vector::Constant(1, u(-3, 3));
      const Vector x1 = Vector::Constant(1, u(-5, 5)), x2 = Vector::Constant(1, u(-5, 5));
      const double v1 = stage_value(slice, tree, node, s1, x1, cfg());
      const double v2 = stage_value(slice, tree, node, s2, x2, cfg());
      const double vm = stage_value(slice, tree, node, 0.5 * (s1 + s2), 0.5 * (x1 + x2), cfg());
      CHECK(vm <= 0.5 * (v1 + v2) + 1e-6);  // midpoint convexity
      CHECK(std::abs(v1 - v2) <= L_t * (inf_dist(s1, s2) + inf_dist(x1, x2)) + 1e-6);
      // monotone nondecrease in the previous state
      const Vector s_up = s1.array() + u(0.0, 1.0);
      CHECK(stage_value(slice, tree, node, s_up, x1, cfg()) >= v1 - 1e-6);
    }
  }
}

TEST_CASE("memoization grid stays within its reported error") {
  const BuiltExample base = build_example("4.2a", false);
  const ProblemInstance slice = slice_coordinate(base.instance, 0);
  const ScenarioTree tree =
      build_joint_tree(slice, Branching::uniform(2, 2, 2), QuadratureRule::GaussLegendre);
  SolverConfig exact = cfg();
  SolverConfig memo = cfg();
  memo.memo_grid = 0.25;
  const SolveReport re = solve_nested(slice, tree, exact);
  const SolveReport rm = solve_nested(slice, tree, memo);
  CHECK(rm.interpolation_error > 0.0);
  // The value functions are Lipschitz with modulus ~5; the blended value must
  // stay within modulus x reported cell error.
  CHECK(std::abs(re.value - rm.value) <= 5.0 * rm.interpolation_error + 1e-6);
}
