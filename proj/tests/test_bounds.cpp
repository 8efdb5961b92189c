#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mspmdp/bounds.hpp"
#include "mspmdp/examples.hpp"
#include "mspmdp/oracle.hpp"

#include <random>

using namespace mspmdp;

namespace {

RegularityData reg_of(int T, double L_C, double L_S, double L_g, double rho, double A,
                      double L_Q = 1.0) {
  RegularityData reg;
  reg.L_C = Vector::Constant(T, L_C);
  reg.L_S = Vector::Constant(T, L_S);
  reg.L_g = Vector::Constant(T, L_g);
  reg.rho = rho;
  reg.A = A;
  reg.L_Q = Vector::Constant(T, L_Q);
  return reg;
}

}  // namespace

TEST_CASE("endogenous value bound") {
  SUBCASE("zero metric inputs give zero") {
    const ConstantTable t = endogenous_coeffs(reg_of(2, 2.0, 1.0, 1.0, 40.0, 10.0), 2);
    CHECK(endo_bounds(t, Vector::Zero(3), BoundMode::Value) == doctest::Approx(0.0));
  }
  SUBCASE("direct T = 1 substitution") {
    const ConstantTable t = endogenous_coeffs(reg_of(1, 2.0, 1.0, 1.0, 40.0, 10.0), 1);
    REQUIRE(t.L_hat[0] == doctest::Approx(4.5));
    Vector dk(2);
    dk << 0.1, 0.2;
    CHECK(endo_bounds(t, dk, BoundMode::Value) == doctest::Approx(4.5 * 0.1 + 2.0 * 0.2));
  }
  SUBCASE("solution mode needs the growth constant") {
    const ConstantTable t = endogenous_coeffs(reg_of(1, 2.0, 1.0, 1.0, 40.0, 10.0), 1);
    CHECK_THROWS_AS((void)endo_bounds(t, Vector::Zero(2), BoundMode::Solution), Error);
    CHECK(endo_bounds(t, Vector::Zero(2), BoundMode::Solution, 1.0) == doctest::Approx(0.0));
  }
}

TEST_CASE("global exogenous bounds") {
  const ConstantTable t = exogenous_global_coeffs(reg_of(2, 2.0, 1.0, 1.0, 40.0, 10.0), 2);
  SUBCASE("zero metric gives zero") {
    CHECK(exo_global_bounds(t, 0.0, 0.0, BoundMode::Value) == doctest::Approx(0.0));
  }
  SUBCASE("hand-built substitution") {
    ConstantTable hand;
    hand.T = 1;
    hand.L_theta = 2.0;
    hand.L_sigma = 1.0;
    hand.L_X_global = 0.0;
    const double v = exo_global_bounds(hand, 0.1, 0.1, BoundMode::Solution, 1.0, 1.0);
    CHECK(v == doctest::Approx(0.3));  // 0 + ((2 + 0 + 1) 0.1 / 1)^1
  }
  SUBCASE("missing growth"){
    CHECK_THROWS_AS((void)exo_global_bounds(t, 0.1, 0.1, BoundMode::Solution), Error);
  }
}

TEST_CASE("stagewise bounds reproduce the worked values") {
  SUBCASE("constrained linear instance") {
    const ConstantTable t = full_constant_table(reg_of(2, 2.0, 1.0, 1.0, 40.0, 10.0), 2);
    Vector cond(2);
    cond << 1.0 / 75.0, 1.0 / 75.0;
    CHECK(exo_stagewise_bounds(t, cond, BoundMode::Value) ==
          doctest::Approx(0.16).epsilon(1e-12));
  }
  SUBCASE("nonlinear instance") {
    const ConstantTable t = full_constant_table(reg_of(2, 2.0, 1.0, 1.0, 5.0, 10.0), 2);
    Vector cond(2);
    cond << 1.0 / 75.0, 1.0 / 150.0;
    CHECK(exo_stagewise_bounds(t, cond, BoundMode::Value) ==
          doctest::Approx(11.0 / 15.0).epsilon(1e-12));
  }
  SUBCASE("box-only instance in the large-exponent limit") {
    const ConstantTable t = full_constant_table(reg_of(2, 2.0, 1.0, 0.0, 5.0, 10.0), 2);
    Vector cond(2);
    cond << 1.0 / 75.0, 1.0 / 75.0;
    CHECK(exo_stagewise_bounds(t, cond, BoundMode::Value) ==
          doctest::Approx(8.0 / 75.0).epsilon(1e-12));
  }
}

TEST_CASE("comparison bounds") {
  CHECK(comparison_bounds(ComparisonKind::Nested, ComparisonInputs{4.0, 1.0, 0.04, 0.0, 0.0}) ==
        doctest::Approx(0.16));
  CHECK(comparison_bounds(ComparisonKind::Filtration,
                          ComparisonInputs{18.0, 1.0, 0.0, 0.030, 0.203}) ==
        doctest::Approx(4.194));
  CHECK(comparison_bounds(ComparisonKind::Nested, ComparisonInputs{1.0, 1.0, 0.0, 0.0, 0.0}) ==
        doctest::Approx(0.0));
  CHECK_THROWS_AS(
      (void)comparison_bounds(ComparisonKind::Nested, ComparisonInputs{1.0, -1.0, 0.1, 0, 0}),
      Error);
}

TEST_CASE("stagewise conditional metric") {
  SUBCASE("identical processes give zeros") {
    const BuiltExample ex = build_example("4.1", false);
    const Vector d = stagewise_conditional_metric(ex.instance.exogenous, ex.instance.exogenous, 6);
    CHECK(d.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  }
  SUBCASE("worked perturbations") {
    const BuiltExample base = build_example("4.1", false);
    const BuiltExample pert = build_example("4.1", true);
    const Vector d = stagewise_conditional_metric(base.instance.exogenous, pert.instance.exogenous, 6);
    CHECK(d[0] == doctest::Approx(1.0 / 75.0).epsilon(1e-9));
    CHECK(d[1] == doctest::Approx(1.0 / 75.0).epsilon(1e-9));
    const BuiltExample base3 = build_example("4.3", false);
    const BuiltExample pert3 = build_example("4.3", true);
    const Vector d3 =
        stagewise_conditional_metric(base3.instance.exogenous, pert3.instance.exogenous, 6);
    CHECK(d3[0] == doctest::Approx(1.0 / 75.0).epsilon(1e-9));
    CHECK(d3[1] == doctest::Approx(1.0 / 150.0).epsilon(1e-9));
  }
}

TEST_CASE("bound report on identical instances is all zero") {
  const BuiltExample base = build_example("4.2a", false);
  BoundReportConfig cfg;
  cfg.branching = Branching::uniform(2, 3, 3);
  cfg.rule = QuadratureRule::Midpoint;
  const BoundReport rep = bound_report(base.instance, base.instance, cfg);
  CHECK(rep.true_gap == doctest::Approx(0.0).epsilon(1e-9));
  for (const auto& item : rep.items) {
    CHECK(item.value == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(item.dominates_gap);
  }
}

TEST_CASE("bound report on the constrained linear pair") {
  const BuiltExample base = build_example("4.2a", false);
  const BuiltExample pert = build_example("4.2a", true);
  BoundReportConfig cfg;
  cfg.branching = Branching::uniform(2, 3, 3);
  cfg.rule = QuadratureRule::Midpoint;
  const BoundReport rep = bound_report(base.instance, pert.instance, cfg);
  CHECK(rep.true_gap == doctest::Approx(0.0904).epsilon(5e-3));
  bool found_stagewise = false;
  for (const auto& item : rep.items)
    if (item.name == "exogenous_value_stagewise") {
      found_stagewise = true;
      CHECK(item.value == doctest::Approx(0.16).epsilon(1e-9));
      CHECK(item.dominates_gap);
    }
  CHECK(found_stagewise);
  REQUIRE(rep.solution_distance.has_value());
  CHECK(*rep.solution_distance >= 0.0);
}

TEST_CASE("bound values are linear in each metric input") {
  const ConstantTable t = full_constant_table(reg_of(2, 2.0, 1.0, 1.0, 40.0, 10.0), 2);
  std::mt19937_64 rng(53);
  auto u = [&rng](double lo, double hi) { return lo + (hi - lo) * ((rng() >> 11) * 0x1.0p-53); };
  for (int trial = 0; trial < 100; ++trial) {
    Vector dk(3), cond(2);
    for (int i = 0; i < 3; ++i) dk[i] = u(0.0, 1.0);
    for (int i = 0; i < 2; ++i) cond[i] = u(0.0, 1.0);
    const double s = u(0.5, 3.0);
    CHECK(endo_bounds(t, (s * dk).eval(), BoundMode::Value) ==
          doctest::Approx(s * endo_bounds(t, dk, BoundMode::Value)).epsilon(1e-12));
    CHECK(exo_stagewise_bounds(t, (s * cond).eval(), BoundMode::Value) ==
          doctest::Approx(s * exo_stagewise_bounds(t, cond, BoundMode::Value)).epsilon(1e-12));
    CHECK(exo_global_bounds(t, 0.0, s * dk[0], BoundMode::Value) ==
          doctest::Approx(s * exo_global_bounds(t, 0.0, dk[0], BoundMode::Value)).epsilon(1e-12));
  }
}

TEST_CASE("endogenous dominance on the inventory pair") {
  const BuiltExample base = build_example("inventory", false);
  const BuiltExample pert = build_example("inventory", true);
  const ScenarioTree tb =
      build_joint_tree(base.instance, Branching::uniform(3, 2, 2), QuadratureRule::GaussLegendre);
  const ScenarioTree tp =
      build_joint_tree(pert.instance, Branching::uniform(3, 2, 2), QuadratureRule::GaussLegendre);
  const SolveReport rb = brute_force_solve(base.instance, tb, 21);
  const SolveReport rp = brute_force_solve(pert.instance, tp, 21);
  const double gap = std::abs(rb.value - rp.value);

  const ConstantTable coeffs = endogenous_coeffs(*base.instance.regularity, 3);
  Vector dk(4);
  for (int t = 0; t <= 3; ++t)
    dk[t] = kantorovich_1d(
        std::get<DiscreteDistribution>(base.instance.endogenous.laws[static_cast<size_t>(t)]),
        std::get<DiscreteDistribution>(pert.instance.endogenous.laws[static_cast<size_t>(t)]));
  CHECK(dk[0] == doctest::Approx(0.05).epsilon(1e-12));
  const double bound = endo_bounds(coeffs, dk, BoundMode::Value);
  CHECK(bound >= gap - 1e-6);
}
