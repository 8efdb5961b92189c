#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mspmdp/examples.hpp"
#include "mspmdp/json_io.hpp"
#include "mspmdp/solver.hpp"

#include <cmath>
#include <cstdio>

using namespace mspmdp;

TEST_CASE("builders produce valid instances with fixtures") {
  for (const std::string id : {"4.1", "4.2a", "4.2b", "4.3", "inventory"}) {
    for (bool pert : {false, true}) {
      const BuiltExample ex = build_example(id, pert);
      ex.instance.validate();
      CHECK(ex.fixture.id == id);
    }
  }
  CHECK_THROWS_AS((void)build_example("9.9", false), Error);
  CHECK_THROWS_AS((void)build_example("4.1", false, 3), Error);  // odd exponent
}

TEST_CASE("fixture values carry provenance") {
  const BuiltExample ex = build_example("4.2a", false);
  CHECK(ex.fixture.at("optimal_value").value == doctest::Approx(-62.12));
  CHECK(!ex.fixture.at("optimal_value").provenance.empty());
  CHECK(ex.fixture.at("optimal_value_perturbed").value == doctest::Approx(-62.0296));
}

TEST_CASE("closed-form value of the nonlinear instance") {
  const BuiltExample ex = build_example("4.3", false);
  const double stated = ex.fixture.at("closed_form_value").value;
  // Recompute the closed form in long double.
  const long double v =
      2.0L * (-24.0L -
              (2.0L / 15.0L) * (std::pow(15.0L, 2.5L) - 2.0L * std::pow(13.0L, 2.5L) +
                                std::pow(11.0L, 2.5L)) -
              (1.0L / 1890.0L) *
                  (2.0L * std::pow(19.0L, 4.5L) + 2.0L * std::pow(21.0L, 4.5L) -
                   3.0L * std::pow(17.0L, 4.5L) - 3.0L * std::pow(23.0L, 4.5L) +
                   std::pow(15.0L, 4.5L) + std::pow(25.0L, 4.5L)));
  CHECK(std::abs(static_cast<double>(v) - stated) <= 1e-10);
  CHECK(std::abs(stated - (-71.36)) <= 0.02);
  // The analytic policy evaluated by quadrature lands on the closed form.
  CHECK(analytic_solve("4.3", false, 16).value == doctest::Approx(stated).epsilon(1e-9));
}

TEST_CASE("analytic policies are feasible on trees built from their instances") {
  for (const std::string id : {"4.1", "4.2a", "4.2b", "4.3"}) {
    const BuiltExample ex = build_example(id, false);
    const ProblemInstance slice = slice_coordinate(ex.instance, 0);
    const ScenarioTree tree =
        build_joint_tree(slice, Branching::uniform(2, 3, 3), QuadratureRule::GaussLegendre);
    // Forward-install the analytic policy and let evaluate_policy check residuals.
    Policy pol;
    pol.decisions[tree.root()] = Vector::Constant(1, analytic_decision(id, 0, 0, 0, 0));
    struct Frame {
      int node;
      int t;
      double s, x;
    };
    std::vector<Frame> stack{{tree.root(), 0, slice.s0[0], -5.0}};
    while (!stack.empty()) {
      const Frame f = stack.back();
      stack.pop_back();
      if (f.t == slice.T) continue;
      for (int z : tree[f.node].children) {
        const Vector xip = f.t >= 1 ? tree[f.node].value : Vector();
        const double s_next = evaluate_transition(slice, f.t, Vector::Constant(1, f.s),
                                                  Vector::Constant(1, f.x), xip, tree[z].value)[0];
        for (int y : tree[z].children) {
          const double x = analytic_decision(id, f.t + 1, f.x, s_next, tree[y].value[0]);
          pol.decisions[y] = Vector::Constant(1, x);
          stack.push_back({y, f.t + 1, s_next, x});
        }
      }
    }
    CHECK_NOTHROW((void)evaluate_policy(slice, tree, pol));
  }
}

TEST_CASE("instances round-trip through the JSON schema") {
  for (const std::string id : {"4.1", "4.2a", "4.2b", "4.3", "inventory"}) {
    const BuiltExample ex = build_example(id, false);
    const Json j = instance_to_json(ex.instance);
    const ProblemInstance back = instance_from_json(j);
    CHECK(back.T == ex.instance.T);
    CHECK(instance_to_json(back) == j);  // byte-stable reserialization
    if (id == "4.1") {
      const double v1 = solve_auto(ex.instance, Branching::uniform(2, 2, 2),
                                   QuadratureRule::Midpoint, SolverConfig{})
                            .value;
      const double v2 =
          solve_auto(back, Branching::uniform(2, 2, 2), QuadratureRule::Midpoint, SolverConfig{})
              .value;
      CHECK(v1 == doctest::Approx(v2).epsilon(1e-9));
    }
  }
}

TEST_CASE("alpha parameterizes the box gauge of the linear instance") {
  const BuiltExample a2 = build_example("4.1", false, 2);
  const auto& box = std::get<BoxConstraint>(a2.instance.stages[1].constraints[0]);
  CHECK(box.exponent == 2);
  CHECK(a2.instance.regularity->rho == doctest::Approx(25.0));
  const BuiltExample a10 = build_example("4.1", false, 10);
  CHECK(a10.instance.regularity->rho == doctest::Approx(std::pow(5.0, 10)));
  CHECK(a10.fixture.at("stagewise_bound").value ==
        doctest::Approx(8.0 / 75.0 + 28.0 / (15.0 * std::pow(5.0, 10)) +
                        32.0 / (3.0 * std::pow(5.0, 20))));
}
