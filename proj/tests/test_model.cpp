#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mspmdp/examples.hpp"
#include "mspmdp/model.hpp"

#include <random>

using namespace mspmdp;

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * ((rng() >> 11) * 0x1.0p-53);
}

Vector rand_vec(std::mt19937_64& rng, int n, double lo, double hi) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = uniform(rng, lo, hi);
  return v;
}

}  // namespace

TEST_CASE("affine cost evaluation on the linear instance") {
  const BuiltExample ex = build_example("4.1", false);
  const Vector s = Vector::Zero(2);
  Vector x(2);
  x << -5.0, -5.0;
  Vector xi1(2);
  xi1 << -1.0, -1.0;
  Vector zeta(2);
  zeta << -1.0, -1.0;
  std::vector<Vector> hist{xi1};
  CHECK(evaluate_cost(ex.instance, 1, s, x, hist, zeta) == doctest::Approx(-14.0));

  SUBCASE("constant cost") {
    ProblemInstance inst = ex.instance;
    AffineCost c;
    c.a_s = Vector::Zero(2);
    c.a_x = Vector::Zero(2);
    c.a_xi = Vector::Zero(2);
    c.a_z = Vector::Zero(2);
    c.b = 3.0;
    inst.stages[1].cost = c;
    CHECK(evaluate_cost(inst, 1, s, x, hist, zeta) == doctest::Approx(3.0));
  }
  SUBCASE("dimension mismatch throws") {
    CHECK_THROWS_AS((void)evaluate_cost(ex.instance, 1, Vector::Zero(3), x, hist, zeta), Error);
  }
}

TEST_CASE("inventory cost formula") {
  const BuiltExample ex = build_example("inventory", false);
  const Vector s = Vector::Constant(1, 2.0);
  const Vector x = Vector::Constant(1, 1.0);
  const Vector price = Vector::Constant(1, 2.0);
  std::vector<Vector> hist{price};
  const Vector zeta = Vector::Constant(1, 1.0);
  // holding 1*2 + purchase 2*1 + backorder 0
  CHECK(evaluate_cost(ex.instance, 1, s, x, hist, zeta) == doctest::Approx(4.0));
}

TEST_CASE("transition evaluation") {
  const BuiltExample ex = build_example("4.1", false);
  Vector s = Vector::Zero(2), x(2), xi(2), z(2);
  x << -5.0, -5.0;
  xi << -1.0, -1.0;
  z << -1.0, -1.0;
  const Vector next = evaluate_transition(ex.instance, 1, s, x, xi, z);
  CHECK(next[0] == doctest::Approx(-7.0));
  CHECK(next[1] == doctest::Approx(-7.0));

  SUBCASE("zero matrices give the zero state") {
    ProblemInstance inst = ex.instance;
    AffineTransition tr;
    tr.M1 = Matrix::Zero(2, 2);
    tr.M2 = Matrix::Zero(2, 2);
    tr.N1 = Matrix::Zero(2, 2);
    tr.N2 = Matrix::Zero(2, 2);
    inst.stages[1].transition = tr;
    CHECK(inf_norm(evaluate_transition(inst, 1, s, x, xi, z)) == doctest::Approx(0.0));
  }
  SUBCASE("inventory flow") {
    const BuiltExample inv = build_example("inventory", false);
    // s + 0.9 x - d with the delivery rate folded into the transition
    const Vector out = evaluate_transition(inv.instance, 1, Vector::Constant(1, 3.0),
                                           Vector::Constant(1, 2.0), Vector::Constant(1, 2.0),
                                           Vector::Constant(1, 1.0));
    CHECK(out[0] == doctest::Approx(3.8));
  }
}

TEST_CASE("feasibility residuals") {
  SUBCASE("box boundary") {
    const BuiltExample ex = build_example("4.1", false);
    Vector x(2);
    x << 5.0, -5.0;
    std::vector<Vector> hist{Vector::Zero(2)};
    const Vector r =
        feasibility_residual(ex.instance, 1, Vector::Zero(2), x, Vector::Zero(2), hist);
    CHECK(r.maxCoeff() == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("active affine constraint at the stated optimum") {
    const BuiltExample ex = build_example("4.2a", false);
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
      const Vector s = rand_vec(rng, 2, -3.0, 3.0);
      const Vector xp = rand_vec(rng, 2, -5.0, 5.0);
      const Vector xi = rand_vec(rng, 2, -2.0, 0.0);
      Vector x(2);
      for (int c = 0; c < 2; ++c) x[c] = 0.1 * (xp[c] + s[c] + xi[c] - 11.0);
      std::vector<Vector> hist{xi};
      const Vector r = feasibility_residual(ex.instance, 1, s, x, xp, hist);
      // rows 0..3 box, rows 4..5 affine; the affine rows sit on the boundary
      CHECK(std::abs(r[4]) <= 1e-9);
      CHECK(std::abs(r[5]) <= 1e-9);
    }
  }
  SUBCASE("quadratic constraint boundary") {
    const BuiltExample ex = build_example("4.3", false);
    Vector x = Vector::Constant(2, -std::sqrt(11.0));
    std::vector<Vector> hist{Vector::Zero(2)};
    const Vector r =
        feasibility_residual(ex.instance, 1, Vector::Zero(2), x, Vector::Zero(2), hist);
    CHECK(std::abs(r[4]) <= 1e-9);
    CHECK(std::abs(r[5]) <= 1e-9);
  }
}

TEST_CASE("derived regularity constants") {
  SUBCASE("box-only linear instance") {
    BuiltExample ex = build_example("4.1", false);
    ex.instance.regularity.reset();  // force derivation
    const RegularityData reg = derive_regularity(ex.instance);
    CHECK(reg.maxLC() == doctest::Approx(2.0));
    CHECK(reg.maxLS() == doctest::Approx(1.0));
    CHECK(reg.maxLg() == doctest::Approx(0.0));
    CHECK(reg.A == doctest::Approx(10.0));
    CHECK(reg.rho == doctest::Approx(5.0));  // box margin at the declared origin
  }
  SUBCASE("declared rho wins for state-dependent constraints") {
    const BuiltExample ex = build_example("4.2a", false);
    const RegularityData reg = derive_regularity(ex.instance);
    CHECK(reg.maxLC() == doctest::Approx(2.0));
    CHECK(reg.maxLS() == doctest::Approx(1.0));
    CHECK(reg.maxLg() == doctest::Approx(1.0));
    CHECK(reg.A == doctest::Approx(10.0));
    CHECK(reg.rho == doctest::Approx(40.0));
  }
  SUBCASE("zero transition matrices give zero L_S") {
    BuiltExample ex = build_example("4.1", false);
    ex.instance.regularity.reset();
    for (int t = 0; t < 2; ++t) {
      AffineTransition tr;
      tr.M1 = Matrix::Zero(2, 2);
      tr.M2 = Matrix::Zero(2, 2);
      tr.N1 = Matrix::Zero(2, 2);
      tr.N2 = Matrix::Zero(2, 2);
      ex.instance.stages[static_cast<size_t>(t)].transition = tr;
    }
    CHECK(derive_regularity(ex.instance).maxLS() == doctest::Approx(0.0));
  }
}

TEST_CASE("purity and Lipschitz property of the affine families") {
  const BuiltExample ex = build_example("4.2a", false);
  std::mt19937_64 rng(11);
  const double L_C = 2.0, L_S = 1.0;
  for (int trial = 0; trial < 10000; ++trial) {
    const Vector s1 = rand_vec(rng, 2, -5.0, 5.0), s2 = rand_vec(rng, 2, -5.0, 5.0);
    const Vector x1 = rand_vec(rng, 2, -5.0, 5.0), x2 = rand_vec(rng, 2, -5.0, 5.0);
    const Vector xi = rand_vec(rng, 2, -2.0, 0.0), z = rand_vec(rng, 2, -2.0, 0.0);
    std::vector<Vector> hist{xi};
    const double c1 = evaluate_cost(ex.instance, 1, s1, x1, hist, z);
    const double c2 = evaluate_cost(ex.instance, 1, s2, x2, hist, z);
    CHECK(std::abs(c1 - c2) <= L_C * (inf_dist(s1, s2) + inf_dist(x1, x2)) + 1e-12);
    const Vector t1 = evaluate_transition(ex.instance, 1, s1, x1, xi, z);
    const Vector t2 = evaluate_transition(ex.instance, 1, s2, x2, xi, z);
    CHECK(inf_dist(t1, t2) <= L_S * (inf_dist(s1, s2) + inf_dist(x1, x2)) + 1e-12);
    // bit-identical repeat evaluation
    CHECK(evaluate_cost(ex.instance, 1, s1, x1, hist, z) == c1);
  }
}

TEST_CASE("monotonicity of the monotone families in the state") {
  const BuiltExample ex = build_example("4.1", false);
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 1000; ++trial) {
    const Vector s = rand_vec(rng, 2, -5.0, 5.0);
    const Vector x = rand_vec(rng, 2, -5.0, 5.0);
    const Vector xi = rand_vec(rng, 2, -2.0, 0.0), z = rand_vec(rng, 2, -2.0, 0.0);
    std::vector<Vector> hist{xi};
    const double delta = uniform(rng, 0.0, 2.0);
    const Vector s_up = s.array() + delta;
    CHECK(evaluate_cost(ex.instance, 1, s_up, x, hist, z) >=
          evaluate_cost(ex.instance, 1, s, x, hist, z) - 1e-12);
    const Vector t_lo = evaluate_transition(ex.instance, 1, s, x, xi, z);
    const Vector t_up = evaluate_transition(ex.instance, 1, s_up, x, xi, z);
    CHECK((t_up.array() >= t_lo.array() - 1e-12).all());
  }
}

TEST_CASE("custom families require registered evaluators and declared moduli") {
  BuiltExample ex = build_example("inventory", false);
  ProblemInstance broken = ex.instance;
  std::get<CustomCost>(broken.stages[1].cost).name = "no_such_cost";
  CHECK_THROWS_AS((void)evaluate_cost(broken, 1, Vector::Zero(1), Vector::Zero(1),
                                      std::vector<Vector>{Vector::Zero(1)}, Vector::Zero(1)),
                  Error);
  ProblemInstance no_reg = ex.instance;
  no_reg.regularity.reset();
  CHECK_THROWS_AS((void)derive_regularity(no_reg), Error);
}
