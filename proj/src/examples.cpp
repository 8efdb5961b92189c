#include "mspmdp/examples.hpp"

#include <cmath>

namespace mspmdp {

const FixtureValue& ExampleFixture::at(const std::string& key) const {
  auto it = values.find(key);
  require(it != values.end(), Errc::InvalidInput, "fixture has no value '" + key + "'");
  return it->second;
}

namespace {

Matrix eye(int n) { return Matrix::Identity(n, n); }
Vector ones(int n) { return Vector::Ones(n); }

UniformBox box2(double lo, double hi) {
  UniformBox b;
  b.lower = Vector::Constant(2, lo);
  b.upper = Vector::Constant(2, hi);
  return b;
}

// Shared skeleton of the worked two-stage instances: T = 2, n = 2, all-ones
// linear costs, identity transitions, decision box [-5, 5]^2.
ProblemInstance linear_skeleton(bool perturbed, bool narrow_nu_pert) {
  const int T = 2, n = 2;
  ProblemInstance inst;
  inst.T = T;
  inst.s0 = Vector::Zero(n);
  inst.separable = true;
  inst.unique_minimizers = true;

  for (int t = 0; t <= T; ++t) {
    StageSpec st;
    st.t = t;
    st.dims = StageDims{n, n, t >= 1 ? n : 0, n};
    AffineCost cost;
    cost.a_s = t == 0 ? Vector::Zero(n) : ones(n);  // s_0 = 0 keeps stage 0 state-free
    cost.a_x = ones(n);
    cost.a_z = ones(n);
    if (t >= 1) {
      cost.a_xi = Vector::Zero(t * n);
      cost.a_xi.tail(n) = ones(n);
    }
    st.cost = cost;
    st.constraints.push_back(BoxConstraint{Vector::Constant(n, -5.0), Vector::Constant(n, 5.0), 1});
    if (t < T) {
      AffineTransition tr;
      tr.M1 = eye(n);
      tr.M2 = eye(n);
      tr.N1 = t == 0 ? Matrix::Zero(n, n) : eye(n);
      tr.N2 = eye(n);
      st.transition = tr;
    }
    inst.stages.push_back(std::move(st));
  }

  for (int t = 0; t <= T; ++t) inst.endogenous.laws.push_back(box2(-2.0, 0.0));

  const UniformBox xi1 = perturbed ? box2(-1.98, 0.0) : box2(-2.0, 0.0);
  UniformBox nu = box2(-1.0, 1.0);
  if (perturbed) nu = narrow_nu_pert ? box2(-0.99, 0.99) : box2(-0.98, 1.0);
  inst.exogenous.stages.push_back(Marginal{xi1});
  Vector w(1);
  w[0] = 1.0;
  inst.exogenous.stages.push_back(AffineShiftKernel{w, nu});
  return inst;
}

RegularityData make_reg(int T, double L_C, double L_S, double L_g, double rho, double A,
                        double L_Q) {
  RegularityData reg;
  reg.L_C = Vector::Constant(T, L_C);
  reg.L_S = Vector::Constant(T, L_S);
  reg.L_g = Vector::Constant(T, L_g);
  reg.rho = rho;
  reg.A = A;
  reg.L_Q = Vector::Constant(T, L_Q);
  return reg;
}

void put(ExampleFixture& f, const std::string& key, double v, double tol,
         const std::string& provenance) {
  f.values[key] = FixtureValue{v, tol, provenance};
}

BuiltExample build_41(bool perturbed, int alpha) {
  require(alpha == 1 || (alpha >= 2 && alpha % 2 == 0), Errc::InvalidExponent,
          "alpha must be 1 or even");
  BuiltExample out;
  out.instance = linear_skeleton(perturbed, false);
  auto& box = std::get<BoxConstraint>(out.instance.stages[1].constraints[0]);
  for (int t = 1; t <= 2; ++t)
    std::get<BoxConstraint>(out.instance.stages[static_cast<size_t>(t)].constraints[0]).exponent =
        alpha;
  (void)box;
  // The power-gauge reading of the box: rho = 5^alpha with unit constraint
  // modulus; at alpha = 1 the box does not move with (s, x_prev) and L_g = 0.
  const double rho = std::pow(5.0, alpha);
  const double L_g = alpha == 1 ? 0.0 : 1.0;
  out.instance.regularity = make_reg(2, 2.0, 1.0, L_g, rho, 10.0, 1.0);
  std::vector<Vector> slater(2, Vector::Zero(2));
  out.instance.slater_points = slater;

  ExampleFixture& f = out.fixture;
  f.id = "4.1";
  put(f, "optimal_value", -78.0, 0.05, "stated optimal value of the unperturbed linear instance");
  put(f, "optimal_value_perturbed", -77.92, 0.05, "stated optimal value after the perturbation");
  put(f, "dK_stage1", 1.0 / 75.0, 1e-12, "stage-1 marginal Kantorovich distance");
  put(f, "dK_stage2_cond", 1.0 / 75.0, 1e-12, "conditional stage-2 Kantorovich distance");
  put(f, "nested_distance", 0.04, 5e-3, "nested distance between the processes");
  put(f, "nested_bound_L", 4.0, 0.0, "Hoelder modulus of the total cost in xi");
  put(f, "nested_bound", 0.16, 1e-6, "nested-distance comparison bound");
  const double p5a = std::pow(5.0, alpha), p52a = std::pow(5.0, 2 * alpha);
  put(f, "L_xi_1", 6.0 + 100.0 / p5a + 400.0 / p52a, 1e-12, "stagewise value coefficient, stage 1");
  put(f, "L_xi_2", 2.0 + 40.0 / p5a + 400.0 / p52a, 1e-12, "stagewise value coefficient, stage 2");
  put(f, "stagewise_bound", 8.0 / 75.0 + 28.0 / (15.0 * p5a) + 32.0 / (3.0 * p52a), 1e-9,
      "stagewise bound at the given alpha");
  return out;
}

BuiltExample build_42a(bool perturbed) {
  BuiltExample out;
  out.instance = linear_skeleton(perturbed, false);
  for (int t = 1; t <= 2; ++t) {
    AffineInequality g;
    g.A = -10.0 * eye(2);
    g.B = eye(2);
    g.C = eye(2);
    g.D = eye(2);
    g.kappa = Vector::Constant(2, 11.0);
    out.instance.stages[static_cast<size_t>(t)].constraints.push_back(g);
  }
  out.instance.regularity = make_reg(2, 2.0, 1.0, 1.0, 40.0, 10.0, 1.0);
  std::vector<Vector> slater(2, Vector::Constant(2, 4.0));
  out.instance.slater_points = slater;

  ExampleFixture& f = out.fixture;
  f.id = "4.2a";
  put(f, "optimal_value", -62.12, 0.05, "stated optimal value of the constrained linear instance");
  put(f, "optimal_value_perturbed", -62.0296, 0.05, "stated optimal value after the perturbation");
  put(f, "true_gap", 0.0904, 1e-6, "difference of the two stated optimal values");
  put(f, "L_X_1", 0.25, 1e-12, "feasible-set modulus, stage 1");
  put(f, "L_X_2", 0.625, 1e-12, "feasible-set modulus, stage 2");
  put(f, "L_xi_1", 8.75, 1e-12, "stagewise value coefficient, stage 1");
  put(f, "L_xi_2", 3.25, 1e-12, "stagewise value coefficient, stage 2");
  put(f, "dK_stage1", 1.0 / 75.0, 1e-12, "stage-1 marginal Kantorovich distance");
  put(f, "dK_stage2_cond", 1.0 / 75.0, 1e-12, "conditional stage-2 Kantorovich distance");
  put(f, "stagewise_bound", 0.16, 1e-9, "stagewise bound (35/4 + 13/4)/75");
  put(f, "filtration_estimate", 0.203, 0.02, "filtration-distance estimate at the optimal policies");
  put(f, "filtration_stage1", 1.0 / 15.0, 5e-3, "stage-1 filtration term");
  put(f, "w3_reference", 0.030, 0.0, "stated 3-Wasserstein value used by the comparison bound");
  put(f, "hrs_L", 18.0, 0.0, "stated comparison-bound modulus");
  put(f, "hrs_bound", 4.19, 0.25, "comparison bound 18 (0.203 + 0.030)");
  return out;
}

BuiltExample build_42b(bool perturbed) {
  BuiltExample out;
  out.instance = linear_skeleton(perturbed, false);
  for (int t = 1; t <= 2; ++t) {
    AffineInequality g;
    g.A = eye(2);
    g.B = -eye(2);
    g.C = eye(2);
    g.D = eye(2);
    g.kappa = Vector::Constant(2, 11.0);
    out.instance.stages[static_cast<size_t>(t)].constraints.push_back(g);
  }
  out.instance.regularity = make_reg(2, 2.0, 1.0, 1.0, 10.0, 10.0, 1.0);
  std::vector<Vector> slater(2, Vector::Zero(2));
  out.instance.slater_points = slater;

  ExampleFixture& f = out.fixture;
  f.id = "4.2b";
  put(f, "optimal_value", -78.0, 0.05, "stated optimal value of the variant instance");
  put(f, "optimal_value_perturbed", -77.92, 0.05, "stated optimal value after the perturbation");
  // The variant's listed coefficient set; the L_v2 entry disagrees with the
  // stated recursion (which yields 8), so the bound below uses these as fixtures.
  put(f, "listed_L_X_1", 1.0, 0.0, "listed feasible-set modulus, stage 1");
  put(f, "listed_L_X_2", 4.0, 0.0, "listed feasible-set modulus, stage 2");
  put(f, "listed_L_v_2", 4.0, 0.0, "listed stagewise value-function modulus, stage 2");
  put(f, "listed_L_xi_1", 12.0, 0.0, "listed stagewise value coefficient, stage 1");
  put(f, "listed_L_xi_2", 10.0, 0.0, "listed stagewise value coefficient, stage 2");
  put(f, "recursion_L_v_2", 8.0, 1e-12, "stagewise recursion output for the same moduli");
  put(f, "dK_stage1", 1.0 / 75.0, 1e-12, "stage-1 marginal Kantorovich distance");
  put(f, "dK_stage2_cond", 1.0 / 75.0, 1e-12, "conditional stage-2 Kantorovich distance");
  put(f, "stagewise_bound", 22.0 / 75.0, 1e-9, "stagewise bound from the listed coefficients");
  put(f, "hrs_bound", 0.540, 1e-3, "comparison bound 18 x 0.030 with zero filtration term");
  return out;
}

BuiltExample build_43(bool perturbed) {
  BuiltExample out;
  out.instance = linear_skeleton(perturbed, true);
  for (int t = 1; t <= 2; ++t)
    out.instance.stages[static_cast<size_t>(t)].constraints.push_back(
        QuadraticInequality{Vector::Constant(2, 11.0)});
  out.instance.regularity = make_reg(2, 2.0, 1.0, 1.0, 5.0, 10.0, 1.0);
  std::vector<Vector> slater(2, Vector::Zero(2));
  out.instance.slater_points = slater;

  ExampleFixture& f = out.fixture;
  f.id = "4.3";
  put(f, "optimal_value", -71.36, 0.02, "stated optimal value of the nonlinear instance");
  put(f, "optimal_value_perturbed", -71.28, 0.02, "stated optimal value after the perturbation");
  // Extended-precision evaluation of the closed-form expression
  // 2(-24 - (2/15)(15^{5/2} - 2 13^{5/2} + 11^{5/2})
  //     - (1/1890)(2 19^{9/2} + 2 21^{9/2} - 3 17^{9/2} - 3 23^{9/2} + 15^{9/2} + 25^{9/2})).
  put(f, "closed_form_value", -71.35279194322408, 1e-10, "closed-form optimal value");
  put(f, "L_X_1", 2.0, 1e-12, "feasible-set modulus, stage 1");
  put(f, "L_X_2", 12.0, 1e-12, "feasible-set modulus, stage 2");
  put(f, "L_v_1", 84.0, 1e-12, "stagewise value-function modulus, stage 1");
  put(f, "L_v_2", 12.0, 1e-12, "stagewise value-function modulus, stage 2");
  put(f, "L_xi_1", 42.0, 1e-12, "stagewise value coefficient, stage 1");
  put(f, "L_xi_2", 26.0, 1e-12, "stagewise value coefficient, stage 2");
  put(f, "dK_stage1", 1.0 / 75.0, 1e-12, "stage-1 marginal Kantorovich distance");
  put(f, "dK_stage2_cond", 1.0 / 150.0, 1e-12, "conditional stage-2 Kantorovich distance");
  put(f, "stagewise_bound", 11.0 / 15.0, 1e-9, "stagewise bound 42/75 + 26/150");
  return out;
}

// Desk-scale inventory instance: scalar order quantity, exogenous price,
// endogenous demand, fixed delivery rates folded into the transition.
BuiltExample build_inventory(bool perturbed) {
  const int T = 3;
  const double h = 1.0, l = 3.0, p0 = 2.0;
  const double eta = 0.1;  // order delivery loss rate
  const double M = 10.0;   // warehouse capacity
  const double x_max = 2.0;

  BuiltExample out;
  ProblemInstance& inst = out.instance;
  inst.T = T;
  inst.s0 = Vector::Constant(1, 2.0);
  inst.separable = false;
  register_builtin_customs();

  for (int t = 0; t <= T; ++t) {
    StageSpec st;
    st.t = t;
    st.dims = StageDims{1, 1, t >= 1 ? 1 : 0, 1};
    Vector params(3);
    params << h, l, p0;
    st.cost = CustomCost{"inventory_cost", params};
    st.constraints.push_back(BoxConstraint{Vector::Zero(1), Vector::Constant(1, x_max), 1});
    AffineInequality cap;
    cap.A = Matrix::Constant(1, 1, 1.0);
    cap.B = Matrix::Zero(1, 1);
    cap.C = Matrix::Constant(1, 1, 1.0);
    cap.D = Matrix::Zero(1, 1);
    cap.kappa = Vector::Constant(1, M);
    if (t >= 1) st.constraints.push_back(cap);
    if (t < T) {
      AffineTransition tr;
      tr.M1 = Matrix::Constant(1, 1, 1.0);
      tr.M2 = Matrix::Constant(1, 1, 1.0 - eta);
      tr.N1 = Matrix::Zero(1, 1);
      tr.N2 = Matrix::Constant(1, 1, -1.0);
      st.transition = tr;
    }
    inst.stages.push_back(std::move(st));
  }

  // Demand atoms; the perturbation shifts every atom by 0.05.
  for (int t = 0; t <= T; ++t) {
    DiscreteDistribution d;
    const double shift = perturbed ? 0.05 : 0.0;
    d.atoms = {Vector::Constant(1, 0.5 + shift), Vector::Constant(1, 1.5 + shift)};
    d.weights = Vector::Constant(2, 0.5);
    inst.endogenous.laws.push_back(d);
  }
  for (int t = 1; t <= T; ++t) {
    UniformBox price;
    price.lower = Vector::Constant(1, 1.5);
    price.upper = Vector::Constant(1, 2.5);
    inst.exogenous.stages.push_back(Marginal{price});
  }

  RegularityData reg = make_reg(T, 3.0, 1.0, 1.0, 2.0, x_max, 0.0);
  inst.regularity = reg;
  std::vector<Vector> slater(static_cast<size_t>(T), Vector::Zero(1));
  inst.slater_points = slater;

  out.fixture.id = "inventory";
  put(out.fixture, "dK_zeta", 0.05, 1e-12, "per-stage demand shift");
  return out;
}

}  // namespace

BuiltExample build_example(const std::string& id, bool perturbed, int alpha) {
  if (id == "4.1") return build_41(perturbed, alpha);
  if (id == "4.2a") return build_42a(perturbed);
  if (id == "4.2b") return build_42b(perturbed);
  if (id == "4.3") return build_43(perturbed);
  if (id == "inventory") return build_inventory(perturbed);
  fail(Errc::UnknownExample, "unknown example '" + id + "'");
}

double analytic_decision(const std::string& example_id, int t, double x_prev, double s_t,
                         double xi_t) {
  if (t == 0) return -5.0;
  if (example_id == "4.1" || example_id == "4.2b") return -5.0;
  if (example_id == "4.2a") return (x_prev + s_t + xi_t - 11.0) / 10.0;
  if (example_id == "4.3") {
    const double arg = 11.0 + x_prev - s_t - xi_t;
    require(arg >= 0.0, Errc::EvaluatorError, "square-root argument became negative");
    return -std::sqrt(arg);
  }
  fail(Errc::UnknownExample, "no analytic policy for '" + example_id + "'");
}

AnalyticEvaluation evaluate_analytic_policy(const std::string& example_id, bool perturbed,
                                            int gauss_points) {
  require(example_id == "4.1" || example_id == "4.2a" || example_id == "4.2b" ||
              example_id == "4.3",
          Errc::UnknownExample, "no analytic policy for '" + example_id + "'");
  const int n = gauss_points;
  std::vector<double> gn, gw;
  gauss_legendre<double>(n, gn, gw);
  auto scaled = [&](double lo, double hi, int i) {
    return std::pair<double, double>{0.5 * (hi - lo) * gn[static_cast<size_t>(i)] + 0.5 * (hi + lo),
                                     0.5 * gw[static_cast<size_t>(i)]};
  };

  const bool narrow = example_id == "4.3";
  const double xi1_lo = perturbed ? -1.98 : -2.0, xi1_hi = 0.0;
  const double nu_lo = perturbed ? (narrow ? -0.99 : -0.98) : -1.0;
  const double nu_hi = perturbed ? (narrow ? 0.99 : 1.0) : 1.0;

  // Per-coordinate evaluation over (zeta_0, xi_1, zeta_1, nu, zeta_2); the two
  // coordinates are iid so the total doubles the coordinate value. zeta means
  // enter the costs linearly, so zeta_2 integrates to its mean and zeta_1 needs
  // full quadrature only through the stage-2 policy.
  long points = 0;
  double coord_total = 0.0;
  const double x0 = analytic_decision(example_id, 0, 0, 0, 0);
  const double Ez = -1.0;  // mean of each zeta coordinate
  coord_total += x0 + Ez;  // stage-0 cost: x_0 + zeta_0 (s_0 = 0)
  for (int i0 = 0; i0 < n; ++i0) {
    const auto [z0, w0] = scaled(-2.0, 0.0, i0);
    const double s1 = 0.0 + x0 + z0;
    for (int i1 = 0; i1 < n; ++i1) {
      const auto [xi1, w1] = scaled(xi1_lo, xi1_hi, i1);
      const double x1 = analytic_decision(example_id, 1, x0, s1, xi1);
      const double c1 = s1 + x1 + xi1 + Ez;
      double v2 = 0.0;
      for (int i2 = 0; i2 < n; ++i2) {
        const auto [z1, w2] = scaled(-2.0, 0.0, i2);
        const double s2 = s1 + x1 + xi1 + z1;
        for (int i3 = 0; i3 < n; ++i3) {
          const auto [nu, w3] = scaled(nu_lo, nu_hi, i3);
          const double xi2 = xi1 + nu;
          const double x2 = analytic_decision(example_id, 2, x1, s2, xi2);
          v2 += w2 * w3 * (s2 + x2 + xi2 + Ez);
          ++points;
        }
      }
      coord_total += w0 * w1 * (c1 + v2);
    }
  }
  return AnalyticEvaluation{2.0 * coord_total, points};
}

}  // namespace mspmdp
