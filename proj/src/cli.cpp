#include "mspmdp/cli.hpp"

#include "mspmdp/bounds.hpp"
#include "mspmdp/examples.hpp"
#include "mspmdp/json_io.hpp"
#include "mspmdp/oracle.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <regex>
#include <sstream>

namespace mspmdp {

namespace {

struct OutputOptions {
  std::string format = "json";
};

// Inline law syntax: uniform(lo,hi,Nd) is the N-fold product U(lo,hi)^N.
std::optional<Law> parse_inline_law(const std::string& text) {
  static const std::regex pattern(
      R"(uniform\(\s*(-?[0-9.eE+]+)\s*,\s*(-?[0-9.eE+]+)\s*(?:,\s*([0-9]+)d\s*)?\))");
  std::smatch match;
  if (!std::regex_match(text, match, pattern)) return std::nullopt;
  const double lo = std::stod(match[1]);
  const double hi = std::stod(match[2]);
  const int d = match[3].matched ? std::stoi(match[3]) : 1;
  UniformBox box;
  box.lower = Vector::Constant(d, lo);
  box.upper = Vector::Constant(d, hi);
  return box;
}

Law load_law_argument(const std::string& arg) {
  if (auto law = parse_inline_law(arg)) return *law;
  std::ifstream in(arg);
  require(in.good(), Errc::InvalidInput, "cannot open '" + arg + "'");
  Json j;
  in >> j;
  return law_from_json(j);
}

BuiltExample load_example(const std::string& id, bool perturbed, int alpha) {
  return build_example(id, perturbed, alpha);
}

void emit(const Json& j, const OutputOptions& opt, std::ostream& out) {
  if (opt.format == "json") {
    out << j.dump(2) << "\n";
    return;
  }
  if (opt.format == "markdown") {
    out << "| key | value |\n|---|---|\n";
    for (auto it = j.begin(); it != j.end(); ++it)
      out << "| " << it.key() << " | " << it.value().dump() << " |\n";
    return;
  }
  require(opt.format == "csv", Errc::InvalidInput, "unknown format");
  for (auto it = j.begin(); it != j.end(); ++it)
    out << it.key() << "," << it.value().dump() << "\n";
}

struct CheckRow {
  std::string key;
  double computed = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

class Reproducer {
 public:
  explicit Reproducer(std::ostream& out) : out_(out) {}

  void check(const ExampleFixture& fixture, const std::string& key, double computed) {
    const FixtureValue& f = fixture.at(key);
    CheckRow row{key, computed, f.value, f.tolerance,
                 std::abs(computed - f.value) <= f.tolerance + 1e-15};
    rows_.push_back(row);
    all_pass_ &= row.pass;
    out_ << (row.pass ? "[PASS] " : "[FAIL] ") << key << ": computed " << std::setprecision(10)
         << computed << ", expected " << f.value << " +- " << f.tolerance << "\n";
  }

  void note(const std::string& key, double value) {
    out_ << "[NOTE] " << key << ": " << std::setprecision(10) << value << "\n";
  }

  bool all_pass() const { return all_pass_; }

 private:
  std::ostream& out_;
  std::vector<CheckRow> rows_;
  bool all_pass_ = true;
};

SolverConfig default_solver() {
  SolverConfig cfg;
  cfg.tolerance = 1e-6;
  return cfg;
}

double solved_value(const std::string& id, bool perturbed, int alpha, int per_dim,
                    QuadratureRule rule) {
  const BuiltExample ex = load_example(id, perturbed, alpha);
  const Branching branching = Branching::uniform(ex.instance.T, per_dim, per_dim);
  return solve_auto(ex.instance, branching, rule, default_solver()).value;
}

// Filtration-distance machinery: the closed-form optimal policies installed on
// per-coordinate quadrature trees.
std::pair<ScenarioTree, Policy> analytic_policy_tree(const std::string& id, bool perturbed,
                                                     int per_dim) {
  const BuiltExample ex = load_example(id, perturbed, 1);
  const ProblemInstance slice = slice_coordinate(ex.instance, 0);
  ScenarioTree tree =
      build_joint_tree(slice, Branching::uniform(slice.T, per_dim, per_dim),
                       QuadratureRule::GaussLegendre);
  Policy policy;
  const double x0 = analytic_decision(id, 0, 0, 0, 0);
  policy.decisions[tree.root()] = Vector::Constant(1, x0);
  struct Frame {
    int node;
    int t;
    double s;
    double x;
  };
  std::vector<Frame> stack{{tree.root(), 0, slice.s0[0], x0}};
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    if (f.t == slice.T) continue;
    for (int z : tree[f.node].children) {
      const Vector xi_prev = f.t >= 1 ? tree[f.node].value : Vector();
      const double s_next = evaluate_transition(slice, f.t, Vector::Constant(1, f.s),
                                                Vector::Constant(1, f.x), xi_prev,
                                                tree[z].value)[0];
      for (int y : tree[z].children) {
        const double xi = tree[y].value[0];
        const double x = analytic_decision(id, f.t + 1, f.x, s_next, xi);
        policy.decisions[y] = Vector::Constant(1, x);
        stack.push_back({y, f.t + 1, s_next, x});
      }
    }
  }
  return {std::move(tree), std::move(policy)};
}

double filtration_for(const std::string& id, int per_dim) {
  auto [tree_base, pol_base] = analytic_policy_tree(id, false, per_dim);
  auto [tree_pert, pol_pert] = analytic_policy_tree(id, true, per_dim);
  return filtration_estimate(pol_base, pol_pert, tree_base, tree_pert);
}

int cmd_reproduce(const std::string& id, int alpha, std::ostream& out) {
  Reproducer rep(out);
  if (id == "4.1") {
    const BuiltExample ex = load_example(id, false, alpha);
    rep.check(ex.fixture, "optimal_value", solved_value(id, false, alpha, 3, QuadratureRule::Midpoint));
    rep.check(ex.fixture, "optimal_value_perturbed",
              solved_value(id, true, alpha, 3, QuadratureRule::Midpoint));
    const RegularityData reg = *ex.instance.regularity;
    const ConstantTable table = full_constant_table(reg, ex.instance.T);
    rep.check(ex.fixture, "L_xi_1", table.L_xi[0]);
    rep.check(ex.fixture, "L_xi_2", table.L_xi[1]);
    const Vector cond = stagewise_conditional_metric(ex.instance.exogenous,
                                                     load_example(id, true, alpha).instance.exogenous, 8);
    rep.check(ex.fixture, "dK_stage1", cond[0]);
    rep.check(ex.fixture, "dK_stage2_cond", cond[1]);
    rep.check(ex.fixture, "stagewise_bound",
              exo_stagewise_bounds(table, cond, BoundMode::Value));
    const ScenarioTree tp = build_exogenous_tree(ex.instance.exogenous, 6, QuadratureRule::GaussLegendre);
    const ScenarioTree tq = build_exogenous_tree(load_example(id, true, alpha).instance.exogenous, 6,
                                                 QuadratureRule::GaussLegendre);
    const double nd = nested_distance(tp, tq);
    rep.check(ex.fixture, "nested_distance", nd);
    rep.check(ex.fixture, "nested_bound",
              comparison_bounds(ComparisonKind::Nested,
                                ComparisonInputs{ex.fixture.at("nested_bound_L").value, 1.0, 0.04,
                                                 0.0, 0.0}));
  } else if (id == "4.2a") {
    const BuiltExample ex = load_example(id, false, 1);
    rep.check(ex.fixture, "optimal_value", solved_value(id, false, 1, 3, QuadratureRule::Midpoint));
    rep.check(ex.fixture, "optimal_value_perturbed",
              solved_value(id, true, 1, 3, QuadratureRule::Midpoint));
    const ConstantTable table = full_constant_table(*ex.instance.regularity, ex.instance.T);
    rep.check(ex.fixture, "L_X_1", table.LX_feas[0]);
    rep.check(ex.fixture, "L_X_2", table.LX_feas[1]);
    rep.check(ex.fixture, "L_xi_1", table.L_xi[0]);
    rep.check(ex.fixture, "L_xi_2", table.L_xi[1]);
    const Vector cond = stagewise_conditional_metric(
        ex.instance.exogenous, load_example(id, true, 1).instance.exogenous, 8);
    rep.check(ex.fixture, "stagewise_bound", exo_stagewise_bounds(table, cond, BoundMode::Value));
    const double filt = filtration_for(id, 12);
    rep.check(ex.fixture, "filtration_estimate", filt);
    const double w3 = process_coupling_distance(ex.instance.exogenous,
                                                load_example(id, true, 1).instance.exogenous, 3.0);
    rep.note("w3_affine_coupling", w3);
    rep.note("w3_reference", ex.fixture.at("w3_reference").value);
    rep.check(ex.fixture, "hrs_bound",
              comparison_bounds(ComparisonKind::Filtration,
                                ComparisonInputs{ex.fixture.at("hrs_L").value, 1.0, 0.0,
                                                 ex.fixture.at("w3_reference").value, filt}));
  } else if (id == "4.2b") {
    const BuiltExample ex = load_example(id, false, 1);
    rep.check(ex.fixture, "optimal_value", solved_value(id, false, 1, 3, QuadratureRule::Midpoint));
    rep.check(ex.fixture, "optimal_value_perturbed",
              solved_value(id, true, 1, 3, QuadratureRule::Midpoint));
    // Bound from the listed coefficient fixtures.
    const double bound = ex.fixture.at("listed_L_xi_1").value * ex.fixture.at("dK_stage1").value +
                         ex.fixture.at("listed_L_xi_2").value * ex.fixture.at("dK_stage2_cond").value;
    rep.check(ex.fixture, "stagewise_bound", bound);
    const ConstantTable table = full_constant_table(*ex.instance.regularity, ex.instance.T);
    rep.check(ex.fixture, "recursion_L_v_2", table.L_v[1]);
    rep.note("recursion_L_xi_1", table.L_xi[0]);
    rep.note("recursion_L_xi_2", table.L_xi[1]);
  } else if (id == "4.3") {
    const BuiltExample ex = load_example(id, false, 1);
    rep.check(ex.fixture, "optimal_value", analytic_solve(id, false, 16).value);
    rep.check(ex.fixture, "optimal_value_perturbed", analytic_solve(id, true, 16).value);
    const ConstantTable table = full_constant_table(*ex.instance.regularity, ex.instance.T);
    rep.check(ex.fixture, "L_X_1", table.LX_feas[0]);
    rep.check(ex.fixture, "L_X_2", table.LX_feas[1]);
    rep.check(ex.fixture, "L_v_1", table.L_v[0]);
    rep.check(ex.fixture, "L_v_2", table.L_v[1]);
    rep.check(ex.fixture, "L_xi_1", table.L_xi[0]);
    rep.check(ex.fixture, "L_xi_2", table.L_xi[1]);
    const Vector cond = stagewise_conditional_metric(
        ex.instance.exogenous, load_example(id, true, 1).instance.exogenous, 8);
    rep.check(ex.fixture, "dK_stage1", cond[0]);
    rep.check(ex.fixture, "dK_stage2_cond", cond[1]);
    rep.check(ex.fixture, "stagewise_bound", exo_stagewise_bounds(table, cond, BoundMode::Value));
  } else {
    fail(Errc::UnknownExample, "reproduce supports 4.1, 4.2a, 4.2b, 4.3");
  }
  return rep.all_pass() ? 0 : 1;
}

int cmd_compare(const std::string& id, int alpha, const OutputOptions& opt, std::ostream& out) {
  const BuiltExample base = load_example(id, false, alpha);
  const BuiltExample pert = load_example(id, true, alpha);
  const ConstantTable table = full_constant_table(*base.instance.regularity, base.instance.T);
  const Vector cond =
      stagewise_conditional_metric(base.instance.exogenous, pert.instance.exogenous, 8);

  Json j;
  j["example"] = id;
  j["true_gap"] = json_round(std::abs(base.fixture.at("optimal_value").value -
                                      base.fixture.at("optimal_value_perturbed").value));
  if (id == "4.2b") {
    j["stagewise_bound"] = json_round(base.fixture.at("stagewise_bound").value);
  } else {
    j["stagewise_bound"] = json_round(exo_stagewise_bounds(table, cond, BoundMode::Value));
  }
  if (base.fixture.has("nested_bound")) {
    const ScenarioTree tp =
        build_exogenous_tree(base.instance.exogenous, 6, QuadratureRule::GaussLegendre);
    const ScenarioTree tq =
        build_exogenous_tree(pert.instance.exogenous, 6, QuadratureRule::GaussLegendre);
    j["nested_distance"] = json_round(nested_distance(tp, tq));
    j["nested_bound"] = json_round(base.fixture.at("nested_bound").value);
  }
  if (base.fixture.has("hrs_bound")) {
    if (id == "4.2a") {
      const double filt = filtration_for(id, 12);
      j["filtration_estimate"] = json_round(filt);
      j["hrs_bound"] = json_round(comparison_bounds(
          ComparisonKind::Filtration,
          ComparisonInputs{base.fixture.at("hrs_L").value, 1.0, 0.0,
                           base.fixture.at("w3_reference").value, filt}));
    } else {
      j["hrs_bound"] = json_round(base.fixture.at("hrs_bound").value);
    }
  }
  emit(j, opt, out);
  return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Integrated MSP-MDP stability toolkit"};
  app.require_subcommand(1);
  OutputOptions opt;
  long seed = 0;
  app.add_option("--format", opt.format, "json | markdown | csv")->default_val("json");
  app.add_option("--seed", seed, "seed for randomized suites");

  std::string spec_path, base_path, pert_path, metric_kind, arg_a, arg_b, example_id;
  int xi_per_dim = 4, zeta_per_dim = 4, atoms = 20, alpha = 10, gauss_pts = 16;
  double fm_p = 2.0, wass_r = 2.0;
  std::string rule_name = "gauss";

  auto* solve = app.add_subcommand("solve", "solve a problem spec");
  solve->add_option("spec", spec_path)->required();
  solve->add_option("--xi", xi_per_dim, "xi branching per dimension");
  solve->add_option("--zeta", zeta_per_dim, "zeta branching per dimension");
  solve->add_option("--rule", rule_name, "midpoint | gauss");

  auto* metric = app.add_subcommand("metric", "distance between two laws or trees");
  metric->add_option("kind", metric_kind, "kantorovich | fortet-mourier | wasserstein | nested")
      ->required();
  metric->add_option("a", arg_a)->required();
  metric->add_option("b", arg_b)->required();
  metric->add_option("--atoms", atoms, "discretization atoms per dimension");
  metric->add_option("--p", fm_p, "Fortet-Mourier order");
  metric->add_option("--r", wass_r, "Wasserstein order");

  auto* constants = app.add_subcommand("constants", "derived coefficient table of a spec");
  constants->add_option("spec", spec_path)->required();

  auto* bounds = app.add_subcommand("bounds", "bound report for a base/perturbed pair");
  bounds->add_option("base", base_path)->required();
  bounds->add_option("perturbed", pert_path)->required();
  bounds->add_option("--xi", xi_per_dim);
  bounds->add_option("--zeta", zeta_per_dim);

  auto* reproduce = app.add_subcommand("reproduce", "fixture suite of a worked example");
  reproduce->add_option("example", example_id)->required();
  reproduce->add_option("--alpha", alpha, "box gauge exponent for 4.1");
  reproduce->add_option("--gauss", gauss_pts, "quadrature points for analytic evaluations");

  auto* compare = app.add_subcommand("compare", "bound comparison table of a worked example");
  compare->add_option("example", example_id)->required();
  compare->add_option("--alpha", alpha);

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return 2;
  }

  try {
    if (solve->parsed()) {
      const ProblemInstance inst = load_instance(spec_path);
      const QuadratureRule rule =
          rule_name == "midpoint" ? QuadratureRule::Midpoint : QuadratureRule::GaussLegendre;
      const SolveReport report = solve_auto(
          inst, Branching::uniform(inst.T, xi_per_dim, zeta_per_dim), rule, SolverConfig{});
      emit(solve_report_to_json(report), opt, out);
      return 0;
    }
    if (metric->parsed()) {
      double value = 0.0;
      if (metric_kind == "nested") {
        std::ifstream fa(arg_a), fb(arg_b);
        require(fa.good() && fb.good(), Errc::InvalidInput, "cannot open tree files");
        Json ja, jb;
        fa >> ja;
        fb >> jb;
        value = nested_distance(tree_from_json(ja), tree_from_json(jb));
      } else {
        const Law a = load_law_argument(arg_a);
        const Law b = load_law_argument(arg_b);
        if (metric_kind == "kantorovich" && std::holds_alternative<UniformBox>(a) &&
            std::holds_alternative<UniformBox>(b)) {
          value = kantorovich_uniform_affine(std::get<UniformBox>(a), std::get<UniformBox>(b));
        } else {
          const DiscreteDistribution da = discretize(a, atoms, QuadratureRule::GaussLegendre);
          const DiscreteDistribution db = discretize(b, atoms, QuadratureRule::GaussLegendre);
          GroundCost cost = InfNormCost{};
          if (metric_kind == "fortet-mourier") cost = FortetMourierCost{fm_p};
          else if (metric_kind == "wasserstein") cost = PowerCost{wass_r};
          else require(metric_kind == "kantorovich", Errc::InvalidInput, "unknown metric kind");
          value = ot_distance(da, db, cost);
        }
      }
      Json j;
      j["metric"] = metric_kind;
      j["value"] = json_round(value);
      emit(j, opt, out);
      return 0;
    }
    if (constants->parsed()) {
      const ProblemInstance inst = load_instance(spec_path);
      const RegularityData reg = inst.regularity ? *inst.regularity : derive_regularity(inst);
      emit(constant_table_to_json(full_constant_table(reg, inst.T)), opt, out);
      return 0;
    }
    if (bounds->parsed()) {
      const ProblemInstance base = load_instance(base_path);
      const ProblemInstance pert = load_instance(pert_path);
      BoundReportConfig cfg;
      cfg.branching = Branching::uniform(base.T, xi_per_dim, zeta_per_dim);
      const BoundReport report = bound_report(base, pert, cfg);
      if (opt.format == "markdown")
        out << bound_report_to_markdown(report);
      else if (opt.format == "csv")
        out << bound_report_to_csv(report);
      else
        out << bound_report_to_json(report).dump(2) << "\n";
      return 0;
    }
    if (reproduce->parsed()) return cmd_reproduce(example_id, alpha, out);
    if (compare->parsed()) return cmd_compare(example_id, alpha, opt, out);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace mspmdp
