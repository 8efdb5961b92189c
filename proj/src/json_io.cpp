#include "mspmdp/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mspmdp {

double json_round(double v) {
  if (!std::isfinite(v)) return v;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return std::strtod(buf, nullptr);
}

namespace {

Json vec_to_json(const Vector& v) {
  Json arr = Json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(json_round(v[i]));
  return arr;
}

Vector vec_from_json(const Json& j) {
  Vector v(static_cast<long>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<long>(i)] = j[i].get<double>();
  return v;
}

Json mat_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(json_round(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

Matrix mat_from_json(const Json& j) {
  const long rows = static_cast<long>(j.size());
  if (rows == 0) return Matrix();
  const long cols = static_cast<long>(j[0].size());
  Matrix m(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long c = 0; c < cols; ++c) m(i, c) = j[static_cast<size_t>(i)][static_cast<size_t>(c)].get<double>();
  return m;
}

}  // namespace

Json law_to_json(const Law& law) {
  Json j;
  if (const auto* box = std::get_if<UniformBox>(&law)) {
    j["law"] = "uniform_box";
    j["lower"] = vec_to_json(box->lower);
    j["upper"] = vec_to_json(box->upper);
  } else {
    const auto& d = std::get<DiscreteDistribution>(law);
    j["law"] = "discrete";
    Json atoms = Json::array();
    for (const auto& a : d.atoms) atoms.push_back(vec_to_json(a));
    j["atoms"] = atoms;
    j["weights"] = vec_to_json(d.weights);
  }
  return j;
}

Law law_from_json(const Json& j) {
  const std::string kind = j.at("law").get<std::string>();
  if (kind == "uniform_box")
    return UniformBox{vec_from_json(j.at("lower")), vec_from_json(j.at("upper"))};
  require(kind == "discrete", Errc::InvalidInput, "unknown law kind '" + kind + "'");
  DiscreteDistribution d;
  for (const auto& a : j.at("atoms")) d.atoms.push_back(vec_from_json(a));
  d.weights = vec_from_json(j.at("weights"));
  return d;
}

namespace {

Json cost_to_json(const CostFamily& cost) {
  Json j;
  if (const auto* a = std::get_if<AffineCost>(&cost)) {
    j["family"] = "affine_cost";
    j["a_s"] = vec_to_json(a->a_s);
    j["a_x"] = vec_to_json(a->a_x);
    j["a_xi"] = vec_to_json(a->a_xi);
    j["a_z"] = vec_to_json(a->a_z);
    j["b"] = json_round(a->b);
  } else {
    const auto& c = std::get<CustomCost>(cost);
    j["family"] = "custom_cost";
    j["name"] = c.name;
    j["params"] = vec_to_json(c.params);
  }
  return j;
}

CostFamily cost_from_json(const Json& j) {
  const std::string fam = j.at("family").get<std::string>();
  if (fam == "affine_cost") {
    AffineCost a;
    a.a_s = vec_from_json(j.at("a_s"));
    a.a_x = vec_from_json(j.at("a_x"));
    a.a_xi = vec_from_json(j.at("a_xi"));
    a.a_z = vec_from_json(j.at("a_z"));
    a.b = j.at("b").get<double>();
    return a;
  }
  require(fam == "custom_cost", Errc::InvalidInput, "unknown cost family '" + fam + "'");
  return CustomCost{j.at("name").get<std::string>(), vec_from_json(j.at("params"))};
}

Json constraint_to_json(const ConstraintFamily& con) {
  Json j;
  if (const auto* box = std::get_if<BoxConstraint>(&con)) {
    j["family"] = "box";
    j["lower"] = vec_to_json(box->lower);
    j["upper"] = vec_to_json(box->upper);
    j["exponent"] = box->exponent;
  } else if (const auto* aff = std::get_if<AffineInequality>(&con)) {
    j["family"] = "affine_inequality";
    j["A"] = mat_to_json(aff->A);
    j["B"] = mat_to_json(aff->B);
    j["C"] = mat_to_json(aff->C);
    j["D"] = mat_to_json(aff->D);
    j["kappa"] = vec_to_json(aff->kappa);
  } else if (const auto* quad = std::get_if<QuadraticInequality>(&con)) {
    j["family"] = "quadratic_inequality";
    j["kappa"] = vec_to_json(quad->kappa);
  } else {
    const auto& c = std::get<CustomConstraint>(con);
    j["family"] = "custom_constraint";
    j["name"] = c.name;
    j["params"] = vec_to_json(c.params);
    j["rows"] = c.rows;
  }
  return j;
}

ConstraintFamily constraint_from_json(const Json& j) {
  const std::string fam = j.at("family").get<std::string>();
  if (fam == "box")
    return BoxConstraint{vec_from_json(j.at("lower")), vec_from_json(j.at("upper")),
                         j.value("exponent", 1)};
  if (fam == "affine_inequality")
    return AffineInequality{mat_from_json(j.at("A")), mat_from_json(j.at("B")),
                            mat_from_json(j.at("C")), mat_from_json(j.at("D")),
                            vec_from_json(j.at("kappa"))};
  if (fam == "quadratic_inequality") return QuadraticInequality{vec_from_json(j.at("kappa"))};
  require(fam == "custom_constraint", Errc::InvalidInput, "unknown constraint family '" + fam + "'");
  return CustomConstraint{j.at("name").get<std::string>(), vec_from_json(j.at("params")),
                          j.value("rows", 1)};
}

Json transition_to_json(const TransitionFamily& tr) {
  Json j;
  if (const auto* a = std::get_if<AffineTransition>(&tr)) {
    j["family"] = "affine_transition";
    j["M1"] = mat_to_json(a->M1);
    j["M2"] = mat_to_json(a->M2);
    j["N1"] = mat_to_json(a->N1);
    j["N2"] = mat_to_json(a->N2);
  } else {
    const auto& c = std::get<CustomTransition>(tr);
    j["family"] = "custom_transition";
    j["name"] = c.name;
    j["params"] = vec_to_json(c.params);
  }
  return j;
}

TransitionFamily transition_from_json(const Json& j) {
  const std::string fam = j.at("family").get<std::string>();
  if (fam == "affine_transition")
    return AffineTransition{mat_from_json(j.at("M1")), mat_from_json(j.at("M2")),
                            mat_from_json(j.at("N1")), mat_from_json(j.at("N2"))};
  require(fam == "custom_transition", Errc::InvalidInput, "unknown transition family '" + fam + "'");
  return CustomTransition{j.at("name").get<std::string>(), vec_from_json(j.at("params"))};
}

Json exogenous_to_json(const ExogenousProcess& p) {
  Json arr = Json::array();
  for (const auto& stage : p.stages) {
    Json j;
    if (const auto* m = std::get_if<Marginal>(&stage)) {
      j["type"] = "marginal";
      j["law"] = law_to_json(m->law);
    } else if (const auto* k = std::get_if<AffineShiftKernel>(&stage)) {
      j["type"] = "affine_shift";
      j["weights"] = vec_to_json(k->weights);
      j["innovation"] = law_to_json(k->innovation);
    } else {
      fail(Errc::InvalidInput, "explicit kernels are not serializable");
    }
    arr.push_back(j);
  }
  return arr;
}

ExogenousProcess exogenous_from_json(const Json& j) {
  ExogenousProcess p;
  for (const auto& stage : j) {
    const std::string type = stage.at("type").get<std::string>();
    if (type == "marginal") {
      p.stages.push_back(Marginal{law_from_json(stage.at("law"))});
    } else {
      require(type == "affine_shift", Errc::InvalidInput, "unknown exogenous stage '" + type + "'");
      p.stages.push_back(AffineShiftKernel{vec_from_json(stage.at("weights")),
                                           law_from_json(stage.at("innovation"))});
    }
  }
  return p;
}

Json regularity_to_json(const RegularityData& reg) {
  Json j;
  j["L_C"] = vec_to_json(reg.L_C);
  j["L_S"] = vec_to_json(reg.L_S);
  j["L_g"] = vec_to_json(reg.L_g);
  j["rho"] = json_round(reg.rho);
  j["A"] = json_round(reg.A);
  if (reg.growth) j["growth"] = Json{{"beta", json_round(reg.growth->beta)}, {"nu", json_round(reg.growth->nu)}};
  if (reg.L_Q) j["L_Q"] = vec_to_json(*reg.L_Q);
  j["finite_moment_2T"] = reg.finite_moment_2T;
  j["finite_moment_3T1"] = reg.finite_moment_3T1;
  return j;
}

RegularityData regularity_from_json(const Json& j) {
  RegularityData reg;
  reg.L_C = vec_from_json(j.at("L_C"));
  reg.L_S = vec_from_json(j.at("L_S"));
  reg.L_g = vec_from_json(j.at("L_g"));
  reg.rho = j.at("rho").get<double>();
  reg.A = j.at("A").get<double>();
  if (j.contains("growth"))
    reg.growth = GrowthCondition{j["growth"].at("beta").get<double>(),
                                 j["growth"].at("nu").get<double>()};
  if (j.contains("L_Q")) reg.L_Q = vec_from_json(j["L_Q"]);
  reg.finite_moment_2T = j.value("finite_moment_2T", true);
  reg.finite_moment_3T1 = j.value("finite_moment_3T1", true);
  return reg;
}

}  // namespace

Json instance_to_json(const ProblemInstance& instance) {
  Json j;
  j["schema_version"] = 1;
  j["horizon"] = instance.T;
  j["initial_state"] = vec_to_json(instance.s0);
  Json stages = Json::array();
  for (const auto& st : instance.stages) {
    Json s;
    s["t"] = st.t;
    s["dims"] = Json{{"n", st.dims.n}, {"n_hat", st.dims.n_hat}, {"m1", st.dims.m1}, {"m2", st.dims.m2}};
    s["cost"] = cost_to_json(st.cost);
    Json cons = Json::array();
    for (const auto& c : st.constraints) cons.push_back(constraint_to_json(c));
    s["constraints"] = cons;
    if (st.transition) s["transition"] = transition_to_json(*st.transition);
    stages.push_back(s);
  }
  j["stages"] = stages;
  j["exogenous"] = exogenous_to_json(instance.exogenous);
  Json endo = Json::array();
  for (const auto& law : instance.endogenous.laws) endo.push_back(law_to_json(law));
  j["endogenous"] = endo;
  if (instance.regularity) j["regularity"] = regularity_to_json(*instance.regularity);
  if (instance.slater_points) {
    Json pts = Json::array();
    for (const auto& p : *instance.slater_points) pts.push_back(vec_to_json(p));
    j["slater_points"] = pts;
  }
  j["separable"] = instance.separable;
  j["unique_minimizers"] = instance.unique_minimizers;
  return j;
}

ProblemInstance instance_from_json(const Json& j) {
  require(j.value("schema_version", 0) == 1, Errc::InvalidInput, "unsupported schema version");
  register_builtin_customs();
  ProblemInstance inst;
  inst.T = j.at("horizon").get<int>();
  inst.s0 = vec_from_json(j.at("initial_state"));
  for (const auto& s : j.at("stages")) {
    StageSpec st;
    st.t = s.at("t").get<int>();
    const auto& d = s.at("dims");
    st.dims = StageDims{d.at("n").get<int>(), d.at("n_hat").get<int>(), d.at("m1").get<int>(),
                        d.at("m2").get<int>()};
    st.cost = cost_from_json(s.at("cost"));
    for (const auto& c : s.at("constraints")) st.constraints.push_back(constraint_from_json(c));
    if (s.contains("transition")) st.transition = transition_from_json(s["transition"]);
    inst.stages.push_back(std::move(st));
  }
  inst.exogenous = exogenous_from_json(j.at("exogenous"));
  for (const auto& law : j.at("endogenous")) inst.endogenous.laws.push_back(law_from_json(law));
  if (j.contains("regularity")) inst.regularity = regularity_from_json(j["regularity"]);
  if (j.contains("slater_points")) {
    std::vector<Vector> pts;
    for (const auto& p : j["slater_points"]) pts.push_back(vec_from_json(p));
    inst.slater_points = pts;
  }
  inst.separable = j.value("separable", false);
  inst.unique_minimizers = j.value("unique_minimizers", false);
  inst.validate();
  return inst;
}

Json tree_to_json(const ScenarioTree& tree) {
  Json nodes = Json::array();
  for (int i = 0; i < tree.size(); ++i) {
    const auto& n = tree[i];
    Json jn;
    jn["id"] = i;
    jn["stage"] = n.stage;
    jn["kind"] = n.kind == NodeKind::Root ? "root" : (n.kind == NodeKind::ExoBranch ? "exo" : "endo");
    jn["value"] = vec_to_json(n.value);
    jn["prob"] = json_round(n.prob);
    jn["parent"] = n.parent;
    nodes.push_back(jn);
  }
  return Json{{"nodes", nodes}};
}

ScenarioTree tree_from_json(const Json& j) {
  ScenarioTree tree;
  for (const auto& jn : j.at("nodes")) {
    ScenarioTree::Node n;
    n.stage = jn.at("stage").get<int>();
    const std::string kind = jn.at("kind").get<std::string>();
    n.kind = kind == "root" ? NodeKind::Root
                            : (kind == "exo" ? NodeKind::ExoBranch : NodeKind::EndoBranch);
    n.value = vec_from_json(jn.at("value"));
    n.prob = jn.at("prob").get<double>();
    n.parent = jn.at("parent").get<int>();
    tree.nodes.push_back(std::move(n));
  }
  for (int i = 0; i < tree.size(); ++i)
    if (tree.nodes[static_cast<size_t>(i)].parent >= 0)
      tree.nodes[static_cast<size_t>(tree.nodes[static_cast<size_t>(i)].parent)].children.push_back(i);
  tree.validate();
  return tree;
}

namespace {

Json policy_to_json(const Policy& policy, const ScenarioTree* tree) {
  Json j = Json::object();
  for (const auto& [node, x] : policy.decisions) {
    const std::string key = tree ? tree->path_key(node) : std::to_string(node);
    j[key] = vec_to_json(x);
  }
  return j;
}

}  // namespace

Json solve_report_to_json(const SolveReport& report, const ScenarioTree* tree) {
  Json j;
  j["value"] = json_round(report.value);
  j["stage_solves"] = report.stage_solves;
  j["objective_evals"] = report.objective_evals;
  if (report.interpolation_error > 0.0)
    j["interpolation_error"] = json_round(report.interpolation_error);
  if (!report.coordinates.empty()) {
    Json coords = Json::array();
    for (const auto& c : report.coordinates) {
      Json jc;
      jc["value"] = json_round(c.value);
      jc["policy"] = policy_to_json(c.policy, &c.tree);
      coords.push_back(jc);
    }
    j["coordinates"] = coords;
  } else {
    j["policy"] = policy_to_json(report.policy, tree);
  }
  return j;
}

Json constant_table_to_json(const ConstantTable& table) {
  Json j;
  j["T"] = table.T;
  j["L"] = vec_to_json(table.L);
  j["L_X"] = vec_to_json(table.L_X);
  j["LX_feasible"] = vec_to_json(table.LX_feas);
  j["l_s"] = vec_to_json(table.l_s);
  if (table.r1) j["r1"] = json_round(*table.r1);
  if (table.r2) j["r2"] = json_round(*table.r2);
  j["L_hat"] = vec_to_json(table.L_hat);
  j["H"] = vec_to_json(table.H);
  j["L_X_tj"] = mat_to_json(table.L_X_tj);
  j["L_theta"] = json_round(table.L_theta);
  j["L_sigma1"] = json_round(table.L_sigma1);
  j["L_sigma2"] = json_round(table.L_sigma2);
  j["L_sigma"] = json_round(table.L_sigma);
  j["L_X_max"] = json_round(table.L_X_global);
  j["L_v"] = vec_to_json(table.L_v);
  j["L_xi"] = vec_to_json(table.L_xi);
  return j;
}

Json bound_report_to_json(const BoundReport& report) {
  Json j;
  j["value_base"] = json_round(report.value_base);
  j["value_perturbed"] = json_round(report.value_perturbed);
  j["true_gap"] = json_round(report.true_gap);
  if (report.solution_distance) j["solution_distance"] = json_round(*report.solution_distance);
  if (!report.solution_note.empty()) j["solution_note"] = report.solution_note;
  Json items = Json::array();
  for (const auto& item : report.items)
    items.push_back(Json{{"bound_name", item.name},
                         {"value", json_round(item.value)},
                         {"metric_input", json_round(item.metric_input)},
                         {"dominates_gap", item.dominates_gap}});
  j["bounds"] = items;
  return j;
}

std::string bound_report_to_markdown(const BoundReport& report) {
  std::ostringstream os;
  os.precision(4);
  os << "| quantity | value |\n|---|---|\n";
  os << "| base value | " << report.value_base << " |\n";
  os << "| perturbed value | " << report.value_perturbed << " |\n";
  os << "| true gap | " << report.true_gap << " |\n";
  if (report.solution_distance)
    os << "| solution distance | " << *report.solution_distance << " |\n";
  else if (!report.solution_note.empty())
    os << "| solution distance | " << report.solution_note << " |\n";
  os << "\n| bound | value | metric input | dominates gap |\n|---|---|---|---|\n";
  for (const auto& item : report.items)
    os << "| " << item.name << " | " << item.value << " | " << item.metric_input << " | "
       << (item.dominates_gap ? "yes" : "no") << " |\n";
  return os.str();
}

std::string bound_report_to_csv(const BoundReport& report) {
  std::ostringstream os;
  os << "bound_name,value,metric_input,dominates_gap\n";
  os.precision(10);
  for (const auto& item : report.items)
    os << item.name << "," << item.value << "," << item.metric_input << ","
       << (item.dominates_gap ? "true" : "false") << "\n";
  return os.str();
}

ProblemInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::InvalidInput, "cannot open '" + path + "'");
  Json j;
  in >> j;
  return instance_from_json(j);
}

void save_instance(const ProblemInstance& instance, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), Errc::InvalidInput, "cannot write '" + path + "'");
  out << instance_to_json(instance).dump(2) << "\n";
}

}  // namespace mspmdp
