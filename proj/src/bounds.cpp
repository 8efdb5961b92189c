#include "mspmdp/bounds.hpp"

#include <algorithm>
#include <cmath>

namespace mspmdp {

double endo_bounds(const ConstantTable& coeffs, const Vector& dK_list, BoundMode mode,
                   std::optional<double> beta) {
  const int T = coeffs.T;
  require(dK_list.size() == T + 1, Errc::InvalidInput, "need d_K(P_t, P~_t) for t = 0..T");
  require(dK_list.minCoeff() >= 0.0, Errc::InvalidInput, "metric inputs must be nonnegative");
  if (mode == BoundMode::Value) {
    double total = 0.0;
    for (int t = 0; t <= T - 1; ++t) total += coeffs.L_hat[t] * dK_list[t];  // L_hat_{t+1}
    const double L_C = coeffs.H.size() == T + 1 ? coeffs.H[T] : 0.0;         // H_T = L_C
    return total + L_C * dK_list[T];
  }
  require(mode == BoundMode::Solution, Errc::InvalidInput, "unsupported endogenous mode");
  require(beta.has_value() && *beta > 0.0, Errc::MissingGrowth,
          "solution mode needs the growth constant beta");
  double total = 0.0;
  for (int t = 0; t <= T; ++t) {
    double feas = 0.0;
    for (int k = t + 1; k <= T; ++k) feas += coeffs.L_X_tj(k, t);
    total += (coeffs.H[t] / *beta + feas) * dK_list[t];
  }
  return total;
}

double exo_global_bounds(const ConstantTable& coeffs, double m1, double m2, BoundMode mode,
                         std::optional<double> beta, std::optional<double> nu) {
  require(m1 >= 0.0 && m2 >= 0.0, Errc::InvalidInput, "metric inputs must be nonnegative");
  if (mode == BoundMode::Value || mode == BoundMode::ValueFM) return coeffs.L_theta * m2;
  require(beta.has_value() && nu.has_value() && *beta > 0.0 && *nu >= 1.0, Errc::MissingGrowth,
          "solution modes need the growth pair (beta, nu)");
  const double inner =
      (coeffs.L_theta + coeffs.L_sigma * coeffs.L_X_global + coeffs.L_sigma) * m2 / *beta;
  return coeffs.L_X_global * m1 + std::pow(inner, 1.0 / *nu);
}

double exo_stagewise_bounds(const ConstantTable& coeffs, const Vector& cond_dK, BoundMode mode,
                            std::optional<double> beta, const std::optional<Vector>& L_Q) {
  const int T = coeffs.T;
  require(cond_dK.size() == T, Errc::InvalidInput, "need conditional d_K for t = 1..T");
  require(cond_dK.minCoeff() >= 0.0, Errc::InvalidInput, "metric inputs must be nonnegative");
  if (mode == BoundMode::Value) {
    double total = 0.0;
    for (int t = 1; t <= T; ++t) total += coeffs.L_xi[t - 1] * cond_dK[t - 1];
    return total;
  }
  require(mode == BoundMode::Solution, Errc::InvalidInput, "unsupported stagewise mode");
  require(beta.has_value() && *beta > 0.0, Errc::MissingGrowth,
          "solution mode needs the growth constant beta");
  require(L_Q.has_value(), Errc::MissingRegularity, "solution mode needs the kernel moduli");
  double total = 0.0;
  for (int t = 1; t <= T; ++t) {
    double chain = 1.0, prod = 1.0;
    for (int i = 1; i <= T - t; ++i) {
      prod *= (*L_Q)[t + i - 2];  // L_{Q_{t+i}}
      chain = std::max(chain, prod);
    }
    const double coeff =
        coeffs.L_xi[t - 1] / *beta +
        (coeffs.L_X_global + (coeffs.L_X_global + 1.0) * coeffs.L_sigma / *beta) * chain;
    total += coeff * cond_dK[t - 1];
  }
  return total;
}

double comparison_bounds(ComparisonKind kind, const ComparisonInputs& inputs) {
  if (kind == ComparisonKind::Nested) {
    require(inputs.exponent > 0.0 && std::isfinite(inputs.exponent), Errc::InvalidExponent,
            "Hoelder exponent must be positive");
    return inputs.modulus * std::pow(inputs.nested_distance, inputs.exponent);
  }
  return inputs.modulus * (inputs.wasserstein + inputs.filtration);
}

Vector stagewise_conditional_metric(const ExogenousProcess& processP,
                                    const ExogenousProcess& processQ, int n_hist_samples) {
  const int T = processP.horizon();
  require(processQ.horizon() == T, Errc::InvalidTrees, "processes of different horizon");
  Vector out = Vector::Zero(T);

  // Quadrature histories of the unperturbed process, extended stage by stage.
  std::vector<std::vector<Vector>> hists{{}};
  std::vector<double> weights{1.0};
  for (int t = 1; t <= T; ++t) {
    double avg = 0.0;
    for (size_t k = 0; k < hists.size(); ++k) {
      const Law lawP = conditional_distribution(processP, t, hists[k]);
      const Law lawQ = conditional_distribution(processQ, t, hists[k]);
      double dk;
      if (std::holds_alternative<UniformBox>(lawP) && std::holds_alternative<UniformBox>(lawQ)) {
        dk = kantorovich_uniform_affine(std::get<UniformBox>(lawP), std::get<UniformBox>(lawQ));
      } else {
        const DiscreteDistribution dP = discretize(lawP, n_hist_samples, QuadratureRule::GaussLegendre);
        const DiscreteDistribution dQ = discretize(lawQ, n_hist_samples, QuadratureRule::GaussLegendre);
        dk = ot_distance(dP, dQ, InfNormCost{});
      }
      avg += weights[k] * dk;
    }
    out[t - 1] = avg;
    if (t == T) break;

    std::vector<std::vector<Vector>> nh;
    std::vector<double> nw;
    for (size_t k = 0; k < hists.size(); ++k) {
      const DiscreteDistribution d = discretize(conditional_distribution(processP, t, hists[k]),
                                                n_hist_samples, QuadratureRule::GaussLegendre);
      for (int i = 0; i < d.size(); ++i) {
        auto h = hists[k];
        h.push_back(d.atoms[static_cast<size_t>(i)]);
        nh.push_back(std::move(h));
        nw.push_back(weights[k] * d.weights[i]);
      }
    }
    hists = std::move(nh);
    weights = std::move(nw);
  }
  return out;
}

void BoundReport::recompute_verdicts() {
  for (auto& item : items) item.dominates_gap = item.value >= std::abs(true_gap) - 1e-6;
}

namespace {

Vector endo_dK_per_stage(const ProblemInstance& base, const ProblemInstance& pert) {
  const int T = base.T;
  Vector dk = Vector::Zero(T + 1);
  for (int t = 0; t <= T; ++t) {
    const Law& lp = base.endogenous.laws[static_cast<size_t>(t)];
    const Law& lq = pert.endogenous.laws[static_cast<size_t>(t)];
    if (std::holds_alternative<UniformBox>(lp) && std::holds_alternative<UniformBox>(lq)) {
      dk[t] = kantorovich_uniform_affine(std::get<UniformBox>(lp), std::get<UniformBox>(lq));
    } else if (law_dim(lp) == 1) {
      dk[t] = kantorovich_1d(discretize(lp, 16, QuadratureRule::GaussLegendre),
                             discretize(lq, 16, QuadratureRule::GaussLegendre));
    } else {
      dk[t] = ot_distance(discretize(lp, 8, QuadratureRule::GaussLegendre),
                          discretize(lq, 8, QuadratureRule::GaussLegendre), InfNormCost{});
    }
  }
  return dk;
}

bool laws_equal(const Law& a, const Law& b) {
  if (a.index() != b.index()) return false;
  if (const auto* ba = std::get_if<UniformBox>(&a)) {
    const auto& bb = std::get<UniformBox>(b);
    return ba->lower == bb.lower && ba->upper == bb.upper;
  }
  const auto& da = std::get<DiscreteDistribution>(a);
  const auto& db = std::get<DiscreteDistribution>(b);
  if (da.size() != db.size() || da.weights != db.weights) return false;
  for (int i = 0; i < da.size(); ++i)
    if (da.atoms[static_cast<size_t>(i)] != db.atoms[static_cast<size_t>(i)]) return false;
  return true;
}

// Expected stagewise distance between the two optimal policies on matched trees
// (matched by branch index, which the shared branching config guarantees).
std::optional<double> matched_policy_distance(const SolveReport& a, const SolveReport& b) {
  auto stage_distance = [](const ScenarioTree& ta, const Policy& pa, const ScenarioTree& tb,
                           const Policy& pb) {
    std::map<int, double> per_stage;
    for (const auto& [node, x] : pa.decisions) {
      auto it = pb.decisions.find(node);
      if (it == pb.decisions.end()) return std::optional<double>{};
      const int t = ta[node].kind == NodeKind::Root ? 0 : ta[node].stage;
      per_stage[t] += ta.path_probability(node) * inf_dist(x, it->second);
    }
    double m = 0.0;
    for (const auto& [t, v] : per_stage) m = std::max(m, v);
    return std::optional<double>{m};
  };
  if (a.coordinates.empty() != b.coordinates.empty()) return std::nullopt;
  if (a.coordinates.empty()) return std::nullopt;  // joint-tree runs carry trees externally
  double dist = 0.0;
  for (size_t c = 0; c < a.coordinates.size(); ++c) {
    auto d = stage_distance(a.coordinates[c].tree, a.coordinates[c].policy,
                            b.coordinates[c].tree, b.coordinates[c].policy);
    if (!d) return std::nullopt;
    dist = std::max(dist, *d);
  }
  return dist;
}

}  // namespace

BoundReport bound_report(const ProblemInstance& base, const ProblemInstance& perturbed,
                         const BoundReportConfig& config) {
  base.validate();
  perturbed.validate();
  require(base.T == perturbed.T, Errc::InvalidInput, "horizons differ");

  BoundReport report;
  const SolveReport sb = solve_auto(base, config.branching, config.rule, config.solver);
  const SolveReport sp = solve_auto(perturbed, config.branching, config.rule, config.solver);
  report.value_base = sb.value;
  report.value_perturbed = sp.value;
  report.true_gap = std::abs(sb.value - sp.value);

  if (base.unique_minimizers && perturbed.unique_minimizers) {
    report.solution_distance = matched_policy_distance(sb, sp);
    if (!report.solution_distance) report.solution_note = "matched-tree estimate unavailable";
  } else {
    report.solution_note = "set-valued, estimate skipped";
  }

  const RegularityData reg = base.regularity ? *base.regularity : derive_regularity(base);
  const int T = base.T;
  ConstantTable coeffs = full_constant_table(reg, T);

  bool endo_perturbed = false;
  for (int t = 0; t <= T; ++t)
    if (!laws_equal(base.endogenous.laws[static_cast<size_t>(t)],
                    perturbed.endogenous.laws[static_cast<size_t>(t)]))
      endo_perturbed = true;

  if (endo_perturbed) {
    const Vector dk = endo_dK_per_stage(base, perturbed);
    report.items.push_back(
        BoundItem{"endogenous_value", endo_bounds(coeffs, dk, BoundMode::Value), dk.sum(), false});
    if (reg.growth)
      report.items.push_back(BoundItem{
          "endogenous_solution", endo_bounds(coeffs, dk, BoundMode::Solution, reg.growth->beta),
          dk.sum(), false});
  } else {
    // Exogenous perturbation: global and stagewise bounds.
    const double m1 = process_coupling_distance(base.exogenous, perturbed.exogenous, 1.0);
    report.items.push_back(BoundItem{
        "exogenous_value_global", exo_global_bounds(coeffs, m1, m1, BoundMode::Value), m1, false});
    if (reg.growth)
      report.items.push_back(
          BoundItem{"exogenous_solution_global",
                    exo_global_bounds(coeffs, m1, m1, BoundMode::Solution, reg.growth->beta,
                                      reg.growth->nu),
                    m1, false});
    if (reg.L_Q) {
      const Vector cond = stagewise_conditional_metric(base.exogenous, perturbed.exogenous,
                                                       config.hist_samples);
      report.items.push_back(BoundItem{"exogenous_value_stagewise",
                                       exo_stagewise_bounds(coeffs, cond, BoundMode::Value),
                                       cond.sum(), false});
      if (reg.growth)
        report.items.push_back(
            BoundItem{"exogenous_solution_stagewise",
                      exo_stagewise_bounds(coeffs, cond, BoundMode::Solution, reg.growth->beta,
                                           reg.L_Q),
                      cond.sum(), false});
    }
  }
  report.recompute_verdicts();
  return report;
}

}  // namespace mspmdp
