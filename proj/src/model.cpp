#include "mspmdp/model.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace mspmdp {

CustomRegistry& CustomRegistry::instance() {
  static CustomRegistry reg;
  return reg;
}

void CustomRegistry::register_cost(const std::string& name, CostFn fn) { costs_[name] = std::move(fn); }
void CustomRegistry::register_constraint(const std::string& name, ConstraintFn fn) {
  constraints_[name] = std::move(fn);
}
void CustomRegistry::register_transition(const std::string& name, TransitionFn fn) {
  transitions_[name] = std::move(fn);
}

const CustomRegistry::CostFn& CustomRegistry::cost(const std::string& name) const {
  auto it = costs_.find(name);
  require(it != costs_.end(), Errc::EvaluatorError, "unknown custom cost '" + name + "'");
  return it->second;
}
const CustomRegistry::ConstraintFn& CustomRegistry::constraint(const std::string& name) const {
  auto it = constraints_.find(name);
  require(it != constraints_.end(), Errc::EvaluatorError, "unknown custom constraint '" + name + "'");
  return it->second;
}
const CustomRegistry::TransitionFn& CustomRegistry::transition(const std::string& name) const {
  auto it = transitions_.find(name);
  require(it != transitions_.end(), Errc::EvaluatorError, "unknown custom transition '" + name + "'");
  return it->second;
}

void RegularityData::validate(int T) const {
  require(L_C.size() == T && L_S.size() == T && L_g.size() == T, Errc::InvalidInput,
          "regularity moduli must cover stages 1..T");
  require(L_C.minCoeff() >= 0 && L_S.minCoeff() >= 0 && L_g.minCoeff() >= 0, Errc::InvalidModulus,
          "moduli must be nonnegative");
  require(rho > 0.0, Errc::SlaterViolation, "rho must be positive");
  require(A > 0.0, Errc::InvalidInput, "feasible-set diameter bound must be positive");
  if (growth) {
    require(growth->beta > 0.0, Errc::MissingGrowth, "growth beta must be positive");
    require(growth->nu >= 1.0, Errc::InvalidExponent, "growth order nu must be >= 1");
  }
  if (L_Q) require(L_Q->size() == T, Errc::InvalidInput, "L_Q must cover stages 2..T+1");
}

void ProblemInstance::validate() const {
  require(T >= 1, Errc::InvalidInput, "horizon must be >= 1");
  require(static_cast<int>(stages.size()) == T + 1, Errc::InvalidInput, "need stages 0..T");
  require(static_cast<int>(endogenous.laws.size()) == T + 1, Errc::InvalidInput,
          "endogenous process must hold T+1 stagewise-independent laws");
  require(exogenous.horizon() == T, Errc::InvalidInput, "exogenous process must cover stages 1..T");
  exogenous.validate();
  endogenous.validate();
  require(static_cast<int>(s0.size()) == stages[0].dims.n_hat, Errc::InvalidDimension,
          "initial state dimension mismatch");
  for (int t = 0; t < T; ++t)
    require(stages[static_cast<size_t>(t)].transition.has_value(), Errc::InvalidInput,
            "stages 0..T-1 need a transition");
  for (int t = 0; t <= T; ++t) {
    const auto& st = stages[static_cast<size_t>(t)];
    require(st.t == t, Errc::InvalidInput, "stage indices must be consecutive");
    require(law_dim(endogenous.laws[static_cast<size_t>(t)]) == st.dims.m2, Errc::InvalidDimension,
            "endogenous law dimension mismatch");
  }
  // Stage dims chain through the transitions.
  for (int t = 0; t < T; ++t)
    require(stages[static_cast<size_t>(t)].dims.n_hat >= 0 &&
                stages[static_cast<size_t>(t + 1)].dims.n_hat >= 0,
            Errc::InvalidDimension, "negative state dimension");
  // Stage 0 decisions live in a deterministic box.
  bool stage0_box = false;
  for (const auto& c : stages[0].constraints)
    if (std::holds_alternative<BoxConstraint>(c)) stage0_box = true;
  require(stage0_box, Errc::InvalidInput, "stage-0 feasible set must be a box");
}

namespace {

int xi_block_offset(const ProblemInstance& instance, int t) {
  int off = 0;
  for (int k = 1; k < t; ++k) off += instance.stage(k).dims.m1;
  return off;
}

Vector concat_history(std::span<const Vector> xi_hist) {
  long total = 0;
  for (const auto& x : xi_hist) total += x.size();
  Vector flat(total);
  long pos = 0;
  for (const auto& x : xi_hist) {
    flat.segment(pos, x.size()) = x;
    pos += x.size();
  }
  return flat;
}

double box_residual_row(const BoxConstraint& box, const Vector& x, int i, bool upper_side) {
  if (box.exponent == 1) return upper_side ? x[i] - box.upper[i] : box.lower[i] - x[i];
  // Symmetric power gauge: x^alpha - u^alpha (alpha even), one row per coordinate.
  return std::pow(x[i], box.exponent) - std::pow(box.upper[i], box.exponent);
}

void check_box(const BoxConstraint& box) {
  require(box.lower.size() == box.upper.size(), Errc::InvalidDimension, "box bound dims differ");
  require((box.lower.array() <= box.upper.array()).all(), Errc::InvalidBox,
          "box lower must not exceed upper");
  if (box.exponent != 1) {
    require(box.exponent >= 2 && box.exponent % 2 == 0, Errc::InvalidExponent,
            "box exponent must be 1 or an even integer >= 2");
    require((box.lower.array() == -box.upper.array()).all(), Errc::InvalidBox,
            "power gauge requires a symmetric box");
  }
}

}  // namespace

double evaluate_cost(const ProblemInstance& instance, int t, const Vector& s, const Vector& x,
                     std::span<const Vector> xi_hist, const Vector& zeta) {
  const StageSpec& st = instance.stage(t);
  require(s.size() == st.dims.n_hat && x.size() == st.dims.n && zeta.size() == st.dims.m2,
          Errc::InvalidDimension, "cost argument dimensions mismatch stage spec");
  if (const auto* a = std::get_if<AffineCost>(&st.cost)) {
    double v = a->b + a->a_s.dot(s) + a->a_x.dot(x) + a->a_z.dot(zeta);
    if (t >= 1 && a->a_xi.size() > 0) {
      const Vector flat = concat_history(xi_hist);
      require(flat.size() == a->a_xi.size(), Errc::InvalidDimension,
              "exogenous history length mismatch");
      v += a->a_xi.dot(flat);
    }
    return v;
  }
  const auto& c = std::get<CustomCost>(st.cost);
  try {
    return CustomRegistry::instance().cost(c.name)(c.params, t, s, x, xi_hist, zeta);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(Errc::EvaluatorError, std::string("custom cost failed: ") + e.what());
  }
}

Vector evaluate_transition(const ProblemInstance& instance, int t, const Vector& s, const Vector& x,
                           const Vector& xi_t, const Vector& zeta_t) {
  const StageSpec& st = instance.stage(t);
  require(st.transition.has_value(), Errc::InvalidInput, "stage has no transition");
  require(s.size() == st.dims.n_hat && x.size() == st.dims.n && zeta_t.size() == st.dims.m2,
          Errc::InvalidDimension, "transition argument dimensions mismatch stage spec");
  if (const auto* a = std::get_if<AffineTransition>(&*st.transition)) {
    Vector next = a->M1 * s + a->M2 * x + a->N2 * zeta_t;
    if (t >= 1 && a->N1.size() > 0) {
      require(xi_t.size() == a->N1.cols(), Errc::InvalidDimension, "xi dimension mismatch");
      next += a->N1 * xi_t;
    }
    return next;
  }
  const auto& c = std::get<CustomTransition>(*st.transition);
  try {
    return CustomRegistry::instance().transition(c.name)(c.params, t, s, x, xi_t, zeta_t);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(Errc::EvaluatorError, std::string("custom transition failed: ") + e.what());
  }
}

Vector feasibility_residual(const ProblemInstance& instance, int t, const Vector& s, const Vector& x,
                            const Vector& x_prev, std::span<const Vector> xi_hist) {
  require(t >= 1, Errc::InvalidInput, "stage-0 feasibility is the fixed box");
  const StageSpec& st = instance.stage(t);
  require(s.size() == st.dims.n_hat && x.size() == st.dims.n, Errc::InvalidDimension,
          "feasibility argument dimensions mismatch stage spec");
  require(static_cast<int>(xi_hist.size()) == t, Errc::InvalidHistory,
          "history must hold stages 1..t");

  std::vector<double> rows;
  for (const auto& fam : st.constraints) {
    if (const auto* box = std::get_if<BoxConstraint>(&fam)) {
      check_box(*box);
      if (box->exponent == 1) {
        for (int i = 0; i < x.size(); ++i) {
          rows.push_back(box_residual_row(*box, x, i, true));
          rows.push_back(box_residual_row(*box, x, i, false));
        }
      } else {
        for (int i = 0; i < x.size(); ++i) rows.push_back(box_residual_row(*box, x, i, true));
      }
    } else if (const auto* aff = std::get_if<AffineInequality>(&fam)) {
      const Vector& xi_t = xi_hist.back();
      Vector r = aff->A * x + aff->B * x_prev + aff->C * s + aff->D * xi_t - aff->kappa;
      for (int i = 0; i < r.size(); ++i) rows.push_back(r[i]);
    } else if (const auto* quad = std::get_if<QuadraticInequality>(&fam)) {
      const Vector& xi_t = xi_hist.back();
      for (int i = 0; i < x.size(); ++i)
        rows.push_back(x[i] * x[i] - x_prev[i] + s[i] + xi_t[i] - quad->kappa[i]);
    } else {
      const auto& c = std::get<CustomConstraint>(fam);
      Vector r;
      try {
        r = CustomRegistry::instance().constraint(c.name)(c.params, t, s, x, x_prev, xi_hist);
      } catch (const Error&) {
        throw;
      } catch (const std::exception& e) {
        fail(Errc::EvaluatorError, std::string("custom constraint failed: ") + e.what());
      }
      for (int i = 0; i < r.size(); ++i) rows.push_back(r[i]);
    }
  }
  return Eigen::Map<Vector>(rows.data(), static_cast<long>(rows.size()));
}

namespace {

double row_abs_sum_max(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

// Lipschitz modulus of one constraint family in (s_t, x_{t-1}): the norm the
// feasible-set estimates run on. Box families do not move with (s, x_prev).
double family_Lg(const ConstraintFamily& fam) {
  if (std::holds_alternative<BoxConstraint>(fam)) return 0.0;
  if (const auto* aff = std::get_if<AffineInequality>(&fam))
    return std::max(row_abs_sum_max(aff->C), row_abs_sum_max(aff->B));
  if (std::holds_alternative<QuadraticInequality>(fam)) return 1.0;
  fail(Errc::MissingRegularity, "custom constraint needs user-supplied moduli");
}

}  // namespace

RegularityData derive_regularity(const ProblemInstance& instance) {
  const int T = instance.T;
  RegularityData reg;
  reg.L_C = Vector::Zero(T);
  reg.L_S = Vector::Zero(T);
  reg.L_g = Vector::Zero(T);
  const RegularityData* declared = instance.regularity ? &*instance.regularity : nullptr;

  for (int t = 1; t <= T; ++t) {
    const StageSpec& st = instance.stage(t);
    if (const auto* a = std::get_if<AffineCost>(&st.cost)) {
      double per_block_xi = 0.0;
      if (a->a_xi.size() > 0 && st.dims.m1 > 0) {
        for (int b = 0; b < st.t; ++b)
          per_block_xi = std::max(per_block_xi,
                                  a->a_xi.segment(b * st.dims.m1, st.dims.m1).cwiseAbs().sum());
      }
      reg.L_C[t - 1] = std::max({a->a_s.cwiseAbs().sum(), a->a_x.cwiseAbs().sum(),
                                 a->a_z.cwiseAbs().sum(), per_block_xi});
    } else {
      require(declared != nullptr && declared->L_C.size() == T, Errc::MissingRegularity,
              "custom cost needs declared L_C");
      reg.L_C[t - 1] = declared->L_C[t - 1];
    }
    double lg = 0.0;
    bool custom_g = false;
    for (const auto& fam : st.constraints) {
      if (std::holds_alternative<CustomConstraint>(fam)) {
        custom_g = true;
        continue;
      }
      lg = std::max(lg, family_Lg(fam));
    }
    if (custom_g) {
      require(declared != nullptr && declared->L_g.size() == T, Errc::MissingRegularity,
              "custom constraint needs declared L_g");
      lg = std::max(lg, declared->L_g[t - 1]);
    }
    reg.L_g[t - 1] = lg;
  }
  for (int t = 0; t < T; ++t) {
    const StageSpec& st = instance.stage(t);
    if (const auto* a = std::get_if<AffineTransition>(&*st.transition)) {
      reg.L_S[t] = std::max({row_abs_sum_max(a->M1), row_abs_sum_max(a->M2),
                             row_abs_sum_max(a->N2)});
    } else {
      require(declared != nullptr && declared->L_S.size() == T, Errc::MissingRegularity,
              "custom transition needs declared L_S");
      reg.L_S[t] = declared->L_S[t];
    }
  }

  // Feasible-set diameter bound: the widest box across stages.
  double A = 0.0;
  for (int t = 0; t <= T; ++t)
    for (const auto& fam : instance.stage(t).constraints)
      if (const auto* box = std::get_if<BoxConstraint>(&fam))
        A = std::max(A, (box->upper - box->lower).maxCoeff());
  require(A > 0.0, Errc::MissingRegularity, "no box constraint to bound the feasible diameter");
  reg.A = A;

  // Slater margin. Declared rho wins; otherwise evaluate the state-dependent
  // families at the declared Slater point. With only box families, the margin of
  // the box gauge at its Slater point (or center) applies.
  if (declared && declared->rho > 0.0) {
    reg.rho = declared->rho;
  } else {
    double rho = std::numeric_limits<double>::infinity();
    for (int t = 1; t <= T; ++t) {
      const StageSpec& st = instance.stage(t);
      Vector xbar = Vector::Zero(st.dims.n);
      if (instance.slater_points && static_cast<int>(instance.slater_points->size()) >= t)
        xbar = (*instance.slater_points)[static_cast<size_t>(t - 1)];
      bool state_dependent = false;
      for (const auto& fam : st.constraints)
        if (!std::holds_alternative<BoxConstraint>(fam)) state_dependent = true;
      require(!state_dependent, Errc::MissingRegularity,
              "state-dependent constraints need a declared rho");
      for (const auto& fam : st.constraints) {
        const auto& box = std::get<BoxConstraint>(fam);
        check_box(box);
        for (int i = 0; i < xbar.size(); ++i) {
          if (box.exponent == 1) {
            rho = std::min({rho, box.upper[i] - xbar[i], xbar[i] - box.lower[i]});
          } else {
            rho = std::min(rho, std::pow(box.upper[i], box.exponent) -
                                    std::pow(xbar[i], box.exponent));
          }
        }
      }
    }
    require(std::isfinite(rho) && rho > 0.0, Errc::SlaterViolation,
            "declared Slater point has no positive margin");
    reg.rho = rho;
  }

  if (declared) {
    reg.growth = declared->growth;
    reg.L_Q = declared->L_Q;
    reg.finite_moment_2T = declared->finite_moment_2T;
    reg.finite_moment_3T1 = declared->finite_moment_3T1;
  }
  reg.validate(T);
  return reg;
}

namespace {

Matrix require_diagonal(const Matrix& m, const char* what) {
  if (m.size() == 0) return m;
  require(m.rows() == m.cols(), Errc::InvalidInput, what);
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      require(i == j || m(i, j) == 0.0, Errc::InvalidInput, what);
  return m;
}

Matrix slice1(const Matrix& m, int c) {
  if (m.size() == 0) return m;
  Matrix out(1, 1);
  out(0, 0) = m(c, c);
  return out;
}

Vector slice1(const Vector& v, int c) {
  if (v.size() == 0) return v;
  Vector out(1);
  out[0] = v[c];
  return out;
}

Law slice_law(const Law& law, int c) {
  if (const auto* box = std::get_if<UniformBox>(&law))
    return UniformBox{slice1(box->lower, c), slice1(box->upper, c)};
  const auto& d = std::get<DiscreteDistribution>(law);
  // Coordinates must be independent for a per-coordinate slice; discrete laws are
  // sliced only when one-dimensional already.
  require(d.dim() == 1, Errc::InvalidInput, "cannot slice a joint discrete law");
  return d;
}

}  // namespace

ProblemInstance slice_coordinate(const ProblemInstance& instance, int coord) {
  require(instance.separable, Errc::InvalidInput, "instance is not flagged separable");
  ProblemInstance out;
  out.T = instance.T;
  out.s0 = slice1(instance.s0, coord);
  out.separable = true;
  out.unique_minimizers = instance.unique_minimizers;
  out.regularity = instance.regularity;
  out.slater_points = std::nullopt;
  if (instance.slater_points) {
    std::vector<Vector> pts;
    for (const auto& p : *instance.slater_points) pts.push_back(slice1(p, coord));
    out.slater_points = pts;
  }

  for (const auto& st : instance.stages) {
    StageSpec s;
    s.t = st.t;
    s.dims = StageDims{1, 1, st.t >= 1 ? 1 : 0, 1};
    if (const auto* a = std::get_if<AffineCost>(&st.cost)) {
      AffineCost c;
      c.a_s = slice1(a->a_s, coord);
      c.a_x = slice1(a->a_x, coord);
      c.a_z = slice1(a->a_z, coord);
      c.b = a->b / st.dims.n;  // constant split evenly across coordinates
      if (a->a_xi.size() > 0) {
        const int blocks = st.t;
        const int m1 = st.dims.m1;
        Vector axi(blocks);
        for (int bIdx = 0; bIdx < blocks; ++bIdx) axi[bIdx] = a->a_xi[bIdx * m1 + coord];
        c.a_xi = axi;
      }
      s.cost = c;
    } else {
      fail(Errc::InvalidInput, "custom costs cannot be sliced");
    }
    for (const auto& fam : st.constraints) {
      if (const auto* box = std::get_if<BoxConstraint>(&fam)) {
        s.constraints.push_back(
            BoxConstraint{slice1(box->lower, coord), slice1(box->upper, coord), box->exponent});
      } else if (const auto* aff = std::get_if<AffineInequality>(&fam)) {
        require_diagonal(aff->A, "separable slice needs diagonal constraint matrices");
        require_diagonal(aff->B, "separable slice needs diagonal constraint matrices");
        require_diagonal(aff->C, "separable slice needs diagonal constraint matrices");
        require_diagonal(aff->D, "separable slice needs diagonal constraint matrices");
        s.constraints.push_back(AffineInequality{slice1(aff->A, coord), slice1(aff->B, coord),
                                                 slice1(aff->C, coord), slice1(aff->D, coord),
                                                 slice1(aff->kappa, coord)});
      } else if (const auto* quad = std::get_if<QuadraticInequality>(&fam)) {
        s.constraints.push_back(QuadraticInequality{slice1(quad->kappa, coord)});
      } else {
        fail(Errc::InvalidInput, "custom constraints cannot be sliced");
      }
    }
    if (st.transition) {
      const auto* a = std::get_if<AffineTransition>(&*st.transition);
      require(a != nullptr, Errc::InvalidInput, "custom transitions cannot be sliced");
      require_diagonal(a->M1, "separable slice needs diagonal transition matrices");
      require_diagonal(a->M2, "separable slice needs diagonal transition matrices");
      require_diagonal(a->N1, "separable slice needs diagonal transition matrices");
      require_diagonal(a->N2, "separable slice needs diagonal transition matrices");
      s.transition = AffineTransition{slice1(a->M1, coord), slice1(a->M2, coord),
                                      slice1(a->N1, coord), slice1(a->N2, coord)};
    }
    out.stages.push_back(std::move(s));
  }

  for (const auto& stage : instance.exogenous.stages) {
    if (const auto* m = std::get_if<Marginal>(&stage)) {
      out.exogenous.stages.push_back(Marginal{slice_law(m->law, coord)});
    } else if (const auto* k = std::get_if<AffineShiftKernel>(&stage)) {
      out.exogenous.stages.push_back(AffineShiftKernel{k->weights, slice_law(k->innovation, coord)});
    } else {
      fail(Errc::InvalidInput, "explicit kernels cannot be sliced");
    }
  }
  for (const auto& law : instance.endogenous.laws)
    out.endogenous.laws.push_back(slice_law(law, coord));
  return out;
}

void register_builtin_customs() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto& reg = CustomRegistry::instance();
    // Inventory stage cost: params = (h, l, p0). Holding + purchase + backorder,
    // with the purchase price read from the last exogenous block (p0 at stage 0).
    reg.register_cost("inventory_cost",
                      [](const Vector& params, int t, const Vector& s, const Vector& x,
                         std::span<const Vector> xi_hist, const Vector&) {
                        const double h = params[0], l = params[1], p0 = params[2];
                        const double price = t == 0 ? p0 : xi_hist.back()[0];
                        return h * std::max(0.0, s[0]) + price * x[0] + l * std::max(0.0, -s[0]);
                      });
    // Separated quadratic stage cost: params = (c, a), value c * sum (x_i - a)^2.
    reg.register_cost("quadratic_cost",
                      [](const Vector& params, int, const Vector&, const Vector& x,
                         std::span<const Vector>, const Vector&) {
                        const double c = params[0], a = params[1];
                        return c * (x.array() - a).square().sum();
                      });
  });
}

}  // namespace mspmdp
