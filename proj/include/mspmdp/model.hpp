#pragma once

#include "mspmdp/stochastic.hpp"
#include "mspmdp/types.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mspmdp {

// C_t(s, x, xi_[t], zeta) = a_s.s + a_x.x + a_xi.xi_hist + a_z.zeta + b.
// a_xi runs over the concatenated history xi_1..xi_t; stage 0 has no xi block.
struct AffineCost {
  Vector a_s, a_x, a_xi, a_z;
  double b = 0.0;
};

// lower <= x <= upper. With an even exponent alpha the box must be symmetric and
// the residuals read x_i^alpha - upper_i^alpha (the |x|^alpha - u^alpha gauge).
struct BoxConstraint {
  Vector lower, upper;
  int exponent = 1;
};

// A x_t + B x_{t-1} + C s_t + D xi_t - kappa <= 0 rowwise.
struct AffineInequality {
  Matrix A, B, C, D;
  Vector kappa;
};

// x_{t,i}^2 - x_{t-1,i} + s_{t,i} + xi_{t,i} - kappa_i <= 0 per coordinate.
struct QuadraticInequality {
  Vector kappa;
};

// s_{t+1} = M1 s_t + M2 x_t + N1 xi_t + N2 zeta_t. Stage 0 ignores xi (N1 unused).
struct AffineTransition {
  Matrix M1, M2, N1, N2;
};

// Named evaluator looked up in the custom registry; `params` are the evaluator's
// constants. Custom families must carry user-supplied Lipschitz moduli in the
// instance's RegularityData: the toolkit never samples for them.
struct CustomCost {
  std::string name;
  Vector params;
};
struct CustomConstraint {
  std::string name;
  Vector params;
  int rows = 1;
};
struct CustomTransition {
  std::string name;
  Vector params;
};

using CostFamily = std::variant<AffineCost, CustomCost>;
using ConstraintFamily = std::variant<BoxConstraint, AffineInequality, QuadraticInequality, CustomConstraint>;
using TransitionFamily = std::variant<AffineTransition, CustomTransition>;

// Registry of named custom evaluators (keeps Custom families JSON round-trippable).
struct CustomRegistry {
  using CostFn = std::function<double(const Vector& params, int t, const Vector& s, const Vector& x,
                                      std::span<const Vector> xi_hist, const Vector& zeta)>;
  using ConstraintFn = std::function<Vector(const Vector& params, int t, const Vector& s, const Vector& x,
                                            const Vector& x_prev, std::span<const Vector> xi_hist)>;
  using TransitionFn = std::function<Vector(const Vector& params, int t, const Vector& s, const Vector& x,
                                            const Vector& xi, const Vector& zeta)>;

  static CustomRegistry& instance();
  void register_cost(const std::string& name, CostFn fn);
  void register_constraint(const std::string& name, ConstraintFn fn);
  void register_transition(const std::string& name, TransitionFn fn);
  const CostFn& cost(const std::string& name) const;
  const ConstraintFn& constraint(const std::string& name) const;
  const TransitionFn& transition(const std::string& name) const;

 private:
  std::map<std::string, CostFn> costs_;
  std::map<std::string, ConstraintFn> constraints_;
  std::map<std::string, TransitionFn> transitions_;
};

struct StageDims {
  int n = 0;      // decision
  int n_hat = 0;  // state
  int m1 = 0;     // exogenous
  int m2 = 0;     // endogenous
};

struct StageSpec {
  int t = 0;
  CostFamily cost;
  std::vector<ConstraintFamily> constraints;
  std::optional<TransitionFamily> transition;  // absent at stage T
  StageDims dims;
};

struct GrowthCondition {
  double beta = 0.0;
  double nu = 1.0;
};

// Regularity constants behind every coefficient recursion. Moduli are in the
// infinity norm, per stage where the theory is stagewise.
struct RegularityData {
  Vector L_C;  // stages 1..T (index t-1)
  Vector L_S;  // stages 0..T-1 (index t)
  Vector L_g;  // stages 1..T (index t-1)
  double rho = 0.0;
  double A = 0.0;
  std::optional<GrowthCondition> growth;
  std::optional<Vector> L_Q;  // kernel moduli; index t-1 holds L_{Q_{t+1}}, t = 1..T-1
  bool finite_moment_2T = true;
  bool finite_moment_3T1 = true;

  double maxLC() const { return L_C.size() ? L_C.maxCoeff() : 0.0; }
  double maxLS() const { return L_S.size() ? L_S.maxCoeff() : 0.0; }
  double maxLg() const { return L_g.size() ? L_g.maxCoeff() : 0.0; }
  void validate(int T) const;
};

struct ProblemInstance {
  int T = 0;
  Vector s0;
  std::vector<StageSpec> stages;  // stages 0..T
  ExogenousProcess exogenous;
  EndogenousProcess endogenous;
  std::optional<RegularityData> regularity;
  std::optional<std::vector<Vector>> slater_points;  // declared x̄_t per stage 1..T
  bool separable = false;
  bool unique_minimizers = false;

  const StageSpec& stage(int t) const { return stages.at(static_cast<size_t>(t)); }
  void validate() const;
};

// --- operations ---------------------------------------------------------------

double evaluate_cost(const ProblemInstance& instance, int t, const Vector& s, const Vector& x,
                     std::span<const Vector> xi_hist, const Vector& zeta);

Vector evaluate_transition(const ProblemInstance& instance, int t, const Vector& s, const Vector& x,
                           const Vector& xi_t, const Vector& zeta_t);

// Stacked g-residuals of every constraint family at stage t >= 1; x is feasible
// iff all entries <= kFeasTol.
Vector feasibility_residual(const ProblemInstance& instance, int t, const Vector& s, const Vector& x,
                            const Vector& x_prev, std::span<const Vector> xi_hist);

// Derives Lipschitz moduli and the diameter bound from the parametric families;
// rho comes from declared data (instance.regularity) or from evaluating the
// state-dependent constraints at the declared Slater points.
RegularityData derive_regularity(const ProblemInstance& instance);

// Per-coordinate slice of a separable instance (all families diagonal).
ProblemInstance slice_coordinate(const ProblemInstance& instance, int coord);

void register_builtin_customs();

}  // namespace mspmdp
