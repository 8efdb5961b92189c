#pragma once

#include "mspmdp/model.hpp"
#include "mspmdp/stochastic.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>

namespace mspmdp {

// Decisions keyed by joint-history node: the root for x_0, the xi_t nodes for
// x_t. Non-anticipative by construction.
struct Policy {
  std::map<int, Vector> decisions;

  const Vector& at(int node) const;
};

struct SolverConfig {
  double tolerance = 1e-6;        // on stage minimizations
  int max_iterations = 200;       // golden-section iteration cap per line search
  int multistart = 3;             // starts for coordinate descent
  int sweep_limit = 8;            // coordinate-descent sweeps
  std::optional<double> memo_grid;  // state-interpolation cell width; off by default
  bool separable = false;
};

struct CoordinateSolution {
  ScenarioTree tree;
  Policy policy;
  std::map<int, double> node_values;
  double value = 0.0;
};

struct SolveReport {
  double value = 0.0;
  Policy policy;
  std::map<int, double> node_values;  // v_t at each xi node under the optimal incoming pair
  long stage_solves = 0;
  long objective_evals = 0;
  double interpolation_error = 0.0;   // reported bound when the memo grid is on
  std::vector<CoordinateSolution> coordinates;  // filled by separable runs
};

struct FeasibleRegion {
  Vector box_lower, box_upper;
  std::function<double(const Vector&)> residual;  // max g residual; may be empty
  std::optional<Vector> slater;
};

struct StageResult {
  Vector x;
  double value = 0.0;
};

// Projected coordinate descent: per coordinate the feasible interval is located
// by bisection on the residual, then searched by golden section. Ties break
// toward the lexicographically smallest decision.
StageResult stage_minimize(const std::function<double(const Vector&)>& objective,
                           const FeasibleRegion& region, const SolverConfig& config);

// Backward recursion of the nested reformulation on the given joint tree.
SolveReport solve_nested(const ProblemInstance& instance, const ScenarioTree& tree,
                         const SolverConfig& config);

// Dispatcher: separable instances collapse to per-coordinate trees and solves.
SolveReport solve_auto(const ProblemInstance& instance, const Branching& branching,
                       QuadratureRule rule, const SolverConfig& config);

// Expected total cost of a policy by forward pass over the tree.
double evaluate_policy(const ProblemInstance& instance, const ScenarioTree& tree,
                       const Policy& policy);

// v_t at the given xi node for a free incoming pair (s_{t-1}, x_{t-1}); the
// realized (xi_{t-1}, zeta_{t-1}) come from the node's path.
double stage_value(const ProblemInstance& instance, const ScenarioTree& tree, int xi_node,
                   const Vector& s_prev, const Vector& x_prev, const SolverConfig& config);

// Closed-form policies of the worked instances, evaluated by tensor quadrature.
// id in {"4.1", "4.2a", "4.2b", "4.3"}.
SolveReport analytic_solve(const std::string& example_id, bool perturbed,
                           int gauss_points = 16);

}  // namespace mspmdp
