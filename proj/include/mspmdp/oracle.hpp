#pragma once

#include "mspmdp/solver.hpp"

namespace mspmdp {

// Exact backward enumeration with decisions restricted to a uniform grid over
// each stage box. Within grid resolution of the optimum for Lipschitz costs;
// exact when the optimum sits at a grid point.
SolveReport brute_force_solve(const ProblemInstance& instance, const ScenarioTree& tree,
                              int grid_points_per_dim, long budget = 50'000'000);

// Exact transport optimum for tiny problems by enumerating every basis
// (spanning tree of the bipartite support graph). Validates the simplex.
double ot_brute_force(const DiscreteDistribution& P, const DiscreteDistribution& Q,
                      const Matrix& cost);

}  // namespace mspmdp
