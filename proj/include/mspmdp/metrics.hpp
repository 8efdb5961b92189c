#pragma once

#include "mspmdp/solver.hpp"
#include "mspmdp/stochastic.hpp"

#include <variant>

namespace mspmdp {

// Ground costs of the transport functionals. FortetMourier uses the reduced cost
// max{1, |x|^{p-1}, |y|^{p-1}} |x - y|; Power returns the r-Wasserstein root.
struct InfNormCost {};
struct FortetMourierCost {
  double p = 1.0;
};
struct PowerCost {
  double r = 1.0;
};
using GroundCost = std::variant<InfNormCost, FortetMourierCost, PowerCost>;

double ground_cost(const GroundCost& cost, const Vector& x, const Vector& y);

// Exact 1-Wasserstein between scalar laws by a merged-quantile sweep.
double kantorovich_1d(const DiscreteDistribution& P, const DiscreteDistribution& Q);

// Exact transportation optimum (transportation simplex, northwest-corner start,
// Bland anti-cycling). Power costs return optimum^{1/r}.
double ot_distance(const DiscreteDistribution& P, const DiscreteDistribution& Q,
                   const GroundCost& cost);

// Plain minimum-cost transport value for an explicit cost matrix.
double transport_optimum(const Vector& supply, const Vector& demand, const Matrix& cost);

// Closed-form Kantorovich distance between uniform boxes under the
// componentwise monotone affine coupling; exact for the worked instances.
double kantorovich_uniform_affine(const UniformBox& U1, const UniformBox& U2);

// Expectation of |xi - T(xi)|^p under the componentwise affine coupling of two
// exogenous processes, to the power 1/p; the infinity norm runs over the whole
// path. p = 1 feeds the global value bound, p = 3 reports W_3.
double process_coupling_distance(const ExogenousProcess& P, const ExogenousProcess& Q, double p,
                                 int n_per_dim = 12);

// Nested distance between trees over exogenous layers: backward transport
// recursion with stage distances accumulated into the pairing costs.
double nested_distance(const ScenarioTree& treeP, const ScenarioTree& treeQ);

// Sum over stages of max{ E|x_t - E[x~_t]|, E|x~_t - E[x_t]| }, conditional
// expectations taken with the trees' branch weights. Expectations are applied
// per coordinate before the norm across coordinates, matching the worked
// evaluation this estimator reproduces.
double filtration_estimate(const Policy& policyP, const Policy& policyQ, const ScenarioTree& treeP,
                           const ScenarioTree& treeQ);

}  // namespace mspmdp
