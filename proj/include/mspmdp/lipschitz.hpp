#pragma once

#include "mspmdp/model.hpp"

#include <optional>

namespace mspmdp {

// Every derived stability coefficient. Stage-indexed vectors use entry t-1 for
// stage t unless noted; boundary entries L_{T+1} = 0, L_{v,T+1} = 0, L_{X,0} = 0
// are implicit in the recursions.
struct ConstantTable {
  int T = 0;
  Vector L;        // value-function moduli L_t, t = 1..T
  Vector L_X;      // per-stage feasible-set moduli A L_{g,t} / rho, t = 1..T
  Vector LX_feas;  // feasible-set recursion L_{X,t} in xi, t = 1..T
  Vector l_s;      // state moduli l_{s,t}, t = 1..T (l_{s,1} = 0)
  std::optional<double> r1, r2;  // characteristic roots when well defined
  Vector L_hat;    // endogenous value coefficients, t = 1..T
  Vector H;        // endogenous solution coefficients, t = 0..T (size T+1)
  Matrix L_X_tj;   // (t, j) entry = L_{X,t,j}, 1 <= t <= T, 0 <= j <= t-1; zero elsewhere
  double L_theta = 0.0;   // global exogenous value coefficient
  double L_sigma1 = 0.0;  // objective-difference modulus (summed form)
  double L_sigma2 = 0.0;  // its L_S = 1 evaluation
  double L_sigma = 0.0;
  double L_X_global = 0.0;  // max_t LX_feas
  Vector L_v;   // stagewise value moduli, t = 1..T
  Vector L_xi;  // stagewise bound coefficients, t = 1..T
};

// Theorem-level recursions. Each returns the filled slice of a ConstantTable.

// L_T = L_{C,T} L_S + L_{X,T}(1 + L_S); L_t = (L_{C,t} + L_{t+1}) L_S + L_{X,t}(1 + L_S).
ConstantTable value_function_constants(const RegularityData& reg, int T);

// Feasible-set recursion in xi with the characteristic-root closed forms checked
// against the recursion to 1e-9.
ConstantTable feasible_set_constants(const RegularityData& reg, int T);

// Endogenous coefficients: L_hat_t, H_t, and the triangular L_{X,t,j} table.
ConstantTable endogenous_coeffs(const RegularityData& reg, int T);

// Global exogenous coefficients L_theta, L_sigma, L_X.
ConstantTable exogenous_global_coeffs(const RegularityData& reg, int T);

// Stagewise coefficients L_{v,t}, L_{xi,t}; needs the conditional-kernel moduli.
ConstantTable stagewise_coeffs(const RegularityData& reg, const Vector& L_Q, int T);

// Convenience: all of the above merged (L_Q taken from reg when present).
ConstantTable full_constant_table(const RegularityData& reg, int T);

// Strong convexity modulus mu yields the second-order growth pair (mu, 2).
GrowthCondition growth_from_strong_convexity(double mu);

}  // namespace mspmdp
