#pragma once

#include "mspmdp/lipschitz.hpp"
#include "mspmdp/metrics.hpp"
#include "mspmdp/solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mspmdp {

enum class BoundMode { Value, ValueFM, Solution, SolutionFM };

// Endogenous stability: value mode sums L_hat_{t+1} d_K(P_t, P~_t) with the
// terminal L_C term; solution mode sums (H_t / beta + sum_k L_{X,k,t}) d_K.
double endo_bounds(const ConstantTable& coeffs, const Vector& dK_list, BoundMode mode,
                   std::optional<double> beta = std::nullopt);

// Global exogenous stability. Value modes need m = E|xi - xi~| or d_{FM,3T+1};
// solution modes add the growth pair (beta, nu) and m1 = E|xi - xi~| or d_{FM,2T}.
double exo_global_bounds(const ConstantTable& coeffs, double m1, double m2, BoundMode mode,
                         std::optional<double> beta = std::nullopt,
                         std::optional<double> nu = std::nullopt);

// Stagewise exogenous stability over conditional Kantorovich inputs.
double exo_stagewise_bounds(const ConstantTable& coeffs, const Vector& cond_dK, BoundMode mode,
                            std::optional<double> beta = std::nullopt,
                            const std::optional<Vector>& L_Q = std::nullopt);

enum class ComparisonKind { Nested, Filtration };

struct ComparisonInputs {
  double modulus = 0.0;        // L_beta or L
  double exponent = 1.0;       // beta for the nested bound
  double nested_distance = 0.0;
  double wasserstein = 0.0;    // |xi - xi~|_{W_r}
  double filtration = 0.0;
};

double comparison_bounds(ComparisonKind kind, const ComparisonInputs& inputs);

// Per-stage average conditional Kantorovich distances between the processes,
// over quadrature histories of the unperturbed process.
Vector stagewise_conditional_metric(const ExogenousProcess& processP,
                                    const ExogenousProcess& processQ, int n_hist_samples);

struct BoundItem {
  std::string name;
  double value = 0.0;
  double metric_input = 0.0;
  bool dominates_gap = false;
};

struct BoundReport {
  double value_base = 0.0;
  double value_perturbed = 0.0;
  double true_gap = 0.0;
  std::optional<double> solution_distance;  // only when minimizers are unique
  std::string solution_note;
  std::vector<BoundItem> items;

  void recompute_verdicts();
};

struct BoundReportConfig {
  Branching branching = Branching::uniform(2, 4, 4);
  QuadratureRule rule = QuadratureRule::GaussLegendre;
  SolverConfig solver;
  int hist_samples = 8;
};

// Solves both instances, computes every applicable metric and coefficient, and
// assembles the bound-vs-gap comparison.
BoundReport bound_report(const ProblemInstance& base, const ProblemInstance& perturbed,
                         const BoundReportConfig& config);

}  // namespace mspmdp
