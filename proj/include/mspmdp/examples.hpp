#pragma once

#include "mspmdp/model.hpp"

#include <map>
#include <string>

namespace mspmdp {

struct FixtureValue {
  double value = 0.0;
  double tolerance = 0.0;
  std::string provenance;
};

// Worked instance together with its frozen expected values. Every value carries
// a provenance string naming where it comes from.
struct ExampleFixture {
  std::string id;
  std::map<std::string, FixtureValue> values;

  bool has(const std::string& key) const { return values.count(key) > 0; }
  const FixtureValue& at(const std::string& key) const;
};

struct BuiltExample {
  ProblemInstance instance;
  ExampleFixture fixture;
};

// id in {"inventory", "4.1", "4.2a", "4.2b", "4.3"}; alpha parameterizes the
// power-gauge box of "4.1" (>= 1, even when > 1).
BuiltExample build_example(const std::string& id, bool perturbed, int alpha = 1);

struct AnalyticEvaluation {
  double value = 0.0;
  long quadrature_points = 0;
};

// Expected cost of the closed-form optimal policy under tensor Gauss-Legendre
// quadrature; per-coordinate (the worked instances decouple).
AnalyticEvaluation evaluate_analytic_policy(const std::string& example_id, bool perturbed,
                                            int gauss_points);

// Stagewise decision functions of the closed-form policies, per coordinate.
// stage 0 takes no arguments beyond the constants; stages t >= 1 map
// (x_prev, s_t, xi_t) -> x_t.
double analytic_decision(const std::string& example_id, int t, double x_prev, double s_t,
                         double xi_t);

}  // namespace mspmdp
