#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mspmdp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// The whole toolkit measures distances in the infinity norm.
inline double inf_norm(const Eigen::Ref<const Vector>& v) {
  return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
}

inline double inf_dist(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  return inf_norm(a - b);
}

// Absolute feasibility tolerance on constraint residuals.
inline constexpr double kFeasTol = 1e-9;

enum class Errc {
  InvalidDimension,
  EvaluatorError,
  MissingRegularity,
  SlaterViolation,
  BudgetExceeded,
  Infeasible,
  MaxIterations,
  PolicyInfeasible,
  UnknownExample,
  InvalidBox,
  InvalidHistory,
  InvalidTrees,
  InvalidInput,
  MissingGrowth,
  InvalidExponent,
  InvalidModulus,
  NotApplicable,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::InvalidDimension: return "InvalidDimension";
    case Errc::EvaluatorError: return "EvaluatorError";
    case Errc::MissingRegularity: return "MissingRegularity";
    case Errc::SlaterViolation: return "SlaterViolation";
    case Errc::BudgetExceeded: return "BudgetExceeded";
    case Errc::Infeasible: return "Infeasible";
    case Errc::MaxIterations: return "MaxIterations";
    case Errc::PolicyInfeasible: return "PolicyInfeasible";
    case Errc::UnknownExample: return "UnknownExample";
    case Errc::InvalidBox: return "InvalidBox";
    case Errc::InvalidHistory: return "InvalidHistory";
    case Errc::InvalidTrees: return "InvalidTrees";
    case Errc::InvalidInput: return "InvalidInput";
    case Errc::MissingGrowth: return "MissingGrowth";
    case Errc::InvalidExponent: return "InvalidExponent";
    case Errc::InvalidModulus: return "InvalidModulus";
    case Errc::NotApplicable: return "NotApplicable";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, Errc code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace mspmdp
