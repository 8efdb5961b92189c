#pragma once

#include "mspmdp/types.hpp"

#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace mspmdp {

// Finitely supported law. Weights sum to one within 1e-12, atoms pairwise distinct.
struct DiscreteDistribution {
  std::vector<Vector> atoms;
  Vector weights;

  int dim() const { return atoms.empty() ? 0 : static_cast<int>(atoms.front().size()); }
  int size() const { return static_cast<int>(atoms.size()); }
  void validate() const;
  Vector mean() const;
};

struct UniformBox {
  Vector lower;
  Vector upper;

  int dim() const { return static_cast<int>(lower.size()); }
  void validate() const;
  Vector mean() const { return 0.5 * (lower + upper); }
  UniformBox shifted(const Vector& delta) const;
};

using Law = std::variant<DiscreteDistribution, UniformBox>;

int law_dim(const Law& law);
Vector law_mean(const Law& law);
Law shift_law(const Law& law, const Vector& delta);

enum class QuadratureRule { Midpoint, GaussLegendre };

// Gauss-Legendre nodes/weights on [-1, 1]; weights sum to 2.
template <typename Scalar>
void gauss_legendre(int n, std::vector<Scalar>& nodes, std::vector<Scalar>& weights);

// Tensor-product quadrature of the box with n_per_dim points per coordinate. The
// Gauss rule is exact for polynomials of degree <= 2n-1 per dimension.
DiscreteDistribution discretize(const UniformBox& box, int n_per_dim, QuadratureRule rule);

// Discretize any law: discrete laws pass through unchanged.
DiscreteDistribution discretize(const Law& law, int n_per_dim, QuadratureRule rule);

// Exogenous process: stage 1 carries a marginal; stages t >= 2 may depend on the
// history through an affine shift of an innovation law or an explicit kernel.
struct Marginal {
  Law law;
};
struct AffineShiftKernel {
  Vector weights;  // one weight per earlier stage 1..t-1
  Law innovation;
};
struct ExplicitKernel {
  std::function<Law(std::span<const Vector>)> kernel;
};
using ExogenousStage = std::variant<Marginal, AffineShiftKernel, ExplicitKernel>;

struct ExogenousProcess {
  std::vector<ExogenousStage> stages;  // index t-1 holds stage t, t = 1..T

  int horizon() const { return static_cast<int>(stages.size()); }
  void validate() const;
};

// Law of xi_t given the realized history (xi_1, ..., xi_{t-1}).
Law conditional_distribution(const ExogenousProcess& process, int t,
                             std::span<const Vector> xi_hist);

// Stagewise independent endogenous laws zeta_0, ..., zeta_T.
struct EndogenousProcess {
  std::vector<Law> laws;

  int horizon() const { return static_cast<int>(laws.size()) - 1; }
  void validate() const;
};

enum class NodeKind { Root, EndoBranch, ExoBranch };

// Joint (exogenous, endogenous) history tree. Layers from the root follow the
// chronology s_t -> xi_t -> x_t -> zeta_t: root, zeta_0, xi_1, zeta_1, ..., xi_T, zeta_T.
struct ScenarioTree {
  struct Node {
    int stage = 0;
    NodeKind kind = NodeKind::Root;
    Vector value;      // realized xi_t or zeta_t at this node
    double prob = 1.0; // conditional probability given the parent
    int parent = -1;
    std::vector<int> children;
  };

  std::vector<Node> nodes;

  int root() const { return 0; }
  int size() const { return static_cast<int>(nodes.size()); }
  const Node& operator[](int id) const { return nodes[id]; }

  double path_probability(int id) const;
  // Realized xi_1..xi_t along the path to `id` (inclusive if `id` is an exo node).
  std::vector<Vector> xi_history(int id) const;
  // "z0/x1/z0/..." style path key: branch indices from the root.
  std::string path_key(int id) const;
  void validate() const;
};

struct Branching {
  std::vector<int> n_xi;    // per-dimension branch counts for xi_1..xi_T
  std::vector<int> n_zeta;  // per-dimension branch counts for zeta_0..zeta_T

  static Branching uniform(int T, int xi_per_dim, int zeta_per_dim);
};

inline constexpr long kDefaultNodeBudget = 1'000'000;

struct ProblemInstance;  // model.hpp

ScenarioTree build_joint_tree(const ProblemInstance& instance, const Branching& branching,
                              QuadratureRule rule, long node_budget = kDefaultNodeBudget);

// Tree over the exogenous process only: root, xi_1 layer, ..., xi_T layer.
// Substrate for the nested distance.
ScenarioTree build_exogenous_tree(const ExogenousProcess& process, int n_per_dim,
                                  QuadratureRule rule, long node_budget = kDefaultNodeBudget);

extern template void gauss_legendre<double>(int, std::vector<double>&, std::vector<double>&);
extern template void gauss_legendre<long double>(int, std::vector<long double>&,
                                                 std::vector<long double>&);

}  // namespace mspmdp
