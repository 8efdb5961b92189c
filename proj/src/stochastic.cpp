#include "mspmdp/stochastic.hpp"

#include "mspmdp/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mspmdp {

void DiscreteDistribution::validate() const {
  require(static_cast<int>(atoms.size()) == weights.size(), Errc::InvalidInput,
          "atom/weight count mismatch");
  require(!atoms.empty(), Errc::InvalidInput, "empty support");
  const int d = dim();
  for (const auto& a : atoms)
    require(static_cast<int>(a.size()) == d, Errc::InvalidDimension, "ragged atom dimensions");
  require(weights.minCoeff() >= 0.0, Errc::InvalidInput, "negative weight");
  require(std::abs(weights.sum() - 1.0) <= 1e-12, Errc::InvalidInput, "weights do not sum to one");
  for (size_t i = 0; i < atoms.size(); ++i)
    for (size_t j = i + 1; j < atoms.size(); ++j)
      require(inf_dist(atoms[i], atoms[j]) > 0.0, Errc::InvalidInput, "duplicate atoms");
}

Vector DiscreteDistribution::mean() const {
  Vector m = Vector::Zero(dim());
  for (int i = 0; i < size(); ++i) m += weights[i] * atoms[i];
  return m;
}

void UniformBox::validate() const {
  require(lower.size() == upper.size(), Errc::InvalidDimension, "box bound dims differ");
  require(lower.size() > 0, Errc::InvalidBox, "empty box");
  require((lower.array() < upper.array()).all(), Errc::InvalidBox, "degenerate box");
}

UniformBox UniformBox::shifted(const Vector& delta) const {
  require(delta.size() == lower.size(), Errc::InvalidDimension, "shift dim mismatch");
  return UniformBox{lower + delta, upper + delta};
}

int law_dim(const Law& law) {
  return std::visit([](const auto& l) { return l.dim(); }, law);
}

Vector law_mean(const Law& law) {
  return std::visit([](const auto& l) { return l.mean(); }, law);
}

Law shift_law(const Law& law, const Vector& delta) {
  if (const auto* box = std::get_if<UniformBox>(&law)) return box->shifted(delta);
  DiscreteDistribution d = std::get<DiscreteDistribution>(law);
  for (auto& a : d.atoms) a += delta;
  return d;
}

template <typename Scalar>
void gauss_legendre(int n, std::vector<Scalar>& nodes, std::vector<Scalar>& weights) {
  nodes.assign(static_cast<size_t>(n), Scalar(0));
  weights.assign(static_cast<size_t>(n), Scalar(0));
  const Scalar pi = Scalar(3.141592653589793238462643383279502884L);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Chebyshev initial guess, Newton on P_n.
    Scalar x = std::cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    Scalar pp = 0;
    for (int it = 0; it < 100; ++it) {
      Scalar p0 = 1, p1 = 0;
      for (int k = 0; k < n; ++k) {
        Scalar p2 = p1;
        p1 = p0;
        p0 = ((2 * k + 1) * x * p1 - k * p2) / (k + 1);
      }
      pp = n * (x * p0 - p1) / (x * x - 1);
      Scalar dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < Scalar(1e-16)) break;
    }
    nodes[static_cast<size_t>(i)] = -x;
    nodes[static_cast<size_t>(n - 1 - i)] = x;
    const Scalar w = 2 / ((1 - x * x) * pp * pp);
    weights[static_cast<size_t>(i)] = w;
    weights[static_cast<size_t>(n - 1 - i)] = w;
  }
  if (n % 2 == 1) nodes[static_cast<size_t>(n / 2)] = Scalar(0);
}

template void gauss_legendre<double>(int, std::vector<double>&, std::vector<double>&);
template void gauss_legendre<long double>(int, std::vector<long double>&,
                                          std::vector<long double>&);

namespace {

void rule_1d(QuadratureRule rule, int n, double lo, double hi, std::vector<double>& pts,
             std::vector<double>& w) {
  pts.clear();
  w.clear();
  if (rule == QuadratureRule::Midpoint) {
    const double h = (hi - lo) / n;
    for (int i = 0; i < n; ++i) {
      pts.push_back(lo + (i + 0.5) * h);
      w.push_back(1.0 / n);
    }
  } else {
    std::vector<double> gn, gw;
    gauss_legendre<double>(n, gn, gw);
    for (int i = 0; i < n; ++i) {
      pts.push_back(0.5 * (hi - lo) * gn[static_cast<size_t>(i)] + 0.5 * (hi + lo));
      w.push_back(0.5 * gw[static_cast<size_t>(i)]);
    }
  }
}

}  // namespace

DiscreteDistribution discretize(const UniformBox& box, int n_per_dim, QuadratureRule rule) {
  box.validate();
  require(n_per_dim >= 1, Errc::InvalidInput, "n_per_dim must be positive");
  const int d = box.dim();
  std::vector<std::vector<double>> pts(static_cast<size_t>(d)), w(static_cast<size_t>(d));
  for (int c = 0; c < d; ++c)
    rule_1d(rule, n_per_dim, box.lower[c], box.upper[c], pts[static_cast<size_t>(c)],
            w[static_cast<size_t>(c)]);

  DiscreteDistribution out;
  const long total = static_cast<long>(std::pow(static_cast<double>(n_per_dim), d));
  out.atoms.reserve(static_cast<size_t>(total));
  std::vector<double> ws;
  ws.reserve(static_cast<size_t>(total));
  std::vector<int> idx(static_cast<size_t>(d), 0);
  while (true) {
    Vector atom(d);
    double weight = 1.0;
    for (int c = 0; c < d; ++c) {
      atom[c] = pts[static_cast<size_t>(c)][static_cast<size_t>(idx[static_cast<size_t>(c)])];
      weight *= w[static_cast<size_t>(c)][static_cast<size_t>(idx[static_cast<size_t>(c)])];
    }
    out.atoms.push_back(std::move(atom));
    ws.push_back(weight);
    int c = d - 1;
    while (c >= 0 && ++idx[static_cast<size_t>(c)] == n_per_dim) idx[static_cast<size_t>(c--)] = 0;
    if (c < 0) break;
  }
  out.weights = Eigen::Map<Vector>(ws.data(), static_cast<long>(ws.size()));
  out.weights /= out.weights.sum();
  return out;
}

DiscreteDistribution discretize(const Law& law, int n_per_dim, QuadratureRule rule) {
  if (const auto* d = std::get_if<DiscreteDistribution>(&law)) return *d;
  return discretize(std::get<UniformBox>(law), n_per_dim, rule);
}

void ExogenousProcess::validate() const {
  require(!stages.empty(), Errc::InvalidInput, "exogenous process has no stages");
  require(std::holds_alternative<Marginal>(stages.front()), Errc::InvalidInput,
          "stage-1 exogenous entry must be a marginal");
  for (size_t k = 1; k < stages.size(); ++k) {
    if (const auto* sk = std::get_if<AffineShiftKernel>(&stages[k]))
      require(sk->weights.size() == static_cast<long>(k), Errc::InvalidInput,
              "shift kernel must weight exactly the earlier stages");
  }
}

Law conditional_distribution(const ExogenousProcess& process, int t,
                             std::span<const Vector> xi_hist) {
  require(t >= 1 && t <= process.horizon(), Errc::InvalidInput, "stage out of range");
  require(static_cast<int>(xi_hist.size()) == t - 1, Errc::InvalidHistory,
          "history must hold stages 1..t-1");
  const ExogenousStage& st = process.stages[static_cast<size_t>(t - 1)];
  if (const auto* m = std::get_if<Marginal>(&st)) return m->law;
  if (const auto* k = std::get_if<AffineShiftKernel>(&st)) {
    Vector shift = Vector::Zero(law_dim(k->innovation));
    for (int j = 0; j < k->weights.size(); ++j)
      if (k->weights[j] != 0.0) shift += k->weights[j] * xi_hist[static_cast<size_t>(j)];
    return shift_law(k->innovation, shift);
  }
  return std::get<ExplicitKernel>(st).kernel(xi_hist);
}

void EndogenousProcess::validate() const {
  require(!laws.empty(), Errc::InvalidInput, "endogenous process has no stages");
}

double ScenarioTree::path_probability(int id) const {
  double p = 1.0;
  for (int cur = id; cur >= 0; cur = nodes[static_cast<size_t>(cur)].parent)
    p *= nodes[static_cast<size_t>(cur)].prob;
  return p;
}

std::vector<Vector> ScenarioTree::xi_history(int id) const {
  std::vector<Vector> hist;
  for (int cur = id; cur >= 0; cur = nodes[static_cast<size_t>(cur)].parent)
    if (nodes[static_cast<size_t>(cur)].kind == NodeKind::ExoBranch)
      hist.push_back(nodes[static_cast<size_t>(cur)].value);
  std::reverse(hist.begin(), hist.end());
  return hist;
}

std::string ScenarioTree::path_key(int id) const {
  std::vector<int> branch;
  for (int cur = id; cur > 0; cur = nodes[static_cast<size_t>(cur)].parent) {
    const auto& siblings = nodes[static_cast<size_t>(nodes[static_cast<size_t>(cur)].parent)].children;
    branch.push_back(static_cast<int>(std::find(siblings.begin(), siblings.end(), cur) -
                                      siblings.begin()));
  }
  std::reverse(branch.begin(), branch.end());
  std::ostringstream os;
  os << "r";
  for (int b : branch) os << "/" << b;
  return os.str();
}

void ScenarioTree::validate() const {
  require(!nodes.empty(), Errc::InvalidInput, "empty tree");
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].children.empty()) continue;
    double sum = 0.0;
    for (int c : nodes[i].children) sum += nodes[static_cast<size_t>(c)].prob;
    require(std::abs(sum - 1.0) <= 1e-12, Errc::InvalidInput,
            "children probabilities do not sum to one");
  }
}

Branching Branching::uniform(int T, int xi_per_dim, int zeta_per_dim) {
  Branching b;
  b.n_xi.assign(static_cast<size_t>(T), xi_per_dim);
  b.n_zeta.assign(static_cast<size_t>(T + 1), zeta_per_dim);
  return b;
}

namespace {

void append_children(ScenarioTree& tree, int parent, int stage, NodeKind kind,
                     const DiscreteDistribution& law, long budget) {
  for (int i = 0; i < law.size(); ++i) {
    require(static_cast<long>(tree.nodes.size()) < budget, Errc::BudgetExceeded,
            "scenario tree exceeds the node budget");
    ScenarioTree::Node node;
    node.stage = stage;
    node.kind = kind;
    node.value = law.atoms[static_cast<size_t>(i)];
    node.prob = law.weights[i];
    node.parent = parent;
    tree.nodes[static_cast<size_t>(parent)].children.push_back(static_cast<int>(tree.nodes.size()));
    tree.nodes.push_back(std::move(node));
  }
}

}  // namespace

ScenarioTree build_joint_tree(const ProblemInstance& instance, const Branching& branching,
                              QuadratureRule rule, long node_budget) {
  require(static_cast<int>(branching.n_zeta.size()) == instance.T + 1 &&
              static_cast<int>(branching.n_xi.size()) == instance.T,
          Errc::InvalidInput, "branching lists must cover every stage");
  for (int b : branching.n_xi) require(b >= 1, Errc::InvalidInput, "branching must be positive");
  for (int b : branching.n_zeta) require(b >= 1, Errc::InvalidInput, "branching must be positive");

  ScenarioTree tree;
  tree.nodes.push_back(ScenarioTree::Node{});

  // zeta_t layer under every node of the previous layer, then xi_{t+1}.
  std::vector<int> layer{0};
  for (int t = 0; t <= instance.T; ++t) {
    const DiscreteDistribution zeta =
        discretize(instance.endogenous.laws[static_cast<size_t>(t)],
                   branching.n_zeta[static_cast<size_t>(t)], rule);
    std::vector<int> next;
    for (int id : layer) {
      const int first = tree.size();
      append_children(tree, id, t, NodeKind::EndoBranch, zeta, node_budget);
      for (int c = first; c < tree.size(); ++c) next.push_back(c);
    }
    layer = std::move(next);
    if (t == instance.T) break;

    next.clear();
    for (int id : layer) {
      const auto hist = tree.xi_history(id);
      const DiscreteDistribution xi =
          discretize(conditional_distribution(instance.exogenous, t + 1, hist),
                     branching.n_xi[static_cast<size_t>(t)], rule);
      const int first = tree.size();
      append_children(tree, id, t + 1, NodeKind::ExoBranch, xi, node_budget);
      for (int c = first; c < tree.size(); ++c) next.push_back(c);
    }
    layer = std::move(next);
  }
  return tree;
}

ScenarioTree build_exogenous_tree(const ExogenousProcess& process, int n_per_dim,
                                  QuadratureRule rule, long node_budget) {
  ScenarioTree tree;
  tree.nodes.push_back(ScenarioTree::Node{});
  std::vector<int> layer{0};
  for (int t = 1; t <= process.horizon(); ++t) {
    std::vector<int> next;
    for (int id : layer) {
      const auto hist = tree.xi_history(id);
      const DiscreteDistribution xi =
          discretize(conditional_distribution(process, t, hist), n_per_dim, rule);
      const int first = tree.size();
      append_children(tree, id, t, NodeKind::ExoBranch, xi, node_budget);
      for (int c = first; c < tree.size(); ++c) next.push_back(c);
    }
    layer = std::move(next);
  }
  return tree;
}

}  // namespace mspmdp
