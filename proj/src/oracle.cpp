#include "mspmdp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mspmdp {

namespace {

class GridSolver {
 public:
  GridSolver(const ProblemInstance& instance, const ScenarioTree& tree, int grid, long budget)
      : inst_(instance), tree_(tree), grid_(grid), budget_(budget) {}

  std::pair<double, Vector> solve_decision(int node, int t, const Vector& s, const Vector& x_prev) {
    const StageSpec& st = inst_.stage(t);
    const auto candidates = grid_points(st);
    const auto hist = tree_.xi_history(node);
    double best = std::numeric_limits<double>::infinity();
    Vector best_x;
    for (const auto& x : candidates) {
      require(--budget_ > 0, Errc::BudgetExceeded, "grid enumeration exceeded its budget");
      if (t >= 1) {
        const Vector r = feasibility_residual(inst_, t, s, x, x_prev, hist);
        if (r.size() > 0 && r.maxCoeff() > kFeasTol) continue;
      }
      double total = 0.0;
      for (int z : tree_[node].children) {
        double inner = evaluate_cost(inst_, t, s, x, hist, tree_[z].value);
        if (t < inst_.T) {
          const Vector xi_t = t >= 1 ? tree_[node].value : Vector();
          const Vector s_next = evaluate_transition(inst_, t, s, x, xi_t, tree_[z].value);
          for (int y : tree_[z].children)
            inner += tree_[y].prob * solve_decision(y, t + 1, s_next, x).first;
        }
        total += tree_[z].prob * inner;
      }
      if (total < best) {
        best = total;
        best_x = x;
      }
    }
    require(std::isfinite(best), Errc::Infeasible, "no feasible grid point at a stage");
    return {best, best_x};
  }

 private:
  std::vector<Vector> grid_points(const StageSpec& st) {
    Vector lo, hi;
    bool have = false;
    for (const auto& fam : st.constraints)
      if (const auto* box = std::get_if<BoxConstraint>(&fam)) {
        lo = have ? lo.cwiseMax(box->lower) : box->lower;
        hi = have ? hi.cwiseMin(box->upper) : box->upper;
        have = true;
      }
    require(have, Errc::Infeasible, "grid enumeration needs a stage box");
    const int n = static_cast<int>(lo.size());
    std::vector<Vector> pts;
    std::vector<int> idx(static_cast<size_t>(n), 0);
    while (true) {
      Vector x(n);
      for (int c = 0; c < n; ++c)
        x[c] = grid_ == 1 ? 0.5 * (lo[c] + hi[c])
                          : lo[c] + (hi[c] - lo[c]) * idx[static_cast<size_t>(c)] / (grid_ - 1);
      pts.push_back(std::move(x));
      int c = n - 1;
      while (c >= 0 && ++idx[static_cast<size_t>(c)] == grid_) idx[static_cast<size_t>(c--)] = 0;
      if (c < 0) break;
    }
    return pts;
  }

  const ProblemInstance& inst_;
  const ScenarioTree& tree_;
  int grid_;
  long budget_;
};

}  // namespace

SolveReport brute_force_solve(const ProblemInstance& instance, const ScenarioTree& tree,
                              int grid_points_per_dim, long budget) {
  instance.validate();
  require(grid_points_per_dim >= 1, Errc::InvalidInput, "grid must have at least one point");
  GridSolver solver(instance, tree, grid_points_per_dim, budget);
  auto [value, x0] = solver.solve_decision(tree.root(), 0, instance.s0, Vector());
  SolveReport report;
  report.value = value;
  report.policy.decisions[tree.root()] = x0;
  return report;
}

namespace {

// Unique flow on a spanning-tree basis, solved by peeling leaves.
bool tree_flows(const std::vector<std::pair<int, int>>& cells, const Vector& supply,
                const Vector& demand, std::vector<double>& flows) {
  const int m = static_cast<int>(supply.size()), n = static_cast<int>(demand.size());
  const int V = m + n;
  std::vector<std::vector<int>> incident(static_cast<size_t>(V));
  for (size_t k = 0; k < cells.size(); ++k) {
    incident[static_cast<size_t>(cells[k].first)].push_back(static_cast<int>(k));
    incident[static_cast<size_t>(m + cells[k].second)].push_back(static_cast<int>(k));
  }
  std::vector<double> residual(static_cast<size_t>(V));
  for (int i = 0; i < m; ++i) residual[static_cast<size_t>(i)] = supply[i];
  for (int j = 0; j < n; ++j) residual[static_cast<size_t>(m + j)] = demand[j];
  std::vector<int> degree(static_cast<size_t>(V));
  for (int v = 0; v < V; ++v) degree[static_cast<size_t>(v)] = static_cast<int>(incident[static_cast<size_t>(v)].size());
  std::vector<bool> used(cells.size(), false);
  flows.assign(cells.size(), 0.0);

  std::vector<int> leaves;
  for (int v = 0; v < V; ++v)
    if (degree[static_cast<size_t>(v)] == 1) leaves.push_back(v);
  size_t solved = 0;
  while (!leaves.empty()) {
    const int v = leaves.back();
    leaves.pop_back();
    if (degree[static_cast<size_t>(v)] != 1) continue;
    int edge = -1;
    for (int k : incident[static_cast<size_t>(v)])
      if (!used[static_cast<size_t>(k)]) edge = k;
    if (edge < 0) continue;
    used[static_cast<size_t>(edge)] = true;
    ++solved;
    flows[static_cast<size_t>(edge)] = residual[static_cast<size_t>(v)];
    const int other = (cells[static_cast<size_t>(edge)].first == v)
                          ? m + cells[static_cast<size_t>(edge)].second
                          : cells[static_cast<size_t>(edge)].first;
    residual[static_cast<size_t>(other)] -= residual[static_cast<size_t>(v)];
    residual[static_cast<size_t>(v)] = 0.0;
    if (--degree[static_cast<size_t>(other)] == 1) leaves.push_back(other);
    degree[static_cast<size_t>(v)] = 0;
  }
  return solved == cells.size();
}

}  // namespace

double ot_brute_force(const DiscreteDistribution& P, const DiscreteDistribution& Q,
                      const Matrix& cost) {
  P.validate();
  Q.validate();
  const int m = P.size(), n = Q.size();
  require(m <= 4 && n <= 4, Errc::BudgetExceeded, "brute-force transport handles supports <= 4");
  require(cost.rows() == m && cost.cols() == n, Errc::InvalidDimension,
          "cost matrix shape mismatch");

  std::vector<std::pair<int, int>> all;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) all.emplace_back(i, j);
  const int k = m + n - 1;
  const int total = m * n;
  std::vector<int> pick(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) pick[static_cast<size_t>(i)] = i;

  double best = std::numeric_limits<double>::infinity();
  std::vector<double> flows;
  while (true) {
    std::vector<std::pair<int, int>> cells;
    for (int i : pick) cells.push_back(all[static_cast<size_t>(i)]);
    if (tree_flows(cells, P.weights, Q.weights, flows)) {
      bool feasible = true;
      double value = 0.0;
      for (size_t c = 0; c < cells.size(); ++c) {
        if (flows[c] < -1e-12) {
          feasible = false;
          break;
        }
        value += std::max(0.0, flows[c]) * cost(cells[c].first, cells[c].second);
      }
      if (feasible) best = std::min(best, value);
    }
    // next combination
    int i = k - 1;
    while (i >= 0 && pick[static_cast<size_t>(i)] == total - k + i) --i;
    if (i < 0) break;
    ++pick[static_cast<size_t>(i)];
    for (int j = i + 1; j < k; ++j) pick[static_cast<size_t>(j)] = pick[static_cast<size_t>(j - 1)] + 1;
  }
  require(std::isfinite(best), Errc::Infeasible, "no feasible basis found");
  return best;
}

}  // namespace mspmdp
