#include "mspmdp/solver.hpp"

#include "mspmdp/examples.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace mspmdp {

const Vector& Policy::at(int node) const {
  auto it = decisions.find(node);
  require(it != decisions.end(), Errc::PolicyInfeasible, "policy has no decision at node");
  return it->second;
}

namespace {

constexpr double kGolden = 0.6180339887498949;

struct LineResult {
  double x = 0.0;
  double f = 0.0;
};

// Golden-section search on [lo, hi]; assumes unimodality (convex stage problems).
// Ties snap to the smaller endpoint so linear objectives hit vertices exactly.
template <typename F>
LineResult golden_section(F&& f, double lo, double hi, double tol, int max_iter, long& evals) {
  double a = lo, b = hi;
  double x1 = b - kGolden * (b - a);
  double x2 = a + kGolden * (b - a);
  double f1 = f(x1), f2 = f(x2);
  evals += 2;
  int it = 0;
  while (b - a > tol && it++ < max_iter) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = f(x2);
    }
    ++evals;
  }
  require(b - a <= std::max(tol, 1e-14), Errc::MaxIterations, "line search failed to converge");
  LineResult best{f1 <= f2 ? x1 : x2, std::min(f1, f2)};
  const double tie = 1e-12 * (1.0 + std::abs(best.f));
  const double flo = f(lo), fhi = f(hi);
  evals += 2;
  if (fhi <= best.f + tie && fhi < best.f) best = {hi, fhi};
  if (flo <= best.f + tie) best = {lo, std::min(flo, best.f)};
  return best;
}

// Widest subinterval of [lo, hi] with residual <= kFeasTol, assuming the
// residual is quasiconvex along the coordinate. Endpoints returned feasible.
std::optional<std::pair<double, double>> feasible_interval(
    const std::function<double(double)>& residual, double lo, double hi) {
  constexpr int kScan = 33;
  double seed = lo, seed_r = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kScan; ++i) {
    const double x = lo + (hi - lo) * i / (kScan - 1);
    const double r = residual(x);
    if (r < seed_r) {
      seed_r = r;
      seed = x;
    }
  }
  if (seed_r > kFeasTol) return std::nullopt;

  auto edge = [&](double outside, double inside) {
    if (residual(outside) <= kFeasTol) return outside;
    double bad = outside, good = inside;
    for (int i = 0; i < 60; ++i) {
      const double mid = 0.5 * (bad + good);
      (residual(mid) <= kFeasTol ? good : bad) = mid;
    }
    return good;
  };
  return std::make_pair(edge(lo, seed), edge(hi, seed));
}

bool lex_less(const Vector& a, const Vector& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] < b[i] - 1e-12) return true;
    if (a[i] > b[i] + 1e-12) return false;
  }
  return false;
}

}  // namespace

StageResult stage_minimize(const std::function<double(const Vector&)>& objective,
                           const FeasibleRegion& region, const SolverConfig& config) {
  const int n = static_cast<int>(region.box_lower.size());
  require(n >= 1, Errc::InvalidInput, "empty decision");
  require((region.box_lower.array() <= region.box_upper.array()).all(), Errc::Infeasible,
          "empty box");
  long evals = 0;

  auto coord_interval = [&](const Vector& x, int c) {
    if (!region.residual)
      return std::optional<std::pair<double, double>>{
          std::make_pair(region.box_lower[c], region.box_upper[c])};
    Vector probe = x;
    return feasible_interval(
        [&](double v) {
          probe[c] = v;
          return region.residual(probe);
        },
        region.box_lower[c], region.box_upper[c]);
  };

  if (n == 1) {
    Vector x(1);
    auto iv = coord_interval(x, 0);
    require(iv.has_value(), Errc::Infeasible, "empty feasible interval");
    auto r = golden_section(
        [&](double v) {
          x[0] = v;
          return objective(x);
        },
        iv->first, iv->second, config.tolerance, config.max_iterations, evals);
    x[0] = r.x;
    return {x, r.f};
  }

  // Coordinate descent with multi-start.
  std::vector<Vector> starts;
  starts.push_back(0.5 * (region.box_lower + region.box_upper));
  if (region.slater && config.multistart >= 2) starts.push_back(*region.slater);
  if (config.multistart >= 3) starts.push_back(region.box_lower);
  std::optional<StageResult> best;

  for (const auto& start : starts) {
    Vector x = start.cwiseMax(region.box_lower).cwiseMin(region.box_upper);
    // Repair sweep: pull each coordinate into its feasible interval.
    bool ok = true;
    if (region.residual && region.residual(x) > kFeasTol) {
      for (int c = 0; c < n && ok; ++c) {
        auto iv = coord_interval(x, c);
        if (!iv) {
          ok = false;
          break;
        }
        x[c] = std::clamp(x[c], iv->first, iv->second);
      }
      if (ok && region.residual(x) > kFeasTol) ok = false;
    }
    if (!ok) continue;

    double fx = objective(x);
    ++evals;
    for (int sweep = 0; sweep < config.sweep_limit; ++sweep) {
      const double before = fx;
      for (int c = 0; c < n; ++c) {
        auto iv = coord_interval(x, c);
        require(iv.has_value(), Errc::Infeasible, "coordinate became infeasible");
        auto r = golden_section(
            [&](double v) {
              Vector probe = x;
              probe[c] = v;
              return objective(probe);
            },
            iv->first, iv->second, config.tolerance, config.max_iterations, evals);
        x[c] = r.x;
        fx = r.f;
      }
      if (before - fx < config.tolerance) break;
    }
    if (!best || fx < best->value - 1e-12 ||
        (fx <= best->value + 1e-12 && lex_less(x, best->x)))
      best = StageResult{x, fx};
  }
  require(best.has_value(), Errc::Infeasible, "no feasible start for the stage problem");
  return *best;
}

namespace {

class NestedSolver {
 public:
  NestedSolver(const ProblemInstance& instance, const ScenarioTree& tree,
               const SolverConfig& config)
      : inst_(instance), tree_(tree), cfg_(config) {}

  // Minimize the stage problem at a decision point: the root (t = 0) or an
  // xi_t node (t >= 1) with realized state s_t and previous decision x_prev.
  StageResult solve_decision(int node, int t, const Vector& s, const Vector& x_prev) {
    ++stage_solves_;
    if (cfg_.memo_grid) return memoized(node, t, s, x_prev);
    return solve_exact(node, t, s, x_prev);
  }

  double continuation(int node, int t, const Vector& s, const Vector& x) {
    ++objective_evals_;
    const auto hist = tree_.xi_history(node);
    double total = 0.0;
    for (int z : tree_[node].children) {
      const auto& zn = tree_[z];
      double inner = evaluate_cost(inst_, t, s, x, hist, zn.value);
      if (t < inst_.T) {
        const Vector xi_t = t >= 1 ? tree_[node].value : Vector();
        const Vector s_next = evaluate_transition(inst_, t, s, x, xi_t, zn.value);
        double cont = 0.0;
        for (int y : zn.children)
          cont += tree_[y].prob * solve_decision(y, t + 1, s_next, x).value;
        inner += cont;
      }
      total += zn.prob * inner;
    }
    return total;
  }

  long stage_solves() const { return stage_solves_; }
  long objective_evals() const { return objective_evals_; }
  double interpolation_error() const { return interp_error_; }

 private:
  StageResult solve_exact(int node, int t, const Vector& s, const Vector& x_prev) {
    FeasibleRegion region = make_region(node, t, s, x_prev);
    return stage_minimize([&](const Vector& x) { return continuation(node, t, s, x); }, region,
                          cfg_);
  }

  FeasibleRegion make_region(int node, int t, const Vector& s, const Vector& x_prev) {
    const StageSpec& st = inst_.stage(t);
    FeasibleRegion region;
    bool have_box = false;
    for (const auto& fam : st.constraints) {
      if (const auto* box = std::get_if<BoxConstraint>(&fam)) {
        if (!have_box) {
          region.box_lower = box->lower;
          region.box_upper = box->upper;
          have_box = true;
        } else {
          region.box_lower = region.box_lower.cwiseMax(box->lower);
          region.box_upper = region.box_upper.cwiseMin(box->upper);
        }
      }
    }
    require(have_box, Errc::Infeasible, "stage feasible set lacks a bounding box");
    if (t >= 1 && st.constraints.size() > 1) {
      auto hist = tree_.xi_history(node);
      region.residual = [this, t, s, x_prev, hist = std::move(hist)](const Vector& x) {
        return feasibility_residual(inst_, t, s, x, x_prev, hist).maxCoeff();
      };
    }
    if (inst_.slater_points && t >= 1 &&
        static_cast<int>(inst_.slater_points->size()) >= t)
      region.slater = (*inst_.slater_points)[static_cast<size_t>(t - 1)];
    return region;
  }

  StageResult memoized(int node, int t, const Vector& s, const Vector& x_prev) {
    const double h = *cfg_.memo_grid;
    Vector joint(s.size() + x_prev.size());
    joint << s, x_prev;
    const int d = static_cast<int>(joint.size());
    Vector base(d), frac(d);
    for (int i = 0; i < d; ++i) {
      const double g = std::floor(joint[i] / h);
      base[i] = g * h;
      frac[i] = (joint[i] - base[i]) / h;
    }
    // Multilinear blend over the 2^d cell corners, each solved exactly once.
    double value = 0.0;
    Vector x_lo;
    for (int corner = 0; corner < (1 << d); ++corner) {
      double w = 1.0;
      Vector pt = base;
      for (int i = 0; i < d; ++i) {
        if (corner & (1 << i)) {
          pt[i] += h;
          w *= frac[i];
        } else {
          w *= 1.0 - frac[i];
        }
      }
      if (w == 0.0) continue;
      const StageResult r = corner_solve(node, t, pt, static_cast<int>(s.size()));
      value += w * r.value;
      if (corner == 0) x_lo = r.x;
    }
    interp_error_ = std::max(interp_error_, 0.5 * h * d);
    return {x_lo, value};
  }

  StageResult corner_solve(int node, int t, const Vector& joint, int n_state) {
    MemoKey key{node, std::vector<double>(joint.data(), joint.data() + joint.size())};
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    const Vector s = joint.head(n_state);
    const Vector x_prev = joint.tail(joint.size() - n_state);
    StageResult r = solve_exact(node, t, s, x_prev);
    memo_.emplace(std::move(key), r);
    return r;
  }

  struct MemoKey {
    int node;
    std::vector<double> joint;
    bool operator==(const MemoKey& o) const { return node == o.node && joint == o.joint; }
  };
  struct MemoHash {
    size_t operator()(const MemoKey& k) const {
      size_t h = std::hash<int>()(k.node);
      for (double v : k.joint) h = h * 1000003u ^ std::hash<double>()(v);
      return h;
    }
  };

  const ProblemInstance& inst_;
  const ScenarioTree& tree_;
  SolverConfig cfg_;
  long stage_solves_ = 0;
  long objective_evals_ = 0;
  double interp_error_ = 0.0;
  std::unordered_map<MemoKey, StageResult, MemoHash> memo_;
};

}  // namespace

SolveReport solve_nested(const ProblemInstance& instance, const ScenarioTree& tree,
                         const SolverConfig& config) {
  instance.validate();
  NestedSolver solver(instance, tree, config);
  const StageResult root = solver.solve_decision(tree.root(), 0, instance.s0, Vector());

  SolveReport report;
  report.value = root.value;
  report.policy.decisions[tree.root()] = root.x;

  // One forward sweep re-solves every xi node at its optimal incoming pair to
  // record the policy and the value samples.
  struct Frame {
    int node;
    int t;
    Vector s;
    Vector x;
  };
  std::vector<Frame> queue{{tree.root(), 0, instance.s0, root.x}};
  while (!queue.empty()) {
    Frame f = queue.back();
    queue.pop_back();
    if (f.t == instance.T) continue;
    for (int z : tree[f.node].children) {
      const Vector xi_t = f.t >= 1 ? tree[f.node].value : Vector();
      const Vector s_next =
          evaluate_transition(instance, f.t, f.s, f.x, xi_t, tree[z].value);
      for (int y : tree[z].children) {
        const StageResult r = solver.solve_decision(y, f.t + 1, s_next, f.x);
        report.policy.decisions[y] = r.x;
        report.node_values[y] = r.value;
        queue.push_back({y, f.t + 1, s_next, r.x});
      }
    }
  }
  report.stage_solves = solver.stage_solves();
  report.objective_evals = solver.objective_evals();
  report.interpolation_error = solver.interpolation_error();
  return report;
}

SolveReport solve_auto(const ProblemInstance& instance, const Branching& branching,
                       QuadratureRule rule, const SolverConfig& config) {
  const int n = instance.stage(0).dims.n;
  if (!(config.separable || instance.separable) || n == 1) {
    const ScenarioTree tree = build_joint_tree(instance, branching, rule);
    return solve_nested(instance, tree, config);
  }
  SolveReport combined;
  for (int c = 0; c < n; ++c) {
    const ProblemInstance slice = slice_coordinate(instance, c);
    ScenarioTree tree = build_joint_tree(slice, branching, rule);
    SolveReport r = solve_nested(slice, tree, config);
    combined.value += r.value;
    combined.stage_solves += r.stage_solves;
    combined.objective_evals += r.objective_evals;
    combined.interpolation_error = std::max(combined.interpolation_error, r.interpolation_error);
    combined.coordinates.push_back(
        CoordinateSolution{std::move(tree), std::move(r.policy), std::move(r.node_values), r.value});
  }
  return combined;
}

double evaluate_policy(const ProblemInstance& instance, const ScenarioTree& tree,
                       const Policy& policy) {
  instance.validate();
  // Iterative forward pass with feasibility checks.
  double total = 0.0;
  std::vector<std::tuple<int, int, Vector, Vector, double>> stack;  // node,t,s,x_prev,pathprob
  stack.emplace_back(tree.root(), 0, instance.s0, Vector(), 1.0);
  while (!stack.empty()) {
    auto [node, t, s, x_prev, pp] = stack.back();
    stack.pop_back();
    const Vector& x = policy.at(node);
    const auto hist = tree.xi_history(node);
    if (t >= 1) {
      const Vector r = feasibility_residual(instance, t, s, x, x_prev, hist);
      require(r.size() == 0 || r.maxCoeff() <= kFeasTol, Errc::PolicyInfeasible,
              "policy decision violates the stage constraints");
    } else {
      for (const auto& fam : instance.stage(0).constraints)
        if (const auto* box = std::get_if<BoxConstraint>(&fam))
          require((x.array() >= box->lower.array() - kFeasTol).all() &&
                      (x.array() <= box->upper.array() + kFeasTol).all(),
                  Errc::PolicyInfeasible, "stage-0 decision outside the box");
    }
    for (int z : tree[node].children) {
      total += pp * tree[z].prob * evaluate_cost(instance, t, s, x, hist, tree[z].value);
      if (t == instance.T) continue;
      const Vector xi_t = t >= 1 ? tree[node].value : Vector();
      const Vector s_next = evaluate_transition(instance, t, s, x, xi_t, tree[z].value);
      for (int y : tree[z].children)
        stack.emplace_back(y, t + 1, s_next, x, pp * tree[z].prob * tree[y].prob);
    }
  }
  return total;
}

double stage_value(const ProblemInstance& instance, const ScenarioTree& tree, int xi_node,
                   const Vector& s_prev, const Vector& x_prev, const SolverConfig& config) {
  require(tree[xi_node].kind == NodeKind::ExoBranch, Errc::InvalidInput,
          "stage values attach to xi nodes");
  const int t = tree[xi_node].stage;
  const int zeta_parent = tree[xi_node].parent;
  const Vector& zeta_prev = tree[zeta_parent].value;
  Vector xi_prev;
  if (t >= 2) {
    const int xi_grandparent = tree[zeta_parent].parent;
    xi_prev = tree[xi_grandparent].value;
  }
  const Vector s_t = evaluate_transition(instance, t - 1, s_prev, x_prev, xi_prev, zeta_prev);
  NestedSolver solver(instance, tree, config);
  return solver.solve_decision(xi_node, t, s_t, x_prev).value;
}

SolveReport analytic_solve(const std::string& example_id, bool perturbed, int gauss_points) {
  const AnalyticEvaluation eval = evaluate_analytic_policy(example_id, perturbed, gauss_points);
  SolveReport report;
  report.value = eval.value;
  report.objective_evals = eval.quadrature_points;
  return report;
}

}  // namespace mspmdp
