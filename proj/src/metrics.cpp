#include "mspmdp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace mspmdp {

double ground_cost(const GroundCost& cost, const Vector& x, const Vector& y) {
  const double d = inf_dist(x, y);
  if (std::holds_alternative<InfNormCost>(cost)) return d;
  if (const auto* fm = std::get_if<FortetMourierCost>(&cost)) {
    require(fm->p >= 1.0, Errc::InvalidExponent, "Fortet-Mourier order must be >= 1");
    const double scale =
        std::max({1.0, std::pow(inf_norm(x), fm->p - 1.0), std::pow(inf_norm(y), fm->p - 1.0)});
    return scale * d;
  }
  const auto& pw = std::get<PowerCost>(cost);
  require(pw.r >= 1.0, Errc::InvalidExponent, "Wasserstein order must be >= 1");
  return std::pow(d, pw.r);
}

double kantorovich_1d(const DiscreteDistribution& P, const DiscreteDistribution& Q) {
  P.validate();
  Q.validate();
  require(P.dim() == 1 && Q.dim() == 1, Errc::InvalidDimension, "scalar laws required");
  std::vector<std::pair<double, double>> p, q;  // (atom, weight), sorted
  for (int i = 0; i < P.size(); ++i) p.emplace_back(P.atoms[static_cast<size_t>(i)][0], P.weights[i]);
  for (int i = 0; i < Q.size(); ++i) q.emplace_back(Q.atoms[static_cast<size_t>(i)][0], Q.weights[i]);
  std::sort(p.begin(), p.end());
  std::sort(q.begin(), q.end());

  // Integral of |F_P - F_Q| over the merged breakpoints.
  std::vector<double> pts;
  for (auto& e : p) pts.push_back(e.first);
  for (auto& e : q) pts.push_back(e.first);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  double total = 0.0, Fp = 0.0, Fq = 0.0;
  size_t ip = 0, iq = 0;
  for (size_t k = 0; k + 1 < pts.size(); ++k) {
    while (ip < p.size() && p[ip].first <= pts[k]) Fp += p[ip++].second;
    while (iq < q.size() && q[iq].first <= pts[k]) Fq += q[iq++].second;
    total += std::abs(Fp - Fq) * (pts[k + 1] - pts[k]);
  }
  return total;
}

namespace {

// Transportation simplex on the bipartite basis tree. Exactness is the point:
// the oracle comparisons run at 1e-9. Duals and cycles traverse the basis tree
// through adjacency lists; entering arcs follow the most negative reduced cost
// with a Bland fallback whenever degenerate pivots pile up, so cycling cannot
// occur.
class TransportSimplex {
 public:
  TransportSimplex(const Vector& supply, const Vector& demand, const Matrix& cost)
      : m_(static_cast<int>(supply.size())),
        n_(static_cast<int>(demand.size())),
        cost_(cost),
        flow_(Matrix::Zero(m_, n_)),
        basic_(static_cast<size_t>(m_ * n_), false),
        row_adj_(static_cast<size_t>(m_)),
        col_adj_(static_cast<size_t>(n_)) {
    require(cost.rows() == m_ && cost.cols() == n_, Errc::InvalidDimension,
            "cost matrix shape mismatch");
    require(std::abs(supply.sum() - demand.sum()) <= 1e-9, Errc::InvalidInput,
            "unbalanced transport problem");
    northwest_corner(supply, demand);
  }

  double solve() {
    const long cap = 2000L * (m_ + n_) + 100000L;
    long degenerate_run = 0;
    for (long iter = 0; iter < cap; ++iter) {
      compute_duals();
      const bool bland = degenerate_run > m_ + n_;
      const int entering = find_entering(bland);
      if (entering < 0) return objective();
      const double theta = pivot(entering);
      degenerate_run = theta > 0.0 ? 0 : degenerate_run + 1;
    }
    fail(Errc::MaxIterations, "transportation simplex exceeded its iteration cap");
  }

 private:
  int id(int i, int j) const { return i * n_ + j; }

  void add_basic(int i, int j) {
    basic_[static_cast<size_t>(id(i, j))] = true;
    row_adj_[static_cast<size_t>(i)].push_back(j);
    col_adj_[static_cast<size_t>(j)].push_back(i);
  }

  void remove_basic(int i, int j) {
    basic_[static_cast<size_t>(id(i, j))] = false;
    auto& r = row_adj_[static_cast<size_t>(i)];
    r.erase(std::find(r.begin(), r.end(), j));
    auto& c = col_adj_[static_cast<size_t>(j)];
    c.erase(std::find(c.begin(), c.end(), i));
  }

  void northwest_corner(Vector supply, Vector demand) {
    int i = 0, j = 0, placed = 0;
    while (placed < m_ + n_ - 1) {
      const double q = std::min(supply[i], demand[j]);
      flow_(i, j) = q;
      add_basic(i, j);
      ++placed;
      supply[i] -= q;
      demand[j] -= q;
      if (i == m_ - 1 && j == n_ - 1) break;
      // Advance along the row or the column; ties advance the row, adding the
      // degenerate zero-flow cell needed to keep m + n - 1 basic cells.
      if (supply[i] <= demand[j] && i < m_ - 1)
        ++i;
      else
        ++j;
    }
  }

  // Vertices 0..m-1 are rows, m..m+n-1 columns; the basis is a spanning tree.
  void compute_duals() {
    u_.assign(static_cast<size_t>(m_), 0.0);
    v_.assign(static_cast<size_t>(n_), 0.0);
    std::vector<bool> seen(static_cast<size_t>(m_ + n_), false);
    std::vector<int> stack{0};
    seen[0] = true;
    int visited = 1;
    while (!stack.empty()) {
      const int a = stack.back();
      stack.pop_back();
      if (a < m_) {
        for (int j : row_adj_[static_cast<size_t>(a)])
          if (!seen[static_cast<size_t>(m_ + j)]) {
            seen[static_cast<size_t>(m_ + j)] = true;
            ++visited;
            v_[static_cast<size_t>(j)] = cost_(a, j) - u_[static_cast<size_t>(a)];
            stack.push_back(m_ + j);
          }
      } else {
        const int j = a - m_;
        for (int i : col_adj_[static_cast<size_t>(j)])
          if (!seen[static_cast<size_t>(i)]) {
            seen[static_cast<size_t>(i)] = true;
            ++visited;
            u_[static_cast<size_t>(i)] = cost_(i, j) - v_[static_cast<size_t>(j)];
            stack.push_back(i);
          }
      }
    }
    require(visited == m_ + n_, Errc::InvalidInput, "degenerate basis lost connectivity");
  }

  int find_entering(bool bland) const {
    int best = -1;
    double best_rc = -1e-11;
    for (int i = 0; i < m_; ++i) {
      const double ui = u_[static_cast<size_t>(i)];
      for (int j = 0; j < n_; ++j) {
        if (basic_[static_cast<size_t>(id(i, j))]) continue;
        const double rc = cost_(i, j) - ui - v_[static_cast<size_t>(j)];
        if (rc < best_rc) {
          best = id(i, j);
          if (bland) return best;  // first negative cell in row-major order
          best_rc = rc;
        }
      }
    }
    return best;
  }

  double pivot(int entering) {
    const int ei = entering / n_, ej = entering % n_;
    // The unique basis-tree path from row ei to column ej closes the cycle.
    const int V = m_ + n_;
    std::vector<int> prev(static_cast<size_t>(V), -2);
    std::vector<int> stack{ei};
    prev[static_cast<size_t>(ei)] = -1;
    while (!stack.empty() && prev[static_cast<size_t>(m_ + ej)] == -2) {
      const int a = stack.back();
      stack.pop_back();
      if (a < m_) {
        for (int j : row_adj_[static_cast<size_t>(a)])
          if (prev[static_cast<size_t>(m_ + j)] == -2) {
            prev[static_cast<size_t>(m_ + j)] = a;
            stack.push_back(m_ + j);
          }
      } else {
        const int j = a - m_;
        for (int i : col_adj_[static_cast<size_t>(j)])
          if (prev[static_cast<size_t>(i)] == -2) {
            prev[static_cast<size_t>(i)] = a;
            stack.push_back(i);
          }
      }
    }
    require(prev[static_cast<size_t>(m_ + ej)] != -2, Errc::InvalidInput,
            "entering cell is disconnected from the basis");

    // Rebuild the alternating cycle: entering arc plus the tree path back.
    std::vector<std::pair<int, int>> cycle{{ei, ej}};
    int cur = m_ + ej;
    while (prev[static_cast<size_t>(cur)] != -1) {
      const int par = prev[static_cast<size_t>(cur)];
      if (cur >= m_)
        cycle.emplace_back(par, cur - m_);
      else
        cycle.emplace_back(cur, par - m_);
      cur = par;
    }
    // Odd positions lose flow; find the tightest, tie-break by cell index.
    double theta = std::numeric_limits<double>::infinity();
    int leave = -1;
    for (size_t k = 1; k < cycle.size(); k += 2) {
      const double f = flow_(cycle[k].first, cycle[k].second);
      const int cell = id(cycle[k].first, cycle[k].second);
      if (f < theta - 1e-15 || (std::abs(f - theta) <= 1e-15 && (leave < 0 || cell < leave))) {
        theta = f;
        leave = cell;
      }
    }
    for (size_t k = 0; k < cycle.size(); ++k) {
      double& f = flow_(cycle[k].first, cycle[k].second);
      f += (k % 2 == 0) ? theta : -theta;
    }
    add_basic(ei, ej);
    remove_basic(leave / n_, leave % n_);
    flow_(leave / n_, leave % n_) = 0.0;
    return theta;
  }

  double objective() const {
    double total = 0.0;
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < n_; ++j)
        if (flow_(i, j) > 0.0) total += flow_(i, j) * cost_(i, j);
    return total;
  }

  int m_, n_;
  Matrix cost_;
  Matrix flow_;
  std::vector<bool> basic_;
  std::vector<std::vector<int>> row_adj_, col_adj_;
  std::vector<double> u_, v_;
};

}  // namespace

double transport_optimum(const Vector& supply, const Vector& demand, const Matrix& cost) {
  TransportSimplex simplex(supply, demand, cost);
  return simplex.solve();
}

double ot_distance(const DiscreteDistribution& P, const DiscreteDistribution& Q,
                   const GroundCost& cost) {
  P.validate();
  Q.validate();
  require(P.dim() == Q.dim(), Errc::InvalidDimension, "support dimensions differ");
  Matrix c(P.size(), Q.size());
  for (int i = 0; i < P.size(); ++i)
    for (int j = 0; j < Q.size(); ++j)
      c(i, j) = ground_cost(cost, P.atoms[static_cast<size_t>(i)], Q.atoms[static_cast<size_t>(j)]);
  const double opt = transport_optimum(P.weights, Q.weights, c);
  if (const auto* pw = std::get_if<PowerCost>(&cost)) return std::pow(opt, 1.0 / pw->r);
  return opt;
}

namespace {

// Per-coordinate displacement under the componentwise monotone affine map
// between boxes: delta_c(x) = |(1 - a_c) x - b_c| with x uniform on [lo, hi].
struct AffineDisplacement {
  double slope, intercept, lo, hi;  // |slope * x + intercept|, x ~ U(lo, hi)
};

// E[max_c Y_c] (or E[max^p] via `power`) for independent piecewise-linear-CDF
// displacements: integrate 1 - prod F_c exactly on the breakpoint mesh.
double expected_max_power(const std::vector<AffineDisplacement>& ds, double power) {
  // CDF of |slope x + intercept| on U(lo, hi): piecewise linear with breaks at
  // the images of lo, hi and the zero crossing.
  struct PiecewiseCdf {
    std::vector<double> breaks;           // sorted values of y
    std::vector<double> mass_per_unit;    // density of Y between breaks
  };
  std::vector<PiecewiseCdf> cdfs;
  std::vector<double> breaks{0.0};
  for (const auto& d : ds) {
    std::vector<double> ys{std::abs(d.slope * d.lo + d.intercept),
                           std::abs(d.slope * d.hi + d.intercept)};
    if (d.slope != 0.0) {
      const double root = -d.intercept / d.slope;
      if (root > d.lo && root < d.hi) ys.push_back(0.0);
    }
    std::sort(ys.begin(), ys.end());
    PiecewiseCdf c;
    c.breaks = ys;
    for (double y : ys) breaks.push_back(y);
    cdfs.push_back(c);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-15; }),
               breaks.end());

  auto cdf_at = [&](size_t c, double y) {
    const auto& d = ds[c];
    if (d.slope == 0.0) return y >= std::abs(d.intercept) ? 1.0 : 0.0;
    // P(|slope x + intercept| <= y), x uniform.
    const double a = (-y - d.intercept) / d.slope;
    const double b = (y - d.intercept) / d.slope;
    const double left = std::max(d.lo, std::min(a, b));
    const double right = std::min(d.hi, std::max(a, b));
    return std::max(0.0, right - left) / (d.hi - d.lo);
  };

  // E[max^p] = int p y^{p-1} (1 - prod F_c(y)) dy; the integrand is polynomial
  // between breaks, integrate with Gauss-Legendre exact at the needed degree.
  const int gl = static_cast<int>(ds.size()) + 4;
  std::vector<double> gn, gw;
  gauss_legendre<double>(gl, gn, gw);
  double total = 0.0;
  for (size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double lo = breaks[k], hi = breaks[k + 1];
    for (int g = 0; g < gl; ++g) {
      const double y = 0.5 * (hi - lo) * gn[static_cast<size_t>(g)] + 0.5 * (hi + lo);
      double prod = 1.0;
      for (size_t c = 0; c < ds.size(); ++c) prod *= cdf_at(c, y);
      total += 0.5 * (hi - lo) * gw[static_cast<size_t>(g)] * power *
               std::pow(y, power - 1.0) * (1.0 - prod);
    }
  }
  return total;
}

}  // namespace

double kantorovich_uniform_affine(const UniformBox& U1, const UniformBox& U2) {
  U1.validate();
  U2.validate();
  require(U1.dim() == U2.dim(), Errc::NotApplicable,
          "boxes of different dimension are not affinely related");
  std::vector<AffineDisplacement> ds;
  for (int c = 0; c < U1.dim(); ++c) {
    const double a = (U2.upper[c] - U2.lower[c]) / (U1.upper[c] - U1.lower[c]);
    const double b = U2.lower[c] - a * U1.lower[c];
    ds.push_back(AffineDisplacement{1.0 - a, -b, U1.lower[c], U1.upper[c]});
  }
  return expected_max_power(ds, 1.0);
}

double process_coupling_distance(const ExogenousProcess& P, const ExogenousProcess& Q, double p,
                                 int n_per_dim) {
  require(P.horizon() == Q.horizon(), Errc::InvalidTrees, "processes of different horizon");
  require(p >= 1.0, Errc::InvalidExponent, "order must be >= 1");
  // Couple stagewise: xi_1 through the componentwise affine map of the
  // marginals, innovations likewise; kernels must share their weights.
  struct PathTerm {
    Vector base, coupled;
  };
  // Enumerate quadrature paths of the base process and track both trajectories.
  std::vector<std::vector<Vector>> hist{{}};
  std::vector<std::vector<Vector>> hist_coupled{{}};
  std::vector<double> weights{1.0};
  double accum = 0.0;
  const int T = P.horizon();

  std::vector<double> moments(weights.size(), 0.0);
  for (int t = 1; t <= T; ++t) {
    std::vector<std::vector<Vector>> nhist, nhist_coupled;
    std::vector<double> nweights, nmoments;
    for (size_t k = 0; k < hist.size(); ++k) {
      const Law lawP = conditional_distribution(P, t, hist[k]);
      const Law lawQ = conditional_distribution(Q, t, hist_coupled[k]);
      const auto* boxP = std::get_if<UniformBox>(&lawP);
      const auto* boxQ = std::get_if<UniformBox>(&lawQ);
      require(boxP != nullptr && boxQ != nullptr, Errc::NotApplicable,
              "affine coupling needs uniform-box conditionals");
      const DiscreteDistribution d = discretize(*boxP, n_per_dim, QuadratureRule::GaussLegendre);
      for (int i = 0; i < d.size(); ++i) {
        const Vector& x = d.atoms[static_cast<size_t>(i)];
        Vector y(x.size());
        for (int c = 0; c < x.size(); ++c) {
          const double a = (boxQ->upper[c] - boxQ->lower[c]) / (boxP->upper[c] - boxP->lower[c]);
          y[c] = boxQ->lower[c] + a * (x[c] - boxP->lower[c]);
        }
        auto h = hist[k];
        h.push_back(x);
        auto hc = hist_coupled[k];
        hc.push_back(y);
        // Running max over the path of the stagewise displacement.
        const double disp = std::max(moments[k], inf_dist(x, y));
        nhist.push_back(std::move(h));
        nhist_coupled.push_back(std::move(hc));
        nweights.push_back(weights[k] * d.weights[i]);
        nmoments.push_back(disp);
      }
    }
    hist = std::move(nhist);
    hist_coupled = std::move(nhist_coupled);
    weights = std::move(nweights);
    moments = std::move(nmoments);
  }
  for (size_t k = 0; k < weights.size(); ++k) accum += weights[k] * std::pow(moments[k], p);
  return std::pow(accum, 1.0 / p);
}

namespace {

struct NestedMemo {
  std::map<std::pair<int, int>, double> cache;
};

double nested_value(const ScenarioTree& tp, const ScenarioTree& tq, int a, int b,
                    NestedMemo& memo) {
  const auto key = std::make_pair(a, b);
  auto it = memo.cache.find(key);
  if (it != memo.cache.end()) return it->second;

  const auto& ca = tp[a].children;
  const auto& cb = tq[b].children;
  double value = 0.0;
  if (!ca.empty() && !cb.empty()) {
    Vector supply(static_cast<long>(ca.size())), demand(static_cast<long>(cb.size()));
    Matrix cost(static_cast<long>(ca.size()), static_cast<long>(cb.size()));
    for (size_t i = 0; i < ca.size(); ++i) supply[static_cast<long>(i)] = tp[ca[i]].prob;
    for (size_t j = 0; j < cb.size(); ++j) demand[static_cast<long>(j)] = tq[cb[j]].prob;
    for (size_t i = 0; i < ca.size(); ++i)
      for (size_t j = 0; j < cb.size(); ++j)
        cost(static_cast<long>(i), static_cast<long>(j)) =
            inf_dist(tp[ca[i]].value, tq[cb[j]].value) +
            nested_value(tp, tq, ca[i], cb[j], memo);
    value = transport_optimum(supply, demand, cost);
  } else {
    require(ca.empty() && cb.empty(), Errc::InvalidTrees, "trees have different depth");
  }
  memo.cache.emplace(key, value);
  return value;
}

}  // namespace

double nested_distance(const ScenarioTree& treeP, const ScenarioTree& treeQ) {
  NestedMemo memo;
  return nested_value(treeP, treeQ, treeP.root(), treeQ.root(), memo);
}

namespace {

// Stagewise decision statistics on a tree: decisions live at the root (t = 0)
// and at the xi_t nodes.
struct StageDecisions {
  std::vector<Vector> values;
  std::vector<double> probs;
};

std::map<int, StageDecisions> collect_decisions(const Policy& policy, const ScenarioTree& tree) {
  std::map<int, StageDecisions> by_stage;
  for (const auto& [node, x] : policy.decisions) {
    const auto& n = tree[node];
    const int t = n.kind == NodeKind::Root ? 0 : n.stage;
    if (n.kind != NodeKind::Root && n.kind != NodeKind::ExoBranch) continue;
    auto& sd = by_stage[t];
    sd.values.push_back(x);
    sd.probs.push_back(tree.path_probability(node));
  }
  return by_stage;
}

Vector stage_mean(const StageDecisions& sd) {
  Vector m = Vector::Zero(sd.values.front().size());
  double total = 0.0;
  for (size_t i = 0; i < sd.values.size(); ++i) {
    m += sd.probs[i] * sd.values[i];
    total += sd.probs[i];
  }
  return m / total;
}

// E|x_{t,c} - ref_c| per coordinate, then the norm across coordinates.
double componentwise_deviation(const StageDecisions& sd, const Vector& ref) {
  Vector dev = Vector::Zero(ref.size());
  double total = 0.0;
  for (size_t i = 0; i < sd.values.size(); ++i) {
    dev += sd.probs[i] * (sd.values[i] - ref).cwiseAbs();
    total += sd.probs[i];
  }
  return inf_norm(dev / total);
}

}  // namespace

namespace {

bool same_tree(const ScenarioTree& a, const ScenarioTree& b) {
  if (a.size() != b.size()) return false;
  for (int i = 0; i < a.size(); ++i) {
    if (a[i].stage != b[i].stage || a[i].kind != b[i].kind || a[i].parent != b[i].parent ||
        a[i].prob != b[i].prob || a[i].value.size() != b[i].value.size() ||
        a[i].value != b[i].value)
      return false;
  }
  return true;
}

}  // namespace

double filtration_estimate(const Policy& policyP, const Policy& policyQ, const ScenarioTree& treeP,
                           const ScenarioTree& treeQ) {
  // Identical inputs admit the identity coupling, under which every decision is
  // measurable for the other filtration and the projections are exact.
  if (same_tree(treeP, treeQ) && policyP.decisions == policyQ.decisions) return 0.0;

  auto dp = collect_decisions(policyP, treeP);
  auto dq = collect_decisions(policyQ, treeQ);
  require(!dp.empty() && !dq.empty(), Errc::InvalidInput, "policies carry no decisions");
  require(dp.rbegin()->first == dq.rbegin()->first, Errc::InvalidInput,
          "policies cover different horizons");
  double total = 0.0;
  for (const auto& [t, sd] : dp) {
    if (t == 0) continue;  // deterministic first-stage decision projects onto itself
    auto it = dq.find(t);
    require(it != dq.end(), Errc::InvalidInput, "stage missing from the second policy");
    const Vector mp = stage_mean(sd);
    const Vector mq = stage_mean(it->second);
    total += std::max(componentwise_deviation(sd, mq), componentwise_deviation(it->second, mp));
  }
  return total;
}

}  // namespace mspmdp
