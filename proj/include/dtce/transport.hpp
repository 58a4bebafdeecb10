#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "monge.hpp"

namespace dtce {

/**
 * Two-marginal transportation instances. Rows are supply cells (time), columns
 * demand groups; when built from a scenario whose grid capacity exceeds total
 * demand, a zero-cost dummy demand column absorbs the surplus so the instance
 * balances. Costs are always finite: sentinel cells enter as a large penalty.
 */
struct TransportInstance {
  int rows = 0, cols = 0;
  std::vector<double> cost; // row-major
  std::vector<double> supply, demand;
  bool slack_column = false; // last column is the zero-cost dummy

  double& c(int i, int k) { return cost[i * cols + k]; }
  double c(int i, int k) const { return cost[i * cols + k]; }

  int realCols() const { return slack_column ? cols - 1 : cols; }

  void check() const {
    if (rows < 1 || cols < 1)
      throw std::runtime_error("transport instance needs at least one row and column");
    double s = std::accumulate(supply.begin(), supply.end(), 0.0);
    double q = std::accumulate(demand.begin(), demand.end(), 0.0);
    if (std::abs(s - q) > 1e-9 * std::max({1.0, s, q}))
      throw std::runtime_error("unbalanced transport instance: supply " + std::to_string(s) +
                               " vs demand " + std::to_string(q));
    for (double v : supply)
      if (v < 0.0)
        throw std::runtime_error("negative supply entry");
    for (double v : demand)
      if (v < 0.0)
        throw std::runtime_error("negative demand entry");
  }
};

/// Penalty used for prohibited cells when an instance must stay finite.
inline double bigPenalty(const std::vector<double>& finiteCosts) {
  double m = 0.0;
  for (double c : finiteCosts)
    if (c != kForbidden)
      m = std::max(m, std::abs(c));
  return 1e6 * std::max(m, 1.0);
}

/// Balanced instance from a sampled cost lattice: supplies are cell capacities
/// mu*dt, demands the group masses, surplus routed to the dummy column.
inline TransportInstance makeInstance(const CostMatrix& costs, const std::vector<double>& supply,
                                      const std::vector<double>& demand) {
  TransportInstance t;
  t.rows = costs.rows;
  if ((int)supply.size() != costs.rows || (int)demand.size() != costs.cols)
    throw std::runtime_error("marginal sizes do not match the cost lattice");
  double s = std::accumulate(supply.begin(), supply.end(), 0.0);
  double q = std::accumulate(demand.begin(), demand.end(), 0.0);
  double surplus = s - q;
  if (surplus < -1e-9 * std::max(1.0, q))
    throw std::runtime_error("infeasible marginals: total supply " + std::to_string(s) +
                             " is below total demand " + std::to_string(q));
  t.slack_column = surplus > 1e-12 * std::max(1.0, q);
  t.cols = costs.cols + (t.slack_column ? 1 : 0);
  t.cost.assign((size_t)t.rows * t.cols, 0.0);
  double M = bigPenalty(costs.c);
  for (int i = 0; i < costs.rows; ++i)
    for (int k = 0; k < costs.cols; ++k)
      t.c(i, k) = costs.masked(i, k) ? M : costs.at(i, k);
  t.supply = supply;
  t.demand = demand;
  if (t.slack_column)
    t.demand.push_back(surplus);
  t.check();
  return t;
}

struct FlowAssignment {
  int rows = 0, cols = 0;
  std::vector<double> x;
  double objective = std::numeric_limits<double>::quiet_NaN();

  double& at(int i, int k) { return x[i * cols + k]; }
  double at(int i, int k) const { return x[i * cols + k]; }

  std::vector<double> rowSums() const {
    std::vector<double> s(rows, 0.0);
    for (int i = 0; i < rows; ++i)
      for (int k = 0; k < cols; ++k)
        s[i] += at(i, k);
    return s;
  }
  std::vector<double> colSums() const {
    std::vector<double> s(cols, 0.0);
    for (int i = 0; i < rows; ++i)
      for (int k = 0; k < cols; ++k)
        s[k] += at(i, k);
    return s;
  }
};

inline double objectiveOf(const TransportInstance& t, const FlowAssignment& f) {
  double z = 0.0;
  for (size_t i = 0; i < t.cost.size(); ++i)
    z += t.cost[i] * f.x[i];
  return z;
}

namespace detail {

inline void checkBalance(const std::vector<double>& supply, const std::vector<double>& demand) {
  double s = std::accumulate(supply.begin(), supply.end(), 0.0);
  double q = std::accumulate(demand.begin(), demand.end(), 0.0);
  if (std::abs(s - q) > 1e-9 * std::max({1.0, s, q}))
    throw std::runtime_error("corner rules need balanced marginals");
}

} // namespace detail

/// Greedy filling from the smallest indices. When a step exhausts supply and
/// demand together, the row index advances first; that keeps the walk a
/// staircase and the positive cells at most rows + cols - 1.
inline FlowAssignment northwestCorner(const std::vector<double>& supply,
                                      const std::vector<double>& demand) {
  detail::checkBalance(supply, demand);
  FlowAssignment f;
  f.rows = (int)supply.size();
  f.cols = (int)demand.size();
  f.x.assign((size_t)f.rows * f.cols, 0.0);
  std::vector<double> rs = supply, rq = demand;
  int i = 0, k = 0;
  while (i < f.rows && k < f.cols) {
    double m = std::min(rs[i], rq[k]);
    f.at(i, k) = m;
    rs[i] -= m;
    rq[k] -= m;
    if (rs[i] <= 0.0 && i + 1 < f.rows)
      ++i;
    else if (rq[k] <= 0.0)
      ++k;
    else if (rs[i] <= 0.0)
      ++i;
    else
      break; // numerically stuck; balance check makes this unreachable
  }
  return f;
}

/// Mirror of the northwest rule: starts at the first row and last column and
/// walks the anti-diagonal staircase.
inline FlowAssignment northeastCorner(const std::vector<double>& supply,
                                      const std::vector<double>& demand) {
  detail::checkBalance(supply, demand);
  FlowAssignment f;
  f.rows = (int)supply.size();
  f.cols = (int)demand.size();
  f.x.assign((size_t)f.rows * f.cols, 0.0);
  std::vector<double> rs = supply, rq = demand;
  int i = 0, k = f.cols - 1;
  while (i < f.rows && k >= 0) {
    double m = std::min(rs[i], rq[k]);
    f.at(i, k) = m;
    rs[i] -= m;
    rq[k] -= m;
    if (rs[i] <= 0.0 && i + 1 < f.rows)
      ++i;
    else if (rq[k] <= 0.0)
      --k;
    else if (rs[i] <= 0.0)
      ++i;
    else
      break;
  }
  return f;
}

/// N-marginal flow on a dense axis-aligned array.
struct NdFlow {
  std::vector<int> dims;
  std::vector<double> x;

  size_t offset(const std::vector<int>& idx) const {
    size_t o = 0;
    for (size_t a = 0; a < dims.size(); ++a)
      o = o * dims[a] + idx[a];
    return o;
  }
  double at(const std::vector<int>& idx) const { return x[offset(idx)]; }
  double& at(const std::vector<int>& idx) { return x[offset(idx)]; }
};

/// Corner rule along all axes at once: fill the current cell with the smallest
/// residual marginal, advance every axis that hit zero. Optimal whenever every
/// two-axis submatrix of the cost array is Monge.
inline NdFlow greedyNd(const std::vector<std::vector<double>>& marginals) {
  if (marginals.size() < 2)
    throw std::invalid_argument("need at least two marginals");
  double total = std::accumulate(marginals[0].begin(), marginals[0].end(), 0.0);
  for (auto& m : marginals) {
    double s = std::accumulate(m.begin(), m.end(), 0.0);
    if (std::abs(s - total) > 1e-9 * std::max(1.0, total))
      throw std::runtime_error("greedy fill needs equal marginal totals");
  }
  NdFlow f;
  for (auto& m : marginals)
    f.dims.push_back((int)m.size());
  size_t n = 1;
  for (int d : f.dims)
    n *= (size_t)d;
  f.x.assign(n, 0.0);

  auto residual = marginals;
  std::vector<int> idx(marginals.size(), 0);
  double assigned = 0.0;
  while (assigned < total - 1e-12 * std::max(1.0, total)) {
    double m = std::numeric_limits<double>::infinity();
    for (size_t a = 0; a < idx.size(); ++a)
      m = std::min(m, residual[a][idx[a]]);
    f.x[f.offset(idx)] += m;
    assigned += m;
    bool advanced = false;
    for (size_t a = 0; a < idx.size(); ++a) {
      residual[a][idx[a]] -= m;
      if (residual[a][idx[a]] <= 1e-12 * std::max(1.0, total) && idx[a] + 1 < f.dims[a]) {
        residual[a][idx[a]] = 0.0;
        ++idx[a];
        advanced = true;
      }
    }
    if (!advanced) {
      if (assigned < total - 1e-9 * std::max(1.0, total))
        throw std::runtime_error("greedy fill stalled before exhausting the marginals");
      break;
    }
  }
  return f;
}

// ----- Transportation simplex -----

struct DualSolution {
  std::vector<double> u; // per supply cell, normalized to min u = 0, >= 0 with slack
  std::vector<double> v; // per demand column, dummy included when present
};

struct TransportResult {
  FlowAssignment flow;
  DualSolution duals;
  int pivots = 0;
};

namespace detail {

struct BasisCell {
  int i, k;
  double flow;
};

/// Northwest start that records a spanning-tree basis: when supply and demand
/// exhaust together mid-walk, the next cell enters with zero flow so the basis
/// keeps rows + cols - 1 members.
inline std::vector<BasisCell> northwestBasis(const std::vector<double>& supply,
                                             const std::vector<double>& demand) {
  std::vector<BasisCell> basis;
  std::vector<double> rs = supply, rq = demand;
  int I = (int)supply.size(), K = (int)demand.size();
  int i = 0, k = 0;
  while (true) {
    double m = std::min(rs[i], rq[k]);
    basis.push_back({i, k, m});
    rs[i] -= m;
    rq[k] -= m;
    if (i == I - 1 && k == K - 1)
      break;
    if (rs[i] <= 0.0 && i + 1 < I)
      ++i;
    else
      ++k;
  }
  return basis;
}

} // namespace detail

/**
 * Primal transportation simplex with explicit spanning-tree basis. Entering
 * cell: most negative reduced cost, lexicographic tie break; after a long
 * degenerate stall the entering rule falls back to first-eligible by index,
 * which breaks any cycle. Duals come for free from the final tree.
 */
inline TransportResult solveTransportation(const TransportInstance& t) {
  t.check();
  const int I = t.rows, K = t.cols;
  auto basis = detail::northwestBasis(t.supply, t.demand);

  std::vector<double> pi(I, 0.0), rho(K, 0.0);
  std::vector<std::vector<int>> rowCells(I), colCells(K); // indices into basis
  std::vector<char> inBasis((size_t)I * K, 0);

  auto rebuildAdjacency = [&] {
    for (auto& r : rowCells)
      r.clear();
    for (auto& c : colCells)
      c.clear();
    std::fill(inBasis.begin(), inBasis.end(), 0);
    for (int b = 0; b < (int)basis.size(); ++b) {
      rowCells[basis[b].i].push_back(b);
      colCells[basis[b].k].push_back(b);
      inBasis[basis[b].i * K + basis[b].k] = 1;
    }
  };

  auto computeDuals = [&] {
    // Tree walk; the basis graph is connected with I + K - 1 edges.
    std::vector<char> rowDone(I, 0), colDone(K, 0);
    pi[0] = 0.0;
    rowDone[0] = 1;
    std::vector<int> rowStack{0}, colStack;
    while (!rowStack.empty() || !colStack.empty()) {
      if (!rowStack.empty()) {
        int i = rowStack.back();
        rowStack.pop_back();
        for (int b : rowCells[i]) {
          int k = basis[b].k;
          if (!colDone[k]) {
            rho[k] = t.c(i, k) - pi[i];
            colDone[k] = 1;
            colStack.push_back(k);
          }
        }
      } else {
        int k = colStack.back();
        colStack.pop_back();
        for (int b : colCells[k]) {
          int i = basis[b].i;
          if (!rowDone[i]) {
            pi[i] = t.c(i, k) - rho[k];
            rowDone[i] = 1;
            rowStack.push_back(i);
          }
        }
      }
    }
  };

  double costScale = 1.0;
  for (double c : t.cost)
    costScale = std::max(costScale, std::abs(c));
  const double rcTol = 1e-11 * costScale;

  rebuildAdjacency();
  int pivots = 0;
  int stall = 0;
  const int stallLimit = std::max(64, I + K);
  const long iterCap = 50L * I * K + 1000;

  while (true) {
    if (pivots > iterCap)
      throw std::runtime_error("transportation simplex exceeded its pivot budget");
    computeDuals();

    // price
    int ei = -1, ek = -1;
    double best = -rcTol;
    bool bland = stall >= stallLimit;
    for (int i = 0; i < I && (ei < 0 || !bland); ++i) {
      for (int k = 0; k < K; ++k) {
        if (inBasis[i * K + k])
          continue;
        double rc = t.c(i, k) - pi[i] - rho[k];
        if (bland) {
          if (rc < -rcTol) {
            ei = i;
            ek = k;
            break;
          }
        } else if (rc < best) {
          best = rc;
          ei = i;
          ek = k;
        }
      }
    }
    if (ei < 0)
      break; // optimal

    // cycle: unique tree path from row ei to column ek, alternating row/col
    std::vector<int> parentEdge(I + K, -1), parentNode(I + K, -1);
    std::vector<char> seen(I + K, 0);
    std::vector<int> queue{ei};
    seen[ei] = 1;
    int target = I + ek;
    for (size_t qh = 0; qh < queue.size(); ++qh) {
      int node = queue[qh];
      if (node == target)
        break;
      if (node < I) {
        for (int b : rowCells[node]) {
          int nk = I + basis[b].k;
          if (!seen[nk]) {
            seen[nk] = 1;
            parentEdge[nk] = b;
            parentNode[nk] = node;
            queue.push_back(nk);
          }
        }
      } else {
        for (int b : colCells[node - I]) {
          int ni = basis[b].i;
          if (!seen[ni]) {
            seen[ni] = 1;
            parentEdge[ni] = b;
            parentNode[ni] = node;
            queue.push_back(ni);
          }
        }
      }
    }
    if (!seen[target])
      throw std::runtime_error("basis lost connectivity");

    // Walk back collecting basis edges; odd positions give up flow.
    std::vector<int> path; // basis indices from target back to ei
    for (int node = target; node != ei; node = parentNode[node])
      path.push_back(parentEdge[node]);

    double theta = std::numeric_limits<double>::infinity();
    int leave = -1;
    // entering edge closes the cycle; alternate signs along the path:
    // path[0] connects ek, its flow decreases first. Ties leave the cell with
    // the smallest (i, k), which doubles as the anti-cycling tie break.
    for (size_t p = 0; p < path.size(); p += 2) {
      double fl = basis[path[p]].flow;
      bool better = fl < theta - 1e-15;
      if (!better && fl < theta + 1e-15 && leave >= 0) {
        auto& cand = basis[path[p]];
        auto& cur = basis[leave];
        better = cand.i < cur.i || (cand.i == cur.i && cand.k < cur.k);
      }
      if (better || leave < 0) {
        theta = std::min(theta, fl);
        leave = path[p];
      }
    }
    if (leave < 0)
      throw std::runtime_error("degenerate cycle without a leaving edge");

    for (size_t p = 0; p < path.size(); ++p)
      basis[path[p]].flow += (p % 2 == 0) ? -theta : theta;
    detail::BasisCell enter{ei, ek, theta};
    basis[leave] = enter;
    rebuildAdjacency();
    ++pivots;
    stall = theta <= 1e-15 ? stall + 1 : 0;
  }

  TransportResult res;
  res.pivots = pivots;
  res.flow.rows = I;
  res.flow.cols = K;
  res.flow.x.assign((size_t)I * K, 0.0);
  for (auto& b : basis)
    res.flow.at(b.i, b.k) += b.flow;
  res.flow.objective = objectiveOf(t, res.flow);

  // Library convention: u = -pi shifted so min u = 0; v shifts identically,
  // which also zeroes the dummy column's price whenever slack is in use.
  res.duals.u.assign(I, 0.0);
  res.duals.v.assign(K, 0.0);
  double shift = std::numeric_limits<double>::infinity();
  for (int i = 0; i < I; ++i)
    shift = std::min(shift, -pi[i]);
  for (int i = 0; i < I; ++i)
    res.duals.u[i] = -pi[i] - shift;
  for (int k = 0; k < K; ++k)
    res.duals.v[k] = rho[k] - shift;
  return res;
}

// ----- Optimality audit -----

/// Strong-duality and complementary-slackness report for a proposed primal /
/// dual pair on one instance. `gap` equals the slackness sum identically when
/// the duals are feasible, which the audit also checks.
struct DualityAudit {
  double primal = 0.0;
  double dual = 0.0;
  double gap_rel = 0.0;
  double max_flow_slackness = 0.0;     // max x * |reduced cost|
  double max_capacity_slackness = 0.0; // max u * |unused supply|
  double min_reduced_cost = 0.0;
  bool ok = false;
};

inline DualityAudit dualityAudit(const TransportInstance& t, const FlowAssignment& f,
                                 const DualSolution& d, double tol = 1e-9) {
  DualityAudit a;
  a.primal = objectiveOf(t, f);
  double su = 0.0, qv = 0.0;
  for (int i = 0; i < t.rows; ++i)
    su += t.supply[i] * d.u[i];
  for (int k = 0; k < t.cols; ++k)
    qv += t.demand[k] * d.v[k];
  a.dual = qv - su;
  a.gap_rel = std::abs(a.primal - a.dual) / (1.0 + std::abs(a.primal));
  a.min_reduced_cost = std::numeric_limits<double>::infinity();
  auto rows = f.rowSums();
  for (int i = 0; i < t.rows; ++i) {
    a.max_capacity_slackness =
        std::max(a.max_capacity_slackness, d.u[i] * std::abs(t.supply[i] - rows[i]));
    for (int k = 0; k < t.cols; ++k) {
      double rc = t.c(i, k) + d.u[i] - d.v[k];
      a.min_reduced_cost = std::min(a.min_reduced_cost, rc);
      a.max_flow_slackness = std::max(a.max_flow_slackness, f.at(i, k) * std::abs(rc));
    }
  }
  double scale = 1.0 + std::abs(a.primal);
  a.ok = a.gap_rel <= tol && a.max_flow_slackness <= tol * scale &&
         a.max_capacity_slackness <= tol * scale && a.min_reduced_cost >= -tol * scale;
  return a;
}

} // namespace dtce
