#pragma once

#include <array>
#include <vector>

#include <dtce/core.hpp>
#include <dtce/monge.hpp>
#include <dtce/simplex.hpp>
#include <dtce/transport.hpp>

namespace dtce {

// ----- Grid discretization, two marginals -----

/// Cell supplies are the capacity each grid cell can pass; group demands are
/// the scenario masses. A zero-cost overflow column absorbs spare capacity.
inline TransportInstance discretize2d(const Scenario& sc, const TimeGrid& grid) {
  grid.check();
  CostMatrix costs = sampleCostArray(sc, grid);
  std::vector<double> supply((size_t)grid.cells, sc.capacity * grid.dt());
  std::vector<double> demand;
  demand.reserve(sc.groups.size());
  for (const auto& g : sc.groups)
    demand.push_back(g.mass);
  return makeInstance(costs, supply, demand);
}

struct Oracle2dSolution {
  TransportInstance instance;
  FlowAssignment flow;
  std::vector<double> u; ///< per grid cell, min is zero
  std::vector<double> v; ///< per group
  DualityAudit audit;
  long pivots = 0;
};

inline Oracle2dSolution solveOracle2d(const Scenario& sc, const TimeGrid& grid) {
  Oracle2dSolution out;
  out.instance = discretize2d(sc, grid);
  auto res = solveTransportation(out.instance);
  out.audit = dualityAudit(out.instance, res.flow, res.duals);
  out.flow = std::move(res.flow);
  out.u = std::move(res.duals.u);
  out.v.assign(res.duals.v.begin(), res.duals.v.begin() + out.instance.realCols());
  out.pivots = res.pivots;
  return out;
}

// ----- Generic linear-program forms -----

/// Balanced equality form of a transportation instance, used to cross-check
/// the specialized solver against the generic one.
inline DenseLp lpFromInstance(const TransportInstance& t) {
  t.check();
  DenseLp lp;
  for (double s : t.supply)
    lp.addRow(RowSense::Eq, s);
  for (double q : t.demand)
    lp.addRow(RowSense::Eq, q);
  for (int i = 0; i < t.rows; ++i)
    for (int k = 0; k < t.cols; ++k)
      lp.addColumn(t.c(i, k), {{i, 1.0}, {t.rows + k, 1.0}});
  return lp;
}

struct CapacityLp {
  DenseLp lp;
  int cells = 0, groups = 0;
  std::vector<int> col; ///< (cell * groups + k) -> column id, -1 when forbidden
};

/// Capacity form without the overflow column: cell rows are upper bounds,
/// group rows are equalities, forbidden cells are simply absent.
inline CapacityLp lpCapacityForm(const CostMatrix& costs, double cellCapacity,
                                 const std::vector<double>& demand) {
  if ((int)demand.size() != costs.cols)
    throw std::runtime_error("capacity lp: demand length must match the cost columns");
  CapacityLp out;
  out.cells = costs.rows;
  out.groups = costs.cols;
  out.col.assign((size_t)costs.rows * costs.cols, -1);
  for (int i = 0; i < costs.rows; ++i)
    out.lp.addRow(RowSense::Le, cellCapacity);
  for (int k = 0; k < costs.cols; ++k)
    out.lp.addRow(RowSense::Eq, demand[k]);
  for (int i = 0; i < costs.rows; ++i)
    for (int k = 0; k < costs.cols; ++k) {
      if (costs.masked(i, k))
        continue;
      out.col[(size_t)i * costs.cols + k] =
          out.lp.addColumn(costs.at(i, k), {{i, 1.0}, {costs.rows + k, 1.0}});
    }
  return out;
}

// ----- Commuting (three-marginal) oracle -----

struct Commute3dLp {
  DenseLp lp;
  std::vector<std::array<int, 3>> cellOf; ///< column -> (time cell, location, group)
  int cells = 0, locations = 0, groups = 0;
};

/// Rows are ordered time cells, then locations, then groups. `timeSense`
/// selects between capacity bounds (full-grid run) and exact cell loads
/// (rush-window run).
inline Commute3dLp lpCommuting(const Scenario& sc, const TimeGrid& grid,
                               RowSense timeSense,
                               const std::vector<double>& timeMarginal) {
  if ((int)timeMarginal.size() != grid.cells)
    throw std::runtime_error("commuting lp: time marginal must cover every cell");
  Commute3dLp out;
  out.cells = grid.cells;
  out.locations = (int)sc.locations.size();
  out.groups = (int)sc.groups.size();
  for (int i = 0; i < out.cells; ++i)
    out.lp.addRow(timeSense, timeMarginal[i]);
  for (const auto& loc : sc.locations)
    out.lp.addRow(RowSense::Eq, loc.mass);
  for (const auto& g : sc.groups)
    out.lp.addRow(RowSense::Eq, g.mass);
  for (int i = 0; i < out.cells; ++i) {
    double s = grid.midpoint(i);
    for (int j = 0; j < out.locations; ++j)
      for (int k = 0; k < out.groups; ++k) {
        double c = evalScheduleCost3d(sc, j, k, s);
        if (c == kForbidden)
          continue;
        out.lp.addColumn(c, {{i, 1.0},
                             {out.cells + j, 1.0},
                             {out.cells + out.locations + k, 1.0}});
        out.cellOf.push_back({i, j, k});
      }
  }
  return out;
}

inline Commute3dLp lpCommuting(const Scenario& sc, const TimeGrid& grid) {
  std::vector<double> capacity((size_t)grid.cells, sc.capacity * grid.dt());
  return lpCommuting(sc, grid, RowSense::Le, capacity);
}

/// Grid aligned exactly to the rush: total mass fills every cell to capacity,
/// so all three marginals can be imposed as equalities.
struct WindowSlice {
  TimeGrid grid;
  std::vector<std::vector<double>> marginals; ///< cell loads, location masses, group masses
};

inline WindowSlice rushWindow(const Scenario& sc, int cells) {
  if (cells < 1)
    throw std::runtime_error("rush window needs at least one cell");
  double total = sc.totalMass();
  double T = total / sc.capacity;
  double sigma = sc.groups.at(0).preferred_time;
  WindowSlice w;
  w.grid = TimeGrid{sigma - T, sigma, cells};
  w.marginals.resize(3);
  w.marginals[0].assign((size_t)cells, total / cells);
  for (const auto& loc : sc.locations)
    w.marginals[1].push_back(loc.mass);
  for (const auto& g : sc.groups)
    w.marginals[2].push_back(g.mass);
  return w;
}

struct Oracle3dSolution {
  LpStatus status = LpStatus::IterLimit;
  double objective = std::numeric_limits<double>::quiet_NaN();
  NdFlow flow;           ///< time cells x locations x groups
  std::vector<double> u; ///< queue price per cell
  std::vector<double> r; ///< location advantage, min is zero
  std::vector<double> w; ///< commuting cost per group
  long pivots = 0;
};

namespace detail {

inline Oracle3dSolution solveCommutingLp(const Commute3dLp& built, long iterLimit) {
  Oracle3dSolution out;
  auto sol = solveLp(built.lp, iterLimit);
  out.status = sol.status;
  out.pivots = sol.pivots;
  if (sol.status != LpStatus::Optimal)
    return out;
  out.objective = sol.objective;
  out.flow.dims = {built.cells, built.locations, built.groups};
  out.flow.x.assign((size_t)built.cells * built.locations * built.groups, 0.0);
  for (size_t c = 0; c < built.cellOf.size(); ++c) {
    const auto& id = built.cellOf[c];
    out.flow.at({id[0], id[1], id[2]}) = sol.x[c];
  }
  out.u.resize(built.cells);
  for (int i = 0; i < built.cells; ++i)
    out.u[i] = -sol.y[i];
  out.r.resize(built.locations);
  out.w.resize(built.groups);
  double shift = std::numeric_limits<double>::infinity();
  for (int j = 0; j < built.locations; ++j)
    shift = std::min(shift, -sol.y[built.cells + j]);
  for (int j = 0; j < built.locations; ++j)
    out.r[j] = -sol.y[built.cells + j] - shift;
  for (int k = 0; k < built.groups; ++k)
    out.w[k] = sol.y[built.cells + built.locations + k] - shift;
  return out;
}

} // namespace detail

inline Oracle3dSolution solveOracle3d(const Scenario& sc, const TimeGrid& grid,
                                      long iterLimit = 0) {
  grid.check();
  return detail::solveCommutingLp(lpCommuting(sc, grid), iterLimit);
}

inline Oracle3dSolution solveOracle3dWindow(const Scenario& sc, const WindowSlice& w,
                                            long iterLimit = 0) {
  return detail::solveCommutingLp(
      lpCommuting(sc, w.grid, RowSense::Eq, w.marginals[0]), iterLimit);
}

} // namespace dtce
