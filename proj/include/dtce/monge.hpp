#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "core.hpp"

namespace dtce {

/**
 * Certification of the cost-coupling structure that makes greedy corner rules
 * optimal. A matrix is submodular ("Monge") when every adjacent quadruple
 * satisfies c[i][k] + c[i+1][k+1] <= c[i][k+1] + c[i+1][k]; the inverse mode
 * flips the inequality, strict modes demand slack beyond a scale-aware band.
 * Verdicts hold for the sampled lattice only.
 */
enum class MongeMode { Weak, Strict, Inverse, StrictInverse };

struct MongeVerdict {
  bool holds = false;
  bool vacuous = false; // fewer than 2 indices along some axis: nothing to check
  int vi = -1, vk = -1; // first violating quadruple, top-left corner
  double margin = 0.0;  // its (rhs - lhs) value
};

/// Dense cost matrix with axis names and a mask for sentinel-penalized cells;
/// masked quadruples are excluded from certification.
struct CostMatrix {
  int rows = 0, cols = 0;
  std::vector<double> c;
  std::vector<std::uint8_t> forbidden;
  std::string row_axis = "time";
  std::string col_axis = "group";

  CostMatrix() = default;
  CostMatrix(int r, int k) : rows(r), cols(k), c(r * k, 0.0), forbidden(r * k, 0) {}

  double& at(int i, int k) { return c[i * cols + k]; }
  double at(int i, int k) const { return c[i * cols + k]; }
  bool masked(int i, int k) const { return forbidden[i * cols + k] != 0; }
  void mask(int i, int k) { forbidden[i * cols + k] = 1; }
};

inline MongeVerdict is_monge(const CostMatrix& m, MongeMode mode) {
  MongeVerdict v;
  if (m.rows < 2 || m.cols < 2) {
    v.holds = true;
    v.vacuous = true;
    return v;
  }
  bool any = false;
  for (int i = 0; i + 1 < m.rows; ++i) {
    for (int k = 0; k + 1 < m.cols; ++k) {
      if (m.masked(i, k) || m.masked(i, k + 1) || m.masked(i + 1, k) || m.masked(i + 1, k + 1))
        continue;
      any = true;
      double lhs = m.at(i, k) + m.at(i + 1, k + 1);
      double rhs = m.at(i, k + 1) + m.at(i + 1, k);
      double band = 1e-12 * (1.0 + std::abs(m.at(i, k)) + std::abs(m.at(i, k + 1)) +
                             std::abs(m.at(i + 1, k)) + std::abs(m.at(i + 1, k + 1)));
      double margin = rhs - lhs; // >= 0 for submodular
      bool ok = false;
      switch (mode) {
      case MongeMode::Weak: ok = margin >= -band; break;
      case MongeMode::Strict: ok = margin > band; break;
      case MongeMode::Inverse: ok = margin <= band; break;
      case MongeMode::StrictInverse: ok = margin < -band; break;
      }
      if (!ok) {
        v.holds = false;
        v.vi = i;
        v.vk = k;
        v.margin = margin;
        return v;
      }
    }
  }
  v.holds = true;
  v.vacuous = !any;
  return v;
}

// ----- Higher-dimensional arrays -----

struct CostArrayND {
  std::vector<int> dims;
  std::vector<double> c;
  std::vector<std::uint8_t> forbidden;
  std::vector<std::string> axes;

  CostArrayND() = default;
  explicit CostArrayND(std::vector<int> d) : dims(std::move(d)) {
    size_t n = 1;
    for (int x : dims)
      n *= (size_t)x;
    c.assign(n, 0.0);
    forbidden.assign(n, 0);
  }

  size_t offset(const std::vector<int>& idx) const {
    size_t o = 0;
    for (size_t a = 0; a < dims.size(); ++a)
      o = o * dims[a] + idx[a];
    return o;
  }
  double& at(const std::vector<int>& idx) { return c[offset(idx)]; }
  double at(const std::vector<int>& idx) const { return c[offset(idx)]; }
  bool masked(const std::vector<int>& idx) const { return forbidden[offset(idx)] != 0; }
};

struct MongeNdVerdict {
  bool holds = false;
  bool vacuous = false;
  int axis_a = -1, axis_b = -1;
  std::vector<int> violation_low;  // index vector at the quadruple's low corner
  std::vector<int> violation_high; // low corner advanced by one along both axes
  double margin = 0.0;
};

/// An array is Monge when every two-dimensional submatrix (any axis pair, all
/// remaining indices fixed) is Monge; the check walks exactly those quadruples.
inline MongeNdVerdict is_monge_nd(const CostArrayND& arr, MongeMode mode) {
  MongeNdVerdict v;
  size_t nd = arr.dims.size();
  if (nd < 2)
    throw std::invalid_argument("need at least two axes");
  bool any = false;
  std::vector<int> idx(nd, 0);
  for (size_t a = 0; a < nd; ++a) {
    for (size_t b = a + 1; b < nd; ++b) {
      // enumerate all index vectors with idx[a] + 1 and idx[b] + 1 in range
      std::fill(idx.begin(), idx.end(), 0);
      while (true) {
        bool inRange = idx[a] + 1 < arr.dims[a] && idx[b] + 1 < arr.dims[b];
        if (inRange) {
          auto i00 = idx;
          auto i11 = idx;
          i11[a]++, i11[b]++;
          auto i01 = idx;
          i01[b]++;
          auto i10 = idx;
          i10[a]++;
          if (!arr.masked(i00) && !arr.masked(i01) && !arr.masked(i10) && !arr.masked(i11)) {
            any = true;
            double lhs = arr.at(i00) + arr.at(i11);
            double rhs = arr.at(i01) + arr.at(i10);
            double band = 1e-12 * (1.0 + std::abs(arr.at(i00)) + std::abs(arr.at(i01)) +
                                   std::abs(arr.at(i10)) + std::abs(arr.at(i11)));
            double margin = rhs - lhs;
            bool ok = false;
            switch (mode) {
            case MongeMode::Weak: ok = margin >= -band; break;
            case MongeMode::Strict: ok = margin > band; break;
            case MongeMode::Inverse: ok = margin <= band; break;
            case MongeMode::StrictInverse: ok = margin < -band; break;
            }
            if (!ok) {
              v.holds = false;
              v.axis_a = (int)a;
              v.axis_b = (int)b;
              v.violation_low = i00;
              v.violation_high = i11;
              v.margin = margin;
              return v;
            }
          }
        }
        // odometer over all axes
        size_t ax = nd;
        while (ax > 0) {
          --ax;
          if (++idx[ax] < arr.dims[ax])
            break;
          idx[ax] = 0;
          if (ax == 0) {
            ax = nd; // signals wrap-around of the most significant axis
            break;
          }
        }
        if (ax == nd)
          break;
      }
    }
  }
  v.holds = true;
  v.vacuous = !any;
  return v;
}

// ----- Sampling scenarios onto cost lattices -----

/// Rows are grid cells in increasing time (reversed when asked), columns are
/// groups in scenario order. Sentinel cells are masked and carry 0.
inline CostMatrix sampleCostArray(const Scenario& sc, const TimeGrid& grid,
                                  bool reverse_time = false) {
  if (sc.schedule.variant == ScheduleVariant::Commuting3D)
    throw std::invalid_argument("commuting scenarios sample to a three-axis array");
  int K = (int)sc.groups.size();
  CostMatrix m(grid.cells, K);
  m.row_axis = reverse_time ? "time (reversed)" : "time";
  for (int n = 0; n < grid.cells; ++n) {
    int row = reverse_time ? grid.cells - 1 - n : n;
    for (int k = 0; k < K; ++k) {
      double c = evalEffectiveCost(sc, k, grid.midpoint(n));
      if (c == kForbidden) {
        m.mask(row, k);
      } else {
        m.at(row, k) = c;
      }
    }
  }
  return m;
}

/// Axis order: time cell, location, group.
inline CostArrayND sampleCostArray3d(const Scenario& sc, const TimeGrid& grid) {
  if (sc.schedule.variant != ScheduleVariant::Commuting3D)
    throw std::invalid_argument("scenario does not use the commuting schedule form");
  int J = (int)sc.locations.size();
  int K = (int)sc.groups.size();
  CostArrayND arr({grid.cells, J, K});
  arr.axes = {"time", "location", "group"};
  for (int n = 0; n < grid.cells; ++n)
    for (int j = 0; j < J; ++j)
      for (int k = 0; k < K; ++k) {
        double c = evalScheduleCost3d(sc, j, k, grid.midpoint(n));
        std::vector<int> idx{n, j, k};
        if (c == kForbidden)
          arr.forbidden[arr.offset(idx)] = 1;
        else
          arr.at(idx) = c;
      }
  return arr;
}

} // namespace dtce
