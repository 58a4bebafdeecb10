#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dtce {

enum class RowSense { Eq, Le, Ge };
enum class LpStatus { Optimal, Infeasible, Unbounded, IterLimit };

inline const char* lpStatusName(LpStatus s) {
  switch (s) {
  case LpStatus::Optimal:
    return "optimal";
  case LpStatus::Infeasible:
    return "infeasible";
  case LpStatus::Unbounded:
    return "unbounded";
  case LpStatus::IterLimit:
    return "iteration_limit";
  }
  return "?";
}

/// Linear program min c.x subject to A x (sense) b, x >= 0.
/// Columns are sparse lists of (row, coefficient) pairs.
struct DenseLp {
  std::vector<double> rhs;
  std::vector<RowSense> sense;
  std::vector<double> obj;
  std::vector<std::vector<std::pair<int, double>>> cols;

  int rows() const { return (int)rhs.size(); }
  int columns() const { return (int)cols.size(); }

  int addRow(RowSense s, double b) {
    sense.push_back(s);
    rhs.push_back(b);
    return rows() - 1;
  }

  int addColumn(double c, std::vector<std::pair<int, double>> entries) {
    obj.push_back(c);
    cols.push_back(std::move(entries));
    return columns() - 1;
  }

  void check() const {
    for (double b : rhs)
      if (!std::isfinite(b))
        throw std::runtime_error("lp: right-hand sides must be finite");
    for (double c : obj)
      if (!std::isfinite(c))
        throw std::runtime_error("lp: objective coefficients must be finite");
    for (const auto& col : cols)
      for (auto [r, a] : col) {
        if (r < 0 || r >= rows())
          throw std::runtime_error("lp: column entry references a missing row");
        if (!std::isfinite(a))
          throw std::runtime_error("lp: constraint coefficients must be finite");
      }
  }
};

struct LpSolution {
  LpStatus status = LpStatus::IterLimit;
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> x; ///< structural variables only
  std::vector<double> y; ///< row duals; c_j - y.A_j >= 0 at an optimum
  long pivots = 0;
};

namespace lp_detail {

/// Two-phase revised simplex with a dense basis inverse.  Sized for the
/// discretized assignment problems this library produces: a few hundred rows,
/// a few thousand columns.
class Engine {
public:
  explicit Engine(const DenseLp& lp) {
    lp.check();
    m = lp.rows();
    nStruct = lp.columns();

    flip.assign(m, false);
    b.resize(m);
    std::vector<RowSense> rowSense = lp.sense;
    for (int r = 0; r < m; ++r) {
      b[r] = lp.rhs[r];
      if (b[r] < 0.0) {
        flip[r] = true;
        b[r] = -b[r];
        if (rowSense[r] == RowSense::Le)
          rowSense[r] = RowSense::Ge;
        else if (rowSense[r] == RowSense::Ge)
          rowSense[r] = RowSense::Le;
      }
    }

    auto pushColumn = [&](double c, bool art) {
      A.resize(A.size() + m, 0.0);
      cost.push_back(c);
      artificial.push_back(art);
      return (int)cost.size() - 1;
    };

    for (int j = 0; j < nStruct; ++j) {
      int id = pushColumn(lp.obj[j], false);
      double* col = &A[(size_t)id * m];
      for (auto [r, a] : lp.cols[j])
        col[r] += flip[r] ? -a : a;
    }

    basis.assign(m, -1);
    for (int r = 0; r < m; ++r) {
      if (rowSense[r] == RowSense::Le) {
        int id = pushColumn(0.0, false);
        A[(size_t)id * m + r] = 1.0;
        basis[r] = id;
      } else if (rowSense[r] == RowSense::Ge) {
        int id = pushColumn(0.0, false);
        A[(size_t)id * m + r] = -1.0;
      }
    }
    for (int r = 0; r < m; ++r) {
      if (basis[r] < 0) {
        int id = pushColumn(0.0, true);
        A[(size_t)id * m + r] = 1.0;
        basis[r] = id;
      }
    }
    n = (int)cost.size();

    basisPos.assign(n, -1);
    for (int r = 0; r < m; ++r)
      basisPos[basis[r]] = r;
    binv.assign((size_t)m * m, 0.0);
    for (int r = 0; r < m; ++r)
      binv[(size_t)r * m + r] = 1.0;
    xB = b;
    y.resize(m);
    d.resize(m);

    bScale = 1.0;
    for (int r = 0; r < m; ++r)
      bScale += std::abs(b[r]);
  }

  LpSolution solve(long iterLimit) {
    LpSolution out;
    if (iterLimit <= 0)
      iterLimit = 50L * (m + n) + 10000;

    if (m > 0) {
      std::vector<double> phase1(n, 0.0);
      for (int j = 0; j < n; ++j)
        if (artificial[j])
          phase1[j] = 1.0;
      LpStatus s1 = run(phase1, /*allowArtificial=*/true, iterLimit, out.pivots);
      if (s1 == LpStatus::IterLimit) {
        out.status = s1;
        return out;
      }
      double infeas = 0.0;
      for (int r = 0; r < m; ++r)
        if (artificial[basis[r]])
          infeas += std::max(0.0, xB[r]);
      if (infeas > 1e-9 * bScale) {
        out.status = LpStatus::Infeasible;
        out.objective = infeas;
        return out;
      }
      expelArtificials();
    }

    LpStatus s2 = run(cost, /*allowArtificial=*/false, iterLimit, out.pivots);
    out.status = s2;
    if (s2 != LpStatus::Optimal)
      return out;

    refactor();
    computeXB();
    out.x.assign(nStruct, 0.0);
    for (int r = 0; r < m; ++r) {
      double v = xB[r];
      if (v < 0.0 && v > -1e-9 * bScale)
        v = 0.0;
      if (basis[r] < nStruct)
        out.x[basis[r]] = v;
    }
    computeY(cost);
    out.y.resize(m);
    for (int r = 0; r < m; ++r)
      out.y[r] = flip[r] ? -y[r] : y[r];
    out.objective = 0.0;
    for (int j = 0; j < nStruct; ++j)
      out.objective += cost[j] * out.x[j];
    return out;
  }

private:
  int m = 0, nStruct = 0, n = 0;
  std::vector<double> A; ///< dense columns, column-major m rows each
  std::vector<double> b;
  std::vector<double> cost;
  std::vector<char> artificial;
  std::vector<bool> flip;
  std::vector<int> basis, basisPos;
  std::vector<double> binv; ///< row-major m x m
  std::vector<double> xB, y, d;
  double bScale = 1.0;

  const double* column(int j) const { return &A[(size_t)j * m]; }

  void refactor() {
    // Gauss-Jordan inversion of the basis matrix with partial pivoting.
    std::vector<double> work((size_t)m * m);
    for (int r = 0; r < m; ++r) {
      const double* col = column(basis[r]);
      for (int i = 0; i < m; ++i)
        work[(size_t)i * m + r] = col[i];
    }
    std::fill(binv.begin(), binv.end(), 0.0);
    for (int r = 0; r < m; ++r)
      binv[(size_t)r * m + r] = 1.0;
    for (int c = 0; c < m; ++c) {
      int piv = c;
      for (int r = c + 1; r < m; ++r)
        if (std::abs(work[(size_t)r * m + c]) > std::abs(work[(size_t)piv * m + c]))
          piv = r;
      double p = work[(size_t)piv * m + c];
      if (std::abs(p) < 1e-12)
        throw std::runtime_error("lp: basis matrix became singular");
      if (piv != c) {
        for (int k = 0; k < m; ++k) {
          std::swap(work[(size_t)piv * m + k], work[(size_t)c * m + k]);
          std::swap(binv[(size_t)piv * m + k], binv[(size_t)c * m + k]);
        }
      }
      double inv = 1.0 / p;
      for (int k = 0; k < m; ++k) {
        work[(size_t)c * m + k] *= inv;
        binv[(size_t)c * m + k] *= inv;
      }
      for (int r = 0; r < m; ++r) {
        if (r == c)
          continue;
        double f = work[(size_t)r * m + c];
        if (f == 0.0)
          continue;
        for (int k = 0; k < m; ++k) {
          work[(size_t)r * m + k] -= f * work[(size_t)c * m + k];
          binv[(size_t)r * m + k] -= f * binv[(size_t)c * m + k];
        }
      }
    }
  }

  void computeXB() {
    for (int r = 0; r < m; ++r) {
      const double* row = &binv[(size_t)r * m];
      double s = 0.0;
      for (int k = 0; k < m; ++k)
        s += row[k] * b[k];
      xB[r] = s;
    }
  }

  void computeY(const std::vector<double>& c) {
    for (int k = 0; k < m; ++k) {
      double s = 0.0;
      for (int r = 0; r < m; ++r)
        s += c[basis[r]] * binv[(size_t)r * m + k];
      y[k] = s;
    }
  }

  void ftran(int q) {
    const double* col = column(q);
    for (int r = 0; r < m; ++r) {
      const double* row = &binv[(size_t)r * m];
      double s = 0.0;
      for (int k = 0; k < m; ++k)
        s += row[k] * col[k];
      d[r] = s;
    }
  }

  double reducedCost(const std::vector<double>& c, int j) const {
    const double* col = column(j);
    double s = c[j];
    for (int r = 0; r < m; ++r)
      s -= y[r] * col[r];
    return s;
  }

  /// After a feasible phase one, drive basic artificials out where the row
  /// still has structure; rows that cannot be cleared are dependent and keep
  /// a zero-level artificial parked on them.
  void expelArtificials() {
    for (int r = 0; r < m; ++r) {
      if (!artificial[basis[r]])
        continue;
      const double* brow = &binv[(size_t)r * m];
      int entering = -1;
      for (int j = 0; j < n && entering < 0; ++j) {
        if (artificial[j] || basisPos[j] >= 0)
          continue;
        const double* col = column(j);
        double coef = 0.0;
        for (int k = 0; k < m; ++k)
          coef += brow[k] * col[k];
        if (std::abs(coef) > 1e-8)
          entering = j;
      }
      if (entering >= 0)
        pivot(entering, r);
    }
  }

  void pivot(int q, int rLeave) {
    ftran(q);
    double p = d[rLeave];
    if (std::abs(p) < 1e-12)
      throw std::runtime_error("lp: pivot element vanished");
    double* prow = &binv[(size_t)rLeave * m];
    double inv = 1.0 / p;
    for (int k = 0; k < m; ++k)
      prow[k] *= inv;
    for (int r = 0; r < m; ++r) {
      if (r == rLeave || d[r] == 0.0)
        continue;
      double f = d[r];
      double* row = &binv[(size_t)r * m];
      for (int k = 0; k < m; ++k)
        row[k] -= f * prow[k];
    }
    basisPos[basis[rLeave]] = -1;
    basis[rLeave] = q;
    basisPos[q] = rLeave;
  }

  LpStatus run(const std::vector<double>& c, bool allowArtificial, long iterLimit,
               long& pivots) {
    double costScale = 1.0;
    for (int j = 0; j < n; ++j)
      costScale = std::max(costScale, std::abs(c[j]));
    const double rcTol = 1e-10 * costScale;
    const double pivTol = 1e-9;

    refactor();
    computeXB();
    bool bland = false;
    int stall = 0;
    long sinceRefactor = 0;
    double lastObjective = std::numeric_limits<double>::infinity();

    for (long iter = 0; iter < iterLimit; ++iter) {
      computeY(c);
      int q = -1;
      double best = -rcTol;
      for (int j = 0; j < n; ++j) {
        if (basisPos[j] >= 0)
          continue;
        if (artificial[j] && !allowArtificial)
          continue;
        double rc = reducedCost(c, j);
        if (rc < best) {
          q = j;
          if (bland)
            break;
          best = rc;
        }
      }
      if (q < 0)
        return LpStatus::Optimal;

      ftran(q);
      int rLeave = -1;
      double theta = std::numeric_limits<double>::infinity();
      for (int r = 0; r < m; ++r) {
        if (d[r] <= pivTol)
          continue;
        double ratio = std::max(xB[r], 0.0) / d[r];
        double band = 1e-12 * (1.0 + theta);
        if (ratio < theta - band ||
            (ratio < theta + band && (rLeave < 0 || basis[r] < basis[rLeave]))) {
          theta = ratio;
          rLeave = r;
        }
      }
      if (rLeave < 0)
        return LpStatus::Unbounded;

      pivot(q, rLeave);
      ++pivots;
      if (++sinceRefactor >= 128) {
        refactor();
        sinceRefactor = 0;
      }
      computeXB();

      double objective = 0.0;
      for (int r = 0; r < m; ++r)
        objective += c[basis[r]] * xB[r];
      if (objective < lastObjective - 1e-12 * (1.0 + std::abs(lastObjective))) {
        stall = 0;
        bland = false;
      } else if (++stall > std::max(64, m)) {
        bland = true;
      }
      lastObjective = objective;
    }
    return LpStatus::IterLimit;
  }
};

} // namespace lp_detail

inline LpSolution solveLp(const DenseLp& lp, long iterLimit = 0) {
  lp_detail::Engine engine(lp);
  return engine.solve(iterLimit);
}

} // namespace dtce
