#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include <dtce/core.hpp>

namespace dtce {

/// One stretch of the rush during which a single user class passes the
/// bottleneck. `price` is the class's full trip cost on the stretch, so the
/// queue delay there is price minus the schedule cost.
struct RushSegment {
  double lo = 0.0, hi = 0.0;
  int group = -1;
  int location = -1; ///< commuting runs only
  double price = 0.0;
};

struct GroupBand {
  int group = -1;
  double lo = 0.0, hi = 0.0;
};

struct EquilibriumSolution {
  ModelFamily family = ModelFamily::Fifw;
  Scenario scenario;
  double window_start = 0.0, window_end = 0.0;
  std::vector<RushSegment> segments; ///< ascending, covering the window
  std::vector<double> trip_costs;    ///< per group
  std::vector<double> location_rents; ///< commuting runs only, min is zero
  std::vector<GroupBand> bands;      ///< contiguous per-group intervals
  double equilibrium_cost = 0.0;     ///< total paid: sum of mass times trip cost
  double queue_time_total = 0.0;     ///< capacity times the integral of the delay
  double schedule_cost_total = 0.0;  ///< equilibrium_cost - queue_time_total
  bool corner_case = false; ///< a group ended up entirely on one side of its wish

  int segmentAt(double s) const {
    if (segments.empty() || s < window_start || s > window_end)
      return -1;
    int lo = 0, hi = (int)segments.size() - 1;
    while (lo < hi) {
      int mid = (lo + hi) / 2;
      if (s <= segments[mid].hi)
        hi = mid;
      else
        lo = mid + 1;
    }
    return lo;
  }

  double segmentCost(const RushSegment& seg, double s) const {
    return seg.location >= 0 ? evalScheduleCost3d(scenario, seg.location, seg.group, s)
                             : evalScheduleCost(scenario, seg.group, s);
  }

  /// Queue delay experienced at passage time s; zero outside the rush.
  double u(double s) const {
    int i = segmentAt(s);
    if (i < 0)
      return 0.0;
    return std::max(0.0, segments[i].price - segmentCost(segments[i], s));
  }

  /// Cumulative mass that has passed the bottleneck by time s.
  double passed(double s) const {
    double clamped = std::clamp(s, window_start, window_end);
    return scenario.capacity * (clamped - window_start);
  }
};

namespace detail {

template <class F>
double bisectIncreasing(F&& f, double lo, double hi, double tol) {
  double flo = f(lo);
  if (flo >= 0.0)
    return lo;
  if (f(hi) <= 0.0)
    return hi;
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline void requireFamily(const Scenario& sc, ModelFamily want, const char* solver) {
  if (sc.family != want)
    throw std::invalid_argument(std::string(solver) +
                                ": scenario belongs to a different model family");
}

/// Per-group prefix of mass over capacity, the slot widths along the rush.
inline std::vector<double> massPrefix(const Scenario& sc) {
  std::vector<double> p;
  double acc = 0.0;
  for (const auto& g : sc.groups)
    p.push_back(acc += g.mass / sc.capacity);
  return p;
}

inline void checkDelayNonnegative(const EquilibriumSolution& sol) {
  double scale = 1.0;
  for (double v : sol.trip_costs)
    scale = std::max(scale, std::abs(v));
  for (const auto& seg : sol.segments) {
    for (int n = 0; n <= 64; ++n) {
      double s = seg.lo + (seg.hi - seg.lo) * n / 64.0;
      double delay = seg.price - sol.segmentCost(seg, s);
      if (delay < -1e-9 * scale)
        throw precondition_error(
            "equilibrium delay went negative; the classes do not share a single "
            "rush and the closed form does not apply");
    }
  }
}

inline void finishTotals(EquilibriumSolution& sol,
                         const std::function<double(const RushSegment&)>& costIntegral) {
  double paid = 0.0;
  for (size_t k = 0; k < sol.scenario.groups.size(); ++k)
    paid += sol.scenario.groups[k].mass * sol.trip_costs[k];
  for (size_t j = 0; j < sol.location_rents.size(); ++j)
    paid -= sol.scenario.locations[j].mass * sol.location_rents[j];
  sol.equilibrium_cost = paid;

  double delayIntegral = 0.0;
  for (const auto& seg : sol.segments)
    delayIntegral += seg.price * (seg.hi - seg.lo) - costIntegral(seg);
  sol.queue_time_total = sol.scenario.capacity * delayIntegral;
  sol.schedule_cost_total = sol.equilibrium_cost - sol.queue_time_total;
}

inline void buildBands(EquilibriumSolution& sol) {
  for (const auto& seg : sol.segments) {
    if (!sol.bands.empty() && sol.bands.back().group == seg.group &&
        std::abs(sol.bands.back().hi - seg.lo) < 1e-12) {
      sol.bands.back().hi = seg.hi;
    } else {
      sol.bands.push_back({seg.group, seg.lo, seg.hi});
    }
  }
}

} // namespace detail

/// Shared convex schedule cost, classes differing only in their wished-for
/// passage times. The rush is one block of length total mass over capacity;
/// its start is pinned by requiring the delay to vanish at both ends.
inline EquilibriumSolution solveFifw(const Scenario& sc) {
  detail::requireFamily(sc, ModelFamily::Fifw, "solveFifw");
  int K = (int)sc.groups.size();
  double T = sc.totalMass() / sc.capacity;
  auto prefix = detail::massPrefix(sc);

  auto cost = [&](int k, double s) { return evalScheduleCost(sc, k, s); };

  // Trip costs chained backward from the last class; the residual is the
  // leftover delay at the front of the rush.
  auto firstDelay = [&](double s0) {
    double v = cost(K - 1, s0 + T);
    for (int k = K - 2; k >= 0; --k) {
      double edge = s0 + prefix[k];
      v += cost(k, edge) - cost(k + 1, edge);
    }
    return v - cost(0, s0);
  };

  double sigmaLo = sc.groups.front().preferred_time;
  double sigmaHi = sc.groups.back().preferred_time;
  double lo = sigmaLo - 2.0 * T - 1.0, hi = sigmaHi + 1.0;
  double span = hi - lo;
  int rounds = 0;
  while (firstDelay(lo) > 0.0 || firstDelay(hi) < 0.0) {
    if (++rounds > 8)
      throw precondition_error("could not bracket the start of the rush");
    lo -= span;
    hi += span;
    span = hi - lo;
  }
  double s0 = detail::bisectIncreasing(firstDelay, lo, hi,
                                       1e-12 * std::max(1.0, T));

  EquilibriumSolution sol;
  sol.family = sc.family;
  sol.scenario = sc;
  sol.window_start = s0;
  sol.window_end = s0 + T;
  sol.trip_costs.resize(K);
  sol.trip_costs[K - 1] = cost(K - 1, s0 + T);
  for (int k = K - 2; k >= 0; --k) {
    double edge = s0 + prefix[k];
    sol.trip_costs[k] = sol.trip_costs[k + 1] - cost(k + 1, edge) + cost(k, edge);
  }
  for (int k = 0; k < K; ++k) {
    double a = k == 0 ? s0 : s0 + prefix[k - 1];
    sol.segments.push_back({a, s0 + prefix[k], k, -1, sol.trip_costs[k]});
  }
  detail::buildBands(sol);
  detail::checkDelayNonnegative(sol);
  detail::finishTotals(sol, [&](const RushSegment& seg) {
    double sigma = sc.groups[seg.group].preferred_time;
    return sc.schedule.f.integral(seg.lo - sigma, seg.hi - sigma);
  });
  return sol;
}

namespace detail {

/// Shared driver for the one-sided weighted families. `side` is +1 when the
/// classes queue after the common wish time, -1 when before it.
inline EquilibriumSolution solveOneSided(const Scenario& sc, int side) {
  int K = (int)sc.groups.size();
  double sigma = sc.groups.front().preferred_time;
  auto prefix = massPrefix(sc);
  const CatalogFn& fn = side < 0 ? sc.schedule.early : sc.schedule.late;
  auto weight = [&](int k) {
    return side < 0 ? sc.groups[k].beta : sc.groups[k].gamma;
  };

  EquilibriumSolution sol;
  sol.family = sc.family;
  sol.scenario = sc;
  sol.trip_costs.assign(K, 0.0);
  double acc = 0.0;
  for (int k = K - 1; k >= 0; --k) {
    double wNext = k + 1 < K ? weight(k + 1) : 0.0;
    acc += (weight(k) - wNext) * fn(side * prefix[k]);
    sol.trip_costs[k] = acc;
  }

  if (side < 0) {
    sol.window_start = sigma - prefix[K - 1];
    sol.window_end = sigma;
    for (int k = K - 1; k >= 0; --k) {
      double a = sigma - prefix[k];
      double b = k == 0 ? sigma : sigma - prefix[k - 1];
      sol.segments.push_back({a, b, k, -1, sol.trip_costs[k]});
    }
  } else {
    sol.window_start = sigma;
    sol.window_end = sigma + prefix[K - 1];
    for (int k = 0; k < K; ++k) {
      double a = k == 0 ? sigma : sigma + prefix[k - 1];
      sol.segments.push_back({a, sigma + prefix[k], k, -1, sol.trip_costs[k]});
    }
  }
  buildBands(sol);
  checkDelayNonnegative(sol);
  finishTotals(sol, [&](const RushSegment& seg) {
    return weight(seg.group) * fn.integral(seg.lo - sigma, seg.hi - sigma);
  });
  return sol;
}

} // namespace detail

inline EquilibriumSolution solveVotEarly(const Scenario& sc) {
  detail::requireFamily(sc, ModelFamily::VotEarly, "solveVotEarly");
  return detail::solveOneSided(sc, -1);
}

inline EquilibriumSolution solveVotLate(const Scenario& sc) {
  detail::requireFamily(sc, ModelFamily::VotLate, "solveVotLate");
  return detail::solveOneSided(sc, +1);
}

/// Weighted early and late penalties around one wish time. Each class splits
/// its mass across the two sides of the rush; the split points solve a
/// one-dimensional indifference equation per class, nested from the inside
/// of the rush outward.
inline EquilibriumSolution solveVotBoth(const Scenario& sc) {
  detail::requireFamily(sc, ModelFamily::VotBoth, "solveVotBoth");
  int K = (int)sc.groups.size();
  double sigma = sc.groups.front().preferred_time;
  auto prefix = detail::massPrefix(sc);
  const CatalogFn& fe = sc.schedule.early;
  const CatalogFn& fl = sc.schedule.late;

  EquilibriumSolution sol;
  sol.family = sc.family;
  sol.scenario = sc;

  std::vector<double> se(K), sl(K);
  for (int k = 0; k < K; ++k) {
    double bNext = k + 1 < K ? sc.groups[k + 1].beta : 0.0;
    double gNext = k + 1 < K ? sc.groups[k + 1].gamma : 0.0;
    double bHat = sc.groups[k].beta - bNext;
    double gHat = sc.groups[k].gamma - gNext;
    double C = prefix[k];
    auto residual = [&](double t) { return bHat * fe(-t) - gHat * fl(C - t); };
    if (residual(0.0) >= 0.0) {
      se[k] = 0.0;
      sol.corner_case = true;
    } else if (residual(C) <= 0.0) {
      se[k] = C;
      sol.corner_case = true;
    } else {
      se[k] = detail::bisectIncreasing(residual, 0.0, C, 1e-15 * std::max(1.0, C));
    }
    sl[k] = C - se[k];
    if (k > 0 && (se[k] < se[k - 1] - 1e-12 || sl[k] < sl[k - 1] - 1e-12))
      throw precondition_error(
          "class split points are not nested; the both-sided closed form needs "
          "weights that keep the classes ordered");
  }

  sol.trip_costs.assign(K, 0.0);
  double acc = 0.0;
  for (int k = K - 1; k >= 0; --k) {
    double bNext = k + 1 < K ? sc.groups[k + 1].beta : 0.0;
    acc += (sc.groups[k].beta - bNext) * fe(-se[k]);
    sol.trip_costs[k] = acc;
  }

  sol.window_start = sigma - se[K - 1];
  sol.window_end = sigma + sl[K - 1];
  for (int k = K - 1; k >= 0; --k) {
    double a = sigma - se[k];
    double b = sigma - (k == 0 ? 0.0 : se[k - 1]);
    if (b - a > 0.0)
      sol.segments.push_back({a, b, k, -1, sol.trip_costs[k]});
  }
  for (int k = 0; k < K; ++k) {
    double a = sigma + (k == 0 ? 0.0 : sl[k - 1]);
    double b = sigma + sl[k];
    if (b - a > 0.0)
      sol.segments.push_back({a, b, k, -1, sol.trip_costs[k]});
  }
  detail::buildBands(sol);
  detail::checkDelayNonnegative(sol);
  detail::finishTotals(sol, [&](const RushSegment& seg) {
    bool earlySide = seg.hi <= sigma;
    const auto& g = sc.groups[seg.group];
    return earlySide ? g.beta * fe.integral(seg.lo - sigma, seg.hi - sigma)
                     : g.gamma * fl.integral(seg.lo - sigma, seg.hi - sigma);
  });
  return sol;
}

/// Residential commuting run: pairs of (location, job class) take the rush in
/// the order of a corner-rule merge of the two mass vectors. Delay vanishes
/// at the front of the rush and prices chain forward by continuity.
inline EquilibriumSolution solveCommuting(const Scenario& sc) {
  detail::requireFamily(sc, ModelFamily::ThreeD, "solveCommuting");
  int J = (int)sc.locations.size(), K = (int)sc.groups.size();
  double sigma = sc.groups.front().preferred_time;
  double T = sc.totalMass() / sc.capacity;

  EquilibriumSolution sol;
  sol.family = sc.family;
  sol.scenario = sc;
  sol.window_start = sigma - T;
  sol.window_end = sigma;

  // corner-rule merge of location and class masses along the rush
  std::vector<double> R, Q;
  for (const auto& loc : sc.locations)
    R.push_back(loc.mass);
  for (const auto& g : sc.groups)
    Q.push_back(g.mass);
  double s = sol.window_start;
  int j = 0, k = 0;
  while (j < J && k < K) {
    double x = std::min(R[j], Q[k]);
    double a = s;
    s += x / sc.capacity;
    sol.segments.push_back({a, s, k, j, 0.0});
    R[j] -= x;
    Q[k] -= x;
    bool rowDone = R[j] <= 1e-12 * sc.totalMass();
    bool colDone = Q[k] <= 1e-12 * sc.totalMass();
    if (rowDone)
      ++j;
    if (colDone)
      ++k;
  }
  sol.segments.back().hi = sol.window_end; // absorb rounding drift

  auto cost = [&](const RushSegment& seg, double at) {
    return evalScheduleCost3d(sc, seg.location, seg.group, at);
  };
  sol.segments.front().price = cost(sol.segments.front(), sol.window_start);
  for (size_t i = 1; i < sol.segments.size(); ++i) {
    double edge = sol.segments[i].lo;
    sol.segments[i].price = sol.segments[i - 1].price -
                            cost(sol.segments[i - 1], edge) +
                            cost(sol.segments[i], edge);
  }

  // Split each segment price w_k - r_j into its two factors. A merge step
  // that advances both indices decouples the chain; the rent carries over
  // from the previous stretch there, which is one valid choice among many.
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> w(K, nan), r(J, nan);
  r[sol.segments.front().location] = 0.0;
  for (size_t i = 0; i < sol.segments.size(); ++i) {
    const auto& seg = sol.segments[i];
    if (std::isnan(r[seg.location]) && std::isnan(w[seg.group]))
      r[seg.location] = r[sol.segments[i - 1].location];
    if (std::isnan(w[seg.group]))
      w[seg.group] = seg.price + r[seg.location];
    else if (std::isnan(r[seg.location]))
      r[seg.location] = w[seg.group] - seg.price;
  }
  double shift = *std::min_element(r.begin(), r.end());
  for (auto& x : r)
    x -= shift;
  for (auto& x : w)
    x -= shift;
  sol.trip_costs = std::move(w);
  sol.location_rents = std::move(r);
  for (auto& seg : sol.segments)
    seg.price = sol.trip_costs[seg.group] - sol.location_rents[seg.location];

  detail::buildBands(sol);
  detail::checkDelayNonnegative(sol);
  detail::finishTotals(sol, [&](const RushSegment& seg) {
    const auto& g = sc.groups[seg.group];
    double l = sc.locations[seg.location].travel_time;
    return g.alpha * l * (seg.hi - seg.lo) +
           g.beta * sc.schedule.f.integral(seg.lo - sigma, seg.hi - sigma) +
           g.gamma * sc.schedule.g.integral(seg.lo - sigma - l, seg.hi - sigma - l);
  });
  return sol;
}

inline EquilibriumSolution solveEquilibrium(const Scenario& sc) {
  switch (sc.family) {
  case ModelFamily::Fifw:
    return solveFifw(sc);
  case ModelFamily::VotEarly:
    return solveVotEarly(sc);
  case ModelFamily::VotLate:
    return solveVotLate(sc);
  case ModelFamily::VotBoth:
    return solveVotBoth(sc);
  case ModelFamily::ThreeD:
    return solveCommuting(sc);
  case ModelFamily::Toll:
  case ModelFamily::Dso:
    throw precondition_error(
        "tolled and system-optimal runs have no closed form here; use the "
        "discrete assignment oracle");
  }
  throw std::invalid_argument("unknown model family");
}

} // namespace dtce
