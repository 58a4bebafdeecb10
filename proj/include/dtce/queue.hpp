#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <dtce/analytic.hpp>
#include <dtce/core.hpp>

namespace dtce {

/// Piecewise-linear cumulative count over time. Knots are strictly increasing
/// in time and nondecreasing in count; no atoms (vertical jumps).
struct CumulativeCurve {
  std::vector<double> t;
  std::vector<double> n;

  void addKnot(double time, double count) {
    t.push_back(time);
    n.push_back(count);
  }

  void check() const {
    if (t.empty() || t.size() != n.size())
      throw std::runtime_error("cumulative curve needs matched, nonempty knots");
    for (size_t i = 1; i < t.size(); ++i) {
      if (!(t[i] > t[i - 1]))
        throw std::runtime_error("cumulative curve times must strictly increase");
      if (n[i] < n[i - 1] - 1e-12 * (1.0 + std::abs(n[i - 1])))
        throw std::runtime_error("cumulative curve counts must not decrease");
    }
  }

  double at(double time) const {
    if (time <= t.front())
      return n.front();
    if (time >= t.back())
      return n.back();
    size_t i = std::upper_bound(t.begin(), t.end(), time) - t.begin();
    double w = (time - t[i - 1]) / (t[i] - t[i - 1]);
    return n[i - 1] + w * (n[i] - n[i - 1]);
  }

  /// Earliest time at which the curve reaches `count`.
  double inverse(double count) const {
    if (count <= n.front())
      return t.front();
    if (count >= n.back())
      return t.back();
    size_t i = std::lower_bound(n.begin(), n.end(), count) - n.begin();
    double dn = n[i] - n[i - 1];
    return t[i - 1] + (t[i] - t[i - 1]) * (count - n[i - 1]) / dn;
  }
};

struct PointQueueRun {
  CumulativeCurve departures;
  double max_queue = 0.0;
  double drain_time = 0.0; ///< when the last unit gets through
};

/// First-in-first-out point queue: departures follow arrivals while the
/// queue is empty and the arrival rate fits, otherwise they discharge at
/// capacity. Knots are emitted at every arrival knot and at each in-interval
/// moment the queue drains.
inline PointQueueRun simulatePointQueue(const CumulativeCurve& arrivals,
                                        double capacity) {
  arrivals.check();
  if (!(capacity > 0.0))
    throw std::runtime_error("point queue capacity must be positive");

  PointQueueRun run;
  double scale = 1.0 + std::abs(arrivals.n.back());
  double D = arrivals.n.front();
  double tNow = arrivals.t.front();
  run.departures.addKnot(tNow, D);

  auto emit = [&](double time, double value) {
    auto& c = run.departures;
    if (time <= c.t.back())
      return;
    c.addKnot(time, value);
  };

  for (size_t i = 0; i + 1 < arrivals.t.size(); ++i) {
    double b = arrivals.t[i + 1];
    double lambda = (arrivals.n[i + 1] - arrivals.n[i]) / (b - arrivals.t[i]);
    while (tNow < b) {
      double E = std::max(0.0, arrivals.at(tNow) - D);
      if (E > 1e-15 * scale) {
        if (lambda < capacity) {
          double tZero = tNow + E / (capacity - lambda);
          if (tZero < b) {
            D += capacity * (tZero - tNow);
            emit(tZero, D);
            tNow = tZero;
            continue;
          }
        }
        D += capacity * (b - tNow);
        emit(b, D);
        tNow = b;
      } else {
        double rate = std::min(lambda, capacity);
        D += rate * (b - tNow);
        emit(b, D);
        tNow = b;
      }
      run.max_queue = std::max(run.max_queue, arrivals.at(tNow) - D);
    }
  }

  double leftover = arrivals.n.back() - D;
  if (leftover > 1e-15 * scale) {
    run.max_queue = std::max(run.max_queue, leftover);
    double tEnd = tNow + leftover / capacity;
    emit(tEnd, arrivals.n.back());
  }
  run.drain_time = run.departures.t.back();
  return run;
}

/// Maps the closed-form delay back to the physical arrival curve: whoever
/// passes at s joined the queue at s - u(s). Throws when the implied arrival
/// order is not strictly increasing, which is exactly the existence condition
/// for the queueing representation.
inline CumulativeCurve reconstructArrivals(const EquilibriumSolution& sol,
                                           int resolution = 256) {
  if (resolution < 8)
    throw std::runtime_error("arrival reconstruction needs some resolution");
  double T = sol.window_end - sol.window_start;
  if (!(T > 0.0))
    throw std::runtime_error("equilibrium window is empty");
  double h = T / resolution;

  CumulativeCurve curve;
  double massScale = 1.0 + sol.scenario.totalMass();
  for (const auto& seg : sol.segments) {
    int steps = std::max(4, (int)std::ceil((seg.hi - seg.lo) / h));
    int from = curve.t.empty() ? 0 : 1;
    for (int q = from; q <= steps; ++q) {
      double s = seg.lo + (seg.hi - seg.lo) * q / steps;
      double tau = s - sol.u(s);
      double mass = sol.passed(s);
      if (!curve.t.empty()) {
        double dtau = tau - curve.t.back();
        if (dtau <= 0.0) {
          if (std::abs(mass - curve.n.back()) < 1e-12 * massScale)
            continue; // duplicate seam sample
          throw precondition_error(
              "implied arrival times do not increase; the delay slope breaks "
              "the queueing representation of this equilibrium");
        }
      }
      curve.addKnot(tau, mass);
    }
  }
  curve.check();
  return curve;
}

struct VerifyOptions {
  int samples_per_segment = 48;
  int sim_resolution = 256;
  double tol = 1e-7;
};

struct QueueVerification {
  double min_delay = 0.0;             ///< most negative sampled delay
  double max_support_residual = 0.0;  ///< |cost + delay - price| on the rush
  double max_choice_violation = 0.0;  ///< how much any class could save elsewhere
  double max_seam_gap = 0.0;          ///< delay jumps between adjacent stretches
  double conservation_gap = 0.0;      ///< worst class or location mass mismatch
  double capacity_gap = 0.0;          ///< rush length times capacity vs total mass
  double accounting_gap = 0.0;        ///< paid = schedule + queueing identity
  double delay_integral_gap = 0.0;    ///< sampled integral vs exact integral
  double fifo_gap = std::numeric_limits<double>::infinity();
  double arrival_step_min = std::numeric_limits<double>::infinity();
  bool reconstruction_ok = false;
  bool ok = false;
  std::string note;
};

inline QueueVerification verifyEquilibrium(const EquilibriumSolution& sol,
                                           const VerifyOptions& opt = {}) {
  const Scenario& sc = sol.scenario;
  QueueVerification rep;
  double scale = 1.0;
  for (double v : sol.trip_costs)
    scale = std::max(scale, std::abs(v));
  for (const auto& seg : sol.segments)
    scale = std::max(scale, std::abs(seg.price));
  double massScale = std::max(1.0, sc.totalMass());

  // delay sign and support pricing along each stretch
  for (const auto& seg : sol.segments) {
    for (int q = 0; q <= opt.samples_per_segment; ++q) {
      double s = seg.lo + (seg.hi - seg.lo) * q / opt.samples_per_segment;
      double raw = seg.price - sol.segmentCost(seg, s);
      rep.min_delay = std::min(rep.min_delay, raw);
      double residual = std::abs(sol.segmentCost(seg, s) + sol.u(s) - seg.price);
      rep.max_support_residual = std::max(rep.max_support_residual, residual);
    }
  }

  // no class can do better at any sampled time, occupied or not
  std::vector<double> samples;
  for (const auto& seg : sol.segments) {
    for (int q = 0; q <= 8; ++q)
      samples.push_back(seg.lo + (seg.hi - seg.lo) * q / 8.0);
  }
  for (int i = 0; i < sc.grid.cells; ++i)
    samples.push_back(sc.grid.midpoint(i));
  bool commuting = sc.schedule.variant == ScheduleVariant::Commuting3D;
  for (double s : samples) {
    double delay = sol.u(s);
    if (commuting) {
      for (int j = 0; j < (int)sc.locations.size(); ++j)
        for (int k = 0; k < (int)sc.groups.size(); ++k) {
          double c = evalScheduleCost3d(sc, j, k, s);
          if (c == kForbidden)
            continue;
          double target = sol.trip_costs[k] - sol.location_rents[j];
          rep.max_choice_violation =
              std::max(rep.max_choice_violation, target - (c + delay));
        }
    } else {
      for (int k = 0; k < (int)sc.groups.size(); ++k) {
        double c = evalScheduleCost(sc, k, s);
        if (c == kForbidden)
          continue;
        rep.max_choice_violation =
            std::max(rep.max_choice_violation, sol.trip_costs[k] - (c + delay));
      }
    }
  }

  // delay continuity across stretch seams
  for (size_t i = 1; i < sol.segments.size(); ++i) {
    const auto& a = sol.segments[i - 1];
    const auto& b = sol.segments[i];
    if (std::abs(a.hi - b.lo) > 1e-12)
      continue;
    double left = a.price - sol.segmentCost(a, a.hi);
    double right = b.price - sol.segmentCost(b, b.lo);
    rep.max_seam_gap = std::max(rep.max_seam_gap, std::abs(left - right));
  }

  // conservation of every class (and location) mass
  {
    std::vector<double> got(sc.groups.size(), 0.0);
    std::vector<double> gotLoc(sc.locations.size(), 0.0);
    for (const auto& seg : sol.segments) {
      got[seg.group] += sc.capacity * (seg.hi - seg.lo);
      if (seg.location >= 0)
        gotLoc[seg.location] += sc.capacity * (seg.hi - seg.lo);
    }
    for (size_t k = 0; k < got.size(); ++k)
      rep.conservation_gap =
          std::max(rep.conservation_gap, std::abs(got[k] - sc.groups[k].mass));
    for (size_t j = 0; j < gotLoc.size(); ++j)
      rep.conservation_gap = std::max(rep.conservation_gap,
                                      std::abs(gotLoc[j] - sc.locations[j].mass));
  }
  rep.capacity_gap = std::abs(sc.capacity * (sol.window_end - sol.window_start) -
                              sc.totalMass());
  rep.accounting_gap = std::abs(sol.equilibrium_cost - sol.queue_time_total -
                                sol.schedule_cost_total);

  // sampled delay integral against the closed-form one
  {
    double integral = 0.0;
    for (const auto& seg : sol.segments) {
      double prev = std::max(0.0, seg.price - sol.segmentCost(seg, seg.lo));
      for (int q = 1; q <= opt.samples_per_segment; ++q) {
        double s = seg.lo + (seg.hi - seg.lo) * q / opt.samples_per_segment;
        double cur = std::max(0.0, seg.price - sol.segmentCost(seg, s));
        integral += 0.5 * (prev + cur) * (seg.hi - seg.lo) / opt.samples_per_segment;
        prev = cur;
      }
    }
    rep.delay_integral_gap =
        std::abs(integral - sol.queue_time_total / sc.capacity);
  }

  // physical round trip: rebuild arrivals, push them through the queue,
  // and compare the simulated delays with the closed-form ones
  double h = (sol.window_end - sol.window_start) / opt.sim_resolution;
  try {
    CumulativeCurve arrivals = reconstructArrivals(sol, opt.sim_resolution);
    for (size_t i = 1; i < arrivals.t.size(); ++i)
      rep.arrival_step_min =
          std::min(rep.arrival_step_min, arrivals.t[i] - arrivals.t[i - 1]);
    auto run = simulatePointQueue(arrivals, sc.capacity);
    rep.fifo_gap = 0.0;
    for (size_t i = 0; i < arrivals.t.size(); ++i) {
      double m = arrivals.n[i];
      double simDelay = run.departures.inverse(m) - arrivals.t[i];
      double s = sol.window_start + m / sc.capacity;
      rep.fifo_gap = std::max(rep.fifo_gap, std::abs(simDelay - sol.u(s)));
    }
    rep.reconstruction_ok = true;
  } catch (const precondition_error& e) {
    rep.note = e.what();
  }

  double tol = opt.tol;
  rep.ok = rep.reconstruction_ok && rep.min_delay > -tol * scale &&
           rep.max_support_residual < tol * scale &&
           rep.max_choice_violation < tol * scale &&
           rep.max_seam_gap < tol * scale &&
           rep.conservation_gap < tol * massScale &&
           rep.capacity_gap < tol * massScale &&
           rep.accounting_gap < tol * scale &&
           rep.delay_integral_gap < 2e-3 * std::max(1.0, sol.queue_time_total) &&
           rep.fifo_gap < 2.0 * h;
  return rep;
}

} // namespace dtce
