#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "schedule.hpp"

namespace dtce {

/// Cells of the forbidden departure side carry this sentinel; discretizers
/// replace it with a large finite penalty before any LP sees it.
constexpr double kForbidden = std::numeric_limits<double>::infinity();

/// Validation failure tied to a scenario field, e.g. "groups[0].mass".
struct validation_error : std::runtime_error {
  std::string field;
  validation_error(std::string f, const std::string& msg)
      : std::runtime_error(f + ": " + msg), field(std::move(f)) {}
};

/// A solver was called outside its supported regime (no single rush period,
/// existence margin nonpositive, ...). Distinct from malformed input.
struct precondition_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Uniform cell grid over the study horizon. Times are hours, cell n spans
/// [left(n), right(n)) and is sampled at its midpoint.
struct TimeGrid {
  double start = 0.0;
  double end = 1.0;
  int cells = 0;

  double width() const { return end - start; }
  double dt() const { return width() / cells; }
  double left(int n) const { return start + n * dt(); }
  double right(int n) const { return start + (n + 1) * dt(); }
  double midpoint(int n) const { return start + (n + 0.5) * dt(); }

  void check() const {
    if (!(end > start))
      throw validation_error("grid", "end must exceed start");
    if (cells < 1)
      throw validation_error("grid.cells", "need at least one cell");
  }
};

enum class ModelFamily { Fifw, VotEarly, VotLate, VotBoth, ThreeD, Toll, Dso };

inline const char* familyName(ModelFamily f) {
  switch (f) {
  case ModelFamily::Fifw: return "FIFW";
  case ModelFamily::VotEarly: return "VOT_EARLY";
  case ModelFamily::VotLate: return "VOT_LATE";
  case ModelFamily::VotBoth: return "VOT_BOTH";
  case ModelFamily::ThreeD: return "THREE_D";
  case ModelFamily::Toll: return "TOLL";
  case ModelFamily::Dso: return "DSO";
  }
  return "?";
}

/// One commuter group. Which fields are meaningful depends on the family:
/// mass and preferred_time always; beta/gamma for weighted early/late
/// schedules; alpha for the commuting model and money-denominated variants.
struct GroupSpec {
  double mass = 0.0;           // vehicles
  double preferred_time = 0.0; // hours
  double beta = 0.0;
  double gamma = 0.0;
  double alpha = 0.0;
};

struct LocationSpec {
  double travel_time = 0.0; // hours from residence to bottleneck
  double mass = 0.0;        // residences available
};

enum class ScheduleVariant { ConvexCommon, EarlyLate, Commuting3D };

struct ScheduleSpec {
  ScheduleVariant variant = ScheduleVariant::ConvexCommon;
  CatalogFn f;     // ConvexCommon: shared convex disutility; Commuting3D: early-departure part
  CatalogFn early; // EarlyLate: f_e, evaluated on offsets <= 0
  CatalogFn late;  // EarlyLate: f_l, evaluated on offsets >= 0
  CatalogFn g;     // Commuting3D: early-work part, evaluated at s - travel_time
  bool forbid_early = false;
  bool forbid_late = false;
};

/// Time-varying toll in queue-time units before the 1/alpha_k scaling.
struct TollProfile {
  std::vector<std::pair<double, double>> knots; // (time, toll), sorted

  double operator()(double s) const {
    if (knots.empty())
      return 0.0;
    if (s <= knots.front().first)
      return knots.front().second;
    if (s >= knots.back().first)
      return knots.back().second;
    size_t i = 0;
    while (knots[i + 1].first < s)
      ++i;
    double w = (s - knots[i].first) / (knots[i + 1].first - knots[i].first);
    return (1.0 - w) * knots[i].second + w * knots[i + 1].second;
  }
};

struct Scenario {
  ModelFamily family = ModelFamily::Fifw;
  double capacity = 1.0; // vehicles/hour through the bottleneck
  TimeGrid grid;
  std::vector<GroupSpec> groups;
  std::vector<LocationSpec> locations; // THREE_D only
  ScheduleSpec schedule;
  TollProfile toll; // TOLL only

  double totalMass() const {
    double q = 0.0;
    for (auto& g : groups)
      q += g.mass;
    return q;
  }
};

// ----- Validation -----

namespace detail {

inline std::string idx(const std::string& base, size_t i, const char* member) {
  return base + "[" + std::to_string(i) + "]." + member;
}

inline void requireCommonPreferredTime(const Scenario& sc) {
  for (size_t k = 1; k < sc.groups.size(); ++k)
    if (sc.groups[k].preferred_time != sc.groups[0].preferred_time)
      throw validation_error(idx("groups", k, "preferred_time"),
                             "this family requires one shared preferred time");
}

} // namespace detail

inline void validate(const Scenario& sc) {
  if (!(sc.capacity > 0.0))
    throw validation_error("capacity", "must be positive");
  sc.grid.check();
  if (sc.groups.empty())
    throw validation_error("groups", "need at least one group");
  for (size_t k = 0; k < sc.groups.size(); ++k)
    if (!(sc.groups[k].mass > 0.0))
      throw validation_error(detail::idx("groups", k, "mass"), "must be positive");

  const auto& sch = sc.schedule;
  double span = sc.grid.width() + 1.0;
  switch (sc.family) {
  case ModelFamily::Fifw: {
    if (sch.variant != ScheduleVariant::ConvexCommon)
      throw validation_error("schedule.variant", "FIFW requires the shared convex form");
    sch.f.check();
    if (!strictlyConvexOn(sch.f, -span, span))
      throw validation_error("schedule.f", "must be strictly convex (sampled second differences)");
    if (std::abs(sch.f(0.0)) > 1e-12)
      throw validation_error("schedule.f", "must vanish at zero offset");
    for (size_t k = 1; k < sc.groups.size(); ++k)
      if (!(sc.groups[k - 1].preferred_time < sc.groups[k].preferred_time))
        throw validation_error(detail::idx("groups", k, "preferred_time"),
                               "FIFW groups must be sorted with strictly increasing preferred times");
    break;
  }
  case ModelFamily::VotEarly:
  case ModelFamily::VotLate:
  case ModelFamily::VotBoth: {
    if (sch.variant != ScheduleVariant::EarlyLate)
      throw validation_error("schedule.variant", "VOT families require the early/late form");
    detail::requireCommonPreferredTime(sc);
    bool needEarly = sc.family != ModelFamily::VotLate;
    bool needLate = sc.family != ModelFamily::VotEarly;
    if (sc.family == ModelFamily::VotEarly && !sch.forbid_late)
      throw validation_error("schedule.forbid_late", "VOT_EARLY prohibits late departures");
    if (sc.family == ModelFamily::VotLate && !sch.forbid_early)
      throw validation_error("schedule.forbid_early", "VOT_LATE prohibits early departures");
    if (sc.family == ModelFamily::VotBoth && (sch.forbid_early || sch.forbid_late))
      throw validation_error("schedule.forbid_early", "VOT_BOTH uses both sides");
    if (needEarly) {
      sch.early.check();
      if (!strictlyDecreasingOn(sch.early, -span, 0.0))
        throw validation_error("schedule.early", "must be strictly decreasing up to the preferred time");
      if (std::abs(sch.early(0.0)) > 1e-12)
        throw validation_error("schedule.early", "must vanish at zero offset");
      for (size_t k = 0; k < sc.groups.size(); ++k)
        if (!(sc.groups[k].beta > 0.0))
          throw validation_error(detail::idx("groups", k, "beta"), "must be positive");
      for (size_t k = 1; k < sc.groups.size(); ++k)
        if (!(sc.groups[k - 1].beta > sc.groups[k].beta))
          throw validation_error(detail::idx("groups", k, "beta"),
                                 "groups must be sorted with strictly decreasing beta (ties rejected)");
    }
    if (needLate) {
      sch.late.check();
      if (!strictlyIncreasingOn(sch.late, 0.0, span))
        throw validation_error("schedule.late", "must be strictly increasing past the preferred time");
      if (std::abs(sch.late(0.0)) > 1e-12)
        throw validation_error("schedule.late", "must vanish at zero offset");
      for (size_t k = 0; k < sc.groups.size(); ++k)
        if (!(sc.groups[k].gamma > 0.0))
          throw validation_error(detail::idx("groups", k, "gamma"), "must be positive");
      for (size_t k = 1; k < sc.groups.size(); ++k)
        if (!(sc.groups[k - 1].gamma > sc.groups[k].gamma))
          throw validation_error(detail::idx("groups", k, "gamma"),
                                 "groups must be sorted with strictly decreasing gamma (ties rejected)");
    }
    break;
  }
  case ModelFamily::ThreeD: {
    if (sch.variant != ScheduleVariant::Commuting3D)
      throw validation_error("schedule.variant", "THREE_D requires the commuting form");
    detail::requireCommonPreferredTime(sc);
    if (sc.locations.empty())
      throw validation_error("locations", "need at least one location");
    for (size_t j = 0; j < sc.locations.size(); ++j) {
      if (!(sc.locations[j].mass > 0.0))
        throw validation_error(detail::idx("locations", j, "mass"), "must be positive");
      if (!(sc.locations[j].travel_time > 0.0))
        throw validation_error(detail::idx("locations", j, "travel_time"), "must be positive");
    }
    for (size_t j = 1; j < sc.locations.size(); ++j)
      if (!(sc.locations[j - 1].travel_time > sc.locations[j].travel_time))
        throw validation_error(detail::idx("locations", j, "travel_time"),
                               "locations must be sorted with strictly decreasing travel time");
    double r = 0.0;
    for (auto& l : sc.locations)
      r += l.mass;
    double q = sc.totalMass();
    if (std::abs(r - q) > 1e-9 * std::max(1.0, q))
      throw validation_error("locations", "location masses must sum to the total group mass");
    for (size_t k = 0; k < sc.groups.size(); ++k) {
      if (!(sc.groups[k].alpha > 0.0))
        throw validation_error(detail::idx("groups", k, "alpha"), "must be positive");
      if (!(sc.groups[k].beta > 0.0))
        throw validation_error(detail::idx("groups", k, "beta"), "must be positive");
      if (!(sc.groups[k].gamma > 0.0))
        throw validation_error(detail::idx("groups", k, "gamma"), "must be positive");
    }
    for (size_t k = 1; k < sc.groups.size(); ++k) {
      if (!(sc.groups[k - 1].alpha < sc.groups[k].alpha))
        throw validation_error(detail::idx("groups", k, "alpha"),
                               "groups must be sorted with strictly increasing alpha");
      if (!(sc.groups[k - 1].beta < sc.groups[k].beta))
        throw validation_error(detail::idx("groups", k, "beta"),
                               "groups must be sorted with strictly increasing beta");
      if (!(sc.groups[k - 1].gamma < sc.groups[k].gamma))
        throw validation_error(detail::idx("groups", k, "gamma"),
                               "groups must be sorted with strictly increasing gamma");
    }
    sch.f.check();
    sch.g.check();
    if (!strictlyDecreasingOn(sch.f, -span, 0.0))
      throw validation_error("schedule.f", "must be strictly decreasing before the preferred time");
    double lmax = sc.locations.front().travel_time;
    double lmin = sc.locations.back().travel_time;
    if (!strictlyDecreasingOn(sch.g, -span - lmax, -lmin) ||
        !strictlyConcaveOn(sch.g, -span - lmax, -lmin) ||
        !positiveOn(sch.g, -span - lmax, -lmin))
      throw validation_error("schedule.g", "must be positive, strictly decreasing and strictly concave");
    break;
  }
  case ModelFamily::Toll:
  case ModelFamily::Dso: {
    if (sch.variant == ScheduleVariant::Commuting3D)
      throw validation_error("schedule.variant", "toll/system-optimal runs support the two-dimensional forms only");
    for (size_t k = 0; k < sc.groups.size(); ++k)
      if (!(sc.groups[k].alpha > 0.0))
        throw validation_error(detail::idx("groups", k, "alpha"), "must be positive");
    if (sc.family == ModelFamily::Toll && sc.toll.knots.empty())
      throw validation_error("toll", "TOLL requires a toll profile");
    if (sch.variant == ScheduleVariant::ConvexCommon) {
      sch.f.check();
    } else {
      if (!sch.forbid_late) {
        sch.late.check();
        for (size_t k = 0; k < sc.groups.size(); ++k)
          if (!(sc.groups[k].gamma > 0.0))
            throw validation_error(detail::idx("groups", k, "gamma"), "must be positive");
      }
      if (!sch.forbid_early) {
        sch.early.check();
        for (size_t k = 0; k < sc.groups.size(); ++k)
          if (!(sc.groups[k].beta > 0.0))
            throw validation_error(detail::idx("groups", k, "beta"), "must be positive");
      }
    }
    for (size_t i = 1; i < sc.toll.knots.size(); ++i)
      if (!(sc.toll.knots[i - 1].first < sc.toll.knots[i].first))
        throw validation_error("toll.knots", "must be sorted with strictly increasing times");
    break;
  }
  }

  if (sc.family != ModelFamily::ThreeD && !sc.locations.empty())
    throw validation_error("locations", "only THREE_D scenarios take locations");
  if (sc.family != ModelFamily::Toll && !sc.toll.knots.empty())
    throw validation_error("toll", "only TOLL scenarios take a toll profile");
}

// ----- Cost evaluation -----

/// Schedule disutility of group k when passing the bottleneck at time s.
/// Returns the forbidden sentinel on a prohibited side.
inline double evalScheduleCost(const Scenario& sc, int k, double s) {
  if (k < 0 || k >= (int)sc.groups.size())
    throw std::out_of_range("group index out of range");
  const auto& g = sc.groups[k];
  double e = s - g.preferred_time;
  switch (sc.schedule.variant) {
  case ScheduleVariant::ConvexCommon:
    return sc.schedule.f(e);
  case ScheduleVariant::EarlyLate:
    if (e <= 0.0)
      return sc.schedule.forbid_early && e < 0.0 ? kForbidden : g.beta * sc.schedule.early(e);
    return sc.schedule.forbid_late ? kForbidden : g.gamma * sc.schedule.late(e);
  case ScheduleVariant::Commuting3D:
    throw std::invalid_argument("commuting scenarios need a location index");
  }
  return 0.0;
}

/// Commuting variant: disutility of a user living at location j with job
/// class k. Departures after the shared preferred time are prohibited.
inline double evalScheduleCost3d(const Scenario& sc, int j, int k, double s) {
  if (sc.schedule.variant != ScheduleVariant::Commuting3D)
    throw std::invalid_argument("scenario does not use the commuting schedule form");
  if (j < 0 || j >= (int)sc.locations.size())
    throw std::out_of_range("location index out of range");
  if (k < 0 || k >= (int)sc.groups.size())
    throw std::out_of_range("group index out of range");
  const auto& g = sc.groups[k];
  double l = sc.locations[j].travel_time;
  double e = s - g.preferred_time;
  if (e > 0.0)
    return kForbidden;
  return g.alpha * l + g.beta * sc.schedule.f(e) + g.gamma * sc.schedule.g(e - l);
}

/// Cost the oracle should price: base schedule cost, plus the time-scaled toll
/// for TOLL runs, or the money-valued objective for system-optimal runs.
inline double evalEffectiveCost(const Scenario& sc, int k, double s) {
  double base = evalScheduleCost(sc, k, s);
  if (base == kForbidden)
    return kForbidden;
  switch (sc.family) {
  case ModelFamily::Toll:
    return base + sc.toll(s) / sc.groups[k].alpha;
  case ModelFamily::Dso:
    return sc.groups[k].alpha * base;
  default:
    return base;
  }
}

// ----- Queue-existence condition -----

/// Sampled check that every cost profile has forward differences above -1,
/// which keeps arrival times strictly increasing when the equilibrium queue is
/// mapped back to an arrival curve. `margin` is min slope + 1 over all
/// sampled cells on the sides where the group may depart.
struct ExistenceReport {
  bool ok = false;
  double margin = std::numeric_limits<double>::infinity();
  int worst_group = -1; // flattened (j * K + k) for commuting scenarios
  double worst_time = 0.0;
};

namespace detail {

inline void existenceScan(ExistenceReport& rep, int id, const TimeGrid& grid,
                          double c0, double c1, int n) {
  if (c0 == kForbidden || c1 == kForbidden)
    return;
  double m = (c1 - c0) / grid.dt() + 1.0;
  if (m < rep.margin) {
    rep.margin = m;
    rep.worst_group = id;
    rep.worst_time = grid.midpoint(n);
  }
}

} // namespace detail

inline ExistenceReport checkExistenceCondition(const Scenario& sc, const TimeGrid& grid) {
  constexpr double tol = 1e-9; // guards the division by the arrival-time slope
  ExistenceReport rep;
  int K = (int)sc.groups.size();
  if (sc.schedule.variant == ScheduleVariant::Commuting3D) {
    int J = (int)sc.locations.size();
    for (int j = 0; j < J; ++j)
      for (int k = 0; k < K; ++k)
        for (int n = 0; n + 1 < grid.cells; ++n)
          detail::existenceScan(rep, j * K + k, grid,
                                evalScheduleCost3d(sc, j, k, grid.midpoint(n)),
                                evalScheduleCost3d(sc, j, k, grid.midpoint(n + 1)), n);
  } else {
    for (int k = 0; k < K; ++k)
      for (int n = 0; n + 1 < grid.cells; ++n)
        detail::existenceScan(rep, k, grid, evalEffectiveCost(sc, k, grid.midpoint(n)),
                              evalEffectiveCost(sc, k, grid.midpoint(n + 1)), n);
  }
  rep.ok = rep.margin > tol;
  return rep;
}

} // namespace dtce
