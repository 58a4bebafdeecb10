#pragma once

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include <dtce/core.hpp>

namespace dtce {

using Json = nlohmann::json;

inline const char* variantName(ScheduleVariant v) {
  switch (v) {
  case ScheduleVariant::ConvexCommon: return "convex_common";
  case ScheduleVariant::EarlyLate: return "early_late";
  case ScheduleVariant::Commuting3D: return "commuting_3d";
  }
  return "?";
}

inline const char* fnKindName(FnKind k) {
  switch (k) {
  case FnKind::Linear: return "linear";
  case FnKind::Power: return "power";
  case FnKind::Exponential: return "exponential";
  case FnKind::PiecewiseLinear: return "piecewise_linear";
  }
  return "?";
}

namespace io_detail {

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
  throw validation_error(path, msg);
}

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline void requireObject(const Json& j, const std::string& path) {
  if (!j.is_object())
    fail(path, "expected an object");
}

inline void rejectUnknown(const Json& obj, const std::string& path,
                          std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k)
        known = true;
    if (!known)
      fail(join(path, it.key()), "unknown key");
  }
}

inline const Json* find(const Json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

inline double needNumber(const Json& obj, const std::string& path, const char* key) {
  const Json* v = find(obj, key);
  if (!v)
    fail(join(path, key), "missing required number");
  if (!v->is_number())
    fail(join(path, key), "expected a number");
  return v->get<double>();
}

inline double optNumber(const Json& obj, const std::string& path, const char* key,
                        double fallback) {
  const Json* v = find(obj, key);
  if (!v)
    return fallback;
  if (!v->is_number())
    fail(join(path, key), "expected a number");
  return v->get<double>();
}

inline int needInt(const Json& obj, const std::string& path, const char* key) {
  const Json* v = find(obj, key);
  if (!v)
    fail(join(path, key), "missing required integer");
  if (!v->is_number_integer())
    fail(join(path, key), "expected an integer");
  return v->get<int>();
}

inline int optInt(const Json& obj, const std::string& path, const char* key,
                  int fallback) {
  const Json* v = find(obj, key);
  if (!v)
    return fallback;
  if (!v->is_number_integer())
    fail(join(path, key), "expected an integer");
  return v->get<int>();
}

inline bool optBool(const Json& obj, const std::string& path, const char* key,
                    bool fallback) {
  const Json* v = find(obj, key);
  if (!v)
    return fallback;
  if (!v->is_boolean())
    fail(join(path, key), "expected true or false");
  return v->get<bool>();
}

inline std::string needString(const Json& obj, const std::string& path,
                              const char* key) {
  const Json* v = find(obj, key);
  if (!v)
    fail(join(path, key), "missing required string");
  if (!v->is_string())
    fail(join(path, key), "expected a string");
  return v->get<std::string>();
}

inline std::vector<std::pair<double, double>> readKnots(const Json& arr,
                                                        const std::string& path) {
  if (!arr.is_array())
    fail(path, "expected an array of [x, y] pairs");
  std::vector<std::pair<double, double>> out;
  for (size_t i = 0; i < arr.size(); ++i) {
    const Json& kn = arr[i];
    std::string p = path + "[" + std::to_string(i) + "]";
    if (!kn.is_array() || kn.size() != 2 || !kn[0].is_number() || !kn[1].is_number())
      fail(p, "expected an [x, y] number pair");
    out.emplace_back(kn[0].get<double>(), kn[1].get<double>());
  }
  return out;
}

} // namespace io_detail

inline ModelFamily familyFromName(const std::string& name) {
  for (ModelFamily f : {ModelFamily::Fifw, ModelFamily::VotEarly,
                        ModelFamily::VotLate, ModelFamily::VotBoth,
                        ModelFamily::ThreeD, ModelFamily::Toll, ModelFamily::Dso})
    if (name == familyName(f))
      return f;
  io_detail::fail("model_family", "unknown family '" + name + "'");
}

inline ScheduleVariant variantFromName(const std::string& name,
                                       const std::string& path) {
  for (ScheduleVariant v : {ScheduleVariant::ConvexCommon,
                            ScheduleVariant::EarlyLate,
                            ScheduleVariant::Commuting3D})
    if (name == variantName(v))
      return v;
  io_detail::fail(path, "unknown schedule variant '" + name + "'");
}

inline FnKind fnKindFromName(const std::string& name, const std::string& path) {
  for (FnKind k : {FnKind::Linear, FnKind::Power, FnKind::Exponential,
                   FnKind::PiecewiseLinear})
    if (name == fnKindName(k))
      return k;
  io_detail::fail(path, "unknown catalog function kind '" + name + "'");
}

inline CatalogFn fnFromJson(const Json& j, const std::string& path) {
  io_detail::requireObject(j, path);
  io_detail::rejectUnknown(j, path, {"kind", "a", "p", "b", "knots"});
  CatalogFn fn;
  fn.kind = fnKindFromName(io_detail::needString(j, path, "kind"),
                           io_detail::join(path, "kind"));
  fn.a = io_detail::optNumber(j, path, "a", fn.a);
  fn.p = io_detail::optNumber(j, path, "p", fn.p);
  fn.b = io_detail::optNumber(j, path, "b", fn.b);
  if (const Json* kn = io_detail::find(j, "knots"))
    fn.knots = io_detail::readKnots(*kn, io_detail::join(path, "knots"));
  return fn;
}

inline Json fnToJson(const CatalogFn& fn) {
  Json j{{"kind", fnKindName(fn.kind)}};
  switch (fn.kind) {
  case FnKind::Linear:
    j["a"] = fn.a;
    break;
  case FnKind::Power:
    j["a"] = fn.a;
    j["p"] = fn.p;
    break;
  case FnKind::Exponential:
    j["a"] = fn.a;
    j["b"] = fn.b;
    break;
  case FnKind::PiecewiseLinear:
    j["knots"] = fn.knots;
    break;
  }
  return j;
}

/// Equality on the mathematical function: only the parameters the kind
/// actually evaluates take part.
inline bool fnEqual(const CatalogFn& x, const CatalogFn& y) {
  if (x.kind != y.kind)
    return false;
  switch (x.kind) {
  case FnKind::Linear: return x.a == y.a;
  case FnKind::Power: return x.a == y.a && x.p == y.p;
  case FnKind::Exponential: return x.a == y.a && x.b == y.b;
  case FnKind::PiecewiseLinear: return x.knots == y.knots;
  }
  return false;
}

/// Structural parse only; call validate() on the result (or use
/// parseScenarioText / loadScenario, which do) before solving.
inline Scenario scenarioFromJson(const Json& doc) {
  io_detail::requireObject(doc, "document");
  io_detail::rejectUnknown(doc, "", {"model_family", "capacity", "grid", "groups",
                                     "locations", "schedule", "toll", "options"});
  Scenario sc;
  sc.family = familyFromName(io_detail::needString(doc, "", "model_family"));
  sc.capacity = io_detail::needNumber(doc, "", "capacity");

  const Json* grid = io_detail::find(doc, "grid");
  if (!grid)
    io_detail::fail("grid", "missing required object");
  io_detail::requireObject(*grid, "grid");
  io_detail::rejectUnknown(*grid, "grid", {"start", "end", "cells"});
  sc.grid.start = io_detail::needNumber(*grid, "grid", "start");
  sc.grid.end = io_detail::needNumber(*grid, "grid", "end");
  sc.grid.cells = io_detail::needInt(*grid, "grid", "cells");

  const Json* groups = io_detail::find(doc, "groups");
  if (!groups || !groups->is_array())
    io_detail::fail("groups", "expected an array of group objects");
  for (size_t k = 0; k < groups->size(); ++k) {
    std::string path = "groups[" + std::to_string(k) + "]";
    const Json& g = (*groups)[k];
    io_detail::requireObject(g, path);
    io_detail::rejectUnknown(g, path,
                             {"mass", "preferred_time", "beta", "gamma", "alpha"});
    GroupSpec spec;
    spec.mass = io_detail::needNumber(g, path, "mass");
    spec.preferred_time = io_detail::needNumber(g, path, "preferred_time");
    spec.beta = io_detail::optNumber(g, path, "beta", 0.0);
    spec.gamma = io_detail::optNumber(g, path, "gamma", 0.0);
    spec.alpha = io_detail::optNumber(g, path, "alpha", 0.0);
    sc.groups.push_back(spec);
  }

  if (const Json* locations = io_detail::find(doc, "locations")) {
    if (!locations->is_array())
      io_detail::fail("locations", "expected an array of location objects");
    for (size_t j = 0; j < locations->size(); ++j) {
      std::string path = "locations[" + std::to_string(j) + "]";
      const Json& l = (*locations)[j];
      io_detail::requireObject(l, path);
      io_detail::rejectUnknown(l, path, {"travel_time", "mass"});
      LocationSpec spec;
      spec.travel_time = io_detail::needNumber(l, path, "travel_time");
      spec.mass = io_detail::needNumber(l, path, "mass");
      sc.locations.push_back(spec);
    }
  }

  const Json* schedule = io_detail::find(doc, "schedule");
  if (!schedule)
    io_detail::fail("schedule", "missing required object");
  io_detail::requireObject(*schedule, "schedule");
  io_detail::rejectUnknown(*schedule, "schedule",
                           {"variant", "f", "early", "late", "g",
                            "forbid_early", "forbid_late"});
  sc.schedule.variant =
      variantFromName(io_detail::needString(*schedule, "schedule", "variant"),
                      "schedule.variant");
  if (const Json* f = io_detail::find(*schedule, "f"))
    sc.schedule.f = fnFromJson(*f, "schedule.f");
  if (const Json* early = io_detail::find(*schedule, "early"))
    sc.schedule.early = fnFromJson(*early, "schedule.early");
  if (const Json* late = io_detail::find(*schedule, "late"))
    sc.schedule.late = fnFromJson(*late, "schedule.late");
  if (const Json* g = io_detail::find(*schedule, "g"))
    sc.schedule.g = fnFromJson(*g, "schedule.g");
  sc.schedule.forbid_early =
      io_detail::optBool(*schedule, "schedule", "forbid_early", false);
  sc.schedule.forbid_late =
      io_detail::optBool(*schedule, "schedule", "forbid_late", false);

  if (const Json* toll = io_detail::find(doc, "toll")) {
    io_detail::requireObject(*toll, "toll");
    io_detail::rejectUnknown(*toll, "toll", {"knots"});
    const Json* kn = io_detail::find(*toll, "knots");
    if (!kn)
      io_detail::fail("toll.knots", "missing required array");
    sc.toll.knots = io_detail::readKnots(*kn, "toll.knots");
  }
  return sc;
}

inline Json scenarioToJson(const Scenario& sc) {
  Json doc;
  doc["model_family"] = familyName(sc.family);
  doc["capacity"] = sc.capacity;
  doc["grid"] = {{"start", sc.grid.start},
                 {"end", sc.grid.end},
                 {"cells", sc.grid.cells}};
  Json groups = Json::array();
  for (const auto& g : sc.groups)
    groups.push_back({{"mass", g.mass},
                      {"preferred_time", g.preferred_time},
                      {"beta", g.beta},
                      {"gamma", g.gamma},
                      {"alpha", g.alpha}});
  doc["groups"] = std::move(groups);
  if (!sc.locations.empty()) {
    Json locations = Json::array();
    for (const auto& l : sc.locations)
      locations.push_back({{"travel_time", l.travel_time}, {"mass", l.mass}});
    doc["locations"] = std::move(locations);
  }

  Json schedule{{"variant", variantName(sc.schedule.variant)}};
  switch (sc.schedule.variant) {
  case ScheduleVariant::ConvexCommon:
    schedule["f"] = fnToJson(sc.schedule.f);
    break;
  case ScheduleVariant::EarlyLate:
    if (!sc.schedule.forbid_early)
      schedule["early"] = fnToJson(sc.schedule.early);
    if (!sc.schedule.forbid_late)
      schedule["late"] = fnToJson(sc.schedule.late);
    break;
  case ScheduleVariant::Commuting3D:
    schedule["f"] = fnToJson(sc.schedule.f);
    schedule["g"] = fnToJson(sc.schedule.g);
    break;
  }
  if (sc.schedule.forbid_early)
    schedule["forbid_early"] = true;
  if (sc.schedule.forbid_late)
    schedule["forbid_late"] = true;
  doc["schedule"] = std::move(schedule);

  if (!sc.toll.knots.empty())
    doc["toll"] = Json{{"knots", sc.toll.knots}};
  return doc;
}

/// Field-by-field equality on everything the family can observe.
inline bool scenarioEqual(const Scenario& x, const Scenario& y) {
  if (x.family != y.family || x.capacity != y.capacity ||
      x.grid.start != y.grid.start || x.grid.end != y.grid.end ||
      x.grid.cells != y.grid.cells)
    return false;
  if (x.groups.size() != y.groups.size() ||
      x.locations.size() != y.locations.size())
    return false;
  for (size_t k = 0; k < x.groups.size(); ++k) {
    const auto& a = x.groups[k];
    const auto& b = y.groups[k];
    if (a.mass != b.mass || a.preferred_time != b.preferred_time ||
        a.beta != b.beta || a.gamma != b.gamma || a.alpha != b.alpha)
      return false;
  }
  for (size_t j = 0; j < x.locations.size(); ++j)
    if (x.locations[j].travel_time != y.locations[j].travel_time ||
        x.locations[j].mass != y.locations[j].mass)
      return false;
  const auto& sx = x.schedule;
  const auto& sy = y.schedule;
  if (sx.variant != sy.variant || sx.forbid_early != sy.forbid_early ||
      sx.forbid_late != sy.forbid_late)
    return false;
  switch (sx.variant) {
  case ScheduleVariant::ConvexCommon:
    if (!fnEqual(sx.f, sy.f))
      return false;
    break;
  case ScheduleVariant::EarlyLate:
    if (!sx.forbid_early && !fnEqual(sx.early, sy.early))
      return false;
    if (!sx.forbid_late && !fnEqual(sx.late, sy.late))
      return false;
    break;
  case ScheduleVariant::Commuting3D:
    if (!fnEqual(sx.f, sy.f) || !fnEqual(sx.g, sy.g))
      return false;
    break;
  }
  return x.toll.knots == y.toll.knots;
}

/// Solver switches a scenario document may embed; command-line flags override.
struct RunOptions {
  double tol = 1e-7;
  int grid_cells = 0; ///< replaces the scenario grid resolution when positive
  bool oracle = false;
  bool verify = false;
  bool curves = false;
};

inline RunOptions optionsFromJson(const Json& doc) {
  RunOptions opt;
  const Json* o = io_detail::find(doc, "options");
  if (!o)
    return opt;
  io_detail::requireObject(*o, "options");
  io_detail::rejectUnknown(*o, "options",
                           {"tol", "grid_cells", "oracle", "verify", "curves"});
  opt.tol = io_detail::optNumber(*o, "options", "tol", opt.tol);
  opt.grid_cells = io_detail::optInt(*o, "options", "grid_cells", 0);
  opt.oracle = io_detail::optBool(*o, "options", "oracle", false);
  opt.verify = io_detail::optBool(*o, "options", "verify", false);
  opt.curves = io_detail::optBool(*o, "options", "curves", false);
  if (!(opt.tol > 0.0))
    io_detail::fail("options.tol", "must be positive");
  if (opt.grid_cells < 0)
    io_detail::fail("options.grid_cells", "must be positive when given");
  return opt;
}

struct ScenarioFile {
  Scenario scenario;
  RunOptions options;
};

inline Scenario parseScenarioText(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw validation_error("document", e.what());
  }
  Scenario sc = scenarioFromJson(doc);
  validate(sc);
  return sc;
}

inline ScenarioFile loadScenarioFile(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  Json doc;
  try {
    doc = Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    throw validation_error("document", e.what());
  }
  ScenarioFile file;
  file.scenario = scenarioFromJson(doc);
  validate(file.scenario);
  file.options = optionsFromJson(doc);
  return file;
}

inline Scenario loadScenario(const std::string& path) {
  return loadScenarioFile(path).scenario;
}

inline std::string scenarioToText(const Scenario& sc) {
  return scenarioToJson(sc).dump(2) + "\n";
}

inline void saveScenario(const Scenario& sc, const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write scenario file: " + path);
  out << scenarioToText(sc);
}

/// 17 significant digits: enough to reproduce any double exactly on reread.
inline std::string formatG17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

} // namespace dtce
