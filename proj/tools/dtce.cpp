#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <dtce/analytic.hpp>
#include <dtce/oracle.hpp>
#include <dtce/queue.hpp>
#include <dtce/scenario_io.hpp>

namespace fs = std::filesystem;
using namespace dtce;

namespace {

constexpr const char* kVersion = "1.0.0";

struct FlagSet {
  double tol = 1e-7;
  int cells = 0;
  bool oracle = false;
  bool verify = false;
  bool curves = false;
  std::string out;
  CLI::Option* tolOpt = nullptr;
  CLI::Option* cellsOpt = nullptr;

  void attach(CLI::App* sub) {
    tolOpt = sub->add_option("--tol", tol, "verification tolerance (hours)");
    cellsOpt = sub->add_option("--grid-cells", cells,
                               "override the scenario grid resolution");
    sub->add_flag("--oracle", oracle,
                  "also solve the discretized assignment and emit the comparison");
    sub->add_flag("--verify", verify, "emit the verification report");
    sub->add_flag("--curves", curves,
                  "emit cumulative arrival/departure curves for plotting");
    sub->add_option("--out", out, "output directory (default: DTCE_OUT_DIR or .)");
  }

  RunOptions merge(const RunOptions& fromFile) const {
    RunOptions opt = fromFile;
    if (tolOpt && tolOpt->count() > 0)
      opt.tol = tol;
    if (cellsOpt && cellsOpt->count() > 0)
      opt.grid_cells = cells;
    opt.oracle = opt.oracle || oracle;
    opt.verify = opt.verify || verify;
    opt.curves = opt.curves || curves;
    return opt;
  }

  fs::path outDir() const {
    if (!out.empty())
      return out;
    if (const char* env = std::getenv("DTCE_OUT_DIR"); env && *env)
      return env;
    return ".";
  }
};

std::ofstream openOut(const fs::path& p) {
  std::ofstream f(p);
  if (!f)
    throw std::runtime_error("cannot write " + p.string());
  return f;
}

void writeBreakpoints(const fs::path& p, const EquilibriumSolution& sol) {
  auto f = openOut(p);
  f << "lo_hours,hi_hours,group_index,location_index,price_hours\n";
  for (const auto& seg : sol.segments)
    f << formatG17(seg.lo) << ',' << formatG17(seg.hi) << ',' << seg.group << ','
      << seg.location << ',' << formatG17(seg.price) << '\n';
}

void writeGroups(const fs::path& p, const EquilibriumSolution& sol) {
  auto f = openOut(p);
  f << "group_index,mass_vehicles,trip_cost_hours\n";
  for (size_t k = 0; k < sol.trip_costs.size(); ++k)
    f << k << ',' << formatG17(sol.scenario.groups[k].mass) << ','
      << formatG17(sol.trip_costs[k]) << '\n';
}

void writeLocations(const fs::path& p, const EquilibriumSolution& sol) {
  auto f = openOut(p);
  f << "location_index,travel_time_hours,mass_vehicles,rent_hours\n";
  for (size_t j = 0; j < sol.location_rents.size(); ++j)
    f << j << ',' << formatG17(sol.scenario.locations[j].travel_time) << ','
      << formatG17(sol.scenario.locations[j].mass) << ','
      << formatG17(sol.location_rents[j]) << '\n';
}

void writeDelaySamples(const fs::path& p, const EquilibriumSolution& sol) {
  auto f = openOut(p);
  f << "time_hours,delay_hours\n";
  const TimeGrid& grid = sol.scenario.grid;
  for (int n = 0; n < grid.cells; ++n) {
    double s = grid.midpoint(n);
    f << formatG17(s) << ',' << formatG17(sol.u(s)) << '\n';
  }
}

void writeCurves(const fs::path& p, const CumulativeCurve& arrivals,
                 const CumulativeCurve& departures) {
  auto f = openOut(p);
  f << "curve,time_hours,count_vehicles\n";
  for (size_t i = 0; i < arrivals.t.size(); ++i)
    f << "arrivals," << formatG17(arrivals.t[i]) << ','
      << formatG17(arrivals.n[i]) << '\n';
  for (size_t i = 0; i < departures.t.size(); ++i)
    f << "departures," << formatG17(departures.t[i]) << ','
      << formatG17(departures.n[i]) << '\n';
}

void writeVerifyReport(const fs::path& p, const QueueVerification& rep,
                       double tol) {
  Json j{{"ok", rep.ok},
         {"tol_hours", tol},
         {"min_delay_hours", rep.min_delay},
         {"max_support_residual_hours", rep.max_support_residual},
         {"max_choice_violation_hours", rep.max_choice_violation},
         {"max_seam_gap_hours", rep.max_seam_gap},
         {"conservation_gap_vehicles", rep.conservation_gap},
         {"capacity_gap_vehicles", rep.capacity_gap},
         {"accounting_gap_hours", rep.accounting_gap},
         {"delay_integral_gap_hours", rep.delay_integral_gap},
         {"fifo_gap_hours", rep.fifo_gap},
         {"arrival_step_min_hours", rep.arrival_step_min},
         {"reconstruction_ok", rep.reconstruction_ok},
         {"note", rep.note}};
  openOut(p) << j.dump(2) << '\n';
}

/// Solves the discretized assignment, writes the side-by-side table and
/// returns the relative objective gap.
double writeOracleComparison(const fs::path& p, const Scenario& sc,
                             const EquilibriumSolution& sol) {
  auto f = openOut(p);
  f << "quantity,index,analytic_hours,discrete_hours,abs_gap_hours\n";
  auto row = [&](const char* what, int idx, double a, double b) {
    f << what << ',' << idx << ',' << formatG17(a) << ',' << formatG17(b) << ','
      << formatG17(std::abs(a - b)) << '\n';
  };
  double analyticObj = sol.schedule_cost_total;
  double discreteObj = 0.0;
  if (sc.family == ModelFamily::ThreeD) {
    auto lp = solveOracle3d(sc, sc.grid);
    if (lp.status != LpStatus::Optimal)
      throw precondition_error(std::string("discretized assignment: ") +
                               lpStatusName(lp.status));
    discreteObj = lp.objective;
    for (size_t k = 0; k < sol.trip_costs.size(); ++k)
      row("trip_cost", (int)k, sol.trip_costs[k], lp.w[k]);
    for (size_t j = 0; j < sol.location_rents.size(); ++j)
      row("location_rent", (int)j, sol.location_rents[j], lp.r[j]);
  } else {
    auto lp = solveOracle2d(sc, sc.grid);
    discreteObj = lp.flow.objective;
    for (size_t k = 0; k < sol.trip_costs.size(); ++k)
      row("trip_cost", (int)k, sol.trip_costs[k], lp.v[k]);
  }
  row("objective", -1, analyticObj, discreteObj);
  return std::abs(analyticObj - discreteObj) /
         std::max(std::abs(discreteObj), 1e-12);
}

struct RunOutcome {
  int exit_code = 0;
  std::string family = "?";
  double objective = std::numeric_limits<double>::quiet_NaN();
  double gap = std::numeric_limits<double>::quiet_NaN();
  std::string verdict = "error";
};

RunOutcome runOne(const fs::path& file, const FlagSet& flags) {
  auto started = std::chrono::steady_clock::now();
  RunOutcome out;
  std::string stem = file.stem().string();

  ScenarioFile sf;
  try {
    sf = loadScenarioFile(file.string());
  } catch (const validation_error& e) {
    std::cerr << file.string() << ": " << e.what() << '\n';
    out.exit_code = 2;
    out.verdict = "invalid:" + e.field;
    return out;
  } catch (const std::exception& e) {
    std::cerr << file.string() << ": " << e.what() << '\n';
    out.exit_code = 2;
    out.verdict = "unreadable";
    return out;
  }

  Scenario sc = sf.scenario;
  RunOptions opt = flags.merge(sf.options);
  if (opt.grid_cells > 0)
    sc.grid.cells = opt.grid_cells;
  out.family = familyName(sc.family);

  EquilibriumSolution sol;
  try {
    sol = solveEquilibrium(sc);
  } catch (const precondition_error& e) {
    std::cerr << file.string() << ": " << e.what() << '\n';
    out.exit_code = 3;
    out.verdict = "precondition";
    return out;
  }
  out.objective = sol.equilibrium_cost;

  VerifyOptions vopt;
  vopt.tol = opt.tol;
  vopt.sim_resolution = std::max(256, sc.grid.cells);
  QueueVerification rep = verifyEquilibrium(sol, vopt);
  out.verdict = rep.ok ? "pass" : "fail";
  out.gap = rep.fifo_gap;
  out.exit_code = rep.ok ? 0 : 1;

  fs::path dir = flags.outDir();
  std::error_code ec;
  fs::create_directories(dir, ec);
  try {
    writeBreakpoints(dir / (stem + "_breakpoints.csv"), sol);
    writeGroups(dir / (stem + "_groups.csv"), sol);
    if (!sol.location_rents.empty())
      writeLocations(dir / (stem + "_locations.csv"), sol);
    writeDelaySamples(dir / (stem + "_u.csv"), sol);
    if (opt.curves) {
      if (rep.reconstruction_ok) {
        auto arrivals = reconstructArrivals(sol, vopt.sim_resolution);
        auto run = simulatePointQueue(arrivals, sc.capacity);
        writeCurves(dir / (stem + "_curves.csv"), arrivals, run.departures);
      } else {
        std::cerr << file.string()
                  << ": skipping curves, no queueing representation ("
                  << rep.note << ")\n";
      }
    }
    if (opt.verify)
      writeVerifyReport(dir / (stem + "_verify.json"), rep, opt.tol);
    if (opt.oracle) {
      out.gap = writeOracleComparison(dir / (stem + "_oracle.csv"), sc, sol);
      std::cout << stem << ": discretized objective relative gap "
                << formatG17(out.gap) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << file.string() << ": " << e.what() << '\n';
    out.exit_code = 3;
    out.verdict = "emit_failed";
    return out;
  }

  auto elapsed = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - started)
                     .count();
  Json meta{{"file", file.filename().string()},
            {"family", out.family},
            {"objective_hours", sol.equilibrium_cost},
            {"schedule_cost_hours", sol.schedule_cost_total},
            {"queue_time_hours", sol.queue_time_total},
            {"window_start_hours", sol.window_start},
            {"window_end_hours", sol.window_end},
            {"corner_case", sol.corner_case},
            {"verdict", out.verdict},
            {"version", kVersion},
            {"elapsed_ms", elapsed}};
  openOut(dir / (stem + "_meta.json")) << meta.dump(2) << '\n';

  std::cout << stem << ": " << out.family << " objective="
            << formatG17(sol.equilibrium_cost) << " verdict=" << out.verdict
            << '\n';
  return out;
}

int runBatch(const fs::path& dir, const FlagSet& flags) {
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path());
  if (ec) {
    std::cerr << dir.string() << ": " << ec.message() << '\n';
    return 2;
  }
  std::sort(files.begin(), files.end());

  fs::path outDir = flags.outDir();
  fs::create_directories(outDir, ec);
  auto summary = openOut(outDir / "batch_summary.csv");
  const char* header = "file,family,objective_hours,gap_hours,verdict";
  summary << header << '\n';
  std::cout << header << '\n';
  bool anyFailed = false;
  for (const auto& f : files) {
    RunOutcome oc = runOne(f, flags);
    anyFailed = anyFailed || oc.exit_code != 0;
    std::string row = f.filename().string() + "," + oc.family + "," +
                      formatG17(oc.objective) + "," + formatG17(oc.gap) + "," +
                      oc.verdict;
    summary << row << '\n';
    std::cout << row << '\n';
  }
  return anyFailed ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"single-bottleneck departure-time equilibrium solver"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "solve one scenario document");
  std::string runFile;
  run->add_option("file", runFile, "scenario document")->required();
  FlagSet runFlags;
  runFlags.attach(run);

  auto* batch =
      app.add_subcommand("batch", "solve every scenario document in a directory");
  std::string batchDir;
  batch->add_option("dir", batchDir, "directory of scenario documents")
      ->required();
  FlagSet batchFlags;
  batchFlags.attach(batch);

  CLI11_PARSE(app, argc, argv);

  if (run->parsed())
    return runOne(runFile, runFlags).exit_code;
  return runBatch(batchDir, batchFlags);
}
