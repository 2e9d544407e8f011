// Command-line driver: one subcommand per pipeline, JSON/CSV artifacts plus
// a run manifest in the output directory.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chargeprice/config.hpp"
#include "chargeprice/coupled.hpp"
#include "chargeprice/parallel.hpp"
#include "chargeprice/paths.hpp"
#include "chargeprice/power.hpp"
#include "chargeprice/pricing.hpp"
#include "chargeprice/serialize.hpp"
#include "chargeprice/tntp.hpp"
#include "chargeprice/verify.hpp"

namespace fs = std::filesystem;
using namespace chargeprice;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Session {
  RunConfig cfg;
  TransportNetwork net;
  ODDemand demand;
  PathStructure paths;
  PricingProblem problem;
  std::vector<std::string> outputs;

  fs::path out(const std::string& name) {
    outputs.push_back(name);
    return cfg.output_dir / name;
  }
};

void load(Session& s) {
  std::tie(s.net, s.demand) = load_tntp(s.cfg.network, s.cfg.trips, s.cfg.fcs);
  s.paths = generate_paths(s.net, s.demand, s.cfg.k_paths);
  s.problem.network = &s.net;
  s.problem.demand = &s.demand;
  s.problem.paths = &s.paths;
  s.problem.params = s.cfg.params;
  s.problem.prices = s.net.default_prices();
  s.problem.owned = s.net.owned_stations();
  s.problem.ue = s.cfg.ue;
  s.problem.sensitivity = s.cfg.sensitivity;
  s.cfg.pricing.threads = s.cfg.threads;
  s.problem.validate();
}

// Owned prices used by single-point commands: the configured start, else the file defaults.
Eigen::VectorXd point_prices(const Session& s) {
  Eigen::VectorXd p(s.problem.dimension());
  if (s.cfg.initial_prices) {
    if (static_cast<int>(s.cfg.initial_prices->size()) != s.problem.dimension())
      throw ValidationError("initial_prices needs one entry per owned station");
    for (int k = 0; k < p.size(); ++k) p[k] = (*s.cfg.initial_prices)[k];
  } else {
    for (int k = 0; k < p.size(); ++k) p[k] = s.problem.prices[s.problem.owned[k]];
  }
  return p;
}

Eigen::VectorXd start_prices(const Session& s) {
  return s.cfg.initial_prices ? point_prices(s) : s.problem.midpoint();
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

std::vector<Eigen::VectorXd> random_points(const PricingProblem& problem, int count, std::uint64_t seed,
                                           double margin) {
  std::mt19937_64 rng(seed);
  std::vector<Eigen::VectorXd> pts;
  const Eigen::VectorXd lo = problem.lower(), hi = problem.upper();
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd p(problem.dimension());
    for (int k = 0; k < p.size(); ++k) {
      std::uniform_real_distribution<double> d(lo[k] + margin, hi[k] - margin);
      p[k] = d(rng);
    }
    pts.push_back(p);
  }
  return pts;
}

void cmd_ue(Session& s) {
  const Eigen::VectorXd prices = point_prices(s);
  const PricePoint pt = evaluate(s.problem, prices);
  json j = ue_json(pt.ue, s.net, s.demand, s.paths);
  j["prices"] = s.problem.full_prices(prices);
  write_json(s.out("ue.json"), j);
  const auto cert = certify_ue(pt.ue, s.net, s.demand, s.paths, s.problem.params, s.problem.full_prices(prices));
  write_json(s.out("certificate.json"), certificate_json(cert));
  std::cout << "UE solved in " << pt.ue.iterations << " sweeps, relative gap " << pt.ue.rel_gap
            << ", certificate " << (cert.pass() ? "PASS" : "FAIL") << "\n";
}

void cmd_sensitivity(Session& s) {
  const PricePoint pt = evaluate(s.problem, point_prices(s));
  const SensitivityResult sens =
      analyze(s.net, s.demand, s.paths, s.problem.params, pt.ue, s.problem.owned, s.problem.sensitivity);
  json j = sensitivity_json(sens, s.net, s.problem.owned);
  j["prices"] = to_json(pt.prices);
  write_json(s.out("sensitivity.json"), j);
  std::cout << "gradient (" << sens.grad.rows() << "x" << sens.grad.cols() << "), rcond " << sens.rcond << "\n";
}

void cmd_price(Session& s) {
  std::ofstream traj(s.out("trajectory.jsonl"));
  std::vector<Eigen::VectorXd> starts{start_prices(s)};
  for (auto& p : random_points(s.problem, s.cfg.multistart, s.cfg.seed, 0.0)) starts.push_back(p);
  json runs = json::array();
  int best = 0;
  std::vector<PricingTrace> traces;
  for (std::size_t r = 0; r < starts.size(); ++r) {
    traces.push_back(gdgsa(s.problem, starts[r], s.cfg.pricing, [&](const PriceIterate& it) {
      json line = iterate_json(it);
      line["start"] = r;
      traj << line.dump() << "\n" << std::flush;
    }));
    const PricingTrace& t = traces.back();
    runs.push_back({{"start", to_json(starts[r])},
                    {"prices", to_json(t.final.prices)},
                    {"profit", t.final.profit},
                    {"iterations", static_cast<int>(t.iterates.size()) - 1},
                    {"stop_reason", t.stop_reason}});
    if (t.final.profit > traces[best].final.profit) best = static_cast<int>(r);
  }
  write_json(s.out("result.json"), {{"best_run", best},
                                    {"prices", to_json(traces[best].final.prices)},
                                    {"profit", traces[best].final.profit},
                                    {"runs", runs}});
  std::cout << "profit " << traces[best].final.profit << " at prices " << traces[best].final.prices.transpose()
            << "\n";
}

void cmd_coupled(Session& s) {
  const PowerNetwork power = load_power(s.cfg.power);
  std::ofstream trace(s.out("coupled.jsonl"));
  const CoupledResult res = coupled_fixed_point(s.problem, power, start_prices(s), s.cfg.coupled(),
                                                [&](const CoupledCycle& c) { trace << cycle_json(c).dump() << "\n" << std::flush; });
  json j{{"prices", to_json(res.prices)},
         {"lmp", to_json(res.electricity_cost)},
         {"profit", res.cycles.back().profit},
         {"cycles", static_cast<int>(res.cycles.size())},
         {"ue", ue_json(res.point.ue, s.net, s.demand, s.paths)},
         {"opf", opf_json(res.opf, power)}};
  write_json(s.out("coupled.json"), j);
  std::cout << "coupled loop converged in " << res.cycles.size() << " cycles, profit " << res.cycles.back().profit
            << "\n";
}

void cmd_grid(Session& s) {
  GridSpec spec = uniform_grid(s.problem, s.cfg.grid_points);
  spec.cap = s.cfg.grid_cap;
  const GridResult g = grid_enumerate(s.problem, spec, s.cfg.threads);
  {
    std::ofstream csv(s.out("landscape.csv"));
    write_landscape_csv(csv, g);
  }
  json maxima = json::array();
  for (long long idx : local_maxima(g))
    maxima.push_back({{"prices", to_json(Eigen::VectorXd(g.prices.row(idx).transpose()))}, {"profit", g.profits[idx]}});
  write_json(s.out("grid.json"), {{"points", g.profits.size()},
                                  {"best_prices", to_json(g.best_prices)},
                                  {"best_profit", g.best_profit},
                                  {"local_maxima", maxima}});
  std::cout << "grid of " << g.profits.size() << " points: best profit " << g.best_profit << " at "
            << g.best_prices.transpose() << ", " << maxima.size() << " local maxima\n";
}

void cmd_fd(Session& s) {
  std::vector<Eigen::VectorXd> pts{point_prices(s)};
  for (auto& p : random_points(s.problem, s.cfg.fd_points - 1, s.cfg.seed, 2.0 * s.cfg.fd_delta)) pts.push_back(p);
  json rows = json::array();
  bool all = true;
  for (const auto& p : pts) {
    const PricePoint pt = evaluate(s.problem, p);
    const SensitivityResult sens =
        analyze(s.net, s.demand, s.paths, s.problem.params, pt.ue, s.problem.owned, s.problem.sensitivity);
    const GradientComparison c =
        fd_check(s.problem, p, sens.grad, s.cfg.fd_delta, s.cfg.threads, s.cfg.fd_abs_tol, s.cfg.fd_rel_tol);
    all = all && c.pass;
    json row = comparison_json(c);
    row["prices"] = to_json(p);
    row["analytic"] = to_json(sens.grad);
    row["finite_difference"] = to_json(c.reference);
    rows.push_back(row);
  }
  write_json(s.out("fd_check.json"), {{"all_within_tolerance", all}, {"points", rows}});
  std::cout << "finite-difference check on " << pts.size() << " points: " << (all ? "all within tolerance" : "MISMATCH")
            << "\n";
  if (!all) throw NumericalError("analytic and finite-difference gradients disagree");
}

void cmd_impact(Session& s) {
  const PowerNetwork power = load_power(s.cfg.power);
  const auto rows = impact_report(s.problem, power, standard_strategies(s.problem), s.cfg.coupled(), s.cfg.threads);
  std::ofstream csv(s.out("impact.csv"));
  write_impact_csv(csv, rows);
  write_impact_csv(std::cout, rows);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Charging price optimization on coupled transport and power networks"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_file;
  std::vector<std::string> overrides;
  std::string output_dir;
  int threads = -1;
  app.add_option("-c,--config", config_file, "Run configuration (flat key = value file)")->required();
  app.add_option("--set", overrides, "Override a config key, as key=value (repeatable)");
  app.add_option("-o,--output", output_dir, "Output directory (overrides output_dir)");
  app.add_option("-j,--threads", threads, "Worker threads for grid, finite differences and step trials (0 = all cores)");

  struct Command {
    const char* name;
    const char* help;
    void (*run)(Session&);
    bool power;
  };
  const Command commands[] = {
      {"ue-solve", "Solve the user equilibrium at the configured prices", cmd_ue, false},
      {"sensitivity", "Charging-flow gradient with respect to owned prices", cmd_sensitivity, false},
      {"price-optimize", "Optimize owned prices by sensitivity-driven ascent", cmd_price, false},
      {"coupled-run", "Iterate pricing against power-network LMPs to a fixed point", cmd_coupled, true},
      {"oracle-grid", "Enumerate a price grid and write the profit landscape", cmd_grid, false},
      {"fd-check", "Compare the analytic gradient with finite differences", cmd_fd, false},
      {"impact-report", "Profit, power loss and travel cost per pricing strategy", cmd_impact, true},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) subs.push_back(app.add_subcommand(c.name, c.help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto started = std::chrono::steady_clock::now();
  const std::time_t wall = std::time(nullptr);
  std::size_t which = 0;
  while (!subs[which]->parsed()) ++which;
  const Command& cmd = commands[which];

  try {
    Session s;
    s.cfg = load_config(config_file);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + kv + "'");
      s.cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!output_dir.empty()) s.cfg.output_dir = output_dir;
    if (threads >= 0) s.cfg.threads = threads;
    s.cfg.validate(cmd.power);
    fs::create_directories(s.cfg.output_dir);
    load(s);
    cmd.run(s);

    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&wall));
    json manifest{{"command", cmd.name},
                  {"version", kVersion},
                  {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)},
                  {"compiler", __VERSION__},
                  {"started_at", stamp},
                  {"wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count()},
                  {"threads", s.cfg.threads == 0 ? default_threads() : s.cfg.threads},
                  {"config", s.cfg.echo()},
                  {"outputs", s.outputs}};
    std::ofstream(s.cfg.output_dir / "manifest.json") << manifest.dump(2) << "\n";
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
