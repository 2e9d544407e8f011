#include "chargeprice/coupled.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "chargeprice/parallel.hpp"

namespace chargeprice {

namespace {

std::string vec(const Eigen::VectorXd& v) {
  std::ostringstream os;
  os << std::setprecision(10) << "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << "]";
  return os.str();
}

}  // namespace

Eigen::VectorXd station_lmp(const PricingProblem& problem, const PowerNetwork& power, const OPFSolution& opf) {
  Eigen::VectorXd nu(problem.dimension());
  for (int k = 0; k < problem.dimension(); ++k) {
    const int node_id = problem.network->node_ids[problem.network->stations[problem.owned[k]].node];
    auto it = power.station_bus.find(node_id);
    if (it == power.station_bus.end())
      throw ValidationError("unmapped FCS at transport node " + std::to_string(node_id));
    nu[k] = opf.lmp[it->second];
  }
  return nu;
}

CoupledResult coupled_fixed_point(const PricingProblem& problem, const PowerNetwork& power,
                                  const Eigen::VectorXd& initial, const CoupledConfig& config,
                                  const std::function<void(const CoupledCycle&)>& on_cycle) {
  if (config.max_cycles < 1) throw ValidationError("coupled loop needs at least one cycle");
  PricingProblem sub = problem;
  sub.electricity_cost.reset();
  CoupledResult out;
  out.prices = initial;
  PricePoint point = evaluate(sub, initial);
  Eigen::VectorXd load = charging_load(power, *problem.network, point.ue.charge_flows, problem.params.charge_energy);

  for (int cycle = 1; cycle <= config.max_cycles; ++cycle) {
    const OPFSolution opf = solve_opf(power, load, config.opf);
    sub.electricity_cost = station_lmp(sub, power, opf);
    PricingTrace trace = gdgsa(sub, out.prices, config.pricing);

    CoupledCycle rec;
    rec.cycle = cycle;
    rec.prices = trace.final.prices;
    rec.electricity_cost = *sub.electricity_cost;
    rec.profit = trace.final.profit;
    rec.opf_objective = opf.objective;
    rec.pricing_iterations = static_cast<int>(trace.iterates.size()) - 1;
    if (on_cycle) on_cycle(rec);
    out.cycles.push_back(rec);

    out.prices = trace.final.prices;
    out.electricity_cost = *sub.electricity_cost;
    out.point = std::move(trace.final);
    load = charging_load(power, *problem.network, out.point.ue.charge_flows, problem.params.charge_energy);

    if (cycle >= 2 && std::abs(out.cycles[cycle - 1].profit - out.cycles[cycle - 2].profit) <= config.tol) {
      out.opf = solve_opf(power, load, config.opf);
      return out;
    }
  }
  const auto& a = out.cycles[out.cycles.size() >= 2 ? out.cycles.size() - 2 : 0];
  const auto& b = out.cycles.back();
  std::ostringstream os;
  os << "coupled loop cycle cap reached after " << config.max_cycles << " cycles; cycle " << a.cycle
     << ": prices " << vec(a.prices) << " lmp " << vec(a.electricity_cost) << " profit " << a.profit << "; cycle "
     << b.cycle << ": prices " << vec(b.prices) << " lmp " << vec(b.electricity_cost) << " profit " << b.profit;
  throw CycleCapError(os.str(), problem.full_prices(out.prices));
}

double transport_cost(const TransportNetwork& net, const ModelParams& params, const UESolution& sol) {
  double hours = 0.0;
  for (int a = 0; a < net.num_arcs(); ++a) hours += sol.arc_flows[a] * net.arc_delay(a).value(sol.arc_flows[a]);
  for (int m = 0; m < net.num_stations(); ++m)
    hours += sol.charge_flows[m] * net.station_delay(m).value(sol.charge_flows[m]);
  return params.time_value * hours;
}

StrategyRow evaluate_strategy(const PricingProblem& problem, const PowerNetwork& power, const std::string& name,
                              const Eigen::VectorXd& prices, const OPFOptions& opf_options) {
  PricingProblem sub = problem;
  sub.electricity_cost.reset();
  const PricePoint point = evaluate(sub, prices);
  const Eigen::VectorXd load =
      charging_load(power, *problem.network, point.ue.charge_flows, problem.params.charge_energy);
  const OPFSolution opf = solve_opf(power, load, opf_options);
  StrategyRow row;
  row.strategy = name;
  row.prices = prices;
  row.profit = profit(prices, point.owned_flows, problem.params.charge_energy, station_lmp(sub, power, opf));
  row.pn_loss_mw = opf.supply_surplus(power, load);
  row.line_loss_mw = opf.line_loss(power);
  row.tn_cost = transport_cost(*problem.network, problem.params, point.ue);
  return row;
}

std::vector<Strategy> standard_strategies(const PricingProblem& problem) {
  return {{"Optimal", std::nullopt},
          {"Lower bound", problem.lower()},
          {"Mean", problem.midpoint()},
          {"Upper bound", problem.upper()}};
}

std::vector<StrategyRow> impact_report(const PricingProblem& problem, const PowerNetwork& power,
                                       const std::vector<Strategy>& strategies, const CoupledConfig& config,
                                       int threads) {
  std::vector<StrategyRow> rows(strategies.size());
  // The coupled loop is sequential; fixed strategies fan out.
  for (std::size_t i = 0; i < strategies.size(); ++i)
    if (!strategies[i].prices) {
      const CoupledResult res = coupled_fixed_point(problem, power, problem.midpoint(), config);
      rows[i] = evaluate_strategy(problem, power, strategies[i].name, res.prices, config.opf);
    }
  parallel_for(static_cast<int>(strategies.size()), threads, [&](int i) {
    if (strategies[i].prices)
      rows[i] = evaluate_strategy(problem, power, strategies[i].name, *strategies[i].prices, config.opf);
  });
  return rows;
}

void write_impact_csv(std::ostream& out, const std::vector<StrategyRow>& rows) {
  out << "strategy,profit,pn_loss_mw,tn_cost\n";
  out << std::setprecision(12);
  for (const auto& r : rows) out << r.strategy << "," << r.profit << "," << r.pn_loss_mw << "," << r.tn_cost << "\n";
}

}  // namespace chargeprice
