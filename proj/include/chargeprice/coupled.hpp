#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chargeprice/opf.hpp"
#include "chargeprice/power.hpp"
#include "chargeprice/pricing.hpp"

namespace chargeprice {

struct CoupledConfig {
  GDGSAConfig pricing;
  OPFOptions opf;
  double tol = 1e-3;    // on the change in provider profit between cycles
  int max_cycles = 20;
};

struct CoupledCycle {
  int cycle = 0;
  Eigen::VectorXd prices;
  Eigen::VectorXd electricity_cost;  // LMP at each owned station's bus
  double profit = 0.0;
  double opf_objective = 0.0;
  int pricing_iterations = 0;
};

struct CoupledResult {
  Eigen::VectorXd prices;
  Eigen::VectorXd electricity_cost;
  PricePoint point;
  OPFSolution opf;  // dispatch serving the final charging load
  std::vector<CoupledCycle> cycles;
};

/// LMP seen by each owned station.
Eigen::VectorXd station_lmp(const PricingProblem& problem, const PowerNetwork& power, const OPFSolution& opf);

/// Alternates OPF -> pricing with electricity cost -> charging load until
/// the provider profit changes by at most config.tol between cycles.
/// Throws CycleCapError with the last two cycles when the cap is hit.
CoupledResult coupled_fixed_point(const PricingProblem& problem, const PowerNetwork& power,
                                  const Eigen::VectorXd& initial, const CoupledConfig& config,
                                  const std::function<void(const CoupledCycle&)>& on_cycle = {});

struct StrategyRow {
  std::string strategy;
  Eigen::VectorXd prices;
  double profit = 0.0;
  double pn_loss_mw = 0.0;
  double tn_cost = 0.0;
  double line_loss_mw = 0.0;  // sum of r I, for cross-checking pn_loss_mw
};

/// Equilibrium, dispatch and metrics for one price vector: profit uses the
/// LMPs of the dispatch that serves the resulting charging load.
StrategyRow evaluate_strategy(const PricingProblem& problem, const PowerNetwork& power,
                              const std::string& name, const Eigen::VectorXd& prices,
                              const OPFOptions& opf_options = {});

/// Total monetized travel time: omega times the time spent on roads and at stations.
double transport_cost(const TransportNetwork& net, const ModelParams& params, const UESolution& sol);

struct Strategy {
  std::string name;
  std::optional<Eigen::VectorXd> prices;  // unset: run the coupled loop
};

/// The default strategy set: Optimal, Lower bound, Mean, Upper bound.
std::vector<Strategy> standard_strategies(const PricingProblem& problem);

std::vector<StrategyRow> impact_report(const PricingProblem& problem, const PowerNetwork& power,
                                       const std::vector<Strategy>& strategies,
                                       const CoupledConfig& config, int threads = 1);

/// Columns: strategy, profit, pn_loss_mw, tn_cost.
void write_impact_csv(std::ostream& out, const std::vector<StrategyRow>& rows);

}  // namespace chargeprice
