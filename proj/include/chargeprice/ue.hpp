#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "chargeprice/error.hpp"
#include "chargeprice/network.hpp"
#include "chargeprice/paths.hpp"

namespace chargeprice {

/// Costs of every generalized arc at a given flow, and the induced path costs.
struct GeneralizedCost {
  Eigen::VectorXd arc_costs;     // omega * t_a
  Eigen::VectorXd station_costs; // omega * t_fcs + E * lambda
  Eigen::VectorXd stacked;       // [arc_costs; station_costs]
  Eigen::VectorXd path_costs;    // Delta^T stacked
};

struct UESolution {
  Eigen::VectorXd path_flows;
  Eigen::VectorXd arc_flows;
  Eigen::VectorXd charge_flows;
  Eigen::VectorXd path_costs;
  Eigen::VectorXd od_min_costs;
  double beckmann = 0.0;
  double rel_gap = 0.0;
  int iterations = 0;
  std::vector<double> history;  // Beckmann value after each sweep, when recorded
};

struct UEOptions {
  double tol = 1e-8;       // relative duality gap
  int max_iter = 20000;    // sweeps over all OD pairs
  double flow_eps = 1e-6;
  bool record_history = false;
  /// Feasible starting path flows; defaults to all-or-nothing on the
  /// cheapest path at zero flow.
  std::optional<Eigen::VectorXd> initial_flows;
};

/// Thrown when the sweep cap is hit; carries the best iterate.
class UEConvergenceError : public NumericalError {
 public:
  UEConvergenceError(const std::string& what, UESolution best)
      : NumericalError(what), best_(std::move(best)) {}
  const UESolution& best() const noexcept { return best_; }

 private:
  UESolution best_;
};

/// Generalized arc flows x = Delta f, stacked roads first.
Eigen::VectorXd generalized_flows(const PathStructure& ps, const Eigen::VectorXd& path_flows);

GeneralizedCost generalized_cost(const TransportNetwork& net, const PathStructure& ps,
                                 const ModelParams& params, std::span<const double> prices,
                                 const Eigen::VectorXd& gflows);

/// Beckmann potential of a path-flow vector, using the closed-form
/// antiderivatives of the delay functions.
double beckmann_objective(const Eigen::VectorXd& path_flows, const TransportNetwork& net,
                          const PathStructure& ps, const ModelParams& params,
                          std::span<const double> prices);

/// Path-based user equilibrium by per-OD scaled gradient projection with
/// an Armijo rule on the Beckmann potential.
UESolution solve_ue(const TransportNetwork& net, const ODDemand& demand, const PathStructure& ps,
                    const ModelParams& params, std::span<const double> prices,
                    const UEOptions& options = {});

/// Fills arc/charge flows, costs, OD minima, Beckmann value and gap from
/// the path flows already stored in `sol`.
void refresh_solution(UESolution& sol, const TransportNetwork& net, const ODDemand& demand,
                      const PathStructure& ps, const ModelParams& params,
                      std::span<const double> prices);

struct WardropResidual {
  double max_overcost = 0.0;        // used paths above their OD minimum
  double max_demand_violation = 0.0;
};

WardropResidual wardrop_residual(const UESolution& sol, const PathStructure& ps,
                                 const ODDemand& demand, double flow_eps = 1e-6);

}  // namespace chargeprice
