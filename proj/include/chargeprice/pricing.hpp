#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chargeprice/error.hpp"
#include "chargeprice/network.hpp"
#include "chargeprice/paths.hpp"
#include "chargeprice/qp.hpp"
#include "chargeprice/sensitivity.hpp"
#include "chargeprice/ue.hpp"

namespace chargeprice {

/// Everything needed to evaluate the provider's profit at a price vector.
/// Pointers are borrowed and must outlive the problem.
struct PricingProblem {
  const TransportNetwork* network = nullptr;
  const ODDemand* demand = nullptr;
  const PathStructure* paths = nullptr;
  ModelParams params;
  std::vector<double> prices;  // every station; owned entries are overwritten
  std::vector<int> owned;      // optimized stations, in price-coordinate order
  std::optional<Eigen::VectorXd> electricity_cost;  // per owned station
  UEOptions ue;
  SensitivityOptions sensitivity;

  int dimension() const { return static_cast<int>(owned.size()); }
  std::vector<double> full_prices(const Eigen::VectorXd& owned_prices) const;
  Eigen::VectorXd lower() const;
  Eigen::VectorXd upper() const;
  Eigen::VectorXd midpoint() const;
  void validate() const;
};

/// Equilibrium and profit at one price vector.
struct PricePoint {
  Eigen::VectorXd prices;       // owned
  UESolution ue;
  Eigen::VectorXd owned_flows;  // charging flow at each owned station
  double profit = 0.0;
};

double profit(const Eigen::VectorXd& prices, const Eigen::VectorXd& owned_flows,
              double charge_energy, const std::optional<Eigen::VectorXd>& electricity_cost = {});

/// E [grad^T (prices - electricity_cost) + owned_flows], where
/// grad(i, k) = d owned_flow_i / d price_k.
Eigen::VectorXd profit_gradient(const Eigen::VectorXd& prices, const Eigen::VectorXd& owned_flows,
                                const Eigen::MatrixXd& grad, double charge_energy,
                                const std::optional<Eigen::VectorXd>& electricity_cost = {});

/// Solves the equilibrium at `prices`, warm-started from `warm` when given.
PricePoint evaluate(const PricingProblem& problem, const Eigen::VectorXd& prices,
                    const UESolution* warm = nullptr);

/// Owned-station slice of the charging-flow gradient at a solved point.
SensitivityResult owned_sensitivity(const PricingProblem& problem, const PricePoint& point,
                                    Eigen::MatrixXd& owned_grad);

struct GDGSAConfig {
  double gamma = 2.0;
  std::optional<Eigen::MatrixXd> metric;  // identity when unset
  double alpha0 = 1.0;
  int max_multiplier = 50;
  double tol = 1e-3;
  int max_iter = 200;
  int threads = 1;  // stepsize trials evaluated concurrently

  void validate(int dimension) const;
};

struct StepSearch {
  bool accepted = false;
  double alpha = 0.0;
  int multiplier = 0;
  int trials = 0;
  std::optional<PricePoint> point;
};

/// Tries alpha = k alpha0 for k = 1, 2, ... while each trial stays in
/// bounds and strictly beats the previous one (the first beats the current
/// point); keeps the last such k.
StepSearch stepsize_search(const PricingProblem& problem, const PricePoint& current,
                           const Eigen::VectorXd& direction, double alpha0, int max_multiplier,
                           int threads = 1);

struct PriceIterate {
  int iteration = 0;
  Eigen::VectorXd prices;
  double profit = 0.0;
  Eigen::VectorXd direction;
  double margin = 0.0;  // z of the direction subproblem
  double alpha = 0.0;
  int num_ep = 0, num_nep = 0, num_eli = 0;
  int ue_iterations = 0;
  double seconds = 0.0;
};

struct PricingTrace {
  std::vector<PriceIterate> iterates;
  PricePoint final;
  std::string stop_reason;
  bool converged = false;
};

using IterateCallback = std::function<void(const PriceIterate&)>;

/// Sensitivity-driven feasible-direction ascent on the provider's profit.
PricingTrace gdgsa(const PricingProblem& problem, const Eigen::VectorXd& initial,
                   const GDGSAConfig& config, const IterateCallback& on_iterate = {});

/// Carries the last price vector when an outer cycle cap is hit.
class CycleCapError : public NumericalError {
 public:
  CycleCapError(const std::string& what, std::vector<double> last_prices)
      : NumericalError(what), last_prices_(std::move(last_prices)) {}
  const std::vector<double>& last_prices() const noexcept { return last_prices_; }

 private:
  std::vector<double> last_prices_;
};

struct CompetitionResult {
  std::vector<double> prices;  // every station
  std::vector<PricingTrace> last_traces;
  int cycles = 0;
  double last_change = 0.0;
};

/// Best-response rounds: each provider runs gdgsa on its own stations with
/// the rivals' prices held fixed, until no price moves more than
/// price_tol in a full cycle.
CompetitionResult gauss_seidel_competition(const PricingProblem& base,
                                           const std::vector<std::vector<int>>& providers,
                                           const GDGSAConfig& config, double price_tol = 1e-3,
                                           int max_cycles = 50);

}  // namespace chargeprice
