#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "chargeprice/error.hpp"
#include "chargeprice/network.hpp"
#include "chargeprice/paths.hpp"
#include "chargeprice/ue.hpp"

namespace chargeprice {

struct SensitivityOptions {
  double cost_eps_rel = 1e-4;  // EP band, relative to the OD minimum
  double flow_eps = 1e-6;
  double rank_tol = 1e-8;      // relative to the largest pivot
  double reg_eps = 1e-6;       // floor on cost-Jacobian diagonal entries
  double min_rcond = 1e-14;
  /// Scan order for ELI selection over EP positions; ascending by default.
  std::optional<std::vector<int>> eli_order;
};

/// Path partition produced by NEP removal and ELI selection, with the
/// incidence blocks restricted to the ELI paths.
struct EquilibratedSets {
  std::vector<int> ep, nep, eli, eld;  // path indices
  std::vector<int> pinned;             // paths of zero-demand OD pairs
  std::vector<int> active_ods;         // OD rows kept (positive demand)
  std::vector<int> zero_flow_ep;       // EP paths with flow <= flow_eps
  Eigen::MatrixXd delta1;   // generalized arcs x ELI
  Eigen::MatrixXd lambda1;  // active ODs x ELI
  Eigen::MatrixXd charge1;  // stations x ELI
};

/// J = [[D1^T diag D1, -L1^T], [L1, 0]] and J_lambda = [D1_fcs^T G; 0].
struct KktJacobians {
  Eigen::MatrixXd jacobian;
  Eigen::MatrixXd jacobian_price;
};

struct SensitivityResult {
  Eigen::MatrixXd grad;       // stations x owned prices
  Eigen::MatrixXd path_grad;  // ELI paths x owned prices
  Eigen::MatrixXd mu_grad;    // active ODs x owned prices
  double rcond = 0.0;
  int num_ep = 0, num_nep = 0, num_eli = 0, num_eld = 0;
  int num_zero_flow_ep = 0;
  std::vector<int> eli;
};

/// Diagonal of the generalized cost Jacobian, floored at reg_eps.
Eigen::VectorXd cost_jacobian_diag(const UESolution& sol, const TransportNetwork& net,
                                   const ModelParams& params, double reg_eps = 1e-6);

/// EP/NEP split. Paths of zero-demand OD pairs are set aside entirely
/// (their flows are pinned at zero), as is their OD row.
EquilibratedSets classify_paths(const UESolution& sol, const PathStructure& ps,
                                const ODDemand& demand, double cost_eps_rel = 1e-4,
                                double flow_eps = 1e-6);

/// Maximal linearly independent subset of the columns of `m`, scanning
/// columns in `order` and keeping a column when its residual against the
/// kept ones exceeds rank_tol times the largest pivot so far. Returned in
/// ascending column order.
std::vector<int> independent_columns(const Eigen::MatrixXd& m, std::span<const int> order,
                                     double rank_tol);

/// ELI/ELD step; fills the restricted blocks of `es`.
void select_eli(EquilibratedSets& es, const PathStructure& ps, double rank_tol = 1e-8,
                std::optional<std::vector<int>> order = std::nullopt);

/// d c_fcs / d lambda: E where station m is the k-th owned station.
Eigen::MatrixXd price_selector(int num_stations, std::span<const int> owned, double charge_energy);

KktJacobians assemble_jacobians(const EquilibratedSets& es, const Eigen::VectorXd& diag,
                                const Eigen::MatrixXd& selector);

/// Implicit-function solve J [df; dmu] = -J_lambda.
SensitivityResult gradient(const EquilibratedSets& es, const KktJacobians& kkt,
                           double min_rcond = 1e-14);

/// Splits a classified and ELI-reduced set into its EV and GV parts.
std::pair<EquilibratedSets, EquilibratedSets> split_by_class(const EquilibratedSets& es,
                                                             const PathStructure& ps,
                                                             const ODDemand& demand);

/// Two-class bordered system; returns the EV charging-flow gradient.
SensitivityResult gradient_mixed(const EquilibratedSets& ev, const EquilibratedSets& gv,
                                 const Eigen::VectorXd& diag, const Eigen::MatrixXd& selector,
                                 double min_rcond = 1e-14);

/// Full pipeline from a converged equilibrium.
SensitivityResult analyze(const TransportNetwork& net, const ODDemand& demand,
                          const PathStructure& ps, const ModelParams& params,
                          const UESolution& sol, std::span<const int> owned,
                          const SensitivityOptions& options = {});

}  // namespace chargeprice
