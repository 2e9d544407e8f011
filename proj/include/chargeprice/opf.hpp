#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chargeprice/error.hpp"
#include "chargeprice/power.hpp"

namespace chargeprice {

struct OPFOptions {
  double gap_tol = 1e-10;   // barrier gap bound relative to max(1, |objective|)
  double barrier_growth = 10.0;
  int max_newton = 100;     // per centering step
  double tight_tol = 1e-4;  // cone slack above this raises a warning
};

struct OPFSolution {
  Eigen::VectorXd gen_p, gen_q;           // per generator
  double slack_p = 0.0, slack_q = 0.0;
  Eigen::VectorXd line_p, line_q, line_i; // sending-end flows, squared current
  Eigen::VectorXd voltage;                // squared voltage per bus
  Eigen::VectorXd lmp;                    // active-balance dual per bus, money per MWh
  Eigen::VectorXd lmp_reactive;
  Eigen::VectorXd cone_slack;             // U_from I - P^2 - Q^2 per line
  double objective = 0.0;
  double gap_bound = 0.0;
  int newton_steps = 0;
  std::vector<std::string> warnings;

  double max_cone_slack() const;
  /// Sum of r I over lines, MW.
  double line_loss(const PowerNetwork& net) const;
  /// Generation plus slack injection minus total load, MW.
  double supply_surplus(const PowerNetwork& net, const Eigen::VectorXd& extra_load) const;
};

/// DistFlow branch-flow OPF with the current equation relaxed to a rotated
/// second-order cone, solved by a primal log-barrier interior-point method
/// (equality-constrained Newton with infeasible start). `extra_load` is added
/// to the bus active loads (MW), e.g. charging demand.
OPFSolution solve_opf(const PowerNetwork& net, const Eigen::VectorXd& extra_load,
                      const OPFOptions& options = {});

}  // namespace chargeprice
