#pragma once

#include <Eigen/Dense>

namespace chargeprice {

struct DirectionResult {
  Eigen::VectorXd h;            // price direction
  double z = 0.0;               // guaranteed ascent margin, g^T h >= z
  double objective = 0.0;       // z - gamma/2 h^T Q h
  Eigen::VectorXd multipliers;  // [gradient row, upper rows, lower rows]
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// Norm-relaxed feasible direction: maximizes z - gamma/2 h^T Q h subject to
/// z <= g^T h, h_i + z <= upper_i - price_i and -h_i + z <= price_i - lower_i.
/// Solved by a primal active-set method started at h = 0.
DirectionResult feasible_direction(const Eigen::VectorXd& price, const Eigen::VectorXd& grad,
                                   const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                   double gamma, const Eigen::MatrixXd& metric,
                                   int max_iter = 500);

}  // namespace chargeprice
