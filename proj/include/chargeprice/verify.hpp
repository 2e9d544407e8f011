#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chargeprice/pricing.hpp"

namespace chargeprice {

struct GridAxis {
  double lo = 0.0, hi = 0.0, step = 1.0;
  int count() const;
  double at(int i) const;
};

struct GridSpec {
  std::vector<GridAxis> axes;  // one per owned price coordinate
  long long cap = 1'000'000;

  long long size() const;
  void validate(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) const;
};

/// `points` evenly spaced values per coordinate, bounds included.
GridSpec uniform_grid(const PricingProblem& problem, int points);

struct GridResult {
  std::vector<int> shape;
  Eigen::MatrixXd prices;   // one row per grid point, first coordinate slowest
  Eigen::VectorXd profits;
  Eigen::VectorXd best_prices;
  double best_profit = 0.0;
  long long best_index = 0;
  int ue_solves = 0;
};

/// Solves the equilibrium at every grid point (cold start, so results do
/// not depend on the thread count). Ties go to the lexicographically
/// smallest price vector.
GridResult grid_enumerate(const PricingProblem& problem, const GridSpec& grid, int threads = 1);

/// Header lambda_1..lambda_n,profit.
void write_landscape_csv(std::ostream& out, const GridResult& grid);

/// Distinct end points of steepest-ascent walks over the grid (all 3^n - 1
/// neighbours), with plateau-connected end points merged. Returns grid
/// indices ordered by decreasing profit.
std::vector<long long> local_maxima(const GridResult& grid, double plateau_tol = 1e-9);

/// Central differences of every station's charging flow with respect to
/// each owned price: stations x owned.
Eigen::MatrixXd fd_gradient(const PricingProblem& problem, const Eigen::VectorXd& prices, double delta = 1e-3,
                            int threads = 1, double ue_tol = 1e-10);

struct GradientComparison {
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
  int failures = 0;
  bool pass = true;
  double delta = 0.0;
  bool richardson = false;
  Eigen::MatrixXd reference;
};

/// Entry-wise |a - b| <= max(abs_tol, rel_tol |b|).
GradientComparison compare_gradients(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& reference,
                                     double abs_tol = 2e-3, double rel_tol = 1e-2);

/// Finite-difference check at `delta`; on disagreement repeats at delta/10
/// and compares against the Richardson-extrapolated difference.
GradientComparison fd_check(const PricingProblem& problem, const Eigen::VectorXd& prices,
                            const Eigen::MatrixXd& analytic, double delta = 1e-3, int threads = 1,
                            double abs_tol = 2e-3, double rel_tol = 1e-2);

struct CertificateCheck {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct UECertificate {
  std::vector<CertificateCheck> checks;
  bool pass() const;
};

struct CertificateTolerances {
  double flow_floor = 1e-12;    // negative flow allowance
  double demand = 1e-6;
  double stationarity = 1e-6;
  double dual = 1e-6;           // pi >= -dual
  double complementarity = 1e-6;  // relative to ||c|| ||f||
  double used_band = 1e-4;      // used path cost within band * mu of the minimum
  double flow_eps = 1e-6;
};

/// Equilibrium optimality conditions re-derived from the path flows, the
/// stored path costs and OD minima: feasibility, stationarity, dual
/// feasibility, complementarity and the used-path cost band.
UECertificate certify_ue(const UESolution& sol, const TransportNetwork& net, const ODDemand& demand,
                         const PathStructure& ps, const ModelParams& params, std::span<const double> prices,
                         const CertificateTolerances& tol = {});

}  // namespace chargeprice
