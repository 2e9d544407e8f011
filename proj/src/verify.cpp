#include "chargeprice/verify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>

#include "chargeprice/parallel.hpp"

namespace chargeprice {

int GridAxis::count() const {
  if (!(step > 0.0)) throw ValidationError("grid step must be positive");
  if (hi < lo) throw ValidationError("grid axis upper end below lower end");
  return static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
}

double GridAxis::at(int i) const { return std::min(lo + i * step, hi); }

long long GridSpec::size() const {
  long long n = axes.empty() ? 0 : 1;
  for (const auto& a : axes) {
    n *= a.count();
    if (n > cap) return n;
  }
  return n;
}

void GridSpec::validate(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) const {
  if (static_cast<Eigen::Index>(axes.size()) != lower.size())
    throw ValidationError("grid needs one axis per owned price, got " + std::to_string(axes.size()));
  for (std::size_t k = 0; k < axes.size(); ++k) {
    axes[k].count();
    if (axes[k].lo < lower[k] - 1e-12 || axes[k].hi > upper[k] + 1e-12)
      throw ValidationError("grid axis " + std::to_string(k + 1) + " leaves the price bounds");
  }
  const long long n = size();
  if (n > cap) throw ValidationError("grid too large: more than " + std::to_string(cap) + " points");
}

GridSpec uniform_grid(const PricingProblem& problem, int points) {
  if (points < 1) throw ValidationError("grid needs at least one point per axis");
  GridSpec spec;
  const Eigen::VectorXd lo = problem.lower(), hi = problem.upper();
  for (int k = 0; k < problem.dimension(); ++k) {
    const double step = points == 1 ? 1.0 : (hi[k] - lo[k]) / (points - 1);
    spec.axes.push_back({lo[k], points == 1 ? lo[k] : hi[k], step > 0.0 ? step : 1.0});
  }
  return spec;
}

GridResult grid_enumerate(const PricingProblem& problem, const GridSpec& grid, int threads) {
  problem.validate();
  grid.validate(problem.lower(), problem.upper());
  const int dim = problem.dimension();
  GridResult out;
  for (const auto& a : grid.axes) out.shape.push_back(a.count());
  const long long n = grid.size();
  out.prices.resize(n, dim);
  out.profits.resize(n);
  for (long long idx = 0; idx < n; ++idx) {
    long long rem = idx;
    for (int k = dim - 1; k >= 0; --k) {
      out.prices(idx, k) = grid.axes[k].at(static_cast<int>(rem % out.shape[k]));
      rem /= out.shape[k];
    }
  }
  parallel_for(static_cast<int>(n), threads, [&](int idx) {
    out.profits[idx] = evaluate(problem, out.prices.row(idx).transpose()).profit;
  });
  out.ue_solves = static_cast<int>(n);
  out.best_index = 0;
  for (long long idx = 1; idx < n; ++idx)
    if (out.profits[idx] > out.profits[out.best_index]) out.best_index = idx;
  out.best_prices = out.prices.row(out.best_index).transpose();
  out.best_profit = out.profits[out.best_index];
  return out;
}

void write_landscape_csv(std::ostream& out, const GridResult& grid) {
  const Eigen::Index dim = grid.prices.cols();
  for (Eigen::Index k = 0; k < dim; ++k) out << "lambda_" << k + 1 << ",";
  out << "profit\n" << std::setprecision(12);
  for (Eigen::Index i = 0; i < grid.prices.rows(); ++i) {
    for (Eigen::Index k = 0; k < dim; ++k) out << grid.prices(i, k) << ",";
    out << grid.profits[i] << "\n";
  }
}

std::vector<long long> local_maxima(const GridResult& grid, double plateau_tol) {
  const int dim = static_cast<int>(grid.shape.size());
  const long long n = grid.profits.size();
  std::vector<long long> stride(dim, 1);
  for (int k = dim - 2; k >= 0; --k) stride[k] = stride[k + 1] * grid.shape[k + 1];
  auto neighbours = [&](long long idx) {
    std::vector<long long> out;
    std::vector<int> coord(dim);
    long long rem = idx;
    for (int k = dim - 1; k >= 0; --k) {
      coord[k] = static_cast<int>(rem % grid.shape[k]);
      rem /= grid.shape[k];
    }
    long long combos = 1;
    for (int k = 0; k < dim; ++k) combos *= 3;
    for (long long c = 0; c < combos; ++c) {
      long long r = c, target = 0;
      bool ok = true, self = true;
      for (int k = 0; k < dim; ++k) {
        const int off = static_cast<int>(r % 3) - 1;
        r /= 3;
        if (off != 0) self = false;
        const int v = coord[k] + off;
        if (v < 0 || v >= grid.shape[k]) ok = false;
        target += v * stride[k];
      }
      if (ok && !self) out.push_back(target);
    }
    std::sort(out.begin(), out.end());
    return out;
  };

  std::vector<long long> uphill(n);
  for (long long i = 0; i < n; ++i) {
    uphill[i] = i;
    for (long long j : neighbours(i))
      if (grid.profits[j] > grid.profits[uphill[i]]) uphill[i] = j;
  }
  std::vector<char> terminal(n, 0);
  for (long long i = 0; i < n; ++i) {
    long long j = i;
    while (uphill[j] != j) j = uphill[j];
    terminal[j] = 1;
  }
  // Merge terminal points that touch on a plateau.
  std::vector<long long> label(n, -1), reps;
  for (long long i = 0; i < n; ++i) {
    if (!terminal[i] || label[i] >= 0) continue;
    reps.push_back(i);
    std::vector<long long> stack{i};
    label[i] = i;
    while (!stack.empty()) {
      const long long a = stack.back();
      stack.pop_back();
      for (long long b : neighbours(a))
        if (terminal[b] && label[b] < 0 &&
            std::abs(grid.profits[b] - grid.profits[a]) <= plateau_tol * std::max(1.0, std::abs(grid.profits[a]))) {
          label[b] = i;
          stack.push_back(b);
        }
    }
  }
  std::stable_sort(reps.begin(), reps.end(),
                   [&](long long a, long long b) { return grid.profits[a] > grid.profits[b]; });
  return reps;
}

Eigen::MatrixXd fd_gradient(const PricingProblem& problem, const Eigen::VectorXd& prices, double delta, int threads,
                            double ue_tol) {
  problem.validate();
  if (!(delta > 0.0)) throw ValidationError("finite-difference step must be positive");
  const Eigen::VectorXd lo = problem.lower(), hi = problem.upper();
  const int dim = problem.dimension();
  for (int k = 0; k < dim; ++k)
    if (prices[k] - delta < lo[k] - 1e-12 || prices[k] + delta > hi[k] + 1e-12)
      throw ValidationError("finite-difference stencil leaves the price bounds at coordinate " +
                            std::to_string(k + 1));
  PricingProblem sub = problem;
  sub.ue.tol = ue_tol;
  std::vector<Eigen::VectorXd> flows(2 * dim);
  parallel_for(2 * dim, threads, [&](int j) {
    Eigen::VectorXd p = prices;
    p[j / 2] += (j % 2 == 0 ? delta : -delta);
    flows[j] = evaluate(sub, p).ue.charge_flows;
  });
  Eigen::MatrixXd grad(problem.network->num_stations(), dim);
  for (int k = 0; k < dim; ++k) grad.col(k) = (flows[2 * k] - flows[2 * k + 1]) / (2.0 * delta);
  return grad;
}

GradientComparison compare_gradients(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& reference,
                                     double abs_tol, double rel_tol) {
  if (analytic.rows() != reference.rows() || analytic.cols() != reference.cols())
    throw ValidationError("gradient comparison: shape mismatch");
  GradientComparison c;
  c.reference = reference;
  for (Eigen::Index i = 0; i < analytic.rows(); ++i)
    for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
      const double err = std::abs(analytic(i, j) - reference(i, j));
      const double scale = std::abs(reference(i, j));
      c.max_abs_error = std::max(c.max_abs_error, err);
      if (scale > 0.0) c.max_rel_error = std::max(c.max_rel_error, err / scale);
      if (err > std::max(abs_tol, rel_tol * scale)) ++c.failures;
    }
  c.pass = c.failures == 0;
  return c;
}

GradientComparison fd_check(const PricingProblem& problem, const Eigen::VectorXd& prices,
                            const Eigen::MatrixXd& analytic, double delta, int threads, double abs_tol,
                            double rel_tol) {
  const Eigen::MatrixXd coarse = fd_gradient(problem, prices, delta, threads);
  GradientComparison c = compare_gradients(analytic, coarse, abs_tol, rel_tol);
  c.delta = delta;
  if (c.pass) return c;
  const Eigen::MatrixXd fine = fd_gradient(problem, prices, 0.1 * delta, threads);
  // Central differences have an O(delta^2) error; cancel it.
  const Eigen::MatrixXd extrapolated = (100.0 * fine - coarse) / 99.0;
  c = compare_gradients(analytic, extrapolated, abs_tol, rel_tol);
  c.delta = 0.1 * delta;
  c.richardson = true;
  return c;
}

bool UECertificate::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CertificateCheck& c) { return c.pass; });
}

UECertificate certify_ue(const UESolution& sol, const TransportNetwork& net, const ODDemand& demand,
                         const PathStructure& ps, const ModelParams& params, std::span<const double> prices,
                         const CertificateTolerances& tol) {
  UECertificate cert;
  auto add = [&](std::string name, double value, double threshold) {
    cert.checks.push_back({std::move(name), value, threshold, value <= threshold});
  };
  const Eigen::VectorXd& f = sol.path_flows;
  const Eigen::VectorXd& c = sol.path_costs;

  add("nonnegativity", std::max(0.0, -f.minCoeff()), tol.flow_floor);

  double demand_err = 0.0;
  for (int w = 0; w < ps.num_ods(); ++w) {
    double total = 0.0;
    for (int p : ps.od_paths[w]) total += f[p];
    demand_err = std::max(demand_err, std::abs(total - demand.pairs[w].demand));
  }
  add("demand", demand_err, tol.demand);

  // Path costs recomputed from the generalized arc costs at the implied flows.
  const GeneralizedCost gc = generalized_cost(net, ps, params, prices, generalized_flows(ps, f));
  add("stationarity", (gc.path_costs - c).lpNorm<Eigen::Infinity>(), tol.stationarity);

  Eigen::VectorXd reduced(ps.size());
  for (int w = 0; w < ps.num_ods(); ++w)
    for (int p : ps.od_paths[w]) reduced[p] = c[p] - sol.od_min_costs[w];
  add("dual feasibility", std::max(0.0, -reduced.minCoeff()), tol.dual);

  const double scale = std::max(c.norm() * f.norm(), 1e-300);
  add("complementarity", std::abs(reduced.dot(f)) / scale, tol.complementarity);

  double band = 0.0;
  for (int w = 0; w < ps.num_ods(); ++w)
    for (int p : ps.od_paths[w])
      if (f[p] > tol.flow_eps)
        band = std::max(band, reduced[p] / std::max(std::abs(sol.od_min_costs[w]), 1e-300));
  add("used path band", band, tol.used_band);
  return cert;
}

}  // namespace chargeprice
