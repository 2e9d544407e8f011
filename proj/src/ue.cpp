#include "chargeprice/ue.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace chargeprice {

namespace {

// Per-generalized-arc cost model: omega * t(x) + toll.
struct ArcModel {
  VolumeDelay delay;
  double omega = 1.0;
  double toll = 0.0;

  double cost(double x) const { return omega * delay.value(x) + toll; }
  double slope(double x) const { return omega * delay.derivative(x); }
  double potential(double x) const { return omega * delay.integral(x) + toll * x; }
  double potential_delta(double x, double dx) const {
    return omega * delay.integral_delta(x, dx) + toll * dx;
  }
};

std::vector<ArcModel> arc_models(const TransportNetwork& net, const ModelParams& params,
                                 std::span<const double> prices) {
  if (static_cast<int>(prices.size()) != net.num_stations())
    throw ValidationError("price vector has " + std::to_string(prices.size()) + " entries, expected " +
                          std::to_string(net.num_stations()));
  std::vector<ArcModel> models;
  models.reserve(net.num_arcs() + net.num_stations());
  for (int a = 0; a < net.num_arcs(); ++a) models.push_back({net.arc_delay(a), params.time_value, 0.0});
  for (int m = 0; m < net.num_stations(); ++m)
    models.push_back({net.station_delay(m), params.time_value, params.charge_energy * prices[m]});
  return models;
}

double path_cost(const std::vector<ArcModel>& models, const std::vector<int>& garcs,
                 const Eigen::VectorXd& x) {
  double c = 0.0;
  for (int e : garcs) c += models[e].cost(x[e]);
  return c;
}

}  // namespace

Eigen::VectorXd generalized_flows(const PathStructure& ps, const Eigen::VectorXd& path_flows) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(ps.num_generalized());
  for (int p = 0; p < ps.size(); ++p)
    for (int e : ps.generalized_arcs[p]) x[e] += path_flows[p];
  return x;
}

GeneralizedCost generalized_cost(const TransportNetwork& net, const PathStructure& ps,
                                 const ModelParams& params, std::span<const double> prices,
                                 const Eigen::VectorXd& gflows) {
  const auto models = arc_models(net, params, prices);
  GeneralizedCost gc;
  gc.stacked.resize(ps.num_generalized());
  for (int e = 0; e < ps.num_generalized(); ++e) gc.stacked[e] = models[e].cost(gflows[e]);
  gc.arc_costs = gc.stacked.head(ps.num_arcs);
  gc.station_costs = gc.stacked.tail(ps.num_stations);
  gc.path_costs.resize(ps.size());
  for (int p = 0; p < ps.size(); ++p) {
    double c = 0.0;
    for (int e : ps.generalized_arcs[p]) c += gc.stacked[e];
    gc.path_costs[p] = c;
  }
  return gc;
}

double beckmann_objective(const Eigen::VectorXd& path_flows, const TransportNetwork& net,
                          const PathStructure& ps, const ModelParams& params,
                          std::span<const double> prices) {
  const auto models = arc_models(net, params, prices);
  const Eigen::VectorXd x = generalized_flows(ps, path_flows);
  double value = 0.0;
  for (int e = 0; e < ps.num_generalized(); ++e) value += models[e].potential(x[e]);
  return value;
}

void refresh_solution(UESolution& sol, const TransportNetwork& net, const ODDemand& demand,
                      const PathStructure& ps, const ModelParams& params,
                      std::span<const double> prices) {
  const auto models = arc_models(net, params, prices);
  const Eigen::VectorXd x = generalized_flows(ps, sol.path_flows);
  sol.arc_flows = x.head(ps.num_arcs);
  sol.charge_flows = x.tail(ps.num_stations);
  sol.path_costs.resize(ps.size());
  for (int p = 0; p < ps.size(); ++p) sol.path_costs[p] = path_cost(models, ps.generalized_arcs[p], x);
  sol.od_min_costs.resize(ps.num_ods());
  double total = 0.0, excess = 0.0;
  for (int w = 0; w < ps.num_ods(); ++w) {
    double mu = std::numeric_limits<double>::infinity();
    for (int p : ps.od_paths[w]) mu = std::min(mu, sol.path_costs[p]);
    sol.od_min_costs[w] = mu;
    for (int p : ps.od_paths[w]) {
      total += sol.path_costs[p] * sol.path_flows[p];
      excess += sol.path_flows[p] * (sol.path_costs[p] - mu);
    }
  }
  (void)demand;
  sol.rel_gap = total > 0.0 ? excess / total : 0.0;
  double value = 0.0;
  for (int e = 0; e < ps.num_generalized(); ++e) value += models[e].potential(x[e]);
  sol.beckmann = value;
}

UESolution solve_ue(const TransportNetwork& net, const ODDemand& demand, const PathStructure& ps,
                    const ModelParams& params, std::span<const double> prices,
                    const UEOptions& options) {
  const auto models = arc_models(net, params, prices);
  const int num_paths = ps.size();
  const int num_garcs = ps.num_generalized();
  if (ps.num_ods() != demand.size()) throw ValidationError("path structure does not match the OD set");

  Eigen::VectorXd f = Eigen::VectorXd::Zero(num_paths);
  if (options.initial_flows) {
    f = *options.initial_flows;
    if (f.size() != num_paths) throw ValidationError("initial flow vector has the wrong size");
    for (int w = 0; w < ps.num_ods(); ++w) {
      double sum = 0.0;
      for (int p : ps.od_paths[w]) {
        if (!(f[p] >= 0.0)) throw ValidationError("initial flows must be nonnegative");
        sum += f[p];
      }
      if (std::abs(sum - demand.pairs[w].demand) > 1e-9 * std::max(1.0, demand.pairs[w].demand))
        throw ValidationError("initial flows do not meet OD demand");
    }
  } else {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(num_garcs);
    for (int w = 0; w < ps.num_ods(); ++w) {
      if (ps.od_paths[w].empty()) throw ValidationError("OD pair without paths");
      int best = ps.od_paths[w].front();
      double best_cost = path_cost(models, ps.generalized_arcs[best], zero);
      for (int p : ps.od_paths[w]) {
        const double c = path_cost(models, ps.generalized_arcs[p], zero);
        if (c < best_cost) best = p, best_cost = c;
      }
      f[best] = demand.pairs[w].demand;
    }
  }

  Eigen::VectorXd x = generalized_flows(ps, f);
  auto potential = [&] {
    double v = 0.0;
    for (int e = 0; e < num_garcs; ++e) v += models[e].potential(x[e]);
    return v;
  };
  auto gap = [&] {
    double total = 0.0, excess = 0.0;
    for (int w = 0; w < ps.num_ods(); ++w) {
      double mu = std::numeric_limits<double>::infinity();
      double used = 0.0, used_cost = 0.0;
      for (int p : ps.od_paths[w]) {
        const double c = path_cost(models, ps.generalized_arcs[p], x);
        mu = std::min(mu, c);
        if (f[p] > 0.0) {
          total += c * f[p];
          used_cost += c * f[p];
          used += f[p];
        }
      }
      excess += used_cost - used * mu;
    }
    return total > 0.0 ? std::max(0.0, excess) / total : 0.0;
  };

  UESolution sol;
  if (options.record_history) sol.history.push_back(potential());

  constexpr double armijo = 1e-4;
  constexpr int max_halvings = 60;
  std::vector<double> dx(num_garcs, 0.0);
  std::vector<int> touched;
  std::vector<char> in_touched(num_garcs, 0);
  std::vector<double> cost, step;
  std::vector<char> in_best(num_garcs, 0);

  double rel_gap = gap();
  int iter = 0;
  while (rel_gap > options.tol && iter < options.max_iter) {
    ++iter;
    for (int w = 0; w < ps.num_ods(); ++w) {
      const auto& members = ps.od_paths[w];
      if (members.size() < 2 || demand.pairs[w].demand <= 0.0) continue;
      const int n = static_cast<int>(members.size());
      cost.assign(n, 0.0);
      int best = 0;
      for (int i = 0; i < n; ++i) {
        cost[i] = path_cost(models, ps.generalized_arcs[members[i]], x);
        if (cost[i] < cost[best]) best = i;
      }
      const int pbest = members[best];
      for (int e : ps.generalized_arcs[pbest]) in_best[e] = 1;

      // Newton-scaled shift from each costlier path onto the cheapest one.
      step.assign(n, 0.0);
      bool any = false;
      for (int i = 0; i < n; ++i) {
        const int p = members[i];
        if (i == best || f[p] <= 0.0 || cost[i] <= cost[best]) continue;
        double curvature = 0.0;
        for (int e : ps.generalized_arcs[p])
          if (!in_best[e]) curvature += models[e].slope(x[e]);
        for (int e : ps.generalized_arcs[pbest])
          if (!std::binary_search(ps.generalized_arcs[p].begin(), ps.generalized_arcs[p].end(), e))
            curvature += models[e].slope(x[e]);
        step[i] = (cost[i] - cost[best]) / std::max(curvature, 1e-12);
        any = true;
      }
      for (int e : ps.generalized_arcs[pbest]) in_best[e] = 0;
      if (!any) continue;

      double s = 1.0;
      for (int h = 0; h < max_halvings; ++h, s *= 0.5) {
        for (int e : touched) dx[e] = 0.0, in_touched[e] = 0;
        touched.clear();
        double moved = 0.0, slope = 0.0;
        auto add = [&](int p, double delta) {
          for (int e : ps.generalized_arcs[p]) {
            if (!in_touched[e]) in_touched[e] = 1, touched.push_back(e);
            dx[e] += delta;
          }
        };
        for (int i = 0; i < n; ++i) {
          if (step[i] == 0.0) continue;
          const int p = members[i];
          const double delta = -std::min(f[p], s * step[i]);
          moved -= delta;
          slope += (cost[i] - cost[best]) * delta;
          add(p, delta);
        }
        add(pbest, moved);
        double change = 0.0;
        for (int e : touched) change += models[e].potential_delta(x[e], dx[e]);
        if (change <= armijo * slope) {
          for (int i = 0; i < n; ++i) {
            if (step[i] == 0.0) continue;
            const int p = members[i];
            f[p] -= std::min(f[p], s * step[i]);
          }
          f[pbest] += moved;
          for (int e : touched) x[e] += dx[e];
          break;
        }
      }
      for (int e : touched) dx[e] = 0.0, in_touched[e] = 0;
      touched.clear();
    }
    // Re-accumulate to keep x exactly consistent with f.
    x = generalized_flows(ps, f);
    if (options.record_history) sol.history.push_back(potential());
    rel_gap = gap();
  }

  sol.path_flows = f;
  sol.iterations = iter;
  refresh_solution(sol, net, demand, ps, params, prices);
  if (rel_gap > options.tol)
    throw UEConvergenceError("max iterations exceeded (relative gap " + std::to_string(sol.rel_gap) + ")",
                             sol);
  return sol;
}

WardropResidual wardrop_residual(const UESolution& sol, const PathStructure& ps,
                                 const ODDemand& demand, double flow_eps) {
  WardropResidual r;
  r.max_overcost = 0.0;
  for (int w = 0; w < ps.num_ods(); ++w) {
    double sum = 0.0;
    for (int p : ps.od_paths[w]) {
      sum += sol.path_flows[p];
      if (sol.path_flows[p] > flow_eps)
        r.max_overcost = std::max(r.max_overcost, sol.path_costs[p] - sol.od_min_costs[w]);
    }
    r.max_demand_violation = std::max(r.max_demand_violation, std::abs(sum - demand.pairs[w].demand));
  }
  return r;
}

}  // namespace chargeprice
