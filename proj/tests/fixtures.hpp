#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "chargeprice/config.hpp"
#include "chargeprice/paths.hpp"
#include "chargeprice/pricing.hpp"
#include "chargeprice/tntp.hpp"

namespace fixtures {

using namespace chargeprice;

inline std::string data_path(const std::string& rel) { return std::string(CHARGEPRICE_DATA_DIR) + "/" + rel; }

/// A transport instance that owns everything a PricingProblem points to.
/// Held by unique_ptr so the borrowed pointers stay valid.
struct Instance {
  TransportNetwork net;
  ODDemand demand;
  PathStructure paths;
  ModelParams params;
  int k_paths = 3;
  UEOptions ue;

  void build() {
    net.validate();
    demand.validate(net);
    paths = generate_paths(net, demand, k_paths);
  }

  PricingProblem problem() const {
    PricingProblem p;
    p.network = &net;
    p.demand = &demand;
    p.paths = &paths;
    p.params = params;
    p.prices = net.default_prices();
    p.owned = net.owned_stations();
    p.ue = ue;
    return p;
  }

  std::vector<double> prices() const { return net.default_prices(); }
};

/// Nodes are external ids 1..n.
inline void add_nodes(TransportNetwork& net, int n) {
  for (int i = 1; i <= n; ++i) net.node_ids.push_back(i);
}

inline void add_arc(TransportNetwork& net, int tail, int head, double t0, double cap) {
  net.arcs.push_back({net.node_index(tail), net.node_index(head), t0, cap});
}

inline void add_station(TransportNetwork& net, int node, double t0, double wait, double cap, bool owned,
                        double price) {
  net.stations.push_back({net.node_index(node), t0, wait, cap, owned, price});
}

inline void add_od(ODDemand& d, const TransportNetwork& net, int o, int t, double demand,
                   VehicleClass c = VehicleClass::ev) {
  d.pairs.push_back({net.node_index(o), net.node_index(t), demand, c});
}

/// Five-node network with stations at nodes 2 (owned) and 3 (rival); every
/// generalized cost is 1 + x, unit prices, demands 1.5 and 2.0.
inline std::unique_ptr<Instance> illustrative() {
  auto in = std::make_unique<Instance>();
  auto& net = in->net;
  net.delay_form = DelayForm::linear;
  add_nodes(net, 5);
  add_arc(net, 1, 2, 1, 1);
  add_arc(net, 2, 4, 1, 1);
  add_arc(net, 1, 3, 1, 1);
  add_arc(net, 3, 5, 1, 1);
  add_arc(net, 2, 5, 1, 1);
  add_arc(net, 3, 4, 1, 1);
  add_station(net, 2, 1, 1, 1, true, 1);
  add_station(net, 3, 1, 1, 1, false, 1);
  add_od(in->demand, net, 1, 4, 1.5);
  add_od(in->demand, net, 1, 5, 2.0);
  in->params = {1.0, 1.0, 0.0, 3.0};
  in->k_paths = 2;
  in->ue.tol = 1e-12;
  in->build();
  return in;
}

/// The shipped Nguyen-Dupuis fixture, read through its run configuration.
inline std::unique_ptr<Instance> nguyen_dupuis() {
  const RunConfig cfg = load_config(data_path("nguyen_dupuis/run.cfg"));
  auto in = std::make_unique<Instance>();
  std::tie(in->net, in->demand) = load_tntp(cfg.network, cfg.trips, cfg.fcs);
  in->params = cfg.params;
  in->k_paths = cfg.k_paths;
  in->ue = cfg.ue;
  in->build();
  return in;
}

/// Origin 1 reaches 3 either through node 2 over two pairs of parallel
/// arcs (rival station at 2, four linearly dependent charging paths) or
/// through node 4 (owned station).
inline std::unique_ptr<Instance> dependent_columns() {
  auto in = std::make_unique<Instance>();
  auto& net = in->net;
  net.delay_form = DelayForm::linear;
  add_nodes(net, 4);
  add_arc(net, 1, 2, 1.0, 1.0);
  add_arc(net, 1, 2, 1.0, 1.0);
  add_arc(net, 2, 3, 1.0, 1.0);
  add_arc(net, 2, 3, 1.0, 1.0);
  add_arc(net, 1, 4, 1.5, 2.0);
  add_arc(net, 4, 3, 1.5, 2.0);
  add_station(net, 2, 1.0, 1.0, 2.0, false, 1.0);
  add_station(net, 4, 1.0, 1.0, 2.0, true, 1.0);
  add_od(in->demand, net, 1, 3, 4.0);
  in->params = {1.0, 1.0, 0.0, 3.0};
  in->k_paths = 5;
  in->ue.tol = 1e-12;
  in->build();
  return in;
}

/// Illustrative EV network plus a gasoline class. With `disjoint` the GV
/// pair travels on its own nodes 6 -> 7; otherwise it shares the EV roads.
inline std::unique_ptr<Instance> mixed(double gv_demand, bool disjoint) {
  auto in = std::make_unique<Instance>();
  auto& net = in->net;
  net.delay_form = DelayForm::linear;
  add_nodes(net, disjoint ? 8 : 5);
  add_arc(net, 1, 2, 1, 1);
  add_arc(net, 2, 4, 1, 1);
  add_arc(net, 1, 3, 1, 1);
  add_arc(net, 3, 5, 1, 1);
  add_arc(net, 2, 5, 1, 1);
  add_arc(net, 3, 4, 1, 1);
  if (disjoint) {
    add_arc(net, 6, 7, 1, 1);
    add_arc(net, 6, 8, 0.5, 1);
    add_arc(net, 8, 7, 0.5, 2);
  }
  add_station(net, 2, 1, 1, 1, true, 1);
  add_station(net, 3, 1, 1, 1, false, 1);
  add_od(in->demand, net, 1, 4, 1.5);
  add_od(in->demand, net, 1, 5, 2.0);
  if (disjoint) add_od(in->demand, net, 6, 7, gv_demand, VehicleClass::gv);
  else add_od(in->demand, net, 1, 4, gv_demand, VehicleClass::gv);
  in->params = {1.0, 1.0, 0.0, 3.0};
  in->k_paths = 2;
  in->ue.tol = 1e-12;
  in->build();
  return in;
}

/// Origin 1 to destination 4 through node 2 or node 3, one station on each
/// branch, identical parameters.
inline std::unique_ptr<Instance> symmetric_pair() {
  auto in = std::make_unique<Instance>();
  auto& net = in->net;
  net.delay_form = DelayForm::linear;
  add_nodes(net, 4);
  add_arc(net, 1, 2, 1, 2);
  add_arc(net, 2, 4, 1, 2);
  add_arc(net, 1, 3, 1, 2);
  add_arc(net, 3, 4, 1, 2);
  add_station(net, 2, 1, 1, 1, true, 2);
  add_station(net, 3, 1, 1, 1, true, 2);
  add_od(in->demand, net, 1, 4, 3.0);
  in->params = {1.0, 1.0, 0.0, 20.0};
  in->k_paths = 2;
  in->ue.tol = 1e-12;
  in->build();
  return in;
}

/// Random strongly connected BPR network with two owned and two rival
/// stations; regenerated from the next seed until every EV pair has a
/// charging path.
inline std::unique_ptr<Instance> random_small(std::uint64_t seed) {
  for (std::uint64_t s = seed;; s += 1000003) {
    std::mt19937_64 rng(s);
    std::uniform_int_distribution<int> nodes_d(6, 9);
    std::uniform_real_distribution<double> t_d(0.05, 0.3), cap_d(20, 60), wait_d(0.3, 1.5), dem_d(15, 50);
    auto in = std::make_unique<Instance>();
    auto& net = in->net;
    const int n = nodes_d(rng);
    add_nodes(net, n);
    // A ring keeps the graph strongly connected; chords add route choice.
    for (int i = 1; i <= n; ++i) add_arc(net, i, i % n + 1, t_d(rng), cap_d(rng));
    std::uniform_int_distribution<int> node_d(1, n);
    for (int c = 0; c < n; ++c) {
      const int a = node_d(rng), b = node_d(rng);
      if (a != b) add_arc(net, a, b, t_d(rng), cap_d(rng));
    }
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i + 1;
    std::shuffle(order.begin(), order.end(), rng);
    for (int m = 0; m < 4; ++m) add_station(net, order[m], 0.5, wait_d(rng), cap_d(rng), m < 2, 215);
    for (int w = 0; w < 3; ++w) {
      int o = node_d(rng), t = node_d(rng);
      while (t == o) t = node_d(rng);
      add_od(in->demand, net, o, t, dem_d(rng));
    }
    in->params = {0.05, 2.0, 200.0, 230.0};
    in->k_paths = 3;
    try {
      in->build();
    } catch (const ValidationError&) {
      continue;
    }
    return in;
  }
}

/// Random feasible path flows: each OD's demand split by uniform weights.
inline Eigen::VectorXd random_feasible(const Instance& in, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(in.paths.size());
  for (int w = 0; w < in.paths.num_ods(); ++w) {
    double total = 0.0;
    for (int p : in.paths.od_paths[w]) total += (f[p] = u(rng));
    for (int p : in.paths.od_paths[w]) f[p] *= in.demand.pairs[w].demand / total;
  }
  return f;
}

/// Every shipped and synthetic transport fixture.
inline std::vector<std::unique_ptr<Instance>> all() {
  std::vector<std::unique_ptr<Instance>> v;
  v.push_back(illustrative());
  v.push_back(nguyen_dupuis());
  v.push_back(dependent_columns());
  v.push_back(mixed(1.0, false));
  v.push_back(mixed(1.0, true));
  v.push_back(symmetric_pair());
  v.push_back(random_small(7));
  return v;
}

}  // namespace fixtures
