#include "chargeprice/paths.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <set>
#include <string>

#include "chargeprice/error.hpp"

namespace chargeprice {

namespace {

struct Candidate {
  double cost;
  std::vector<int> arcs;
  bool operator<(const Candidate& o) const {
    if (cost != o.cost) return cost < o.cost;
    return arcs < o.arcs;
  }
};

double walk_cost(const TransportNetwork& net, const std::vector<int>& arcs) {
  double c = 0.0;
  for (int a : arcs) c += net.arcs[a].free_time;
  return c;
}

// Shortest path avoiding the given arcs and nodes; empty when unreachable.
std::vector<int> dijkstra(const TransportNetwork& net, const std::vector<std::vector<int>>& out,
                          int source, int target, const std::vector<char>& arc_blocked,
                          const std::vector<char>& node_blocked) {
  const int n = net.num_nodes();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, inf);
  std::vector<int> pred(n, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[source] = 0.0;
  heap.emplace(0.0, source);
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    if (u == target) break;
    for (int a : out[u]) {
      if (arc_blocked[a]) continue;
      const int v = net.arcs[a].head;
      if (node_blocked[v]) continue;
      const double nd = d + net.arcs[a].free_time;
      if (nd < dist[v] || (nd == dist[v] && pred[v] >= 0 && a < pred[v])) {
        const bool improved = nd < dist[v];
        dist[v] = nd;
        pred[v] = a;
        if (improved) heap.emplace(nd, v);
      }
    }
  }
  if (dist[target] == inf) return {};
  std::vector<int> arcs;
  for (int v = target; v != source; v = net.arcs[pred[v]].tail) arcs.push_back(pred[v]);
  std::reverse(arcs.begin(), arcs.end());
  return arcs;
}

std::vector<int> walk_nodes(const TransportNetwork& net, int origin, const std::vector<int>& arcs) {
  std::vector<int> nodes{origin};
  for (int a : arcs) nodes.push_back(net.arcs[a].head);
  return nodes;
}

}  // namespace

Eigen::MatrixXd PathStructure::arc_path() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(num_arcs, size());
  for (int p = 0; p < size(); ++p)
    for (int a : paths[p].arcs) m(a, p) += 1.0;
  return m;
}

Eigen::MatrixXd PathStructure::charge_path() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(num_stations, size());
  for (int p = 0; p < size(); ++p)
    if (paths[p].station >= 0) m(paths[p].station, p) = 1.0;
  return m;
}

Eigen::MatrixXd PathStructure::od_path() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(num_ods(), size());
  for (int p = 0; p < size(); ++p) m(paths[p].od, p) = 1.0;
  return m;
}

void PathStructure::index(int num_od) {
  od_paths.assign(num_od, {});
  generalized_arcs.assign(paths.size(), {});
  for (int p = 0; p < size(); ++p) {
    od_paths[paths[p].od].push_back(p);
    auto& g = generalized_arcs[p];
    g = paths[p].arcs;
    if (paths[p].station >= 0) g.push_back(num_arcs + paths[p].station);
    std::sort(g.begin(), g.end());
  }
}

void PathStructure::validate(const TransportNetwork& net, const ODDemand& demand) const {
  if (num_arcs != net.num_arcs() || num_stations != net.num_stations())
    throw ValidationError("path structure does not match the network dimensions");
  if (num_ods() != demand.size()) throw ValidationError("path structure does not match the OD set");
  for (int p = 0; p < size(); ++p) {
    const Path& path = paths[p];
    const OdPair& od = demand.pairs.at(path.od);
    const std::string tag = "path " + std::to_string(p);
    if (path.arcs.empty()) throw ValidationError(tag + " is empty");
    int at = od.origin;
    bool visits_station = false;
    const int station_node = path.station >= 0 ? net.stations.at(path.station).node : -1;
    if (at == station_node) visits_station = true;
    for (int a : path.arcs) {
      if (net.arcs.at(a).tail != at) throw ValidationError(tag + " is not a connected walk");
      at = net.arcs[a].head;
      if (at == station_node) visits_station = true;
    }
    if (at != od.destination) throw ValidationError(tag + " does not end at its destination");
    if (od.vehicle == VehicleClass::ev && path.station < 0)
      throw ValidationError(tag + " is an EV path without a charging station");
    if (od.vehicle == VehicleClass::gv && path.station >= 0)
      throw ValidationError(tag + " is a GV path with a charging station");
    if (path.station >= 0 && !visits_station)
      throw ValidationError(tag + " charges at a station off its walk");
  }
}

GeneralizedIncidence hyper_arc_transform(const PathStructure& ps) {
  GeneralizedIncidence g;
  g.delta.resize(ps.num_generalized(), ps.size());
  g.delta.topRows(ps.num_arcs) = ps.arc_path();
  g.delta.bottomRows(ps.num_stations) = ps.charge_path();
  g.is_hyper_arc.assign(ps.num_generalized(), false);
  g.station_of_row.assign(ps.num_generalized(), -1);
  for (int m = 0; m < ps.num_stations; ++m) {
    g.is_hyper_arc[ps.num_arcs + m] = true;
    g.station_of_row[ps.num_arcs + m] = m;
  }
  return g;
}

std::vector<std::vector<int>> k_shortest_paths(const TransportNetwork& net, int origin,
                                               int destination, int k) {
  if (k < 1) throw ValidationError("k must be at least 1");
  std::vector<std::vector<int>> out_arcs(net.num_nodes());
  for (int a = 0; a < net.num_arcs(); ++a) out_arcs[net.arcs[a].tail].push_back(a);

  std::vector<char> arc_blocked(net.num_arcs(), 0);
  std::vector<char> node_blocked(net.num_nodes(), 0);

  std::vector<std::vector<int>> accepted;
  auto first = dijkstra(net, out_arcs, origin, destination, arc_blocked, node_blocked);
  if (first.empty()) return accepted;
  accepted.push_back(first);

  std::set<Candidate> candidates;
  std::set<std::vector<int>> seen{first};
  while (static_cast<int>(accepted.size()) < k) {
    const std::vector<int> prev = accepted.back();
    const std::vector<int> nodes = walk_nodes(net, origin, prev);
    for (std::size_t i = 0; i < prev.size(); ++i) {
      const int spur = nodes[i];
      std::fill(arc_blocked.begin(), arc_blocked.end(), 0);
      std::fill(node_blocked.begin(), node_blocked.end(), 0);
      for (const auto& p : accepted)
        if (p.size() > i && std::equal(prev.begin(), prev.begin() + i, p.begin()))
          arc_blocked[p[i]] = 1;
      for (std::size_t j = 0; j < i; ++j) node_blocked[nodes[j]] = 1;
      auto spur_path = dijkstra(net, out_arcs, spur, destination, arc_blocked, node_blocked);
      if (spur_path.empty()) continue;
      std::vector<int> total(prev.begin(), prev.begin() + i);
      total.insert(total.end(), spur_path.begin(), spur_path.end());
      if (seen.insert(total).second) candidates.insert({walk_cost(net, total), total});
    }
    if (candidates.empty()) break;
    accepted.push_back(candidates.begin()->arcs);
    candidates.erase(candidates.begin());
  }
  return accepted;
}

PathStructure generate_paths(const TransportNetwork& net, const ODDemand& demand, int k) {
  net.validate();
  demand.validate(net);
  if (k < 1) throw ValidationError("k must be at least 1");
  PathStructure ps;
  ps.num_arcs = net.num_arcs();
  ps.num_stations = net.num_stations();

  for (int w = 0; w < demand.size(); ++w) {
    const OdPair& od = demand.pairs[w];
    const auto road_paths = k_shortest_paths(net, od.origin, od.destination, k);
    const std::string tag = std::to_string(net.node_ids[od.origin]) + "->" +
                            std::to_string(net.node_ids[od.destination]);
    if (road_paths.empty()) throw ValidationError("disconnected OD " + tag);

    std::vector<Path> block;
    for (const auto& arcs : road_paths) {
      const double road = walk_cost(net, arcs);
      if (od.vehicle == VehicleClass::gv) {
        block.push_back({w, arcs, -1, road});
        continue;
      }
      for (int node : walk_nodes(net, od.origin, arcs)) {
        const int m = net.station_at(node);
        if (m >= 0) block.push_back({w, arcs, m, road + net.stations[m].free_time});
      }
    }
    if (block.empty()) throw ValidationError("no feasible EV path for OD " + tag);
    std::sort(block.begin(), block.end(), [](const Path& a, const Path& b) {
      if (a.free_cost != b.free_cost) return a.free_cost < b.free_cost;
      if (a.arcs != b.arcs) return a.arcs < b.arcs;
      return a.station < b.station;
    });
    ps.paths.insert(ps.paths.end(), block.begin(), block.end());
  }
  ps.index(demand.size());
  return ps;
}

}  // namespace chargeprice
