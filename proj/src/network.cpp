#include "chargeprice/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "chargeprice/error.hpp"

namespace chargeprice {

int TransportNetwork::node_index(int id) const {
  auto it = std::find(node_ids.begin(), node_ids.end(), id);
  return it == node_ids.end() ? -1 : static_cast<int>(it - node_ids.begin());
}

int TransportNetwork::station_at(int node) const {
  for (int m = 0; m < num_stations(); ++m)
    if (stations[m].node == node) return m;
  return -1;
}

VolumeDelay TransportNetwork::arc_delay(int a) const {
  const Arc& arc = arcs[a];
  return delay_form == DelayForm::bpr ? VolumeDelay::bpr(arc.free_time, arc.capacity)
                                      : VolumeDelay::linear(arc.free_time, arc.capacity);
}

VolumeDelay TransportNetwork::station_delay(int m) const {
  const ChargingStation& s = stations[m];
  if (delay_form == DelayForm::bpr)
    return VolumeDelay::charging_cubic(s.free_time, s.wait_coeff, s.capacity);
  return {s.free_time, s.wait_coeff / s.capacity, 1};
}

std::vector<int> TransportNetwork::owned_stations() const {
  std::vector<int> out;
  for (int m = 0; m < num_stations(); ++m)
    if (stations[m].owned) out.push_back(m);
  return out;
}

std::vector<double> TransportNetwork::default_prices() const {
  std::vector<double> out;
  out.reserve(stations.size());
  for (const auto& s : stations) out.push_back(s.price);
  return out;
}

void TransportNetwork::validate() const {
  const int n = num_nodes();
  if (n == 0) throw ValidationError("network has no nodes");
  std::set<int> ids(node_ids.begin(), node_ids.end());
  if (static_cast<int>(ids.size()) != n) throw ValidationError("duplicate node id");
  for (int a = 0; a < num_arcs(); ++a) {
    const Arc& arc = arcs[a];
    if (arc.tail < 0 || arc.tail >= n || arc.head < 0 || arc.head >= n)
      throw ValidationError("arc " + std::to_string(a) + " references an unknown node");
    if (arc.tail == arc.head) throw ValidationError("arc " + std::to_string(a) + " is a self-loop");
    if (!(arc.free_time > 0.0) || !(arc.capacity > 0.0))
      throw ValidationError("arc " + std::to_string(a) + " needs positive free time and capacity");
  }
  std::set<int> station_nodes;
  for (int m = 0; m < num_stations(); ++m) {
    const ChargingStation& s = stations[m];
    if (s.node < 0 || s.node >= n)
      throw ValidationError("station " + std::to_string(m) + " references an unknown node");
    if (!station_nodes.insert(s.node).second)
      throw ValidationError("two stations on node " + std::to_string(node_ids[s.node]));
    if (!(s.free_time > 0.0) || !(s.capacity > 0.0) || !(s.wait_coeff >= 0.0))
      throw ValidationError("station " + std::to_string(m) + " needs positive parameters");
    if (!std::isfinite(s.price)) throw ValidationError("station price must be finite");
  }
}

void ODDemand::validate(const TransportNetwork& net) const {
  for (std::size_t w = 0; w < pairs.size(); ++w) {
    const OdPair& od = pairs[w];
    if (od.origin < 0 || od.origin >= net.num_nodes() || od.destination < 0 ||
        od.destination >= net.num_nodes())
      throw ValidationError("OD pair " + std::to_string(w) + " references an unknown node");
    if (od.origin == od.destination)
      throw ValidationError("OD pair " + std::to_string(w) + " has origin == destination");
    if (!(od.demand >= 0.0) || !std::isfinite(od.demand))
      throw ValidationError("OD pair " + std::to_string(w) + " has invalid demand");
  }
}

void ModelParams::validate() const {
  if (!(charge_energy > 0.0)) throw ValidationError("charge energy must be positive");
  if (!(time_value > 0.0)) throw ValidationError("time value must be positive");
  if (!(price_lower < price_upper)) throw ValidationError("price lower bound must be below upper bound");
}

std::string to_string(VehicleClass c) { return c == VehicleClass::ev ? "EV" : "GV"; }

}  // namespace chargeprice
