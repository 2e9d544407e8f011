#pragma once

#include <string>
#include <vector>

#include "chargeprice/latency.hpp"

namespace chargeprice {

/// Road segment between two dense node indices.
struct Arc {
  int tail = 0;
  int head = 0;
  double free_time = 0.0;  // hours
  double capacity = 0.0;   // vehicles per period
};

/// Fast charging station sitting on a transport node.
struct ChargingStation {
  int node = 0;               // dense node index
  double free_time = 0.0;     // hours spent charging at zero queue
  double wait_coeff = 0.0;    // queue coefficient, hours
  double capacity = 0.0;      // vehicles per period
  bool owned = false;         // belongs to the optimized provider
  double price = 0.0;         // fixed price when not optimized
};

/// Shape of the volume-delay functions on every road and station.
enum class DelayForm { bpr, linear };

struct TransportNetwork {
  std::vector<int> node_ids;  // external id of each dense node
  std::vector<Arc> arcs;
  std::vector<ChargingStation> stations;
  DelayForm delay_form = DelayForm::bpr;

  int num_nodes() const { return static_cast<int>(node_ids.size()); }
  int num_arcs() const { return static_cast<int>(arcs.size()); }
  int num_stations() const { return static_cast<int>(stations.size()); }

  /// Dense index of an external node id, or -1.
  int node_index(int id) const;
  /// Station index at a dense node, or -1.
  int station_at(int node) const;

  VolumeDelay arc_delay(int a) const;
  VolumeDelay station_delay(int m) const;

  std::vector<int> owned_stations() const;
  /// Station price vector taken from the per-station defaults.
  std::vector<double> default_prices() const;

  /// Throws ValidationError when an invariant is broken.
  void validate() const;
};

enum class VehicleClass { ev, gv };

struct OdPair {
  int origin = 0;       // dense node index
  int destination = 0;  // dense node index
  double demand = 0.0;  // vehicles per period
  VehicleClass vehicle = VehicleClass::ev;
};

struct ODDemand {
  std::vector<OdPair> pairs;

  int size() const { return static_cast<int>(pairs.size()); }
  void validate(const TransportNetwork& net) const;
};

/// Economic constants shared by the traffic and pricing layers.
struct ModelParams {
  double charge_energy = 50.0;  // E, energy bought per charging session
  double time_value = 2.0;      // omega, money per hour
  double price_lower = 200.0;
  double price_upper = 230.0;

  void validate() const;
};

std::string to_string(VehicleClass c);

}  // namespace chargeprice
