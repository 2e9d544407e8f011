#pragma once

#include <filesystem>
#include <istream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chargeprice/network.hpp"

namespace chargeprice {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

/// Units: MW / MVAr for power, kV^2 for squared voltage, kA^2 for squared
/// current, ohm for impedance. These are mutually consistent without a
/// per-unit base.
struct Bus {
  int id = 0;
  double pd = 0.0, qd = 0.0;
  double umin = 0.0, umax = 0.0;
};

/// Radial line; after finalize() `from` is the bus nearer the slack.
struct Line {
  int from = 0, to = 0;  // dense bus indices
  double r = 0.0, x = 0.0;
  double imin = 0.0, imax = kUnbounded;
};

struct Generator {
  int bus = 0;  // dense bus index
  double c2 = 0.0, c1 = 0.0;
  double pmin = 0.0, pmax = kUnbounded;
  double qmin = -kUnbounded, qmax = kUnbounded;
};

struct PowerNetwork {
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Generator> generators;
  int slack_bus = -1;       // dense index; injection there is free in sign
  double slack_cost = 0.0;  // money per MWh
  std::map<int, int> station_bus;  // transport node id -> dense bus index

  // Filled by finalize().
  std::vector<int> parent_line;  // per bus, -1 at the slack
  std::vector<int> order;        // buses in breadth-first order from the slack

  int num_buses() const { return static_cast<int>(buses.size()); }
  int num_lines() const { return static_cast<int>(lines.size()); }
  int bus_index(int id) const;

  /// Orients lines away from the slack and checks the tree and bound
  /// invariants. Throws ValidationError.
  void finalize();
};

/// Records: `bus [id] pd qd umin umax`, `line from to r x imin imax`,
/// `gen bus c2 c1 [pmin pmax [qmin qmax]]`, `slack bus c0`,
/// `fcsmap fcsnode bus`. Bus ids default to 1-based order of appearance.
PowerNetwork parse_power(std::istream& in, const std::string& source);
PowerNetwork load_power(const std::filesystem::path& file);

/// Per-bus charging demand E x / t_charge in MW, summing co-located
/// stations. Every station must be mapped to a bus.
Eigen::VectorXd charging_load(const PowerNetwork& pnet, const TransportNetwork& tnet,
                              const Eigen::VectorXd& charge_flows, double charge_energy);

}  // namespace chargeprice
