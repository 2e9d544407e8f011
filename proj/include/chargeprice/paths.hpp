#pragma once

#include <vector>

#include <Eigen/Dense>

#include "chargeprice/network.hpp"

namespace chargeprice {

struct Path {
  int od = 0;
  std::vector<int> arcs;  // walk order
  int station = -1;       // charging station index, -1 for gasoline paths
  double free_cost = 0.0; // free-flow hours (road plus charging)
};

/// Enumerated path set with its incidence structure.
///
/// Generalized arcs are numbered roads first (0..|A|-1) and then one
/// hyper-arc per charging station (|A|..|A|+|N_fcs|-1).
struct PathStructure {
  std::vector<Path> paths;
  std::vector<std::vector<int>> od_paths;           // path indices per OD pair
  std::vector<std::vector<int>> generalized_arcs;   // sorted per path
  int num_arcs = 0;
  int num_stations = 0;

  int size() const { return static_cast<int>(paths.size()); }
  int num_ods() const { return static_cast<int>(od_paths.size()); }
  int num_generalized() const { return num_arcs + num_stations; }

  Eigen::MatrixXd arc_path() const;     // |A| x |P|
  Eigen::MatrixXd charge_path() const;  // |N_fcs| x |P|
  Eigen::MatrixXd od_path() const;      // |W| x |P|

  /// Rebuilds od_paths and generalized_arcs from `paths`.
  void index(int num_ods);
  /// Throws ValidationError when a path is not a connected walk or the
  /// charging structure is inconsistent with its OD class.
  void validate(const TransportNetwork& net, const ODDemand& demand) const;
};

/// Generalized incidence [arc_path; charge_path] and its row kinds.
struct GeneralizedIncidence {
  Eigen::MatrixXd delta;
  std::vector<bool> is_hyper_arc;  // per row
  std::vector<int> station_of_row; // -1 for road rows
};

GeneralizedIncidence hyper_arc_transform(const PathStructure& ps);

/// Up to k loopless shortest paths (arc sequences) by free travel time.
/// Ties are broken by lexicographic arc sequence.
std::vector<std::vector<int>> k_shortest_paths(const TransportNetwork& net, int origin,
                                               int destination, int k);

/// Builds the path set: k road paths per OD; EV pairs emit one copy per
/// station lying on each road path, and road paths without a station are
/// dropped for EV demand.
PathStructure generate_paths(const TransportNetwork& net, const ODDemand& demand, int k);

}  // namespace chargeprice
