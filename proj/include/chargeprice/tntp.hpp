#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <utility>

#include "chargeprice/network.hpp"

namespace chargeprice {

/// Reads a network, trips and charging-station sidecar in the TNTP-style
/// text formats documented in the README. Numeric parsing is
/// locale-independent.
///
/// Network file: metadata `<NUM ARCS> n` (required), optional
/// `<NUMBER OF NODES> n`, `<VOLUME DELAY> bpr|linear`, `<END OF METADATA>`,
/// then `tail head free_time capacity` records. `~` starts a comment, a
/// trailing `;` is ignored.
std::pair<TransportNetwork, ODDemand> load_tntp(const std::filesystem::path& net_file,
                                                const std::filesystem::path& trips_file,
                                                const std::filesystem::path& fcs_file);

TransportNetwork parse_network(std::istream& in, const std::string& source);
/// Adds `node t_fcs0 t_bar capacity owned(0|1) price` records to `net`.
void parse_stations(std::istream& in, const std::string& source, TransportNetwork& net);
/// `origin dest demand class` records, class in {EV, GV}.
ODDemand parse_trips(std::istream& in, const std::string& source, const TransportNetwork& net);

}  // namespace chargeprice
