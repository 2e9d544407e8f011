#include "chargeprice/tntp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "chargeprice/error.hpp"
#include "records.hpp"

namespace chargeprice {

namespace {

using detail::Record;
using detail::expect_fields;
using detail::open;
using detail::to_double;
using detail::to_int;
using detail::tokenize;

int resolve(const TransportNetwork& net, int id, const std::string& source, int line) {
  const int idx = net.node_index(id);
  if (idx < 0) throw ParseError(source, line, "unknown node " + std::to_string(id));
  return idx;
}

}  // namespace

TransportNetwork parse_network(std::istream& in, const std::string& source) {
  std::map<std::string, std::string> meta;
  auto lines = tokenize(in, &meta, source);
  auto it = meta.find("NUM ARCS");
  if (it == meta.end()) it = meta.find("NUMBER OF LINKS");
  if (it == meta.end()) throw ParseError(source, 1, "missing <NUM ARCS> header");
  const int declared = to_int(it->second, source, 1);

  TransportNetwork net;
  if (auto d = meta.find("VOLUME DELAY"); d != meta.end()) {
    if (d->second == "bpr") net.delay_form = DelayForm::bpr;
    else if (d->second == "linear") net.delay_form = DelayForm::linear;
    else throw ParseError(source, 1, "unknown volume delay '" + d->second + "'");
  }

  std::set<int> ids;
  if (auto n = meta.find("NUMBER OF NODES"); n != meta.end()) {
    const int count = to_int(n->second, source, 1);
    for (int i = 1; i <= count; ++i) ids.insert(i);
  }
  struct Raw { int tail, head; double t, u; int line; };
  std::vector<Raw> raw;
  for (const auto& l : lines) {
    expect_fields(l, 4, source);
    Raw r{to_int(l.fields[0], source, l.number), to_int(l.fields[1], source, l.number),
          to_double(l.fields[2], source, l.number), to_double(l.fields[3], source, l.number),
          l.number};
    if (!(r.t > 0.0) || !(r.u > 0.0))
      throw ParseError(source, l.number, "free time and capacity must be positive");
    ids.insert(r.tail);
    ids.insert(r.head);
    raw.push_back(r);
  }
  if (static_cast<int>(raw.size()) != declared)
    throw ParseError(source, lines.empty() ? 1 : lines.back().number,
                     "declared " + std::to_string(declared) + " arcs, found " + std::to_string(raw.size()));
  net.node_ids.assign(ids.begin(), ids.end());
  for (const auto& r : raw)
    net.arcs.push_back({resolve(net, r.tail, source, r.line), resolve(net, r.head, source, r.line), r.t, r.u});
  return net;
}

void parse_stations(std::istream& in, const std::string& source, TransportNetwork& net) {
  for (const auto& l : tokenize(in, nullptr, source)) {
    expect_fields(l, 6, source);
    ChargingStation s;
    s.node = resolve(net, to_int(l.fields[0], source, l.number), source, l.number);
    s.free_time = to_double(l.fields[1], source, l.number);
    s.wait_coeff = to_double(l.fields[2], source, l.number);
    s.capacity = to_double(l.fields[3], source, l.number);
    const int owned = to_int(l.fields[4], source, l.number);
    if (owned != 0 && owned != 1) throw ParseError(source, l.number, "owned flag must be 0 or 1");
    s.owned = owned == 1;
    s.price = to_double(l.fields[5], source, l.number);
    if (!(s.free_time > 0.0) || !(s.capacity > 0.0) || s.wait_coeff < 0.0)
      throw ParseError(source, l.number, "station parameters must be positive");
    if (net.station_at(s.node) >= 0) throw ParseError(source, l.number, "duplicate station node");
    net.stations.push_back(s);
  }
}

ODDemand parse_trips(std::istream& in, const std::string& source, const TransportNetwork& net) {
  ODDemand demand;
  for (const auto& l : tokenize(in, nullptr, source)) {
    expect_fields(l, 4, source);
    OdPair od;
    od.origin = resolve(net, to_int(l.fields[0], source, l.number), source, l.number);
    od.destination = resolve(net, to_int(l.fields[1], source, l.number), source, l.number);
    od.demand = to_double(l.fields[2], source, l.number);
    if (!(od.demand > 0.0)) throw ParseError(source, l.number, "demand must be positive");
    if (od.origin == od.destination) throw ParseError(source, l.number, "origin equals destination");
    const std::string& cls = l.fields[3];
    if (cls == "EV") od.vehicle = VehicleClass::ev;
    else if (cls == "GV") od.vehicle = VehicleClass::gv;
    else throw ParseError(source, l.number, "vehicle class must be EV or GV");
    demand.pairs.push_back(od);
  }
  if (demand.pairs.empty()) throw ValidationError(source + ": no OD pairs");
  return demand;
}

std::pair<TransportNetwork, ODDemand> load_tntp(const std::filesystem::path& net_file,
                                                const std::filesystem::path& trips_file,
                                                const std::filesystem::path& fcs_file) {
  auto net_in = open(net_file);
  auto fcs_in = open(fcs_file);
  auto trips_in = open(trips_file);
  TransportNetwork net = parse_network(net_in, net_file.string());
  parse_stations(fcs_in, fcs_file.string(), net);
  ODDemand demand = parse_trips(trips_in, trips_file.string(), net);
  net.validate();
  demand.validate(net);
  return {std::move(net), std::move(demand)};
}

}  // namespace chargeprice
