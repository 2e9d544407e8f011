#include "chargeprice/power.hpp"

#include <deque>

#include "chargeprice/error.hpp"
#include "records.hpp"

namespace chargeprice {

int PowerNetwork::bus_index(int id) const {
  for (int b = 0; b < num_buses(); ++b)
    if (buses[b].id == id) return b;
  return -1;
}

void PowerNetwork::finalize() {
  const int nb = num_buses();
  if (nb == 0) throw ValidationError("power network has no buses");
  if (slack_bus < 0 || slack_bus >= nb) throw ValidationError("power network has no slack bus");
  if (num_lines() != nb - 1)
    throw ValidationError("power network is not a tree: " + std::to_string(num_lines()) + " lines for " +
                          std::to_string(nb) + " buses");
  for (const Bus& b : buses) {
    if (!(b.umin > 0.0) || !(b.umin <= b.umax))
      throw ValidationError("bus " + std::to_string(b.id) + " needs 0 < umin <= umax");
  }
  std::vector<std::vector<int>> incident(nb);
  for (int l = 0; l < num_lines(); ++l) {
    const Line& ln = lines[l];
    if (ln.from < 0 || ln.from >= nb || ln.to < 0 || ln.to >= nb || ln.from == ln.to)
      throw ValidationError("line " + std::to_string(l + 1) + " has invalid endpoints");
    if (!(ln.r > 0.0) || !(ln.x > 0.0))
      throw ValidationError("line " + std::to_string(l + 1) + " needs positive impedance");
    if (!(ln.imin >= 0.0) || !(ln.imin <= ln.imax))
      throw ValidationError("line " + std::to_string(l + 1) + " needs 0 <= imin <= imax");
    incident[ln.from].push_back(l);
    incident[ln.to].push_back(l);
  }
  for (const Generator& g : generators) {
    if (g.bus < 0 || g.bus >= nb) throw ValidationError("generator on unknown bus");
    if (g.c2 < 0.0) throw ValidationError("generator cost must be convex (c2 >= 0)");
    if (!(g.pmin <= g.pmax) || !(g.qmin <= g.qmax)) throw ValidationError("generator bounds out of order");
  }
  parent_line.assign(nb, -1);
  order.clear();
  std::vector<char> seen(nb, 0);
  std::deque<int> queue{slack_bus};
  seen[slack_bus] = 1;
  while (!queue.empty()) {
    const int b = queue.front();
    queue.pop_front();
    order.push_back(b);
    for (int l : incident[b]) {
      Line& ln = lines[l];
      const int other = ln.from == b ? ln.to : ln.from;
      if (seen[other]) {
        if (parent_line[b] != l) throw ValidationError("power network contains a cycle");
        continue;
      }
      ln.from = b;
      ln.to = other;
      parent_line[other] = l;
      seen[other] = 1;
      queue.push_back(other);
    }
  }
  if (static_cast<int>(order.size()) != nb) throw ValidationError("power network is not connected");
}

PowerNetwork parse_power(std::istream& in, const std::string& source) {
  const auto records = detail::tokenize(in, nullptr, source);
  PowerNetwork net;
  std::vector<detail::Record> lines, gens, slacks, maps;
  for (const auto& rec : records) {
    const std::string& kind = rec.fields[0];
    auto num = [&](std::size_t i) { return detail::to_double(rec.fields[i], source, rec.number); };
    if (kind == "bus") {
      Bus b;
      std::size_t k = 1;
      if (rec.fields.size() == 6) {
        b.id = detail::to_int(rec.fields[1], source, rec.number);
        k = 2;
      } else if (rec.fields.size() == 5) {
        b.id = net.num_buses() + 1;
      } else {
        throw ParseError(source, rec.number, "bus record needs pd qd umin umax");
      }
      b.pd = num(k);
      b.qd = num(k + 1);
      b.umin = num(k + 2);
      b.umax = num(k + 3);
      if (net.bus_index(b.id) >= 0) throw ParseError(source, rec.number, "duplicate bus " + std::to_string(b.id));
      net.buses.push_back(b);
    } else if (kind == "line") {
      detail::expect_fields(rec, 7, source);
      lines.push_back(rec);
    } else if (kind == "gen") {
      if (rec.fields.size() != 4 && rec.fields.size() != 6 && rec.fields.size() != 8)
        throw ParseError(source, rec.number, "gen record needs bus c2 c1 [pmin pmax [qmin qmax]]");
      gens.push_back(rec);
    } else if (kind == "slack") {
      detail::expect_fields(rec, 3, source);
      slacks.push_back(rec);
    } else if (kind == "fcsmap") {
      detail::expect_fields(rec, 3, source);
      maps.push_back(rec);
    } else {
      throw ParseError(source, rec.number, "unknown record '" + kind + "'");
    }
  }
  auto bus_of = [&](const detail::Record& rec, std::size_t i) {
    const int id = detail::to_int(rec.fields[i], source, rec.number);
    const int b = net.bus_index(id);
    if (b < 0) throw ParseError(source, rec.number, "unknown bus " + std::to_string(id));
    return b;
  };
  auto num = [&](const detail::Record& rec, std::size_t i) {
    return detail::to_double(rec.fields[i], source, rec.number);
  };
  for (const auto& rec : lines)
    net.lines.push_back({bus_of(rec, 1), bus_of(rec, 2), num(rec, 3), num(rec, 4), num(rec, 5), num(rec, 6)});
  for (const auto& rec : gens) {
    Generator g;
    g.bus = bus_of(rec, 1);
    g.c2 = num(rec, 2);
    g.c1 = num(rec, 3);
    if (rec.fields.size() >= 6) {
      g.pmin = num(rec, 4);
      g.pmax = num(rec, 5);
    }
    if (rec.fields.size() == 8) {
      g.qmin = num(rec, 6);
      g.qmax = num(rec, 7);
    }
    net.generators.push_back(g);
  }
  if (slacks.size() != 1) throw ParseError(source, 1, "exactly one slack record is required");
  net.slack_bus = bus_of(slacks[0], 1);
  net.slack_cost = num(slacks[0], 2);
  for (const auto& rec : maps) {
    const int node = detail::to_int(rec.fields[1], source, rec.number);
    if (!net.station_bus.emplace(node, bus_of(rec, 2)).second)
      throw ParseError(source, rec.number, "station node " + std::to_string(node) + " mapped twice");
  }
  net.finalize();
  return net;
}

PowerNetwork load_power(const std::filesystem::path& file) {
  auto in = detail::open(file);
  return parse_power(in, file.string());
}

Eigen::VectorXd charging_load(const PowerNetwork& pnet, const TransportNetwork& tnet,
                              const Eigen::VectorXd& charge_flows, double charge_energy) {
  if (charge_flows.size() != tnet.num_stations())
    throw ValidationError("charging load: one flow per station expected");
  Eigen::VectorXd load = Eigen::VectorXd::Zero(pnet.num_buses());
  for (int m = 0; m < tnet.num_stations(); ++m) {
    const int node_id = tnet.node_ids[tnet.stations[m].node];
    auto it = pnet.station_bus.find(node_id);
    if (it == pnet.station_bus.end())
      throw ValidationError("unmapped FCS at transport node " + std::to_string(node_id));
    load[it->second] += charge_energy * charge_flows[m] / tnet.stations[m].free_time;
  }
  return load;
}

}  // namespace chargeprice
