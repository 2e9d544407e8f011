#include "chargeprice/serialize.hpp"

namespace chargeprice {

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Eigen::VectorXd(m.row(i).transpose())));
  return out;
}

json ue_json(const UESolution& sol, const TransportNetwork& net, const ODDemand& demand, const PathStructure& ps) {
  json paths = json::array();
  for (int p = 0; p < ps.size(); ++p) {
    const Path& path = ps.paths[p];
    json nodes = json::array();
    if (!path.arcs.empty()) nodes.push_back(net.node_ids[net.arcs[path.arcs.front()].tail]);
    for (int a : path.arcs) nodes.push_back(net.node_ids[net.arcs[a].head]);
    paths.push_back({{"od", path.od},
                     {"nodes", nodes},
                     {"station_node", path.station >= 0 ? json(net.node_ids[net.stations[path.station].node]) : json()},
                     {"flow", sol.path_flows[p]},
                     {"cost", sol.path_costs[p]}});
  }
  json ods = json::array();
  for (int w = 0; w < demand.size(); ++w) {
    const OdPair& od = demand.pairs[w];
    ods.push_back({{"origin", net.node_ids[od.origin]},
                   {"destination", net.node_ids[od.destination]},
                   {"demand", od.demand},
                   {"class", to_string(od.vehicle)},
                   {"min_cost", sol.od_min_costs[w]}});
  }
  return {{"path_flows", to_json(sol.path_flows)},
          {"path_costs", to_json(sol.path_costs)},
          {"arc_flows", to_json(sol.arc_flows)},
          {"charge_flows", to_json(sol.charge_flows)},
          {"beckmann", sol.beckmann},
          {"rel_gap", sol.rel_gap},
          {"iterations", sol.iterations},
          {"od_pairs", ods},
          {"paths", paths}};
}

json sensitivity_json(const SensitivityResult& s, const TransportNetwork& net, std::span<const int> owned) {
  json owned_nodes = json::array();
  for (int m : owned) owned_nodes.push_back(net.node_ids[net.stations[m].node]);
  json station_nodes = json::array();
  for (const auto& st : net.stations) station_nodes.push_back(net.node_ids[st.node]);
  return {{"station_nodes", station_nodes},
          {"owned_nodes", owned_nodes},
          {"gradient", to_json(s.grad)},
          {"rcond", s.rcond},
          {"num_ep", s.num_ep},
          {"num_nep", s.num_nep},
          {"num_eli", s.num_eli},
          {"num_eld", s.num_eld},
          {"num_zero_flow_ep", s.num_zero_flow_ep},
          {"eli", s.eli}};
}

json iterate_json(const PriceIterate& it) {
  return {{"iteration", it.iteration},
          {"prices", to_json(it.prices)},
          {"profit", it.profit},
          {"alpha", it.alpha},
          {"direction_norm", it.direction.size() ? it.direction.norm() : 0.0},
          {"margin", it.margin},
          {"num_ep", it.num_ep},
          {"num_nep", it.num_nep},
          {"num_eli", it.num_eli},
          {"ue_iterations", it.ue_iterations},
          {"seconds", it.seconds}};
}

json opf_json(const OPFSolution& opf, const PowerNetwork& net) {
  json bus_ids = json::array();
  for (const auto& b : net.buses) bus_ids.push_back(b.id);
  return {{"objective", opf.objective},
          {"bus_ids", bus_ids},
          {"lmp", to_json(opf.lmp)},
          {"voltage_sq", to_json(opf.voltage)},
          {"gen_p", to_json(opf.gen_p)},
          {"gen_q", to_json(opf.gen_q)},
          {"slack_p", opf.slack_p},
          {"slack_q", opf.slack_q},
          {"line_p", to_json(opf.line_p)},
          {"line_q", to_json(opf.line_q)},
          {"line_current_sq", to_json(opf.line_i)},
          {"line_loss_mw", opf.line_loss(net)},
          {"max_cone_slack", opf.max_cone_slack()},
          {"gap_bound", opf.gap_bound},
          {"warnings", opf.warnings}};
}

json certificate_json(const UECertificate& cert) {
  json checks = json::array();
  for (const auto& c : cert.checks)
    checks.push_back({{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"result", c.pass ? "PASS" : "FAIL"}});
  return {{"result", cert.pass() ? "PASS" : "FAIL"}, {"checks", checks}};
}

json comparison_json(const GradientComparison& c) {
  return {{"pass", c.pass},
          {"max_abs_error", c.max_abs_error},
          {"max_rel_error", c.max_rel_error},
          {"failures", c.failures},
          {"delta", c.delta},
          {"richardson", c.richardson}};
}

json cycle_json(const CoupledCycle& c) {
  return {{"cycle", c.cycle},
          {"prices", to_json(c.prices)},
          {"lmp", to_json(c.electricity_cost)},
          {"profit", c.profit},
          {"opf_objective", c.opf_objective},
          {"pricing_iterations", c.pricing_iterations}};
}

}  // namespace chargeprice
