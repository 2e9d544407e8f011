#include "chargeprice/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace chargeprice {

namespace {

Eigen::MatrixXd columns_of(const Eigen::MatrixXd& m, const std::vector<int>& cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(j) = m.col(cols[j]);
  return out;
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = m.row(rows[i]);
  return out;
}

SensitivityResult solve_kkt(const Eigen::MatrixXd& jac, const Eigen::MatrixXd& jac_price,
                            double min_rcond) {
  SensitivityResult r;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
  r.rcond = 1.0;
  if (jac.size() > 0) {
    // The LAPACK-style estimate misses exactly zero pivots, so bound it by the pivot ratio.
    const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
    r.rcond = std::min(lu.rcond(), pivots.minCoeff() / pivots.maxCoeff());
  }
  if (!(r.rcond >= min_rcond)) {
    std::ostringstream os;
    os << "singular KKT Jacobian (reciprocal condition estimate " << r.rcond << ")";
    throw NumericalError(os.str());
  }
  r.path_grad = jac.size() == 0 ? Eigen::MatrixXd(0, jac_price.cols())
                                : Eigen::MatrixXd(lu.solve(-jac_price));
  return r;
}

}  // namespace

Eigen::VectorXd cost_jacobian_diag(const UESolution& sol, const TransportNetwork& net,
                                   const ModelParams& params, double reg_eps) {
  const int na = net.num_arcs();
  Eigen::VectorXd d(na + net.num_stations());
  for (int a = 0; a < na; ++a)
    d[a] = std::max(params.time_value * net.arc_delay(a).derivative(sol.arc_flows[a]), reg_eps);
  for (int m = 0; m < net.num_stations(); ++m)
    d[na + m] = std::max(params.time_value * net.station_delay(m).derivative(sol.charge_flows[m]), reg_eps);
  return d;
}

EquilibratedSets classify_paths(const UESolution& sol, const PathStructure& ps,
                                const ODDemand& demand, double cost_eps_rel, double flow_eps) {
  EquilibratedSets es;
  for (int w = 0; w < ps.num_ods(); ++w) {
    if (demand.pairs[w].demand <= 0.0) {
      for (int p : ps.od_paths[w]) es.pinned.push_back(p);
      continue;
    }
    es.active_ods.push_back(w);
    const double mu = sol.od_min_costs[w];
    const double band = cost_eps_rel * std::abs(mu);
    for (int p : ps.od_paths[w]) {
      if (sol.path_costs[p] > mu + band) {
        if (sol.path_flows[p] > flow_eps) {
          std::ostringstream os;
          os << "NEP carries flow: path " << p << " has flow " << sol.path_flows[p] << " at cost "
             << sol.path_costs[p] << " above the OD minimum " << mu;
          throw NumericalError(os.str());
        }
        es.nep.push_back(p);
      } else {
        es.ep.push_back(p);
        if (sol.path_flows[p] <= flow_eps) es.zero_flow_ep.push_back(p);
      }
    }
  }
  std::sort(es.ep.begin(), es.ep.end());
  std::sort(es.nep.begin(), es.nep.end());
  std::sort(es.zero_flow_ep.begin(), es.zero_flow_ep.end());
  return es;
}

std::vector<int> independent_columns(const Eigen::MatrixXd& m, std::span<const int> order,
                                     double rank_tol) {
  std::vector<int> kept;
  Eigen::MatrixXd basis(m.rows(), 0);
  double largest = 0.0;
  for (int j : order) {
    Eigen::VectorXd v = m.col(j);
    const double norm = v.norm();
    if (norm == 0.0) continue;
    // Two passes of Gram-Schmidt keep the basis orthonormal to working precision.
    for (int pass = 0; pass < 2 && basis.cols() > 0; ++pass) v -= basis * (basis.transpose() * v);
    const double pivot = v.norm();
    if (pivot > rank_tol * std::max(largest, norm)) {
      largest = std::max(largest, pivot);
      basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
      basis.col(basis.cols() - 1) = v / pivot;
      kept.push_back(j);
    }
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

void select_eli(EquilibratedSets& es, const PathStructure& ps, double rank_tol,
                std::optional<std::vector<int>> order) {
  const Eigen::MatrixXd delta = columns_of(hyper_arc_transform(ps).delta, es.ep);
  const Eigen::MatrixXd lambda = columns_of(rows_of(ps.od_path(), es.active_ods), es.ep);
  Eigen::MatrixXd stacked(delta.rows() + lambda.rows(), delta.cols());
  stacked << delta, lambda;

  std::vector<int> scan(es.ep.size());
  std::iota(scan.begin(), scan.end(), 0);
  if (order) {
    std::vector<int> check = *order;
    std::sort(check.begin(), check.end());
    if (check != scan) throw ValidationError("ELI scan order must be a permutation of the EP positions");
    scan = *order;
  }
  const std::vector<int> kept = independent_columns(stacked, scan, rank_tol);

  es.eli.clear();
  es.eld.clear();
  std::vector<char> keep(es.ep.size(), 0);
  for (int j : kept) keep[j] = 1;
  for (std::size_t j = 0; j < es.ep.size(); ++j) (keep[j] ? es.eli : es.eld).push_back(es.ep[j]);

  const Eigen::MatrixXd charge = ps.charge_path();
  es.delta1 = columns_of(hyper_arc_transform(ps).delta, es.eli);
  es.lambda1 = columns_of(rows_of(ps.od_path(), es.active_ods), es.eli);
  es.charge1 = columns_of(charge, es.eli);
}

Eigen::MatrixXd price_selector(int num_stations, std::span<const int> owned, double charge_energy) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(num_stations, static_cast<Eigen::Index>(owned.size()));
  for (std::size_t k = 0; k < owned.size(); ++k) g(owned[k], k) = charge_energy;
  return g;
}

KktJacobians assemble_jacobians(const EquilibratedSets& es, const Eigen::VectorXd& diag,
                                const Eigen::MatrixXd& selector) {
  const Eigen::Index n = es.delta1.cols();
  const Eigen::Index w = es.lambda1.rows();
  KktJacobians k;
  k.jacobian = Eigen::MatrixXd::Zero(n + w, n + w);
  k.jacobian.topLeftCorner(n, n) = es.delta1.transpose() * diag.asDiagonal() * es.delta1;
  k.jacobian.topRightCorner(n, w) = -es.lambda1.transpose();
  k.jacobian.bottomLeftCorner(w, n) = es.lambda1;
  k.jacobian_price = Eigen::MatrixXd::Zero(n + w, selector.cols());
  k.jacobian_price.topRows(n) = es.charge1.transpose() * selector;
  return k;
}

SensitivityResult gradient(const EquilibratedSets& es, const KktJacobians& kkt, double min_rcond) {
  SensitivityResult r = solve_kkt(kkt.jacobian, kkt.jacobian_price, min_rcond);
  const Eigen::Index n = es.delta1.cols();
  r.mu_grad = r.path_grad.bottomRows(r.path_grad.rows() - n);
  r.path_grad.conservativeResize(n, Eigen::NoChange);
  r.grad = es.charge1 * r.path_grad;
  r.num_ep = static_cast<int>(es.ep.size());
  r.num_nep = static_cast<int>(es.nep.size());
  r.num_eli = static_cast<int>(es.eli.size());
  r.num_eld = static_cast<int>(es.eld.size());
  r.num_zero_flow_ep = static_cast<int>(es.zero_flow_ep.size());
  r.eli = es.eli;
  return r;
}

std::pair<EquilibratedSets, EquilibratedSets> split_by_class(const EquilibratedSets& es,
                                                             const PathStructure& ps,
                                                             const ODDemand& demand) {
  EquilibratedSets parts[2];
  auto cls = [&](int p) { return demand.pairs[ps.paths[p].od].vehicle == VehicleClass::ev ? 0 : 1; };
  std::vector<int> cols[2], rows[2];
  for (std::size_t j = 0; j < es.eli.size(); ++j) {
    parts[cls(es.eli[j])].eli.push_back(es.eli[j]);
    cols[cls(es.eli[j])].push_back(static_cast<int>(j));
  }
  for (int p : es.ep) parts[cls(p)].ep.push_back(p);
  for (int p : es.nep) parts[cls(p)].nep.push_back(p);
  for (int p : es.eld) parts[cls(p)].eld.push_back(p);
  for (int p : es.pinned) parts[cls(p)].pinned.push_back(p);
  for (int p : es.zero_flow_ep) parts[cls(p)].zero_flow_ep.push_back(p);
  for (std::size_t i = 0; i < es.active_ods.size(); ++i) {
    const int c = demand.pairs[es.active_ods[i]].vehicle == VehicleClass::ev ? 0 : 1;
    parts[c].active_ods.push_back(es.active_ods[i]);
    rows[c].push_back(static_cast<int>(i));
  }
  for (int c = 0; c < 2; ++c) {
    parts[c].delta1 = columns_of(es.delta1, cols[c]);
    parts[c].charge1 = columns_of(es.charge1, cols[c]);
    parts[c].lambda1 = rows_of(columns_of(es.lambda1, cols[c]), rows[c]);
  }
  return {std::move(parts[0]), std::move(parts[1])};
}

SensitivityResult gradient_mixed(const EquilibratedSets& ev, const EquilibratedSets& gv,
                                 const Eigen::VectorXd& diag, const Eigen::MatrixXd& selector,
                                 double min_rcond) {
  const Eigen::Index ne = ev.delta1.cols(), ng = gv.delta1.cols();
  const Eigen::Index we = ev.lambda1.rows(), wg = gv.lambda1.rows();
  const Eigen::Index size = ne + ng + we + wg;
  const auto d = diag.asDiagonal();

  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(size, size);
  jac.block(0, 0, ne, ne) = ev.delta1.transpose() * d * ev.delta1;
  jac.block(0, ne, ne, ng) = ev.delta1.transpose() * d * gv.delta1;
  jac.block(ne, 0, ng, ne) = gv.delta1.transpose() * d * ev.delta1;
  jac.block(ne, ne, ng, ng) = gv.delta1.transpose() * d * gv.delta1;
  jac.block(0, ne + ng, ne, we) = -ev.lambda1.transpose();
  jac.block(ne, ne + ng + we, ng, wg) = -gv.lambda1.transpose();
  jac.block(ne + ng, 0, we, ne) = ev.lambda1;
  jac.block(ne + ng + we, ne, wg, ng) = gv.lambda1;

  Eigen::MatrixXd jac_price = Eigen::MatrixXd::Zero(size, selector.cols());
  jac_price.topRows(ne) = ev.charge1.transpose() * selector;
  jac_price.middleRows(ne, ng) = gv.charge1.transpose() * selector;

  SensitivityResult r = solve_kkt(jac, jac_price, min_rcond);
  r.mu_grad = r.path_grad.bottomRows(we + wg);
  r.path_grad.conservativeResize(ne + ng, Eigen::NoChange);
  r.grad = ev.charge1 * r.path_grad.topRows(ne);
  r.num_ep = static_cast<int>(ev.ep.size() + gv.ep.size());
  r.num_nep = static_cast<int>(ev.nep.size() + gv.nep.size());
  r.num_eli = static_cast<int>(ne + ng);
  r.num_eld = static_cast<int>(ev.eld.size() + gv.eld.size());
  r.num_zero_flow_ep = static_cast<int>(ev.zero_flow_ep.size() + gv.zero_flow_ep.size());
  r.eli = ev.eli;
  r.eli.insert(r.eli.end(), gv.eli.begin(), gv.eli.end());
  return r;
}

SensitivityResult analyze(const TransportNetwork& net, const ODDemand& demand,
                          const PathStructure& ps, const ModelParams& params,
                          const UESolution& sol, std::span<const int> owned,
                          const SensitivityOptions& options) {
  const Eigen::VectorXd diag = cost_jacobian_diag(sol, net, params, options.reg_eps);
  EquilibratedSets es = classify_paths(sol, ps, demand, options.cost_eps_rel, options.flow_eps);
  select_eli(es, ps, options.rank_tol, options.eli_order);
  const Eigen::MatrixXd selector = price_selector(net.num_stations(), owned, params.charge_energy);
  return gradient(es, assemble_jacobians(es, diag, selector), options.min_rcond);
}

}  // namespace chargeprice
