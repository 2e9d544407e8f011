#include "chargeprice/opf.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace chargeprice {

namespace {

// Variable layout: U per bus, then P, Q, I per line, then p, q per
// generator, then slack p and q.
struct Layout {
  int nb, nl, ng;
  int u(int b) const { return b; }
  int p(int l) const { return nb + l; }
  int q(int l) const { return nb + nl + l; }
  int i(int l) const { return nb + 2 * nl + l; }
  int gp(int g) const { return nb + 3 * nl + g; }
  int gq(int g) const { return nb + 3 * nl + ng + g; }
  int sp() const { return nb + 3 * nl + 2 * ng; }
  int sq() const { return sp() + 1; }
  int size() const { return sp() + 2; }
};

struct Bound {
  int var;
  double value;
  double sign;  // +1 for a lower bound (v >= value), -1 for an upper bound
};

struct Barrier {
  const PowerNetwork& net;
  Layout lay;
  std::vector<Bound> bounds;
  Eigen::VectorXd quad, lin;  // objective diag(quad) v^2 + lin^T v

  double objective(const Eigen::VectorXd& v) const { return (quad.array() * v.array().square()).sum() + lin.dot(v); }

  double cone(const Eigen::VectorXd& v, int l) const {
    const Line& ln = net.lines[l];
    return v[lay.u(ln.from)] * v[lay.i(l)] - v[lay.p(l)] * v[lay.p(l)] - v[lay.q(l)] * v[lay.q(l)];
  }

  bool inside(const Eigen::VectorXd& v) const {
    for (const Bound& b : bounds)
      if (!(b.sign * (v[b.var] - b.value) > 0.0)) return false;
    for (int l = 0; l < lay.nl; ++l)
      if (!(cone(v, l) > 0.0) || !(v[lay.u(net.lines[l].from)] > 0.0)) return false;
    return true;
  }

  double theta() const { return static_cast<double>(bounds.size()) + 2.0 * lay.nl; }

  double value(const Eigen::VectorXd& v, double t) const {
    double g = t * objective(v);
    for (const Bound& b : bounds) g -= std::log(b.sign * (v[b.var] - b.value));
    for (int l = 0; l < lay.nl; ++l) g -= std::log(cone(v, l));
    return g;
  }

  void derivatives(const Eigen::VectorXd& v, double t, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const {
    const int n = lay.size();
    grad = t * (2.0 * quad.cwiseProduct(v) + lin);
    hess = Eigen::MatrixXd::Zero(n, n);
    hess.diagonal() = 2.0 * t * quad;
    for (const Bound& b : bounds) {
      const double s = b.sign * (v[b.var] - b.value);
      grad[b.var] -= b.sign / s;
      hess(b.var, b.var) += 1.0 / (s * s);
    }
    for (int l = 0; l < lay.nl; ++l) {
      const int idx[4] = {lay.u(net.lines[l].from), lay.i(l), lay.p(l), lay.q(l)};
      const double s = cone(v, l);
      const double ds[4] = {v[idx[1]], v[idx[0]], -2.0 * v[idx[2]], -2.0 * v[idx[3]]};
      for (int a = 0; a < 4; ++a) {
        grad[idx[a]] -= ds[a] / s;
        for (int c = 0; c < 4; ++c) hess(idx[a], idx[c]) += ds[a] * ds[c] / (s * s);
      }
      // Minus the cone's own Hessian over s.
      hess(idx[0], idx[1]) -= 1.0 / s;
      hess(idx[1], idx[0]) -= 1.0 / s;
      hess(idx[2], idx[2]) += 2.0 / s;
      hess(idx[3], idx[3]) += 2.0 / s;
    }
  }
};

double interior_start(double lo, double hi, double fallback) {
  const bool has_lo = std::isfinite(lo), has_hi = std::isfinite(hi);
  if (has_lo && has_hi) return 0.5 * (lo + hi);
  if (has_lo) return lo + 1.0;
  if (has_hi) return hi - 1.0;
  return fallback;
}

std::string infeasibility_report(const Barrier& bar, const Eigen::VectorXd& v, const Eigen::MatrixXd& A,
                                 const Eigen::VectorXd& rhs, int balance_rows) {
  std::ostringstream os;
  os << "infeasible OPF:";
  const Eigen::VectorXd res = A * v - rhs;
  Eigen::Index worst = 0;
  res.head(balance_rows).cwiseAbs().maxCoeff(&worst);
  os << " largest balance residual " << std::abs(res[worst]) << " at bus "
     << bar.net.buses[worst % bar.net.num_buses()].id << ";";
  const Layout& lay = bar.lay;
  auto name = [&](int var) {
    std::ostringstream n;
    if (var < lay.nb) n << "U at bus " << bar.net.buses[var].id;
    else if (var < lay.nb + 3 * lay.nl) n << "line " << (var - lay.nb) % lay.nl + 1 << " current/flow";
    else if (var < lay.sp()) n << "generator " << (var - lay.nb - 3 * lay.nl) % lay.ng + 1 << " output";
    else n << "slack injection";
    return n.str();
  };
  int pressed = 0;
  for (const Bound& b : bar.bounds) {
    const double s = b.sign * (v[b.var] - b.value);
    if (s < 1e-6 * (1.0 + std::abs(b.value))) {
      os << " " << name(b.var) << (b.sign > 0 ? " at lower bound " : " at upper bound ") << b.value << ";";
      ++pressed;
    }
  }
  if (pressed == 0) os << " no bound is binding at the last iterate;";
  return os.str();
}

}  // namespace

double OPFSolution::max_cone_slack() const { return cone_slack.size() ? cone_slack.maxCoeff() : 0.0; }

double OPFSolution::line_loss(const PowerNetwork& net) const {
  double loss = 0.0;
  for (int l = 0; l < net.num_lines(); ++l) loss += net.lines[l].r * line_i[l];
  return loss;
}

double OPFSolution::supply_surplus(const PowerNetwork& net, const Eigen::VectorXd& extra_load) const {
  double s = gen_p.sum() + slack_p;
  for (const Bus& b : net.buses) s -= b.pd;
  return s - extra_load.sum();
}

OPFSolution solve_opf(const PowerNetwork& net, const Eigen::VectorXd& extra_load, const OPFOptions& options) {
  if (net.parent_line.size() != net.buses.size()) throw ValidationError("power network is not finalized");
  if (extra_load.size() != net.num_buses()) throw ValidationError("OPF: one extra load per bus expected");
  const Layout lay{net.num_buses(), net.num_lines(), static_cast<int>(net.generators.size())};
  const int n = lay.size();

  Barrier bar{net, lay, {}, Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  for (int g = 0; g < lay.ng; ++g) {
    bar.quad[lay.gp(g)] = net.generators[g].c2;
    bar.lin[lay.gp(g)] = net.generators[g].c1;
  }
  bar.lin[lay.sp()] = net.slack_cost;

  // Equality rows: active balance, reactive balance, voltage drop, fixed variables.
  std::vector<std::pair<int, double>> fixed;
  Eigen::VectorXd v(n);
  auto range = [&](int var, double lo, double hi, double fallback) {
    if (lo == hi) {
      fixed.emplace_back(var, lo);
      v[var] = lo;
      return;
    }
    if (std::isfinite(lo)) bar.bounds.push_back({var, lo, 1.0});
    if (std::isfinite(hi)) bar.bounds.push_back({var, hi, -1.0});
    v[var] = interior_start(lo, hi, fallback);
  };
  for (int b = 0; b < lay.nb; ++b) range(lay.u(b), net.buses[b].umin, net.buses[b].umax, 1.0);
  for (int l = 0; l < lay.nl; ++l) {
    const Line& ln = net.lines[l];
    v[lay.p(l)] = 0.0;
    v[lay.q(l)] = 0.0;
    range(lay.i(l), ln.imin, ln.imax, 1.0);
  }
  for (int g = 0; g < lay.ng; ++g) {
    const Generator& gen = net.generators[g];
    range(lay.gp(g), gen.pmin, gen.pmax, 0.0);
    range(lay.gq(g), gen.qmin, gen.qmax, 0.0);
  }
  v[lay.sp()] = 0.0;
  v[lay.sq()] = 0.0;

  const int balance_rows = 2 * lay.nb;
  const int m = balance_rows + lay.nl + static_cast<int>(fixed.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  for (int b = 0; b < lay.nb; ++b) {
    rhs[b] = -(net.buses[b].pd + extra_load[b]);
    rhs[lay.nb + b] = -net.buses[b].qd;
  }
  for (int l = 0; l < lay.nl; ++l) {
    const Line& ln = net.lines[l];
    A(ln.from, lay.p(l)) += 1.0;
    A(ln.to, lay.p(l)) -= 1.0;
    A(ln.to, lay.i(l)) += ln.r;
    A(lay.nb + ln.from, lay.q(l)) += 1.0;
    A(lay.nb + ln.to, lay.q(l)) -= 1.0;
    A(lay.nb + ln.to, lay.i(l)) += ln.x;
    const int row = balance_rows + l;
    A(row, lay.u(ln.to)) = 1.0;
    A(row, lay.u(ln.from)) = -1.0;
    A(row, lay.p(l)) = 2.0 * ln.r;
    A(row, lay.q(l)) = 2.0 * ln.x;
    A(row, lay.i(l)) = -(ln.r * ln.r + ln.x * ln.x);
  }
  for (int g = 0; g < lay.ng; ++g) {
    A(net.generators[g].bus, lay.gp(g)) -= 1.0;
    A(lay.nb + net.generators[g].bus, lay.gq(g)) -= 1.0;
  }
  A(net.slack_bus, lay.sp()) -= 1.0;
  A(lay.nb + net.slack_bus, lay.sq()) -= 1.0;
  for (std::size_t k = 0; k < fixed.size(); ++k) {
    A(balance_rows + lay.nl + k, fixed[k].first) = 1.0;
    rhs[balance_rows + lay.nl + k] = fixed[k].second;
  }

  if (!bar.inside(v)) throw NumericalError("OPF: could not build an interior starting point");

  const double rhs_scale = 1.0 + rhs.lpNorm<Eigen::Infinity>();
  const double theta = bar.theta();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  Eigen::MatrixXd kkt(n + m, n + m);
  Eigen::VectorXd sol(n + m), r(n + m);
  OPFSolution out;
  double t = 1.0;

  auto residual = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y, double tt) {
    Eigen::VectorXd g;
    Eigen::MatrixXd h;
    bar.derivatives(x, tt, g, h);
    Eigen::VectorXd res(n + m);
    res.head(n) = g + A.transpose() * y;
    res.tail(m) = A * x - rhs;
    return res;
  };

  for (;;) {
    // Centering: equality-constrained Newton, infeasible start allowed.
    bool centered = false;
    for (int it = 0; it < options.max_newton; ++it) {
      ++out.newton_steps;
      bar.derivatives(v, t, grad, hess);
      kkt.setZero();
      kkt.topLeftCorner(n, n) = hess;
      kkt.topRightCorner(n, m) = A.transpose();
      kkt.bottomLeftCorner(m, n) = A;
      r.head(n) = -grad;
      r.tail(m) = rhs - A * v;
      // Symmetric diagonal scaling keeps the system solvable at large barrier weights.
      Eigen::VectorXd scale = Eigen::VectorXd::Ones(n + m);
      for (int j = 0; j < n; ++j) scale[j] = 1.0 / std::sqrt(std::max(hess(j, j), 1.0));
      for (int i = 0; i < m; ++i) {
        const double norm = (A.row(i).transpose().cwiseProduct(scale.head(n))).lpNorm<Eigen::Infinity>();
        scale[n + i] = norm > 0.0 ? 1.0 / norm : 1.0;
      }
      const Eigen::MatrixXd scaled = scale.asDiagonal() * kkt * scale.asDiagonal();
      const Eigen::FullPivLU<Eigen::MatrixXd> lu(scaled);
      Eigen::VectorXd y = lu.solve(scale.cwiseProduct(r));
      y += lu.solve(scale.cwiseProduct(r - kkt * scale.cwiseProduct(y)));
      sol = scale.cwiseProduct(y);
      const Eigen::VectorXd dv = sol.head(n);
      const Eigen::VectorXd w_new = sol.tail(m);
      const bool feasible = (A * v - rhs).lpNorm<Eigen::Infinity>() <= 1e-9 * rhs_scale;
      const double decrement = dv.dot(hess * dv);
      const double precision = 1e-13 * std::max(1.0, t * std::abs(bar.objective(v)));

      if (feasible && decrement <= std::max(1e-12, precision)) {
        w = w_new;
        centered = true;
        break;
      }
      double s = 1.0;
      while (!bar.inside(v + s * dv)) {
        s *= 0.5;
        if (s < 1e-14) break;
      }
      if (s < 1e-14) {
        if (!feasible) throw NumericalError(infeasibility_report(bar, v, A, rhs, balance_rows));
        throw NumericalError("OPF: barrier step collapsed");
      }
      if (feasible) {
        const double g0 = bar.value(v, t);
        const double slope = grad.dot(dv);
        while (bar.value(v + s * dv, t) > g0 + 0.25 * s * slope && s > 1e-14) s *= 0.5;
        v += s * dv;
        w = w_new;
      } else {
        const Eigen::VectorXd dw = w_new - w;
        const double r0 = residual(v, w, t).norm();
        while (residual(v + s * dv, w + s * dw, t).norm() > (1.0 - 0.01 * s) * r0 && s > 1e-14) s *= 0.5;
        if (s <= 1e-14) throw NumericalError(infeasibility_report(bar, v, A, rhs, balance_rows));
        v += s * dv;
        w += s * dw;
      }
    }
    if (!centered) {
      if ((A * v - rhs).lpNorm<Eigen::Infinity>() > 1e-6 * rhs_scale)
        throw NumericalError(infeasibility_report(bar, v, A, rhs, balance_rows));
      throw NumericalError("OPF: centering did not converge at barrier weight " + std::to_string(t));
    }
    const double f = bar.objective(v);
    if (theta / t <= options.gap_tol * std::max(1.0, std::abs(f))) break;
    t *= options.barrier_growth;
  }

  if (v.lpNorm<Eigen::Infinity>() > 1e9)
    throw NumericalError("OPF unbounded: a generator cheaper than the slack has no upper limit");
  out.objective = bar.objective(v);
  out.gap_bound = theta / t;
  out.voltage.resize(lay.nb);
  out.lmp = w.head(lay.nb) / t;
  out.lmp_reactive = w.segment(lay.nb, lay.nb) / t;
  for (int b = 0; b < lay.nb; ++b) out.voltage[b] = v[lay.u(b)];
  out.line_p.resize(lay.nl);
  out.line_q.resize(lay.nl);
  out.line_i.resize(lay.nl);
  out.cone_slack.resize(lay.nl);
  for (int l = 0; l < lay.nl; ++l) {
    out.line_p[l] = v[lay.p(l)];
    out.line_q[l] = v[lay.q(l)];
    out.line_i[l] = v[lay.i(l)];
    out.cone_slack[l] = bar.cone(v, l);
  }
  out.gen_p.resize(lay.ng);
  out.gen_q.resize(lay.ng);
  for (int g = 0; g < lay.ng; ++g) {
    out.gen_p[g] = v[lay.gp(g)];
    out.gen_q[g] = v[lay.gq(g)];
  }
  out.slack_p = v[lay.sp()];
  out.slack_q = v[lay.sq()];
  for (int l = 0; l < lay.nl; ++l)
    if (out.cone_slack[l] > options.tight_tol) {
      std::ostringstream os;
      os << "relaxation not tight on line " << l + 1 << " (cone slack " << out.cone_slack[l] << ")";
      out.warnings.push_back(os.str());
    }
  return out;
}

}  // namespace chargeprice
