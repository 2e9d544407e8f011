#include <doctest.h>

#include <functional>
#include <random>

#include "chargeprice/ue.hpp"
#include "fixtures.hpp"

using namespace chargeprice;

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("illustrative equilibrium") {
  auto in = fixtures::illustrative();
  const auto prices = in->prices();
  UEOptions opt = in->ue;
  opt.record_history = true;
  const UESolution sol = solve_ue(in->net, in->demand, in->paths, in->params, prices, opt);
  const Eigen::Vector4d f(0.75, 0.75, 1.0, 1.0), c(8.25, 8.25, 8.5, 8.5);
  Eigen::VectorXd arcs(6);
  arcs << 1.75, 0.75, 1.75, 1.0, 1.0, 0.75;
  CHECK((sol.path_flows - f).lpNorm<Eigen::Infinity>() <= 1e-6);
  CHECK((sol.path_costs - c).lpNorm<Eigen::Infinity>() <= 1e-6);
  CHECK((sol.arc_flows - arcs).lpNorm<Eigen::Infinity>() <= 1e-6);
  CHECK((sol.charge_flows - Eigen::Vector2d(1.75, 1.75)).lpNorm<Eigen::Infinity>() <= 1e-6);
  CHECK(sol.rel_gap <= 1e-12);

  for (std::size_t i = 1; i < sol.history.size(); ++i) CHECK(sol.history[i] <= sol.history[i - 1] + 1e-12);

  const WardropResidual res = wardrop_residual(sol, in->paths, in->demand);
  CHECK(res.max_overcost <= 1e-6);
  CHECK(res.max_demand_violation <= 1e-8);

  // Closed-form potential against quadrature of every generalized arc.
  const Eigen::VectorXd x = generalized_flows(in->paths, sol.path_flows);
  double oracle = 0.0;
  for (int k = 0; k < x.size(); ++k) {
    const bool station = k >= in->net.num_arcs();
    const double price_term = station ? in->params.charge_energy * prices[k - in->net.num_arcs()] : 0.0;
    oracle += simpson([&](double s) { return in->params.time_value * (1.0 + s) + price_term; }, 0.0, x[k]);
  }
  CHECK(beckmann_objective(sol.path_flows, in->net, in->paths, in->params, prices) ==
        doctest::Approx(oracle).epsilon(1e-9));
  CHECK(beckmann_objective(Eigen::VectorXd::Zero(4), in->net, in->paths, in->params, prices) == 0.0);
}

TEST_CASE("potential of a single linear arc") {
  TransportNetwork net;
  net.delay_form = DelayForm::linear;
  fixtures::add_nodes(net, 2);
  fixtures::add_arc(net, 1, 2, 1, 1);
  ODDemand d;
  fixtures::add_od(d, net, 1, 2, 2.0, VehicleClass::gv);
  const PathStructure ps = generate_paths(net, d, 1);
  const ModelParams params{1.0, 1.0, 0.0, 1.0};
  CHECK(beckmann_objective(Eigen::VectorXd::Constant(1, 2.0), net, ps, params, {}) == doctest::Approx(4.0));
}

TEST_CASE("parallel arcs split evenly and violations are reported") {
  TransportNetwork net;
  fixtures::add_nodes(net, 2);
  fixtures::add_arc(net, 1, 2, 0.2, 30);
  fixtures::add_arc(net, 1, 2, 0.2, 30);
  ODDemand d;
  fixtures::add_od(d, net, 1, 2, 50.0, VehicleClass::gv);
  const PathStructure ps = generate_paths(net, d, 2);
  const ModelParams params{1.0, 2.0, 0.0, 1.0};
  UEOptions opt;
  opt.tol = 1e-12;
  UESolution sol = solve_ue(net, d, ps, params, {}, opt);
  CHECK(sol.path_flows[0] == doctest::Approx(25.0).epsilon(1e-6));
  CHECK(sol.path_flows[1] == doctest::Approx(25.0).epsilon(1e-6));

  sol.path_flows << 40.0, 10.0;
  refresh_solution(sol, net, d, ps, params, {});
  const WardropResidual res = wardrop_residual(sol, ps, d);
  CHECK(res.max_overcost > 0.0);
  CHECK(res.max_demand_violation == 0.0);
}

TEST_CASE("iteration cap carries the best iterate") {
  auto in = fixtures::nguyen_dupuis();
  UEOptions opt;
  opt.tol = 1e-14;
  opt.max_iter = 2;
  try {
    solve_ue(in->net, in->demand, in->paths, in->params, in->prices(), opt);
    FAIL("expected the sweep cap to be hit");
  } catch (const UEConvergenceError& e) {
    CHECK(std::string(e.what()).find("max iterations exceeded") != std::string::npos);
    CHECK(e.best().rel_gap > 1e-14);
    CHECK(e.best().path_flows.size() == in->paths.size());
  }
}

TEST_CASE("gradient of the potential is the path cost") {
  std::mt19937_64 rng(5);
  for (auto& in : fixtures::all()) {
    const auto prices = in->prices();
    const Eigen::VectorXd f = fixtures::random_feasible(*in, rng);
    UESolution sol;
    sol.path_flows = f;
    refresh_solution(sol, in->net, in->demand, in->paths, in->params, prices);
    for (int p = 0; p < f.size(); ++p) {
      const double h = 1e-4 * std::max(1.0, f[p]);
      Eigen::VectorXd up = f, dn = f;
      up[p] += h;
      dn[p] = std::max(0.0, f[p] - h);
      const double fd = (beckmann_objective(up, in->net, in->paths, in->params, prices) -
                         beckmann_objective(dn, in->net, in->paths, in->params, prices)) /
                        (up[p] - dn[p]);
      CHECK(fd == doctest::Approx(sol.path_costs[p]).epsilon(1e-6));
    }
  }
}

TEST_CASE("aggregate flows are unique") {
  std::mt19937_64 rng(11);
  for (auto& in : fixtures::all()) {
    UEOptions opt = in->ue;
    opt.tol = 1e-10;
    const UESolution a = solve_ue(in->net, in->demand, in->paths, in->params, in->prices(), opt);
    opt.initial_flows = fixtures::random_feasible(*in, rng);
    const UESolution b = solve_ue(in->net, in->demand, in->paths, in->params, in->prices(), opt);
    CHECK((a.arc_flows - b.arc_flows).lpNorm<Eigen::Infinity>() <= 1e-5);
    CHECK((a.charge_flows - b.charge_flows).lpNorm<Eigen::Infinity>() <= 1e-5);
  }
}

TEST_CASE("Nguyen-Dupuis against a long reference run") {
  auto in = fixtures::nguyen_dupuis();
  UEOptions loose;
  loose.tol = 1e-6;
  UEOptions tight;
  tight.tol = 1e-10;
  tight.record_history = true;
  const UESolution a = solve_ue(in->net, in->demand, in->paths, in->params, in->prices(), loose);
  const UESolution ref = solve_ue(in->net, in->demand, in->paths, in->params, in->prices(), tight);
  CHECK(a.rel_gap <= 1e-6);
  CHECK(ref.beckmann <= a.beckmann + 1e-9);
  CHECK((a.beckmann - ref.beckmann) / ref.beckmann <= 1e-6);
  for (std::size_t i = 1; i < ref.history.size(); ++i) CHECK(ref.history[i] <= ref.history[i - 1] + 1e-9);
  const Eigen::VectorXd x = generalized_flows(in->paths, ref.path_flows);
  CHECK((x.head(in->net.num_arcs()) - ref.arc_flows).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK((x.tail(in->net.num_stations()) - ref.charge_flows).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK(ref.path_flows.minCoeff() >= 0.0);
}
