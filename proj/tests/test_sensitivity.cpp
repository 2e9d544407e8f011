#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "chargeprice/latency.hpp"
#include "chargeprice/sensitivity.hpp"
#include "chargeprice/ue.hpp"
#include "chargeprice/verify.hpp"
#include "fixtures.hpp"

using namespace chargeprice;

namespace {

struct Solved {
  std::unique_ptr<fixtures::Instance> in;
  UESolution sol;
};

Solved solve(std::unique_ptr<fixtures::Instance> in) {
  UESolution sol = solve_ue(in->net, in->demand, in->paths, in->params, in->prices(), in->ue);
  return {std::move(in), std::move(sol)};
}

// Rank by Gaussian elimination with partial pivoting on rows.
int rank_oracle(Eigen::MatrixXd m, double tol) {
  int rank = 0;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  for (int c = 0; c < m.cols() && rank < m.rows(); ++c) {
    int best = rank;
    for (int r = rank; r < m.rows(); ++r)
      if (std::abs(m(r, c)) > std::abs(m(best, c))) best = r;
    if (std::abs(m(best, c)) <= tol * scale) continue;
    m.row(rank).swap(m.row(best));
    for (int r = rank + 1; r < m.rows(); ++r) m.row(r) -= m(r, c) / m(rank, c) * m.row(rank);
    ++rank;
  }
  return rank;
}

Eigen::MatrixXd stacked(const EquilibratedSets& es, const PathStructure& ps) {
  const GeneralizedIncidence gi = hyper_arc_transform(ps);
  const Eigen::MatrixXd od = ps.od_path();
  Eigen::MatrixXd m(gi.delta.rows() + od.rows(), es.ep.size());
  for (std::size_t j = 0; j < es.ep.size(); ++j) {
    m.col(j).head(gi.delta.rows()) = gi.delta.col(es.ep[j]);
    m.col(j).tail(od.rows()) = od.col(es.ep[j]);
  }
  return m;
}

}  // namespace

TEST_CASE("illustrative Jacobians and gradient") {
  Solved s = solve(fixtures::illustrative());
  const auto& in = *s.in;
  EquilibratedSets es = classify_paths(s.sol, in.paths, in.demand);
  CHECK(es.ep == std::vector<int>{0, 1, 2, 3});
  CHECK(es.nep.empty());
  select_eli(es, in.paths);
  CHECK(es.eli.size() == 4);
  CHECK(es.eld.empty());

  const Eigen::VectorXd diag = cost_jacobian_diag(s.sol, in.net, in.params);
  CHECK(diag == Eigen::VectorXd::Ones(8));
  const auto owned = in.net.owned_stations();
  const KktJacobians kkt = assemble_jacobians(es, diag, price_selector(2, owned, 1.0));
  Eigen::MatrixXd j(6, 6);
  j << 3, 0, 2, 0, -1, 0,
       0, 3, 0, 2, -1, 0,
       2, 0, 3, 0, 0, -1,
       0, 2, 0, 3, 0, -1,
       1, 1, 0, 0, 0, 0,
       0, 0, 1, 1, 0, 0;
  Eigen::VectorXd jl(6);
  jl << 1, 0, 1, 0, 0, 0;
  CHECK(kkt.jacobian == j);
  CHECK(kkt.jacobian_price == Eigen::MatrixXd(jl));

  const SensitivityResult r = gradient(es, kkt);
  CHECK(std::abs(r.grad(0, 0) + 0.2) <= 1e-8);
  CHECK(std::abs(r.grad(1, 0) - 0.2) <= 1e-8);
  CHECK((r.grad - es.charge1 * r.path_grad).norm() <= 1e-12);
  CHECK(r.rcond > 1e-12);

  const SensitivityResult full = analyze(in.net, in.demand, in.paths, in.params, s.sol, owned);
  CHECK((full.grad - r.grad).norm() <= 1e-12);

  SUBCASE("no owned station gives a zero gradient") {
    const KktJacobians none = assemble_jacobians(es, diag, price_selector(2, {}, 1.0));
    CHECK(none.jacobian_price.cols() == 0);
    const SensitivityResult z = gradient(es, none);
    CHECK(z.grad.size() == 0);
  }
  SUBCASE("duplicated column lands one twin in the dependent set") {
    PathStructure twin = in.paths;
    twin.paths.push_back(twin.paths[1]);
    twin.index(in.demand.size());
    UESolution sol = s.sol;
    sol.path_flows.conservativeResize(5);
    sol.path_flows[4] = 0.0;
    refresh_solution(sol, in.net, in.demand, twin, in.params, in.prices());
    EquilibratedSets e2 = classify_paths(sol, twin, in.demand);
    select_eli(e2, twin);
    CHECK(e2.eli.size() == 4);
    REQUIRE(e2.eld.size() == 1);
    CHECK((e2.eld[0] == 1 || e2.eld[0] == 4));
  }
  SUBCASE("a singular system is reported") {
    EquilibratedSets bad = es;
    bad.lambda1.setZero();
    const KktJacobians k2 = assemble_jacobians(bad, diag, price_selector(2, owned, 1.0));
    CHECK_THROWS_WITH_AS(gradient(bad, k2), doctest::Contains("singular KKT Jacobian"), NumericalError);
  }
}

TEST_CASE("cost Jacobian diagonal") {
  Solved s = solve(fixtures::nguyen_dupuis());
  const auto& in = *s.in;
  const Eigen::VectorXd d = cost_jacobian_diag(s.sol, in.net, in.params);
  const double w = in.params.time_value;
  for (int a = 0; a < in.net.num_arcs(); ++a) {
    const double x = s.sol.arc_flows[a];
    const auto& arc = in.net.arcs[a];
    const double h = 1e-5 * std::max(1.0, x);
    const double fd = w * (latency_arc(x + h, arc.free_time, arc.capacity) -
                           latency_arc(std::max(0.0, x - h), arc.free_time, arc.capacity)) /
                      (x + h - std::max(0.0, x - h));
    if (fd > 1e-6) CHECK(d[a] == doctest::Approx(fd).epsilon(1e-6));
    else CHECK(d[a] >= 1e-6);
  }
  for (int m = 0; m < in.net.num_stations(); ++m) {
    const double x = s.sol.charge_flows[m];
    const auto& st = in.net.stations[m];
    const double h = 1e-5 * x;
    const double fd = w * (latency_fcs(x + h, st.free_time, st.wait_coeff, st.capacity) -
                           latency_fcs(x - h, st.free_time, st.wait_coeff, st.capacity)) / (2 * h);
    CHECK(d[in.net.num_arcs() + m] == doctest::Approx(fd).epsilon(1e-6));
  }
  UESolution zero = s.sol;
  zero.arc_flows.setZero();
  zero.charge_flows.setZero();
  CHECK(cost_jacobian_diag(zero, in.net, in.params, 1e-6).maxCoeff() == 1e-6);
}

TEST_CASE("path classification") {
  Solved s = solve(fixtures::illustrative());
  const auto& in = *s.in;
  UESolution sol = s.sol;
  sol.path_costs[3] += 1.0;
  sol.path_flows[3] = 0.0;
  const EquilibratedSets es = classify_paths(sol, in.paths, in.demand);
  CHECK(es.nep == std::vector<int>{3});
  sol.path_flows[3] = 1.0;
  CHECK_THROWS_WITH_AS(classify_paths(sol, in.paths, in.demand), doctest::Contains("NEP carries flow"),
                       NumericalError);
  const EquilibratedSets wide = classify_paths(sol, in.paths, in.demand, std::numeric_limits<double>::infinity());
  CHECK(wide.ep.size() == 4);
}

TEST_CASE("independent columns match an elimination oracle") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> bit(0, 2);
  for (int trial = 0; trial < 40; ++trial) {
    const int rows = 6 + trial % 5, cols = 4 + trial % 7;
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = bit(rng) == 0 ? 1.0 : 0.0;
    if (cols > 2) m.col(cols - 1) = m.col(0) + m.col(1);
    std::vector<int> order(cols);
    std::iota(order.begin(), order.end(), 0);
    const auto kept = independent_columns(m, order, 1e-8);
    const int rank = rank_oracle(m, 1e-8);
    CHECK(static_cast<int>(kept.size()) == rank);
    Eigen::MatrixXd sub(rows, kept.size());
    for (std::size_t j = 0; j < kept.size(); ++j) sub.col(j) = m.col(kept[j]);
    CHECK(rank_oracle(sub, 1e-8) == rank);
  }
}

TEST_CASE("scan order does not change the gradient") {
  Solved s = solve(fixtures::dependent_columns());
  const auto& in = *s.in;
  const auto owned = in.net.owned_stations();
  const SensitivityResult base = analyze(in.net, in.demand, in.paths, in.params, s.sol, owned);
  EquilibratedSets es = classify_paths(s.sol, in.paths, in.demand);
  const Eigen::MatrixXd m = stacked(es, in.paths);
  CHECK(rank_oracle(m, 1e-8) < static_cast<int>(es.ep.size()));
  CHECK(base.num_eld > 0);
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<int> order = es.ep;
    std::shuffle(order.begin(), order.end(), rng);
    SensitivityOptions opt;
    opt.eli_order = order;
    const SensitivityResult r = analyze(in.net, in.demand, in.paths, in.params, s.sol, owned, opt);
    CHECK((r.grad - base.grad).lpNorm<Eigen::Infinity>() <= 1e-8);
  }
}

TEST_CASE("structural properties on every fixture") {
  std::vector<Solved> all;
  all.push_back(solve(fixtures::illustrative()));
  all.push_back(solve(fixtures::nguyen_dupuis()));
  all.push_back(solve(fixtures::dependent_columns()));
  all.push_back(solve(fixtures::symmetric_pair()));
  for (std::uint64_t seed = 1; seed <= 5; ++seed) all.push_back(solve(fixtures::random_small(seed)));
  for (const auto& s : all) {
    const auto& in = *s.in;
    const auto owned = in.net.owned_stations();
    EquilibratedSets es = classify_paths(s.sol, in.paths, in.demand);
    select_eli(es, in.paths);
    const Eigen::VectorXd diag = cost_jacobian_diag(s.sol, in.net, in.params);
    const Eigen::MatrixXd block = es.delta1.transpose() * diag.asDiagonal() * es.delta1;
    CHECK((block - block.transpose()).norm() == 0.0);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(block).eigenvalues().minCoeff() > 0.0);
    for (int w = 0; w < es.lambda1.rows(); ++w) CHECK(es.lambda1.row(w).sum() >= 1.0);

    const SensitivityResult r = analyze(in.net, in.demand, in.paths, in.params, s.sol, owned);
    CHECK(r.rcond > 1e-12);
    for (int k = 0; k < r.grad.cols(); ++k) CHECK(std::abs(r.grad.col(k).sum()) <= 1e-8);

    const PricingProblem problem = in.problem();
    Eigen::VectorXd prices(owned.size());
    for (std::size_t k = 0; k < owned.size(); ++k) prices[k] = in.net.stations[owned[k]].price;
    CHECK(fd_check(problem, prices, r.grad, 1e-3).pass);
  }
}

TEST_CASE("mixed classes reduce to the EV-only gradient") {
  auto ev_only = solve(fixtures::illustrative());
  const SensitivityResult ref =
      analyze(ev_only.in->net, ev_only.in->demand, ev_only.in->paths, ev_only.in->params, ev_only.sol,
              ev_only.in->net.owned_stations());

  auto two_class = [](std::unique_ptr<fixtures::Instance> in) {
    Solved s = solve(std::move(in));
    const auto& i = *s.in;
    EquilibratedSets es = classify_paths(s.sol, i.paths, i.demand);
    select_eli(es, i.paths);
    auto [ev, gv] = split_by_class(es, i.paths, i.demand);
    const Eigen::VectorXd diag = cost_jacobian_diag(s.sol, i.net, i.params);
    const Eigen::MatrixXd sel = price_selector(i.net.num_stations(), i.net.owned_stations(), i.params.charge_energy);
    SensitivityResult single = gradient(es, assemble_jacobians(es, diag, sel));
    SensitivityResult mixed = gradient_mixed(ev, gv, diag, sel);
    return std::make_pair(single, mixed);
  };

  SUBCASE("zero GV demand") {
    auto in = fixtures::mixed(1.0, false);
    in->demand.pairs[2].demand = 0.0;
    auto [single, mixed] = two_class(std::move(in));
    CHECK((mixed.grad - single.grad).lpNorm<Eigen::Infinity>() <= 1e-10);
    CHECK((mixed.grad - ref.grad).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
  SUBCASE("arc-disjoint GV class") {
    auto [single, mixed] = two_class(fixtures::mixed(3.0, true));
    CHECK((mixed.grad - ref.grad).lpNorm<Eigen::Infinity>() <= 1e-8);
    CHECK((mixed.grad - single.grad).lpNorm<Eigen::Infinity>() <= 1e-8);
  }
  SUBCASE("shared roads against finite differences") {
    auto in = fixtures::mixed(1.0, false);
    Solved s = solve(std::move(in));
    const auto& i = *s.in;
    auto [single, mixed] = two_class(fixtures::mixed(1.0, false));
    CHECK((mixed.grad - single.grad).lpNorm<Eigen::Infinity>() <= 1e-8);
    const PricingProblem problem = i.problem();
    const Eigen::MatrixXd fd = fd_gradient(problem, Eigen::VectorXd::Constant(1, 1.0), 1e-3);
    CHECK((fd - mixed.grad).lpNorm<Eigen::Infinity>() <= 2e-3);
  }
}
