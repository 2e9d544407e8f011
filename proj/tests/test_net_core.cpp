#include <doctest.h>

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include "chargeprice/latency.hpp"
#include "chargeprice/paths.hpp"
#include "chargeprice/tntp.hpp"
#include "fixtures.hpp"

using namespace chargeprice;

namespace {

// Composite Simpson rule, the oracle for the closed-form integrals.
double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd m(rows.size(), rows.begin()->size());
  int i = 0;
  for (auto r : rows) {
    int j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace

TEST_CASE("latency functions") {
  CHECK(latency_arc(0.0, 2.0, 10.0) == doctest::Approx(2.0));
  CHECK(latency_arc(10.0, 2.0, 10.0) == doctest::Approx(2.3));
  CHECK(latency_arc(7.0, 1.0, 7.0) == doctest::Approx(1.15));
  CHECK(latency_fcs(6.0, 1.0, 1.0, 3.0) == doctest::Approx(9.0));
  CHECK(latency_fcs(0.0, 0.5, 0.3, 40.0) == doctest::Approx(0.5));
  CHECK(latency_fcs(40.0, 0.5, 0.3, 40.0) == doctest::Approx(0.8));

  for (const VolumeDelay d : {VolumeDelay::bpr(0.2, 30.0), VolumeDelay::charging_cubic(0.5, 0.7, 25.0),
                              VolumeDelay::linear(1.0, 1.0)}) {
    for (double x : {0.0, 3.0, 17.0, 42.0}) {
      const double h = 1e-5 * (1.0 + x);
      CHECK(d.derivative(x) == doctest::Approx((d.value(x + h) - d.value(x - h)) / (2 * h)).epsilon(1e-6));
      CHECK(d.integral(x) == doctest::Approx(simpson([&](double s) { return d.value(s); }, 0.0, x)).epsilon(1e-10));
      for (double dx : {1e-9, 0.5, -0.3 * x}) {
        const double expect = simpson([&](double s) { return d.value(s); }, x, x + dx);
        CHECK(d.integral_delta(x, dx) == doctest::Approx(expect).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("network invariants are enforced") {
  auto in = fixtures::illustrative();
  TransportNetwork net = in->net;
  CHECK_NOTHROW(net.validate());
  net.arcs[0].capacity = 0.0;
  CHECK_THROWS_AS(net.validate(), ValidationError);
  net = in->net;
  net.stations.push_back(net.stations[0]);
  CHECK_THROWS_WITH_AS(net.validate(), doctest::Contains("two stations"), ValidationError);

  ODDemand d = in->demand;
  d.pairs[0].destination = d.pairs[0].origin;
  CHECK_THROWS_AS(d.validate(in->net), ValidationError);
  d = in->demand;
  d.pairs[0].demand = 0.0;  // zero demand is allowed in memory
  CHECK_NOTHROW(d.validate(in->net));
  CHECK(in->net.owned_stations() == std::vector<int>{0});
}

TEST_CASE("tntp parsing") {
  std::istringstream net_in(
      "<NUMBER OF NODES> 3\n<NUM ARCS> 2\n<END OF METADATA>\n~ comment\n1 2 0.5 10 ;\n2 3 0.25 20 ; ~ trailing\n");
  TransportNetwork net = parse_network(net_in, "net");
  REQUIRE(net.num_arcs() == 2);
  CHECK(net.num_nodes() == 3);
  CHECK(net.delay_form == DelayForm::bpr);
  CHECK(net.arcs[1].free_time == 0.25);
  CHECK(net.arcs[1].capacity == 20.0);

  std::istringstream fcs_in("2 0.5 0.3 40 1 215\n");
  parse_stations(fcs_in, "fcs", net);
  REQUIRE(net.num_stations() == 1);
  CHECK(net.stations[0].owned);
  CHECK(net.stations[0].price == 215.0);

  std::istringstream trips_in("1 3 12.5 EV\n1 2 4 GV\n");
  ODDemand d = parse_trips(trips_in, "trips", net);
  REQUIRE(d.size() == 2);
  CHECK(d.pairs[1].vehicle == VehicleClass::gv);
  CHECK(d.pairs[0].demand == 12.5);

  SUBCASE("missing arc count") {
    std::istringstream in("1 2 0.5 10\n");
    CHECK_THROWS_WITH_AS(parse_network(in, "net"), doctest::Contains("NUM ARCS"), ParseError);
  }
  SUBCASE("arc count mismatch") {
    std::istringstream in("<NUM ARCS> 3\n1 2 0.5 10\n");
    CHECK_THROWS_AS(parse_network(in, "net"), ParseError);
  }
  SUBCASE("unknown node carries its line") {
    std::istringstream in("\n1 9 3 EV\n");
    try {
      parse_trips(in, "trips", net);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
      CHECK(std::string(e.what()).find("unknown node 9") != std::string::npos);
    }
  }
  SUBCASE("bad numbers and classes") {
    std::istringstream bad_num("1 2 abc 10\n");
    std::istringstream hdr("<NUM ARCS> 1\n1 2 abc 10\n");
    CHECK_THROWS_AS(parse_network(hdr, "net"), ParseError);
    std::istringstream bad_class("1 3 2 HV\n");
    CHECK_THROWS_AS(parse_trips(bad_class, "trips", net), ParseError);
    std::istringstream zero("1 3 0 EV\n");
    CHECK_THROWS_AS(parse_trips(zero, "trips", net), ParseError);
    std::istringstream empty("~ nothing\n");
    CHECK_THROWS_WITH_AS(parse_trips(empty, "trips", net), doctest::Contains("no OD pairs"), ValidationError);
  }
  SUBCASE("missing file is named") {
    CHECK_THROWS_WITH_AS(load_tntp("/nonexistent/net.tntp", "/nonexistent/t", "/nonexistent/f"),
                         doctest::Contains("/nonexistent/net.tntp"), ValidationError);
  }
  SUBCASE("shipped fixtures load") {
    auto [nd, dem] = load_tntp(fixtures::data_path("nguyen_dupuis/network.tntp"),
                               fixtures::data_path("nguyen_dupuis/trips.tntp"),
                               fixtures::data_path("nguyen_dupuis/fcs.txt"));
    CHECK(nd.num_nodes() == 13);
    CHECK(nd.num_stations() == 4);
    CHECK(nd.owned_stations().size() == 2);
    auto [il, il_dem] = load_tntp(fixtures::data_path("illustrative/network.tntp"),
                                  fixtures::data_path("illustrative/trips.tntp"),
                                  fixtures::data_path("illustrative/fcs.txt"));
    CHECK(il.delay_form == DelayForm::linear);
    CHECK(il_dem.size() == 2);
  }
}

TEST_CASE("illustrative incidence matrices") {
  auto in = fixtures::illustrative();
  const PathStructure& ps = in->paths;
  REQUIRE(ps.size() == 4);
  CHECK(ps.arc_path() == mat({{1, 0, 1, 0}, {1, 0, 0, 0}, {0, 1, 0, 1}, {0, 0, 0, 1}, {0, 0, 1, 0}, {0, 1, 0, 0}}));
  CHECK(ps.charge_path() == mat({{1, 0, 1, 0}, {0, 1, 0, 1}}));
  CHECK(ps.od_path() == mat({{1, 1, 0, 0}, {0, 0, 1, 1}}));
  const GeneralizedIncidence gi = hyper_arc_transform(ps);
  CHECK(gi.delta.rows() == 8);
  CHECK(gi.delta.topRows(6) == ps.arc_path());
  CHECK(gi.delta.bottomRows(2) == ps.charge_path());
  CHECK(gi.is_hyper_arc == std::vector<bool>{false, false, false, false, false, false, true, true});
  CHECK(gi.station_of_row[7] == 1);
  CHECK_NOTHROW(ps.validate(in->net, in->demand));
}

TEST_CASE("k shortest paths against exhaustive enumeration") {
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    auto in = fixtures::random_small(seed);
    const TransportNetwork& net = in->net;
    // Oracle: every loopless path by depth-first search, sorted by (cost, arcs).
    for (const auto& od : in->demand.pairs) {
      std::vector<std::pair<double, std::vector<int>>> all;
      std::vector<int> stack;
      std::vector<char> seen(net.num_nodes(), 0);
      std::function<void(int, double)> dfs = [&](int at, double cost) {
        if (at == od.destination) {
          all.emplace_back(cost, stack);
          return;
        }
        seen[at] = 1;
        for (int a = 0; a < net.num_arcs(); ++a)
          if (net.arcs[a].tail == at && !seen[net.arcs[a].head]) {
            stack.push_back(a);
            dfs(net.arcs[a].head, cost + net.arcs[a].free_time);
            stack.pop_back();
          }
        seen[at] = 0;
      };
      dfs(od.origin, 0.0);
      std::sort(all.begin(), all.end());
      const auto got = k_shortest_paths(net, od.origin, od.destination, 4);
      REQUIRE(got.size() == std::min<std::size_t>(4, all.size()));
      for (std::size_t i = 0; i < got.size(); ++i) {
        double cost = 0.0;
        for (int a : got[i]) cost += net.arcs[a].free_time;
        CHECK(cost == doctest::Approx(all[i].first).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("path generation classes") {
  auto in = fixtures::dependent_columns();
  const PathStructure& ps = in->paths;
  CHECK(ps.size() == 5);
  int via_rival = 0;
  for (const auto& p : ps.paths) via_rival += p.station == 0;
  CHECK(via_rival == 4);

  auto mixed = fixtures::mixed(1.0, true);
  for (const auto& p : mixed->paths.paths) {
    if (mixed->demand.pairs[p.od].vehicle == VehicleClass::gv) CHECK(p.station == -1);
    else CHECK(p.station >= 0);
  }
  CHECK(mixed->paths.od_paths[2].size() == 2);

  SUBCASE("EV pair with no reachable station") {
    TransportNetwork net;
    fixtures::add_nodes(net, 3);
    fixtures::add_arc(net, 1, 2, 1, 1);
    fixtures::add_arc(net, 2, 3, 1, 1);
    fixtures::add_station(net, 3, 1, 1, 1, true, 1);
    ODDemand d;
    fixtures::add_od(d, net, 1, 2, 1.0);
    CHECK_THROWS_WITH_AS(generate_paths(net, d, 2), doctest::Contains("no feasible EV path"), ValidationError);
    ODDemand back;
    fixtures::add_od(back, net, 3, 1, 1.0);
    CHECK_THROWS_WITH_AS(generate_paths(net, back, 2), doctest::Contains("disconnected"), ValidationError);
  }
}
