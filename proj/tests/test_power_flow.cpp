#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sso/power_flow.hpp"

using namespace sso;

namespace {

Topology two_bus(double r, double x) {
  Topology t;
  t.node_names = {"n1", "n2"};
  t.branches.push_back({"b21", 1, 0, r, x, 0.0});  // from the generator toward the slack
  t.devices.push_back({"dev", 0});
  return t;
}

Topology seven_bus_case() {
  Topology t;
  t.node_names = {"bus5", "bus6", "bus7", "bus8", "bus9", "bus10", "bus11"};
  auto add = [&](const char* name, int f, int to, double r, double l, double c) {
    t.branches.push_back({name, f, to, r, l, c});
  };
  add("line5-6", 0, 1, 0.0025, 0.025, 0.04375);
  add("line6-7", 1, 2, 0.001, 0.01, 0.0175);
  add("line7-8a", 2, 3, 0.011, 0.11, 0.1925);
  add("line7-8b", 2, 3, 0.011, 0.11, 0.1925);
  add("line8-9a", 3, 4, 0.011, 0.11, 0.1925);
  add("line8-9b", 3, 4, 0.011, 0.11, 0.1925);
  add("line9-10", 4, 5, 0.001, 0.01, 0.0175);
  add("line10-11", 5, 6, 0.0025, 0.025, 0.04375);
  t.devices = {{"g1", 1}, {"c1", 0}, {"c2", 6}, {"c3", 5}};
  return t;
}

std::vector<PowerFlowBusSpec> seven_bus_specs() {
  std::vector<PowerFlowBusSpec> buses(7);
  buses[1].type = BusType::Slack;  // machine bus
  buses[1].v_set = 1.01;
  buses[0].type = BusType::PV;
  buses[0].p_gen = 7.0;
  buses[0].v_set = 1.03;
  buses[6].type = BusType::PV;
  buses[6].p_gen = 7.19;
  buses[6].v_set = 1.03;
  buses[5].type = BusType::PV;
  buses[5].p_gen = 7.0;
  buses[5].v_set = 1.01;
  buses[2].p_load = 9.67;
  buses[2].q_load = 1.0;
  buses[2].b_shunt = 2.0;
  buses[4].p_load = 17.67;
  buses[4].q_load = 0.5;
  buses[4].b_shunt = 3.5;
  return buses;
}

}  // namespace

TEST_CASE("a lossless two-bus transfer solves to the textbook angle") {
  const double x = 0.1, p = 1.0;
  const Topology t = two_bus(0.0, x);
  std::vector<PowerFlowBusSpec> buses(2);
  buses[0].type = BusType::Slack;
  buses[0].v_set = 1.0;
  buses[1].type = BusType::PV;
  buses[1].p_gen = p;
  buses[1].v_set = 1.0;
  const PowerFlowRecord rec = solve_power_flow(t, buses);
  CHECK(std::arg(rec.v(1)) == doctest::Approx(std::asin(p * x)).epsilon(1e-10));
  CHECK(std::abs(rec.v(1)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(branch_sending_power(t, rec.v, "b21") == doctest::Approx(p).epsilon(1e-9));
  // Lossless line: the slack absorbs exactly what the generator sends.
  CHECK(rec.p_gen(0) == doctest::Approx(-p).epsilon(1e-9));
}

TEST_CASE("an unloaded network converges to a flat profile") {
  const Topology t = seven_bus_case();
  std::vector<PowerFlowBusSpec> buses(7);
  buses[1].type = BusType::Slack;
  for (auto& b : buses) b.v_set = 1.0;
  const PowerFlowRecord rec = solve_power_flow(t, buses);
  // Line charging produces reactive flows whose series losses the slack must
  // carry, so angles spread by milliradians only; PQ voltages float above 1.
  for (int i = 0; i < 7; ++i) CHECK(std::abs(std::arg(rec.v(i))) < 0.01);
  for (int i : {2, 3, 4}) CHECK(std::abs(rec.v(i)) > 1.0);
  CHECK(rec.max_mismatch < 1e-10);
}

TEST_CASE("PV buses hold their magnitude setpoints") {
  const PowerFlowRecord rec = solve_power_flow(seven_bus_case(), seven_bus_specs());
  CHECK(std::abs(rec.v(0)) == doctest::Approx(1.03).epsilon(1e-10));
  CHECK(std::abs(rec.v(5)) == doctest::Approx(1.01).epsilon(1e-10));
  CHECK(std::abs(rec.v(6)) == doctest::Approx(1.03).epsilon(1e-10));
  CHECK(std::abs(rec.v(1)) == doctest::Approx(1.01).epsilon(1e-12));
  CHECK(std::arg(rec.v(1)) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("the solved injections satisfy the mismatch equations") {
  const auto buses = seven_bus_specs();
  const PowerFlowRecord rec = solve_power_flow(seven_bus_case(), buses);
  CHECK(rec.max_mismatch < 1e-10);
  for (int i = 0; i < 7; ++i) {
    if (buses[static_cast<std::size_t>(i)].type == BusType::PV)
      CHECK(rec.p_gen(i) ==
            doctest::Approx(buses[static_cast<std::size_t>(i)].p_gen).epsilon(1e-9));
    if (buses[static_cast<std::size_t>(i)].type == BusType::PQ) {
      CHECK(std::abs(rec.p_gen(i)) < 1e-9);
      CHECK(std::abs(rec.q_gen(i)) < 1e-9);
    }
  }
}

TEST_CASE("active power balances generation against load and series losses") {
  const Topology t = seven_bus_case();
  const auto buses = seven_bus_specs();
  const PowerFlowRecord rec = solve_power_flow(t, buses);
  double generation = 0.0, load = 0.0;
  for (int i = 0; i < 7; ++i) {
    generation += rec.p_gen(i);
    load += buses[static_cast<std::size_t>(i)].p_load;
  }
  double losses = 0.0;
  for (const auto& b : t.branches)
    losses += b.r * std::norm((rec.v(b.from) - rec.v(b.to)) / Complex{b.r, b.l});
  CHECK(generation - load == doctest::Approx(losses).epsilon(1e-8));
}

TEST_CASE("the tie-flow secant loop lands the double-circuit flow on target") {
  const Topology t = seven_bus_case();
  const auto buses = seven_bus_specs();
  PowerFlowSettings st;
  st.tie = TieFlowTarget{{"line7-8a", "line7-8b"}, 4.0, 6};
  const PowerFlowRecord rec = solve_power_flow(t, buses, st);
  CHECK(rec.tie_flow == doctest::Approx(4.0).epsilon(1e-8));
  const double measured =
      branch_sending_power(t, rec.v, "line7-8a") + branch_sending_power(t, rec.v, "line7-8b");
  CHECK(measured == doctest::Approx(4.0).epsilon(1e-8));
  // Identical parallel circuits split the transfer evenly.
  CHECK(branch_sending_power(t, rec.v, "line7-8a") ==
        doctest::Approx(branch_sending_power(t, rec.v, "line7-8b")).epsilon(1e-10));
}

TEST_CASE("tie adjustment requires a PV bus") {
  PowerFlowSettings st;
  st.tie = TieFlowTarget{{"line7-8a"}, 1.0, 2};  // bus7 is a load bus
  CHECK_THROWS_AS(solve_power_flow(seven_bus_case(), seven_bus_specs(), st), ValidationError);
}

TEST_CASE("a missing slack bus is rejected") {
  std::vector<PowerFlowBusSpec> buses(2);
  buses[0].type = BusType::PV;
  buses[1].type = BusType::PQ;
  CHECK_THROWS_AS(solve_power_flow(two_bus(0.01, 0.1), buses), ValidationError);
}

TEST_CASE("an infeasible transfer fails with a convergence error") {
  const Topology t = two_bus(0.0, 0.1);
  std::vector<PowerFlowBusSpec> buses(2);
  buses[0].type = BusType::Slack;
  buses[1].type = BusType::PQ;
  buses[1].p_load = 50.0;  // far beyond the 10 pu static limit
  CHECK_THROWS_AS(solve_power_flow(t, buses), NumericalError);
}

TEST_CASE("a capacitive shunt raises the voltage of a load bus") {
  Topology t = two_bus(0.01, 0.1);
  std::vector<PowerFlowBusSpec> low(2), high(2);
  low[0].type = high[0].type = BusType::Slack;
  low[1].type = high[1].type = BusType::PQ;
  low[1].p_load = high[1].p_load = 1.0;
  high[1].b_shunt = 0.5;
  const PowerFlowRecord a = solve_power_flow(t, low);
  const PowerFlowRecord b = solve_power_flow(t, high);
  CHECK(std::abs(b.v(1)) > std::abs(a.v(1)));
}
