#pragma once

// Newton-Raphson power flow on the polar mismatch equations, with an
// optional outer secant loop that retunes one generator's dispatch until a
// designated tie flow hits its target.

#include <optional>
#include <string>
#include <vector>

#include "sso/network.hpp"

namespace sso {

enum class BusType { Slack, PV, PQ };

struct PowerFlowBusSpec {
  BusType type = BusType::PQ;
  double p_gen = 0.0;   // generator injection, pu (PV)
  double v_set = 1.0;   // voltage setpoint (PV/slack)
  double p_load = 0.0;  // constant-power load, pu
  double q_load = 0.0;  // inductive positive
  double b_shunt = 0.0; // fixed shunt susceptance (capacitive positive), pu
};

struct TieFlowTarget {
  std::vector<std::string> branches;  // measured at each branch's from-end
  double target = 0.0;                // pu
  int adjust_bus = -1;                // PV bus whose P absorbs the adjustment
};

struct PowerFlowSettings {
  double tolerance = 1e-10;
  int max_iterations = 50;
  std::optional<TieFlowTarget> tie;
  double tie_tolerance = 1e-9;
};

struct PowerFlowRecord {
  ComplexVector v;        // bus voltages, D+jQ (slack angle = 0)
  ComplexVector s_inj;    // net injected power per bus
  RealVector p_gen;       // generator injection per bus (load added back)
  RealVector q_gen;
  int iterations = 0;
  double tie_flow = 0.0;  // measured tie flow when a target was given
  double max_mismatch = 0.0;
};

/// Branches and shunts are taken from `t`; constant-power loads and
/// generation from `buses` (one entry per node, same order). The R-L-C load
/// elements of `t` are ignored here (they are synthesized afterwards from
/// the solved voltages); only c_l contributes as a shunt via b_shunt.
PowerFlowRecord solve_power_flow(const Topology& t, const std::vector<PowerFlowBusSpec>& buses,
                                 const PowerFlowSettings& settings = {});

/// P flowing out of the from-end of `branch` at the solved voltages.
double branch_sending_power(const Topology& t, const ComplexVector& v, const std::string& branch);

}  // namespace sso
