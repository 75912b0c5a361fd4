#pragma once

// Fixed-step time-domain integration of a system model with disturbance
// injection and channel recording.

#include <string>
#include <vector>

#include "sso/system_model.hpp"

namespace sso {

enum class IntegrationMethod { RK4Fixed, TrapezoidalImplicit };

struct SimConfig {
  double t_end = 1.0;
  double dt = 20e-6;
  IntegrationMethod method = IntegrationMethod::RK4Fixed;
  DisturbanceDef disturbance;
  std::vector<std::string> record;  // empty = the model's output map
  int decimation = 1;
  double newton_tol = 1e-10;  // trapezoidal inner solve
};

struct SimEvent {
  double t = 0.0;
  std::string what;
};

struct SimResult {
  RealVector time;
  RealMatrix channels;  // one column per recorded channel
  std::vector<std::string> channel_names;
  std::vector<SimEvent> events;
  bool truncated = false;  // blow-up abort
  RealVector x_final;
};

/// Input vector at time t for a disturbance definition.
RealVector disturbance_input(const SystemModel& model, const DisturbanceDef& d, double t);

/// Integrates from op.x0. Deterministic; identical configs give bit-identical
/// results. A state blow-up (|x|_inf > 1e6 or a device NumericalError)
/// truncates the run and records an event instead of throwing.
SimResult integrate(const SystemModel& model, const OperatingPoint& op, const SimConfig& cfg);

}  // namespace sso
