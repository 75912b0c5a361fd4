#pragma once

// Whole-system assembly: power-flow initialization, device/network
// interconnection with frame rotations, and the two full models:
//   SPC - pure ODE with the dynamic network,
//   QPC - device ODEs with an algebraic admittance-network solve,
// both exposed through a single vector field f(x, u).

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sso/gfc.hpp"
#include "sso/network.hpp"
#include "sso/power_flow.hpp"
#include "sso/sync_machine.hpp"

namespace sso {

enum class Framework { SPC, QPC };

std::string framework_name(Framework fw);

// ---------------------------------------------------------------------------
// Case definition (mirrors the configuration file)
// ---------------------------------------------------------------------------

struct BusDef {
  std::string name;
  double v_base_kv = 230.0;
};

struct BranchDef {
  std::string name, from, to;
  double r = 0.0, l = 0.0, c = 0.0;
};

struct LoadDef {
  std::string name, bus;
  double p = 0.0;        // pu
  double q = 0.0;        // inductive positive
  double c_shunt = 0.0;  // shunt capacitor bank, pu
};

struct DispatchDef {
  BusType type = BusType::PV;
  double p = 0.0;
  double v = 1.0;
};

struct SgDef {
  std::string name, bus;
  SGParams params;
  DispatchDef dispatch;
};

struct GfcDef {
  std::string name, bus;
  GFCParams params;
  DispatchDef dispatch;
};

struct TieDef {
  std::vector<std::string> branches;
  double target = 0.0;
  std::string adjust_device;
};

struct DisturbanceDef {
  std::vector<std::string> targets;  // input device names; empty = all inputs
  std::string waveform = "none";     // none | step | pulse
  double magnitude = 0.0;
  double start = 0.0;
  double duration = 0.0;
};

struct SimDef {
  double t_end = 1.0;
  double dt_spc = 20e-6;
  double dt_qpc = 100e-6;
  std::string method = "rk4";  // rk4 | trapezoidal
  DisturbanceDef disturbance;
  std::vector<std::string> record;  // channel names; empty = output map
  int decimation = 1;
};

struct AnalysisDef {
  double f_min = 0.1, f_max = 200.0;
  int n_points = 400;
  int prony_order = 24;
  double prony_window_begin = 0.5, prony_window_end = 2.5;
};

struct CaseDefinition {
  std::string name;
  double f_hz = 60.0;
  double s_base_mva = 100.0;
  Framework default_framework = Framework::SPC;
  std::vector<BusDef> buses;
  std::vector<BranchDef> branches;
  std::vector<LoadDef> loads;
  std::vector<SgDef> sgs;
  std::vector<GfcDef> gfcs;
  std::optional<TieDef> tie;
  std::vector<std::string> inputs;   // device names driven by u
  std::vector<std::string> outputs;  // observed channels
  SimDef sim;
  AnalysisDef analysis;

  double omega_s() const { return 2.0 * kPi * f_hz; }
  void validate() const;
};

// ---------------------------------------------------------------------------
// Assembled model
// ---------------------------------------------------------------------------

struct SgSlot {
  std::string name;
  int node = 0;
  int offset = 0;  // state-vector offset
  SGParams params;
  SGRefs refs;
};

struct GfcSlot {
  std::string name;
  int node = 0;
  int offset = 0;
  GFCParams params;
  GFCRefs refs;
  int input = -1;  // index into u, or -1
};

class SystemModel {
 public:
  Framework framework = Framework::SPC;
  Topology topology;  // loads synthesized from the power flow
  IncidenceMatrices incidence;
  std::vector<SgSlot> sgs;
  std::vector<GfcSlot> gfcs;
  std::vector<LoadDef> load_defs;  // synthesized into topology.loads at init
  std::vector<std::string> state_labels;
  std::vector<std::string> input_labels;
  std::vector<std::string> output_channels;
  int n_states = 0;
  int network_offset = 0;  // first network state (SPC)

  int input_count() const { return static_cast<int>(input_labels.size()); }
  int output_count() const { return static_cast<int>(output_channels.size()); }
  int state_index(const std::string& label) const;

  // QPC algebraic network (admittance with SG internal branches folded in).
  AdmittanceMatrix y_qpc;
  std::shared_ptr<const Eigen::PartialPivLU<ComplexMatrix>> y_qpc_lu;
};

struct OperatingPoint {
  RealVector x0;
  RealVector u0;
  PowerFlowRecord pf;
  double residual = 0.0;  // ||f(x0, u0)||_inf after refinement
};

/// Builds the model skeleton (no operating point yet).
SystemModel build_system(const CaseDefinition& def, Framework fw);

/// Runs the power flow of a case (with the tie-flow constraint if defined).
PowerFlowRecord run_case_power_flow(const CaseDefinition& def, const SystemModel& model);

/// Synthesizes constant-impedance loads, back-solves every device state and
/// reference, assembles x0, and refines by damped Newton until
/// ||f(x0,u0)||_inf < 1e-9 (throws NumericalError if that fails).
OperatingPoint initialize(SystemModel& model, const PowerFlowRecord& pf);

/// The system vector field dx/dt = f(x, u). Pure and reentrant.
void vector_field(const SystemModel& model, const RealVector& x, const RealVector& u,
                  RealVector& dx);
RealVector vector_field(const SystemModel& model, const RealVector& x, const RealVector& u);

/// Evaluates the model's output map (same code path the linearized C and D
/// matrices are derived from). Throws ValidationError for unknown channels.
RealVector record_channels(const SystemModel& model, const RealVector& x, const RealVector& u);
RealVector evaluate_channels(const SystemModel& model, const RealVector& x, const RealVector& u,
                             const std::vector<std::string>& channels);

/// Bus voltages implied by a state vector (network states for SPC, the
/// algebraic solve for QPC).
ComplexVector bus_voltages(const SystemModel& model, const RealVector& x, const RealVector& u);

/// Instantaneous power bookkeeping of the SPC network (device input power,
/// dissipation, and rate of change of stored energy).
struct PowerAudit {
  double injected = 0.0;
  double dissipated = 0.0;
  double stored_rate = 0.0;
  double imbalance() const { return injected - dissipated - stored_rate; }
};
PowerAudit power_audit(const SystemModel& model, const RealVector& x, const RealVector& u);

// State packing helpers shared with tests.
void pack_sg(const SGState& s, bool spc, double* out);
SGState unpack_sg(const double* x, bool spc);
void pack_gfc(const GFCState& s, double* out);
GFCState unpack_gfc(const double* x);

}  // namespace sso
