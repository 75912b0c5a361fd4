#pragma once

// Transmission network models in the synchronous D-Q frame:
//  - SPC: lumped pi-section dynamic network (series R-L branch currents,
//    node voltages on shunt capacitance, parallel R-L-C loads as states),
//  - QPC: algebraic admittance-matrix network solved by current injection.

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sso/phasor.hpp"

namespace sso {

using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Series R-L branch with total line-charging capacitance C (half at each end).
struct Branch {
  std::string name;
  int from = 0;
  int to = 0;
  double r = 0.0;  // pu
  double l = 0.0;  // pu
  double c = 0.0;  // pu, total charging
};

/// Parallel R_L - L_L - C_L constant-impedance load. r_l == inf or l_l == 0
/// drop the respective element; c_l adds to the node capacitance.
struct Load {
  std::string name;
  int node = 0;
  double r_l = std::numeric_limits<double>::infinity();
  double l_l = 0.0;
  double c_l = 0.0;
};

/// Device-transformer attachment point (SG or GFC injection node).
struct DeviceAttachment {
  std::string name;
  int node = 0;
};

struct Topology {
  std::vector<std::string> node_names;
  std::vector<Branch> branches;
  std::vector<DeviceAttachment> devices;
  std::vector<Load> loads;
  double omega_s = 2.0 * kPi * 60.0;

  int node_count() const { return static_cast<int>(node_names.size()); }
  int branch_count() const { return static_cast<int>(branches.size()); }
  int device_count() const { return static_cast<int>(devices.size()); }
  int load_count() const { return static_cast<int>(loads.size()); }

  /// Indices of loads with a series inductor state (l_l > 0).
  std::vector<int> inductive_loads() const;

  /// Total shunt capacitance at each node: half-charging of incident
  /// branches plus any load C_L.
  std::vector<double> node_capacitance() const;

  /// Validates graph connectivity, element signs, and attachment indices.
  /// `spc` additionally requires every node to carry shunt capacitance.
  void validate(bool spc) const;

  int node_index(const std::string& name) const;
  int branch_index(const std::string& name) const;
};

/// CCI (n x (m+l), device columns first) and CCU (l x n) of the KCL/KVL
/// relations i_N = CCI [i_dev; i_branch], v_branch = CCU v_N.
struct IncidenceMatrices {
  RealMatrix cci;
  RealMatrix ccu;
};

IncidenceMatrices build_incidence(const Topology& t);

/// Dynamic network state: branch currents, node voltages, and the inductor
/// currents of loads with l_l > 0 (in topology load order).
struct NetworkStateSPC {
  ComplexVector i_branch;
  ComplexVector v_node;
  ComplexVector i_load;
};

struct NetworkDerivatives {
  ComplexVector di_branch;
  ComplexVector dv_node;
  ComplexVector di_load;
};

/// Right-hand side of the SPC network equations with omega* = 1 pu.
/// `inj` holds the device injection currents (one per device attachment).
NetworkDerivatives spc_network_derivatives(const NetworkStateSPC& state, const ComplexVector& inj,
                                           const Topology& t, const IncidenceMatrices& inc);

/// Analytic Jacobian of the SPC network equations over the real state
/// ordering [branches (D,Q)..., nodes (D,Q)..., loads (D,Q)...] with device
/// injections held constant.
RealMatrix spc_network_jacobian(const Topology& t, const IncidenceMatrices& inc);

struct AdmittanceMatrix {
  ComplexMatrix y;
};

/// Standard Y-bus at omega* = 1 pu: series branch admittances, half-charging
/// shunts, and constant-impedance loads folded in.
AdmittanceMatrix build_admittance(const Topology& t);

/// Solves Y v = i by dense LU. Throws NumericalError if the residual check
/// fails (singular or near-singular matrix).
ComplexVector qpc_solve(const AdmittanceMatrix& y, const ComplexVector& inj);

}  // namespace sso
