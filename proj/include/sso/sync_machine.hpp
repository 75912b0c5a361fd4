#pragma once

// 6th-order subtransient synchronous generator with a first-order static
// exciter, droop governor, and turbine. Two variants:
//  - QPC: stator and step-up transformer treated algebraically,
//  - SPC: stator current as a state behind the Thevenin source E_qd, with
//    the transformer R_g-L_g absorbed into the stator branch.
//
// Machine-frame phasors are composed as x_q + j x_d (leading d-axis, IEEE
// convention); the rotation into the synchronous frame is
// x_DQ = e^{j delta} x_{qd}. See machine_to_dq()/dq_to_machine(): all sign
// conventions live in that function pair.

#include <complex>

#include "sso/phasor.hpp"

namespace sso {

struct SGParams {
  // Electrical (pu on system base) and time constants (s).
  double rs = 0.0;       // stator resistance
  double rg = 0.0;       // transformer resistance
  double lg = 0.0;       // transformer leakage
  double ld = 0.0, lq = 0.0;
  double ldp = 0.0, lqp = 0.0;    // transient
  double ldpp = 0.0, lqpp = 0.0;  // subtransient (ldpp ~= lqpp)
  double lls = 0.0;               // stator leakage
  double td0p = 0.0, tq0p = 0.0, td0pp = 0.0, tq0pp = 0.0;
  double h = 0.0;  // inertia, s (on system base)
  double d = 0.0;  // damping, pu torque per pu speed
  // Controls.
  double ka = 200.0, ta = 0.01;        // static exciter
  double efd_min = -8.0, efd_max = 8.0;
  double r_gov = 0.05, t_gov = 0.2;    // governor droop and lag
  double t_t = 0.5;                    // turbine
  double omega_s = 2.0 * kPi * 60.0;

  void validate(const std::string& who) const;

  double gamma_d1() const { return (ldpp - lls) / (ldp - lls); }
  double gamma_q1() const { return (lqpp - lls) / (lqp - lls); }
  double gamma_d2() const { return (ldp - ldpp) / ((ldp - lls) * (ldp - lls)); }
  double gamma_q2() const { return (lqp - lqpp) / ((lqp - lls) * (lqp - lls)); }
};

/// Dynamic states. The SPC variant appends the two real components of the
/// stator current i_sDQ; the QPC variant computes the stator algebraically.
struct SGState {
  double delta = 0.0;  // rotor angle relative to the synchronous frame, rad
  double omega = 1.0;  // speed, pu
  double eqp = 0.0, edp = 0.0;      // transient emfs
  double psi1d = 0.0, psi2q = 0.0;  // subtransient flux states
  double efd = 0.0;
  double pgv = 0.0, pm = 0.0;
  Complex i_s{};  // stator current, D+jQ (SPC only)
};

/// Control references back-solved at initialization.
struct SGRefs {
  double v_ref = 1.0;
  double p_ref = 0.0;
};

struct SGDerivatives {
  SGState d;        // field-for-field derivatives
  Complex i_inj{};  // injected current, D+jQ
};

inline Complex machine_to_dq(Complex x_qd, double delta) {
  return x_qd * std::polar(1.0, delta);
}
inline Complex dq_to_machine(Complex x_dq, double delta) {
  return x_dq * std::polar(1.0, -delta);
}

/// Subtransient emfs E''_q + j E''_d in the machine frame.
Complex sg_subtransient_emf(const SGState& s, const SGParams& p);

/// QPC variant: stator + transformer algebraic,
/// i = (E'' e^{j delta} - v_bus) / (R_g+R_s + j(L_g+L_d'')).
SGDerivatives sg_qpc_derivatives(const SGState& s, Complex v_bus, const SGRefs& refs,
                                 const SGParams& p);

/// SPC variant: rotor/control derivatives as in the QPC variant plus the
/// stator current differential equation behind E_DQ = e^{j delta}(E_q + j E_d)
/// with E_q = E''_q w_g + dE''_d/dt / w_s, E_d = E''_d w_g - dE''_q/dt / w_s.
SGDerivatives sg_spc_derivatives(const SGState& s, Complex v_bus, const SGRefs& refs,
                                 const SGParams& p);

/// Back-solves all machine states and references from a terminal condition
/// (bus voltage and injected complex power, both at the network bus) so that
/// every derivative vanishes.
struct SGInit {
  SGState state;
  SGRefs refs;
};
SGInit sg_initialize(Complex v_bus, Complex s_inj, const SGParams& p);

inline constexpr int kSgStatesQpc = 9;
inline constexpr int kSgStatesSpc = 11;

}  // namespace sso
