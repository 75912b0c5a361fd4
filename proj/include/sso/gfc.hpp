#pragma once

// Droop-controlled grid-forming converter: functional dc source with a
// reference-current law, dc-link capacitor, averaged ac bridge, RLC filter,
// step-up transformer, and droop / outer-voltage / inner cascaded loops.
//
// Converter-frame phasors are composed as x_d + j x_q; the rotation into the
// synchronous frame is x_DQ = e^{j rho_c} x_{dq} with rho_c the converter
// frame angle relative to the synchronous frame.

#include <complex>

#include "sso/phasor.hpp"

namespace sso {

struct GFCParams {
  // dc side (pu on system base unless noted).
  double tau_c = 0.05;   // source lag, s
  double g_c = 0.45;     // dc-side conductance
  double c_c = 325.73;   // dc-link capacitance
  double k_dc = 1080.0;  // dc voltage regulation gain
  double v_dc_ref = 1.0;
  // ac side.
  double r = 5.5556e-5;  // filter resistance
  double l = 0.0042;     // filter inductance
  double c = 2.0358;     // filter capacitance
  double r_on = 0.001;   // converter loss resistance lumped with the filter
  double r_t = 0.002 / 9.0;  // transformer resistance
  double l_t = 0.15 / 9.0;   // transformer leakage
  // Controls.
  double m_p = 0.01;          // P-f droop, pu speed per pu power
  double omega_f = 10.0 * kPi;  // droop power low-pass cutoff, rad/s
  double kp_ac = 0.0010, ki_ac = 0.5000;  // outer voltage loop (d-axis)
  double kp_al = 50.0, ki_al = 2500.0;    // PCC q-axis frame-alignment PI
  double omega_al = 2500.0;               // alignment measurement low-pass, rad/s
  double kp_v = 9.3600, ki_v = 0.0554;    // inner voltage loop
  double kp_i = 0.0411, ki_i = 1.7389e-4; // inner current loop
  double omega_s = 2.0 * kPi * 60.0;

  void validate(const std::string& who) const;
};

/// 17 real states per converter.
struct GFCState {
  double v_dc = 1.0;
  double i_src = 0.0;
  Complex i_f{};    // filter inductor current, d_c + j q_c
  Complex v_c{};    // filter capacitor voltage
  Complex i_t{};    // transformer current
  double rho_c = 0.0;  // frame angle relative to the synchronous frame, rad
  double x_p = 0.0;    // filtered power
  double x_al = 0.0;   // low-pass-filtered v_q,PCC seen by the alignment PI
  Complex xi_o{};   // outer-loop integrators: d = voltage, q = frame alignment
  Complex xi_v{};   // inner voltage loop integrator
  Complex xi_i{};   // inner current loop integrator
};

/// References back-solved at initialization. p_ref is the internal power
/// reference the droop and dc source regulate to; the disturbance input u
/// modulates it.
struct GFCRefs {
  double p_ref = 0.0;
  double v_mag_ref = 1.0;
  Complex v_c_off{};  // transformer-drop offset of the v_C reference
};

struct GFCDerivatives {
  GFCState d;
  Complex i_inj{};  // transformer current in D+jQ
};

/// Intermediate control and power signals (exposed for tests and channels).
struct GFCSignals {
  Complex v_pcc{};    // PCC voltage in the converter frame
  Complex v_c_ref{};
  Complex i_f_ref{};
  Complex e_conv{};   // averaged bridge voltage command
  double p_t = 0.0;   // converter ac terminal power
  double omega_c_pu = 1.0;
  double omega_align = 0.0;  // alignment-PI contribution to d(rho_c)/dt, rad/s
  double i_dc_ref = 0.0;
};

GFCSignals gfc_signals(const GFCState& s, Complex v_bus_dq, double u, const GFCRefs& refs,
                       const GFCParams& p);

/// Full derivative evaluation. v_bus_dq is the PCC node voltage in the
/// synchronous frame; u modulates the power reference. Throws NumericalError
/// when v_dc <= 0 (model blow-up).
GFCDerivatives gfc_derivatives(const GFCState& s, Complex v_bus_dq, double u, const GFCRefs& refs,
                               const GFCParams& p);

/// Back-solves every state and reference from the PCC condition (bus voltage
/// and injected complex power at the PCC, synchronous frame) so that all
/// derivatives vanish.
struct GFCInit {
  GFCState state;
  GFCRefs refs;
};
GFCInit gfc_initialize(Complex v_bus_dq, Complex s_inj, const GFCParams& p);

inline constexpr int kGfcStates = 17;

}  // namespace sso
