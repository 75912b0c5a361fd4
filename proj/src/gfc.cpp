#include "sso/gfc.hpp"

#include "sso/network.hpp"

namespace sso {

void GFCParams::validate(const std::string& who) const {
  auto req = [&](bool ok, const char* msg) {
    if (!ok) throw ValidationError(who + ": " + msg);
  };
  req(tau_c > 0.0 && g_c > 0.0 && c_c > 0.0 && k_dc > 0.0 && v_dc_ref > 0.0,
      "dc-side parameters must be positive");
  req(r >= 0.0 && l > 0.0 && c > 0.0 && r_on >= 0.0, "filter parameters out of range");
  req(r_t >= 0.0 && l_t > 0.0, "transformer parameters out of range");
  req(m_p > 0.0 && omega_f > 0.0, "droop parameters must be positive");
  req(kp_ac >= 0.0 && ki_ac > 0.0 && kp_v >= 0.0 && ki_v > 0.0 && kp_i >= 0.0 && ki_i > 0.0,
      "controller gains out of range");
  req(kp_al >= 0.0 && ki_al > 0.0 && omega_al > 0.0, "alignment gains out of range");
}

GFCSignals gfc_signals(const GFCState& s, Complex v_bus_dq, double u, const GFCRefs& refs,
                       const GFCParams& p) {
  GFCSignals sig;
  sig.v_pcc = v_bus_dq * std::polar(1.0, -s.rho_c);

  // Droop: frequency from the filtered-power error.
  sig.omega_c_pu = 1.0 + p.m_p * (refs.p_ref + u - s.x_p);

  // Outer loop, d_c channel: PI on the PCC voltage-magnitude error augments
  // the capacitor-voltage reference; the dispatch-point transformer drop is
  // added as a constant offset so the cascaded integrators are stationary at
  // equilibrium.
  const double v_err_d = refs.v_mag_ref - sig.v_pcc.real();
  sig.v_c_ref = Complex{refs.v_mag_ref + p.kp_ac * v_err_d + s.xi_o.real(), 0.0} + refs.v_c_off;

  // Outer loop, q_c channel: PI on the low-pass-filtered v_q,PCC regulates the
  // frame alignment by acting on the frame dynamics (drives v_q,PCC -> 0).
  sig.omega_align = p.kp_al * s.x_al + s.xi_o.imag();

  // Inner voltage loop with capacitive decoupling.
  const Complex vc_err = sig.v_c_ref - s.v_c;
  sig.i_f_ref = p.kp_v * vc_err + s.xi_v + Complex{0.0, p.c} * s.v_c;

  // Inner current loop with inductive decoupling and v_C feedforward. The
  // controller issues its command assuming the nominal dc voltage; the
  // averaged bridge output scales with the actual dc-link voltage through the
  // modulation index.
  const Complex if_err = sig.i_f_ref - s.i_f;
  const Complex e_cmd = p.kp_i * if_err + s.xi_i + Complex{0.0, p.l} * s.i_f + s.v_c;
  sig.e_conv = e_cmd * (s.v_dc / p.v_dc_ref);

  sig.p_t = (sig.e_conv * std::conj(s.i_f)).real();
  sig.i_dc_ref = p.k_dc * (p.v_dc_ref - s.v_dc) + p.g_c * s.v_dc + refs.p_ref / p.v_dc_ref +
                 (refs.p_ref - sig.p_t) / p.v_dc_ref;
  return sig;
}

GFCDerivatives gfc_derivatives(const GFCState& s, Complex v_bus_dq, double u, const GFCRefs& refs,
                               const GFCParams& p) {
  if (s.v_dc <= 0.0)
    throw NumericalError("gfc: dc-link voltage collapsed to zero (model blow-up)");
  const GFCSignals sig = gfc_signals(s, v_bus_dq, u, refs, p);
  const double ws = p.omega_s;
  const Complex jw{0.0, 1.0};  // omega* = 1 pu

  GFCDerivatives out;
  out.d.v_dc = (s.i_src - p.g_c * s.v_dc - sig.p_t / s.v_dc) / p.c_c;
  out.d.i_src = (sig.i_dc_ref - s.i_src) / p.tau_c;
  out.d.i_f = (ws / p.l) *
              (sig.e_conv - s.v_c - (p.r + p.r_on) * s.i_f - jw * p.l * s.i_f);
  out.d.v_c = (ws / p.c) * (s.i_f - s.i_t - jw * p.c * s.v_c);
  out.d.i_t = (ws / p.l_t) * (s.v_c - sig.v_pcc - p.r_t * s.i_t - jw * p.l_t * s.i_t);
  out.d.rho_c = ws * (sig.omega_c_pu - 1.0) + sig.omega_align;
  out.d.x_p = p.omega_f * (sig.p_t - s.x_p);
  out.d.x_al = p.omega_al * (sig.v_pcc.imag() - s.x_al);
  out.d.xi_o = {p.ki_ac * (refs.v_mag_ref - sig.v_pcc.real()),
                p.ki_al * s.x_al};
  out.d.xi_v = p.ki_v * (sig.v_c_ref - s.v_c);
  out.d.xi_i = p.ki_i * (sig.i_f_ref - s.i_f);
  out.i_inj = s.i_t * std::polar(1.0, s.rho_c);
  return out;
}

GFCInit gfc_initialize(Complex v_bus_dq, Complex s_inj, const GFCParams& p) {
  GFCInit init;
  GFCState& s = init.state;

  const Complex i_t_dq = std::conj(s_inj / v_bus_dq);
  s.rho_c = std::arg(v_bus_dq);  // aligns the PCC voltage with the d_c axis
  const Complex rot = std::polar(1.0, -s.rho_c);
  const Complex v_pcc = v_bus_dq * rot;  // purely d-axis by construction
  s.i_t = i_t_dq * rot;
  s.v_c = v_pcc + Complex{p.r_t, p.l_t} * s.i_t;
  s.i_f = s.i_t + Complex{0.0, p.c} * s.v_c;
  const Complex e_conv = s.v_c + Complex{p.r + p.r_on, p.l} * s.i_f;
  const double p_t = (e_conv * std::conj(s.i_f)).real();

  s.x_p = p_t;
  init.refs.p_ref = p_t;
  init.refs.v_mag_ref = v_pcc.real();
  init.refs.v_c_off = Complex{p.r_t, p.l_t} * s.i_t;
  s.xi_o = {0.0, 0.0};  // PCC voltage on-setpoint and frame aligned
  s.x_al = 0.0;         // v_q,PCC = 0 at the aligned equilibrium
  s.xi_v = s.i_t;
  s.xi_i = (p.r + p.r_on) * s.i_f;
  s.v_dc = p.v_dc_ref;
  s.i_src = p.g_c * p.v_dc_ref + init.refs.p_ref / p.v_dc_ref;
  return init;
}

}  // namespace sso
