#include "sso/sync_machine.hpp"

#include <stdexcept>

#include "sso/network.hpp"

namespace sso {

void SGParams::validate(const std::string& who) const {
  auto req = [&](bool ok, const char* msg) {
    if (!ok) throw ValidationError(who + ": " + msg);
  };
  req(ld >= ldp && ldp >= ldpp && ldpp > 0.0, "need L_d >= L_d' >= L_d'' > 0");
  req(lq >= lqp && lqp >= lqpp && lqpp > 0.0, "need L_q >= L_q' >= L_q'' > 0");
  req(lls >= 0.0 && lls < ldp && lls < lqp, "leakage must satisfy 0 <= L_ls < L'");
  req(std::abs(ldpp - lqpp) <= 1e-6 * ldpp + 1e-12,
      "subtransient saliency is neglected; L_d'' and L_q'' must match");
  req(td0p > 0.0 && tq0p > 0.0 && td0pp > 0.0 && tq0pp > 0.0, "time constants must be positive");
  req(h > 0.0, "inertia must be positive");
  req(ka > 0.0 && ta > 0.0 && r_gov > 0.0 && t_gov > 0.0 && t_t > 0.0,
      "control parameters must be positive");
}

Complex sg_subtransient_emf(const SGState& s, const SGParams& p) {
  const double e2q = p.gamma_d1() * s.eqp + (1.0 - p.gamma_d1()) * s.psi1d;
  const double e2d = p.gamma_q1() * s.edp - (1.0 - p.gamma_q1()) * s.psi2q;
  return {e2q, e2d};  // q + jd
}

namespace {

struct RotorDerivs {
  SGState d;
  Complex de2{};  // d/dt of (E''_q + j E''_d)
  Complex e2{};
};

// Rotor, flux, and control derivatives given the machine-frame stator
// current i_m = i_q + j i_d and the terminal-voltage magnitude seen by the
// exciter.
RotorDerivs rotor_derivatives(const SGState& s, Complex i_m, double vt_mag, const SGRefs& refs,
                              const SGParams& p) {
  const double iq = i_m.real(), id = i_m.imag();
  const double gd2 = p.gamma_d2(), gq2 = p.gamma_q2();
  const Complex e2 = sg_subtransient_emf(s, p);
  const double te = e2.real() * iq + e2.imag() * id;

  RotorDerivs out;
  out.e2 = e2;
  out.d.delta = p.omega_s * (s.omega - 1.0);
  out.d.omega = (s.pm / s.omega - te - p.d * (s.omega - 1.0)) / (2.0 * p.h);
  out.d.eqp = (s.efd - s.eqp +
               (p.ld - p.ldp) * (id + gd2 * (s.psi1d - (p.ldp - p.lls) * id - s.eqp))) /
              p.td0p;
  out.d.psi1d = (-s.psi1d + s.eqp + (p.ldp - p.lls) * id) / p.td0pp;
  out.d.edp = (-s.edp -
               (p.lq - p.lqp) * (iq - gq2 * (s.psi2q + s.edp - (p.lqp - p.lls) * iq))) /
              p.tq0p;
  out.d.psi2q = (-s.psi2q - s.edp + (p.lqp - p.lls) * iq) / p.tq0pp;

  double defd = (p.ka * (refs.v_ref - vt_mag) - s.efd) / p.ta;
  if ((s.efd >= p.efd_max && defd > 0.0) || (s.efd <= p.efd_min && defd < 0.0)) defd = 0.0;
  out.d.efd = defd;
  out.d.pgv = (refs.p_ref - (s.omega - 1.0) / p.r_gov - s.pgv) / p.t_gov;
  out.d.pm = (s.pgv - s.pm) / p.t_t;

  out.de2 = {p.gamma_d1() * out.d.eqp + (1.0 - p.gamma_d1()) * out.d.psi1d,
             p.gamma_q1() * out.d.edp - (1.0 - p.gamma_q1()) * out.d.psi2q};
  return out;
}

}  // namespace

SGDerivatives sg_qpc_derivatives(const SGState& s, Complex v_bus, const SGRefs& refs,
                                 const SGParams& p) {
  const double r_tot = p.rs + p.rg;
  const double x_tot = p.ldpp + p.lg;
  const Complex e2 = sg_subtransient_emf(s, p);
  const Complex i_dq = (machine_to_dq(e2, s.delta) - v_bus) / Complex{r_tot, x_tot};
  const Complex i_m = dq_to_machine(i_dq, s.delta);
  const double vt = std::abs(v_bus + Complex{p.rg, p.lg} * i_dq);

  SGDerivatives out;
  out.d = rotor_derivatives(s, i_m, vt, refs, p).d;
  out.i_inj = i_dq;
  return out;
}

SGDerivatives sg_spc_derivatives(const SGState& s, Complex v_bus, const SGRefs& refs,
                                 const SGParams& p) {
  const double r_tot = p.rs + p.rg;
  const double x_tot = p.ldpp + p.lg;
  const Complex i_m = dq_to_machine(s.i_s, s.delta);
  const double vt = std::abs(v_bus + Complex{p.rg, p.lg} * s.i_s);

  const RotorDerivs rot = rotor_derivatives(s, i_m, vt, refs, p);

  // Thevenin source behind the combined impedance: the subtransient emf
  // scaled by rotor speed plus the flux-derivative correction terms.
  const Complex e_src{rot.e2.real() * s.omega + rot.de2.imag() / p.omega_s,
                      rot.e2.imag() * s.omega - rot.de2.real() / p.omega_s};
  const Complex e_dq = machine_to_dq(e_src, s.delta);

  SGDerivatives out;
  out.d = rot.d;
  out.d.i_s = (p.omega_s / x_tot) *
              (e_dq - v_bus - Complex{0.0, x_tot} * s.i_s - r_tot * s.i_s);
  out.i_inj = s.i_s;
  return out;
}

SGInit sg_initialize(Complex v_bus, Complex s_inj, const SGParams& p) {
  const double r_tot = p.rs + p.rg;
  const double xq_tot = p.lq + p.lg;
  const double x2_tot = p.ldpp + p.lg;

  const Complex i_dq = std::conj(s_inj / v_bus);
  const Complex e_i = v_bus + Complex{r_tot, xq_tot} * i_dq;  // along the q axis

  SGInit init;
  SGState& s = init.state;
  s.delta = std::arg(e_i);
  s.omega = 1.0;
  const Complex i_m = dq_to_machine(i_dq, s.delta);
  const Complex v_m = dq_to_machine(v_bus, s.delta);
  const double iq = i_m.real(), id = i_m.imag();

  const Complex e2 = v_m + Complex{r_tot, x2_tot} * i_m;
  s.eqp = e2.real() - (p.ldp - p.ldpp) * id;
  s.psi1d = s.eqp + (p.ldp - p.lls) * id;
  s.efd = s.eqp - (p.ld - p.ldp) * id;
  s.edp = -(p.lq - p.lqp) * iq;
  s.psi2q = -s.edp + (p.lqp - p.lls) * iq;
  s.pm = e2.real() * iq + e2.imag() * id;
  s.pgv = s.pm;
  s.i_s = i_dq;

  const double vt = std::abs(v_bus + Complex{p.rg, p.lg} * i_dq);
  init.refs.v_ref = vt + s.efd / p.ka;
  init.refs.p_ref = s.pgv;

  if (s.efd > p.efd_max || s.efd < p.efd_min)
    throw NumericalError("sg_initialize: required field voltage exceeds exciter limits");
  return init;
}

}  // namespace sso
