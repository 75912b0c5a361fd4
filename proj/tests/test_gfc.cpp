#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sso/gfc.hpp"
#include "sso/network.hpp"

using namespace sso;

namespace {

const Complex kVBus = std::polar(1.03, 0.15);
const Complex kSInj{7.0, 0.8};

double state_residual(const GFCState& d) {
  double r = std::abs(d.v_dc);
  r = std::max(r, std::abs(d.i_src));
  r = std::max(r, std::abs(d.i_f));
  r = std::max(r, std::abs(d.v_c));
  r = std::max(r, std::abs(d.i_t));
  r = std::max(r, std::abs(d.rho_c));
  r = std::max(r, std::abs(d.x_p));
  r = std::max(r, std::abs(d.x_al));
  r = std::max(r, std::abs(d.xi_o));
  r = std::max(r, std::abs(d.xi_v));
  r = std::max(r, std::abs(d.xi_i));
  return r;
}

}  // namespace

TEST_CASE("initialization is an exact equilibrium of all seventeen states") {
  const GFCParams p;
  const GFCInit init = gfc_initialize(kVBus, kSInj, p);
  const GFCDerivatives d = gfc_derivatives(init.state, kVBus, 0.0, init.refs, p);
  CHECK(state_residual(d.d) < 1e-9);
  CHECK(std::abs(d.i_inj - std::conj(kSInj / kVBus)) < 1e-10);
  CHECK(std::abs(kVBus * std::conj(d.i_inj) - kSInj) < 1e-9);
}

TEST_CASE("the dc source equilibrium carries the conductance and the dispatch") {
  const GFCParams p;
  const GFCInit init = gfc_initialize(kVBus, kSInj, p);
  const GFCSignals sig = gfc_signals(init.state, kVBus, 0.0, init.refs, p);
  // i_dc* = G_c v* + P*/v* with the regulation terms dormant at the setpoint.
  const double i_dc_star = p.g_c * p.v_dc_ref + init.refs.p_ref / p.v_dc_ref;
  CHECK(init.state.i_src == doctest::Approx(i_dc_star).epsilon(1e-12));
  CHECK(sig.i_dc_ref == doctest::Approx(i_dc_star).epsilon(1e-9));
}

TEST_CASE("a converter power step discharges the dc link at -dP / (C_c v_dc)") {
  const GFCParams p;
  const GFCInit init = gfc_initialize(kVBus, kSInj, p);
  GFCState bumped = init.state;
  bumped.i_f *= 1.02;  // raises the bridge power while i_src still holds P*
  const double p0 = gfc_signals(init.state, kVBus, 0.0, init.refs, p).p_t;
  const double p1 = gfc_signals(bumped, kVBus, 0.0, init.refs, p).p_t;
  const double dp = p1 - p0;
  const GFCDerivatives d = gfc_derivatives(bumped, kVBus, 0.0, init.refs, p);
  CHECK(d.d.v_dc == doctest::Approx(-dp / (p.c_c * bumped.v_dc)).epsilon(1e-10));
}

TEST_CASE("extra dc source current charges the link at di / C_c") {
  const GFCParams p;
  const GFCInit init = gfc_initialize(kVBus, kSInj, p);
  GFCState bumped = init.state;
  const double di = 0.05;
  bumped.i_src += di;
  const GFCDerivatives d = gfc_derivatives(bumped, kVBus, 0.0, init.refs, p);
  CHECK(d.d.v_dc == doctest::Approx(di / p.c_c).epsilon(1e-12));
}

TEST_CASE("the droop holds synchronous speed when the filtered power meets the dispatch") {
  const GFCParams p;
  const GFCInit init = gfc_initialize(kVBus, kSInj, p);
  const GFCSignals sig = gfc_signals(init.state, kVBus, 0.0, init.refs, p);
  CHECK(sig.omega_c_pu == doctest::Approx(1.0).epsilon(1e-12));
  const GFCDerivatives d = gfc_derivatives(init.state, kVBus, 0.0, init.refs, p);
  CHECK(std::abs(d.d.rho_c) < 1e-10);
}

TEST_CASE("a one percent power surplus backs the frequency off by one percent") {
  const GFCParams p;
  const GFCInit init = gfc_initialize(kVBus, kSInj, p);
  GFCState loaded = init.state;
  loaded.x_p = init.refs.p_ref + 0.01 / p.m_p;
  const GFCSignals sig = gfc_signals(loaded, kVBus, 0.0, init.refs, p);
  CHECK(sig.omega_c_pu == doctest::Approx(0.99).epsilon(1e-12));
  const GFCDerivatives d = gfc_derivatives(loaded, kVBus, 0.0, init.refs, p);
  CHECK(d.d.rho_c == doctest::Approx(-0.01 * p.omega_s).epsilon(1e-10));
}

TEST_CASE("the reference input shifts the droop speed through m_p") {
  const GFCParams p;
  const GFCInit init = gfc_initialize(kVBus, kSInj, p);
  const double u = 0.25;
  const GFCSignals sig = gfc_signals(init.state, kVBus, u, init.refs, p);
  CHECK(sig.omega_c_pu == doctest::Approx(1.0 + p.m_p * u).epsilon(1e-12));
}

TEST_CASE("zero-error inner loops command the steady bridge voltage") {
  const GFCParams p;
  const GFCInit init = gfc_initialize(kVBus, kSInj, p);
  const GFCSignals sig = gfc_signals(init.state, kVBus, 0.0, init.refs, p);
  const Complex expected =
      init.state.v_c + Complex{p.r + p.r_on, p.l} * init.state.i_f;
  CHECK(std::abs(sig.e_conv - expected) < 1e-12);
  CHECK(std::abs(sig.i_f_ref - init.state.i_f) < 1e-12);
}

TEST_CASE("the steady-state phasor laws hold across the filter and transformer") {
  const GFCParams p;
  const GFCInit init = gfc_initialize(kVBus, kSInj, p);
  const GFCSignals sig = gfc_signals(init.state, kVBus, 0.0, init.refs, p);
  CHECK(std::abs(init.state.v_c - (sig.v_pcc + Complex{p.r_t, p.l_t} * init.state.i_t)) < 1e-12);
  CHECK(std::abs(init.state.i_f - (init.state.i_t + Complex{0.0, p.c} * init.state.v_c)) < 1e-12);
  // The aligned frame carries the whole PCC voltage on its d axis.
  CHECK(std::abs(sig.v_pcc.imag()) < 1e-12);
  CHECK(sig.v_pcc.real() == doctest::Approx(std::abs(kVBus)).epsilon(1e-12));
}

TEST_CASE("terminal power exceeds the PCC injection by the series losses") {
  const GFCParams p;
  const GFCInit init = gfc_initialize(kVBus, kSInj, p);
  const GFCSignals sig = gfc_signals(init.state, kVBus, 0.0, init.refs, p);
  const double losses = (p.r + p.r_on) * std::norm(init.state.i_f) +
                        p.r_t * std::norm(init.state.i_t);
  CHECK(sig.p_t - kSInj.real() == doctest::Approx(losses).epsilon(1e-9));
}

TEST_CASE("a lagging frame produces a restoring alignment action") {
  const GFCParams p;
  const GFCInit init = gfc_initialize(kVBus, kSInj, p);
  GFCState lagging = init.state;
  lagging.rho_c -= 0.02;  // the PCC voltage now leads the converter d axis
  const GFCSignals sig = gfc_signals(lagging, kVBus, 0.0, init.refs, p);
  CHECK(sig.v_pcc.imag() > 0.0);
  const GFCDerivatives d = gfc_derivatives(lagging, kVBus, 0.0, init.refs, p);
  // The measurement filter charges toward the positive q error, and a
  // positive filtered error advances the frame through the alignment PI.
  CHECK(d.d.x_al > 0.0);
  GFCState charged = lagging;
  charged.x_al = sig.v_pcc.imag();
  const GFCSignals sig2 = gfc_signals(charged, kVBus, 0.0, init.refs, p);
  CHECK(sig2.omega_align > 0.0);
}

TEST_CASE("a collapsed dc link is reported as a model blow-up") {
  const GFCParams p;
  const GFCInit init = gfc_initialize(kVBus, kSInj, p);
  GFCState dead = init.state;
  dead.v_dc = 0.0;
  CHECK_THROWS_AS(gfc_derivatives(dead, kVBus, 0.0, init.refs, p), NumericalError);
}

TEST_CASE("parameter validation rejects a missing transformer inductance") {
  GFCParams p;
  p.l_t = 0.0;
  CHECK_THROWS_AS(p.validate("gfc"), ValidationError);
}
