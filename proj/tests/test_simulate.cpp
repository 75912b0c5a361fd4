#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sso/simulate.hpp"

using namespace sso;

namespace {

// Two buses, one line, a single converter serving a remote load: small enough
// for convergence studies, complete enough to exercise every code path.
CaseDefinition mini_case() {
  CaseDefinition def;
  def.name = "mini";
  def.buses = {{"b1", 230.0}, {"b2", 230.0}};
  def.branches = {{"ln", "b1", "b2", 0.0025, 0.025, 0.04375}};
  def.loads = {{"ld", "b2", 0.5, 0.1, 0.0}};
  GfcDef g;
  g.name = "gfc1";
  g.bus = "b1";
  g.dispatch.type = BusType::Slack;
  g.dispatch.v = 1.0;
  def.gfcs = {g};
  def.inputs = {"gfc1"};
  return def;
}

struct Built {
  SystemModel model;
  OperatingPoint op;
};

Built built(Framework fw) {
  const CaseDefinition def = mini_case();
  Built b{build_system(def, fw), {}};
  b.op = initialize(b.model, run_case_power_flow(def, b.model));
  return b;
}

SimConfig stepped(double t_end, double dt) {
  SimConfig cfg;
  cfg.t_end = t_end;
  cfg.dt = dt;
  cfg.disturbance.targets = {"gfc1"};
  cfg.disturbance.waveform = "step";
  cfg.disturbance.magnitude = 0.05;
  cfg.disturbance.start = 0.0;
  return cfg;
}

}  // namespace

TEST_CASE("the disturbance input reproduces its waveform definitions") {
  Built b = built(Framework::QPC);
  DisturbanceDef d;
  d.targets = {"gfc1"};
  d.magnitude = 0.2;
  d.start = 0.1;
  d.duration = 0.05;

  d.waveform = "none";
  CHECK(disturbance_input(b.model, d, 0.2).lpNorm<Eigen::Infinity>() == 0.0);

  d.waveform = "step";
  CHECK(disturbance_input(b.model, d, 0.05)(0) == 0.0);
  CHECK(disturbance_input(b.model, d, 0.15)(0) == 0.2);
  CHECK(disturbance_input(b.model, d, 5.0)(0) == 0.2);

  d.waveform = "pulse";
  CHECK(disturbance_input(b.model, d, 0.05)(0) == 0.0);
  CHECK(disturbance_input(b.model, d, 0.12)(0) == 0.2);
  CHECK(disturbance_input(b.model, d, 0.20)(0) == 0.0);
}

TEST_CASE("the first recorded row is the operating point itself") {
  Built b = built(Framework::QPC);
  SimConfig cfg;
  cfg.t_end = 0.01;
  cfg.dt = 2e-5;
  const SimResult r = integrate(b.model, b.op, cfg);
  CHECK(r.time(0) == 0.0);
  const RealVector y0 = record_channels(b.model, b.op.x0, b.op.u0);
  for (int c = 0; c < y0.size(); ++c) CHECK(r.channels(0, c) == y0(c));
  CHECK(r.channel_names == b.model.output_channels);
}

TEST_CASE("an undisturbed equilibrium stays put in both frameworks") {
  for (Framework fw : {Framework::SPC, Framework::QPC}) {
    CAPTURE(framework_name(fw));
    Built b = built(fw);
    SimConfig cfg;
    cfg.t_end = 0.05;
    cfg.dt = 2e-5;  // the converter filter poles cap the explicit step size
    const SimResult r = integrate(b.model, b.op, cfg);
    CHECK(!r.truncated);
    CHECK((r.x_final - b.op.x0).lpNorm<Eigen::Infinity>() < 1e-7);
  }
}

TEST_CASE("the fixed-step integrator converges at fourth order") {
  // Reference-power steps only excite the slow droop dynamics, whose
  // truncation error sits at the rounding floor; kicking a filter state
  // exposes the method error on the fast transient instead. Errors are
  // measured as the trajectory sup-norm on a shared sample grid.
  Built b = built(Framework::QPC);
  OperatingPoint op = b.op;
  op.x0(b.model.state_index("gfc1.i_f_d")) += 0.05;
  auto run = [&](double dt, int decimation) {
    SimConfig cfg;
    cfg.t_end = 4e-4;
    cfg.dt = dt;
    cfg.decimation = decimation;
    return integrate(b.model, op, cfg);
  };
  const SimResult ref = run(2.5e-6, 16);
  auto sup_err = [&](const SimResult& r) {
    double e = 0.0;
    for (int i = 0; i < r.time.size(); ++i)
      e = std::max(e, (r.channels.row(i) - ref.channels.row(i)).cwiseAbs().maxCoeff());
    return e;
  };
  const double e_coarse = sup_err(run(4e-5, 1));
  const double e_fine = sup_err(run(2e-5, 2));
  const double order = std::log2(e_coarse / e_fine);
  CHECK(order > 3.7);
}

TEST_CASE("decimation thins the record without changing the trajectory") {
  Built b = built(Framework::QPC);
  SimConfig cfg = stepped(0.01, 2e-5);
  SimConfig dec = cfg;
  dec.decimation = 10;
  const SimResult full = integrate(b.model, b.op, cfg);
  const SimResult thin = integrate(b.model, b.op, dec);
  CHECK(thin.time(1) - thin.time(0) == doctest::Approx(2e-4).epsilon(1e-12));
  CHECK((thin.x_final - full.x_final).lpNorm<Eigen::Infinity>() == 0.0);
  for (int i = 0; i < thin.time.size(); ++i) {
    CHECK(thin.channels(i, 0) == full.channels(10 * i, 0));
  }
}

TEST_CASE("identical configurations integrate bit-identically") {
  Built b = built(Framework::SPC);
  const SimConfig cfg = stepped(0.01, 2e-5);
  const SimResult r1 = integrate(b.model, b.op, cfg);
  const SimResult r2 = integrate(b.model, b.op, cfg);
  CHECK((r1.x_final.array() == r2.x_final.array()).all());
  CHECK((r1.channels.array() == r2.channels.array()).all());
}

TEST_CASE("custom record channels are honored") {
  Built b = built(Framework::SPC);
  SimConfig cfg;
  cfg.t_end = 0.002;
  cfg.dt = 2e-5;
  cfg.record = {"gfc1.v_dc", "ln.i_D", "ln.i_Q"};
  const SimResult r = integrate(b.model, b.op, cfg);
  CHECK(r.channel_names == cfg.record);
  CHECK(r.channels.cols() == 3);
  CHECK(r.channels(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("a blow-up truncates the run with an event instead of throwing") {
  Built b = built(Framework::QPC);
  SimConfig cfg;
  cfg.t_end = 1.0;
  cfg.dt = 2e-5;
  OperatingPoint op = b.op;
  // A collapsed dc link makes the device model throw; the integrator must
  // catch it, truncate, and report the event.
  op.x0(b.model.state_index("gfc1.v_dc")) = -0.5;
  const SimResult r = integrate(b.model, op, cfg);
  CHECK(r.truncated);
  CHECK(!r.events.empty());
  CHECK(r.time(r.time.size() - 1) < 1.0);
}

TEST_CASE("the trapezoidal method reaches the same smooth trajectory") {
  Built b = built(Framework::QPC);
  SimConfig rk = stepped(0.02, 2e-5);
  SimConfig tr = rk;
  tr.method = IntegrationMethod::TrapezoidalImplicit;
  const RealVector x_rk = integrate(b.model, b.op, rk).x_final;
  const RealVector x_tr = integrate(b.model, b.op, tr).x_final;
  CHECK((x_rk - x_tr).lpNorm<Eigen::Infinity>() < 1e-3);
  // Unlike the explicit method, the A-stable trapezoidal rule also survives a
  // step far beyond the fastest filter pole.
  tr.dt = 1e-4;
  const SimResult wide = integrate(b.model, b.op, tr);
  CHECK(!wide.truncated);
  CHECK((wide.x_final - x_tr).lpNorm<Eigen::Infinity>() < 5e-3);
}
