#include "sso/simulate.hpp"

#include <cmath>
#include <memory>

namespace sso {

RealVector disturbance_input(const SystemModel& model, const DisturbanceDef& d, double t) {
  RealVector u = RealVector::Zero(model.input_count());
  if (d.waveform == "none" || d.magnitude == 0.0) return u;
  bool active = false;
  if (d.waveform == "step") {
    active = t >= d.start;
  } else if (d.waveform == "pulse") {
    active = t >= d.start && t < d.start + d.duration;
  } else {
    throw ValidationError("unknown disturbance waveform: " + d.waveform);
  }
  if (!active) return u;
  if (d.targets.empty()) {
    u.setConstant(d.magnitude);
  } else {
    for (const auto& name : d.targets) {
      bool found = false;
      for (const auto& g : model.gfcs)
        if (g.name == name && g.input >= 0) {
          u(g.input) = d.magnitude;
          found = true;
        }
      if (!found)
        throw ValidationError("disturbance target " + name + " is not a model input");
    }
  }
  return u;
}

SimResult integrate(const SystemModel& model, const OperatingPoint& op, const SimConfig& cfg) {
  if (cfg.dt <= 0.0 || cfg.t_end <= 0.0) throw ValidationError("integrate: dt and t_end must be positive");
  if (cfg.decimation < 1) throw ValidationError("integrate: decimation must be >= 1");
  if (model.framework == Framework::SPC && cfg.method == IntegrationMethod::RK4Fixed &&
      cfg.dt > 50e-6)
    throw ValidationError("integrate: RK4 on an SPC model requires dt <= 50 us");

  const std::vector<std::string>& channels =
      cfg.record.empty() ? model.output_channels : cfg.record;
  const long n_steps = static_cast<long>(std::ceil(cfg.t_end / cfg.dt - 1e-9));
  const long n_rec = n_steps / cfg.decimation + 1;

  SimResult res;
  res.channel_names = channels;
  res.time.resize(n_rec);
  res.channels.resize(n_rec, static_cast<Eigen::Index>(channels.size()));

  RealVector x = op.x0;
  RealVector k1, k2, k3, k4;

  // Chord Newton for the trapezoidal corrector: iteration matrix
  // M = I - dt/2 J evaluated once at the operating point and reused. The
  // vector field is mildly nonlinear around an operating trajectory, so the
  // chord converges while plain fixed-point iteration would diverge on the
  // stiff filter/network states.
  std::unique_ptr<Eigen::PartialPivLU<RealMatrix>> chord_lu;
  if (cfg.method == IntegrationMethod::TrapezoidalImplicit) {
    const RealVector u0 = disturbance_input(model, cfg.disturbance, 0.0);
    RealMatrix jac(model.n_states, model.n_states);
    RealVector xp = op.x0, fp(model.n_states), fm(model.n_states);
    for (int i = 0; i < model.n_states; ++i) {
      const double h = 1e-7 * std::max(1.0, std::abs(op.x0(i)));
      xp(i) = op.x0(i) + h;
      vector_field(model, xp, u0, fp);
      xp(i) = op.x0(i) - h;
      vector_field(model, xp, u0, fm);
      xp(i) = op.x0(i);
      jac.col(i) = (fp - fm) / (2.0 * h);
    }
    RealMatrix m = RealMatrix::Identity(model.n_states, model.n_states) - 0.5 * cfg.dt * jac;
    chord_lu = std::make_unique<Eigen::PartialPivLU<RealMatrix>>(m);
  }
  long rec = 0;
  auto record = [&](double t) {
    res.time(rec) = t;
    const RealVector u = disturbance_input(model, cfg.disturbance, t);
    res.channels.row(rec) = evaluate_channels(model, x, u, channels).transpose();
    ++rec;
  };

  try {
    record(0.0);
    for (long step = 0; step < n_steps; ++step) {
      const double t = step * cfg.dt;
      const double dt = cfg.dt;
      if (cfg.method == IntegrationMethod::RK4Fixed) {
        const RealVector u1 = disturbance_input(model, cfg.disturbance, t);
        const RealVector u2 = disturbance_input(model, cfg.disturbance, t + 0.5 * dt);
        const RealVector u4 = disturbance_input(model, cfg.disturbance, t + dt);
        vector_field(model, x, u1, k1);
        vector_field(model, x + 0.5 * dt * k1, u2, k2);
        vector_field(model, x + 0.5 * dt * k2, u2, k3);
        vector_field(model, x + dt * k3, u4, k4);
        x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      } else {
        // Implicit trapezoidal: solve x1 - x - dt/2 (f(x) + f(x1)) = 0.
        const RealVector u0 = disturbance_input(model, cfg.disturbance, t);
        const RealVector u1 = disturbance_input(model, cfg.disturbance, t + dt);
        vector_field(model, x, u0, k1);
        RealVector x1 = x + dt * k1;  // explicit Euler predictor
        double err = 1.0;
        for (int it = 0; it < 50; ++it) {
          vector_field(model, x1, u1, k2);
          const RealVector g = x1 - x - 0.5 * dt * (k1 + k2);
          const RealVector step_nw = chord_lu->solve(g);
          x1 -= step_nw;
          err = step_nw.cwiseAbs().maxCoeff();
          if (err < cfg.newton_tol) break;
        }
        if (!(err < cfg.newton_tol * 10.0))
          throw NumericalError("integrate: trapezoidal corrector failed to converge");
        x = x1;
      }
      if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 1e6) {
        res.events.push_back({t + dt, "state blow-up (|x| > 1e6)"});
        res.truncated = true;
        break;
      }
      if ((step + 1) % cfg.decimation == 0) record((step + 1) * cfg.dt);
    }
  } catch (const NumericalError& e) {
    res.events.push_back({rec > 0 ? res.time(rec - 1) : 0.0, e.what()});
    res.truncated = true;
  }

  res.time.conservativeResize(rec);
  res.channels.conservativeResize(rec, Eigen::NoChange);
  res.x_final = x;
  return res;
}

}  // namespace sso
