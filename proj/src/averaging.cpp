#include "sso/averaging.hpp"

#include <cmath>
#include <stdexcept>

namespace sso {

namespace {

// Index of the sample closest to time t; throws if t is off-grid by more
// than half a sample.
std::size_t grid_index(const SampledSignal& x, double t) {
  const double pos = (t - x.t_start) / x.dt;
  const auto idx = static_cast<long>(std::llround(pos));
  if (idx < 0 || static_cast<std::size_t>(idx) >= x.samples.size())
    throw std::invalid_argument("sliding window: t outside sampled range");
  if (std::abs(pos - static_cast<double>(idx)) > 0.5)
    throw std::invalid_argument("sliding window: t does not land on the sample grid");
  return static_cast<std::size_t>(idx);
}

// Trapezoidal (1/T) integral of x(tau) e^{j s tau} over [t-T, t].
Complex windowed_average(const SampledSignal& x, double s, double T, double t) {
  if (x.dt <= 0.0) throw std::invalid_argument("sliding window: dt must be positive");
  const auto n = static_cast<std::size_t>(std::llround(T / x.dt));
  if (n == 0 || std::abs(static_cast<double>(n) * x.dt - T) > x.dt)
    throw std::invalid_argument("sliding window: sample period must divide T to within one sample");
  const std::size_t end = grid_index(x, t);
  if (end < n) throw std::invalid_argument("sliding window: insufficient samples before t");
  const std::size_t begin = end - n;
  Complex acc{};
  for (std::size_t i = begin; i <= end; ++i) {
    const double tau = x.t_start + static_cast<double>(i) * x.dt;
    const double w = (i == begin || i == end) ? 0.5 : 1.0;
    acc += w * x.samples[i] * std::polar(1.0, s * tau);
  }
  // Normalize by the realized window span n*dt rather than the nominal T so
  // a window that is off-grid by a fraction of a sample carries no
  // systematic amplitude bias.
  return acc / static_cast<double>(n);
}

// 5-point central finite difference of a complex-valued function of time.
template <typename F>
Complex fd5(const F& f, double t, double h) {
  return (-f(t + 2 * h) + 8.0 * f(t + h) - 8.0 * f(t - h) + f(t - 2 * h)) / (12.0 * h);
}

}  // namespace

FourierCoefficient sliding_coefficient(const SampledSignal& x, int k, double T, double t) {
  const double omega_s = 2.0 * kPi / T;
  return {k, windowed_average(x, -static_cast<double>(k) * omega_s, T, t), T};
}

SequenceCoefficients sequence_coefficients(const SampledSignal& a, const SampledSignal& b,
                                           const SampledSignal& c, int k, double T, double t) {
  const double omega_s = 2.0 * kPi / T;
  const double s = static_cast<double>(k) * omega_s;  // e^{+j k omega_s tau} as printed
  const Complex za = windowed_average(a, s, T, t);
  const Complex zb = windowed_average(b, s, T, t);
  const Complex zc = windowed_average(c, s, T, t);
  const Complex alpha = std::polar(1.0, 2.0 * kPi / 3.0);
  const double r3 = 1.0 / std::sqrt(3.0);
  // Rows of T^H applied to the per-phase averages.
  SequenceCoefficients out;
  out.pos = r3 * (za + alpha * zb + std::conj(alpha) * zc);
  out.neg = r3 * (za + std::conj(alpha) * zb + alpha * zc);
  out.zero = r3 * (za + zb + zc);
  return out;
}

double derivative_rule_residual(PhasorRepresentation representation,
                                const DerivativeTestSignal& sig) {
  const double dt = 1.0 / sig.sample_rate;
  const double ws = sig.omega_s;
  double worst = 0.0;

  switch (representation) {
    case PhasorRepresentation::Baseband: {
      auto xbb = [&](double t) {
        return std::polar(sig.amplitude(t), sig.phase(t));
      };
      for (double t = sig.t_begin + 2 * dt; t <= sig.t_end - 2 * dt; t += dt) {
        const Complex lhs = (Complex{sig.amplitude_dot(t), 0.0} +
                             Complex{0.0, (ws + sig.phase_dot(t)) * sig.amplitude(t)}) *
                            std::polar(1.0, sig.phase(t));
        const Complex rhs = fd5(xbb, t, dt) + Complex{0.0, ws} * xbb(t);
        worst = std::max(worst, std::abs(lhs - rhs));
      }
      break;
    }
    case PhasorRepresentation::SpacePhasor: {
      auto balanced = [&](double t, double shift) {
        const double arg = ws * t + sig.phase(t) - shift;
        return sig.amplitude(t) * std::cos(arg);
      };
      auto balanced_dot = [&](double t, double shift) {
        const double arg = ws * t + sig.phase(t) - shift;
        return sig.amplitude_dot(t) * std::cos(arg) -
               sig.amplitude(t) * (ws + sig.phase_dot(t)) * std::sin(arg);
      };
      auto park_of = [&](double t, auto&& gen) {
        ThreePhaseSample s3{gen(t, 0.0), gen(t, 2.0 * kPi / 3.0), gen(t, 4.0 * kPi / 3.0)};
        FrameAngle ang{sig.rho(t), 1.0, synchronous_frame()};
        return park_transform(s3, ang).phasor.value();
      };
      auto xbb = [&](double t) { return park_of(t, balanced); };
      for (double t = sig.t_begin + 2 * dt; t <= sig.t_end - 2 * dt; t += dt) {
        const Complex lhs = park_of(t, balanced_dot);
        const Complex rhs = fd5(xbb, t, dt) + Complex{0.0, sig.omega_rad(t)} * xbb(t);
        worst = std::max(worst, std::abs(lhs - rhs));
      }
      break;
    }
    case PhasorRepresentation::GeneralizedAveraging: {
      const double T = 2.0 * kPi / ws;
      // Sample x and dx/dt once over the whole span plus the FD stencil margin.
      SampledSignal x{sig.t_begin, dt, {}};
      SampledSignal xdot{sig.t_begin, dt, {}};
      const auto count = static_cast<std::size_t>((sig.t_end - sig.t_begin) / dt) + 1;
      x.samples.reserve(count);
      xdot.samples.reserve(count);
      for (std::size_t i = 0; i < count; ++i) {
        const double tau = sig.t_begin + static_cast<double>(i) * dt;
        x.samples.push_back(sig.x(tau));
        xdot.samples.push_back(sig.x_dot(tau));
      }
      auto coeff = [&](double t) { return sliding_coefficient(x, sig.k, T, t).value; };
      const double t0 = sig.t_begin + T + 2 * dt;
      for (double t = t0; t <= sig.t_end - 2 * dt; t += dt) {
        const Complex lhs = sliding_coefficient(xdot, sig.k, T, t).value;
        const Complex rhs = fd5(coeff, t, dt) + Complex{0.0, sig.k * ws} * coeff(t);
        worst = std::max(worst, std::abs(lhs - rhs));
      }
      break;
    }
  }
  return worst;
}

}  // namespace sso
