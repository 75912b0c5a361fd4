#include "sso/phasor.hpp"

namespace sso {

std::string frame_name(const Frame& f) {
  std::string base;
  switch (f.kind) {
    case FrameKind::SynchronousDQ: base = "DQ"; break;
    case FrameKind::Machine: base = "machine-qd"; break;
    case FrameKind::Converter: base = "converter-dq"; break;
    case FrameKind::StationaryAB: base = "alpha-beta"; break;
  }
  if (f.owner >= 0) base += "#" + std::to_string(f.owner);
  return base;
}

FrameMismatch::FrameMismatch(const Frame& a, const Frame& b)
    : std::runtime_error("frame mismatch: " + frame_name(a) + " vs " + frame_name(b)) {}

ParkResult park_transform(const ThreePhaseSample& x, const FrameAngle& angle) {
  const double r = angle.rho;
  const double c0 = std::cos(r), c1 = std::cos(r - 2.0 * kPi / 3.0), c2 = std::cos(r + 2.0 * kPi / 3.0);
  const double s0 = std::sin(r), s1 = std::sin(r - 2.0 * kPi / 3.0), s2 = std::sin(r + 2.0 * kPi / 3.0);
  const double k = 2.0 / 3.0;
  const double d = k * (c0 * x.a + c1 * x.b + c2 * x.c);
  const double q = -k * (s0 * x.a + s1 * x.b + s2 * x.c);
  const double z = k * 0.5 * (x.a + x.b + x.c);
  return {Phasor{d, q, angle.frame}, z};
}

ThreePhaseSample inverse_park(const Phasor& p, double zero, const FrameAngle& angle) {
  if (p.frame != angle.frame) throw FrameMismatch(p.frame, angle.frame);
  const double r = angle.rho;
  ThreePhaseSample x;
  x.a = std::cos(r) * p.re - std::sin(r) * p.im + zero;
  x.b = std::cos(r - 2.0 * kPi / 3.0) * p.re - std::sin(r - 2.0 * kPi / 3.0) * p.im + zero;
  x.c = std::cos(r + 2.0 * kPi / 3.0) * p.re - std::sin(r + 2.0 * kPi / 3.0) * p.im + zero;
  return x;
}

Phasor space_phasor(const ThreePhaseSample& x) {
  const Complex alpha = std::polar(1.0, 2.0 * kPi / 3.0);
  const Complex z = (2.0 / 3.0) * (x.a + alpha * x.b + std::conj(alpha) * x.c);
  return {z, stationary_frame()};
}

Phasor rotate_frame(const Phasor& p, double delta, const Frame& target) {
  const Complex z = p.value() * std::polar(1.0, delta);
  return {z, target};
}

Phasor baseband_phasor(const BasebandEnvelope& env, double t, double omega_s) {
  if (env.bandwidth >= omega_s) {
    throw std::invalid_argument(
        "baseband phasor undefined: envelope bandwidth " + std::to_string(env.bandwidth) +
        " rad/s is not below the carrier speed " + std::to_string(omega_s) + " rad/s");
  }
  const double X = env.amplitude(t);
  const double th = env.phase(t);
  return {X * std::cos(th), X * std::sin(th), synchronous_frame()};
}

}  // namespace sso
