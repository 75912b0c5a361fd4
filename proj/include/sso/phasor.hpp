#pragma once

// Time-varying phasor representations and frame transformations.
//
// Three representations are supported:
//   - baseband phasors of modulated single-phase signals,
//   - space phasors of balanced three-phase sets in a rotating d-q frame,
//   - generalized-averaging (sliding Fourier) coefficients, see averaging.hpp.
//
// All quantities are per unit. Angles are electrical radians.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace sso {

using Complex = std::complex<double>;

constexpr double kPi = 3.14159265358979323846;

/// Synchronous electrical speed for a given system frequency.
inline double synchronous_speed(double f_hz) { return 2.0 * kPi * f_hz; }

// ---------------------------------------------------------------------------
// Frames
// ---------------------------------------------------------------------------

enum class FrameKind : std::uint8_t {
  SynchronousDQ,  // system-wide D-Q frame rotating at omega_s
  Machine,        // q_g-d_g frame of a synchronous machine (angle delta_g)
  Converter,      // d_c-q_c frame of a converter (angle rho_c)
  StationaryAB,   // stationary alpha-beta frame
};

/// Identifies the rotating frame a phasor lives in. `owner` distinguishes
/// device frames of the same kind (-1 for frames without an owner).
struct Frame {
  FrameKind kind = FrameKind::SynchronousDQ;
  int owner = -1;

  friend bool operator==(const Frame&, const Frame&) = default;
};

inline Frame synchronous_frame() { return {FrameKind::SynchronousDQ, -1}; }
inline Frame stationary_frame() { return {FrameKind::StationaryAB, -1}; }
inline Frame machine_frame(int owner) { return {FrameKind::Machine, owner}; }
inline Frame converter_frame(int owner) { return {FrameKind::Converter, owner}; }

std::string frame_name(const Frame& f);

/// Thrown when two phasors from different frames are combined.
class FrameMismatch : public std::runtime_error {
 public:
  FrameMismatch(const Frame& a, const Frame& b);
};

// ---------------------------------------------------------------------------
// Core value types
// ---------------------------------------------------------------------------

/// One instant of a three-phase signal.
struct ThreePhaseSample {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  bool is_balanced(double tol = 1e-9) const { return std::abs(a + b + c) <= tol; }
};

/// Complex d+jq (or D+jQ) quantity tagged with its rotating frame.
/// Arithmetic between phasors is only defined when the frames match.
struct Phasor {
  double re = 0.0;
  double im = 0.0;
  Frame frame{};

  Phasor() = default;
  Phasor(double re_, double im_, Frame f = synchronous_frame()) : re(re_), im(im_), frame(f) {}
  Phasor(Complex z, Frame f = synchronous_frame()) : re(z.real()), im(z.imag()), frame(f) {}

  Complex value() const { return {re, im}; }
  double magnitude() const { return std::hypot(re, im); }
  double angle() const { return std::atan2(im, re); }

  friend Phasor operator+(const Phasor& x, const Phasor& y) {
    if (x.frame != y.frame) throw FrameMismatch(x.frame, y.frame);
    return {x.re + y.re, x.im + y.im, x.frame};
  }
  friend Phasor operator-(const Phasor& x, const Phasor& y) {
    if (x.frame != y.frame) throw FrameMismatch(x.frame, y.frame);
    return {x.re - y.re, x.im - y.im, x.frame};
  }
  friend Phasor operator*(double s, const Phasor& x) { return {s * x.re, s * x.im, x.frame}; }
};

/// Rotating-frame angle and its instantaneous speed (pu of omega_s).
/// When integrated, rho advances as d rho/dt = omega * omega_s.
struct FrameAngle {
  double rho = 0.0;    // electrical rad
  double omega = 1.0;  // pu of omega_s
  Frame frame = synchronous_frame();
};

// ---------------------------------------------------------------------------
// Transformations
// ---------------------------------------------------------------------------

/// Park transformation: returns the d+jq phasor in the frame of `angle`
/// plus the zero-sequence scalar. 2/3-scaled, cosine first row,
/// negative-sine second row, 1/2 third row.
struct ParkResult {
  Phasor phasor;
  double zero = 0.0;
};

ParkResult park_transform(const ThreePhaseSample& x, const FrameAngle& angle);

/// Inverse Park transformation. Throws FrameMismatch unless p.frame matches
/// angle.frame. inverse_park(park_transform(x)) == x to machine precision.
ThreePhaseSample inverse_park(const Phasor& p, double zero, const FrameAngle& angle);

/// Space phasor (2/3)[1 alpha alpha*] x in the stationary alpha-beta frame.
Phasor space_phasor(const ThreePhaseSample& x);

/// Multiplies by e^{j delta} and retags the frame.
Phasor rotate_frame(const Phasor& p, double delta, const Frame& target);

// ---------------------------------------------------------------------------
// Baseband phasors
// ---------------------------------------------------------------------------

/// Analytic envelope spec (X(t), theta(t)) of a modulated signal
/// x(t) = X(t) cos(omega_s t + theta(t)).
struct BasebandEnvelope {
  std::function<double(double)> amplitude;
  std::function<double(double)> phase;
  double bandwidth = 0.0;  // declared envelope bandwidth, rad/s
};

/// Baseband phasor X(t) e^{j theta(t)} at time t. The baseband map is only
/// bijective and linear on low-pass envelopes, so construction is refused
/// when the declared envelope bandwidth reaches omega_s.
Phasor baseband_phasor(const BasebandEnvelope& env, double t, double omega_s);

}  // namespace sso
