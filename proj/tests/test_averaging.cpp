#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sso/averaging.hpp"

using namespace sso;

namespace {

// 50 Hz carrier at 10 kHz sampling puts exactly 200 samples in the averaging
// window, so the trapezoidal quadrature of the periodic integrand is exact to
// rounding; an off-grid window is first-order accurate only (see the off-grid
// test below).
constexpr double kFs = 10000.0;
constexpr double kF0 = 50.0;
const double kWs = synchronous_speed(kF0);
const double kT = 1.0 / kF0;

SampledSignal cosine(double amplitude, double theta, double seconds, double omega = kWs) {
  SampledSignal x;
  x.dt = 1.0 / kFs;
  const auto n = static_cast<std::size_t>(seconds * kFs);
  x.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * x.dt;
    x.samples.push_back(amplitude * std::cos(omega * t + theta));
  }
  return x;
}

double last_time(const SampledSignal& x) {
  return x.t_start + static_cast<double>(x.samples.size() - 1) * x.dt;
}

}  // namespace

TEST_CASE("fundamental sliding coefficient of a cosine is half the envelope phasor") {
  const double amplitude = 1.4, theta = 0.3;
  const SampledSignal x = cosine(amplitude, theta, 0.2);
  const FourierCoefficient c = sliding_coefficient(x, 1, kT, last_time(x));
  const Complex target = 0.5 * amplitude * std::polar(1.0, theta);
  CHECK(std::abs(c.value - target) < 1e-6);
}

TEST_CASE("dc sliding coefficient of a constant is the constant") {
  SampledSignal x;
  x.dt = 1.0 / kFs;
  x.samples.assign(500, 3.3);
  const FourierCoefficient c = sliding_coefficient(x, 0, kT, last_time(x));
  CHECK(c.value.real() == doctest::Approx(3.3).epsilon(1e-12));
  CHECK(std::abs(c.value.imag()) < 1e-12);
}

TEST_CASE("second-harmonic coefficient of a fundamental cosine vanishes") {
  const SampledSignal x = cosine(2.0, 0.0, 0.2);
  const FourierCoefficient c = sliding_coefficient(x, 2, kT, last_time(x));
  CHECK(std::abs(c.value) < 1e-6);
}

TEST_CASE("negative-k coefficient is the conjugate for a real signal") {
  const SampledSignal x = cosine(1.1, -0.8, 0.2);
  const double t = last_time(x);
  const Complex plus = sliding_coefficient(x, 1, kT, t).value;
  const Complex minus = sliding_coefficient(x, -1, kT, t).value;
  CHECK(std::abs(minus - std::conj(plus)) < 1e-12);
}

TEST_CASE("sliding window requires a full window of samples") {
  SampledSignal x;
  x.dt = 1.0 / kFs;
  x.samples.assign(50, 1.0);  // a quarter of the 200-sample window
  CHECK_THROWS_AS(sliding_coefficient(x, 1, kT, last_time(x)), std::invalid_argument);
}

TEST_CASE("sliding window rejects a sample period that does not divide T") {
  SampledSignal x;
  x.dt = 3.0 * kT;  // sample period longer than the whole window
  x.samples.assign(1000, 1.0);
  CHECK_THROWS_AS(sliding_coefficient(x, 1, kT, last_time(x)), std::invalid_argument);
}

TEST_CASE("off-grid windows stay first-order accurate without amplitude bias") {
  // 60 Hz at 10 kHz sampling: 166.67 samples per window. The quadrature
  // cannot reach 1e-6 here, but the normalization must not bias a constant.
  const double t60 = 1.0 / 60.0;
  SampledSignal x;
  x.dt = 1.0 / kFs;
  x.samples.assign(400, 2.5);
  const FourierCoefficient c = sliding_coefficient(x, 0, t60, last_time(x));
  CHECK(c.value.real() == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("sequence coefficients of a balanced positive-sequence set") {
  const double amplitude = 1.4, theta = 0.3;
  SampledSignal a = cosine(amplitude, theta, 0.2);
  SampledSignal b = cosine(amplitude, theta - 2.0 * kPi / 3.0, 0.2);
  SampledSignal c = cosine(amplitude, theta + 2.0 * kPi / 3.0, 0.2);
  const double t = last_time(a);
  // With the e^{+j k w_s tau} kernel as printed, the positive-sequence
  // fundamental of a real positive-sequence set lands at k = -1.
  const SequenceCoefficients s = sequence_coefficients(a, b, c, -1, kT, t);
  const Complex target = std::sqrt(3.0) / 2.0 * amplitude * std::polar(1.0, theta);
  CHECK(std::abs(s.pos - target) < 1e-5);
  CHECK(std::abs(s.neg) < 1e-5);
  CHECK(std::abs(s.zero) < 1e-12);
}

TEST_CASE("sequence coefficients of silence vanish") {
  SampledSignal z;
  z.dt = 1.0 / kFs;
  z.samples.assign(300, 0.0);
  const SequenceCoefficients s = sequence_coefficients(z, z, z, 1, kT, last_time(z));
  CHECK(std::abs(s.pos) == 0.0);
  CHECK(std::abs(s.neg) == 0.0);
  CHECK(std::abs(s.zero) == 0.0);
}

TEST_CASE("space phasor equals the k = +/-1 sequence reconstruction for a balanced set") {
  const double amplitude = 0.9, theta = 0.55;
  SampledSignal a = cosine(amplitude, theta, 0.2);
  SampledSignal b = cosine(amplitude, theta - 2.0 * kPi / 3.0, 0.2);
  SampledSignal c = cosine(amplitude, theta + 2.0 * kPi / 3.0, 0.2);
  const double t = last_time(a);
  Complex recon{};
  for (int k : {-1, 1}) {
    const SequenceCoefficients s = sequence_coefficients(a, b, c, k, kT, t);
    recon += std::polar(1.0, -k * kWs * t) * s.pos;
  }
  recon *= 2.0 / std::sqrt(3.0);
  const std::size_t i = a.samples.size() - 1;
  const Phasor direct = space_phasor({a.samples[i], b.samples[i], c.samples[i]});
  CHECK(std::abs(recon - direct.value()) < 1e-4);
}

TEST_CASE("baseband derivative identity holds for a constant envelope") {
  DerivativeTestSignal sig;
  sig.amplitude = [](double) { return 1.3; };
  sig.amplitude_dot = [](double) { return 0.0; };
  sig.phase = [](double) { return 0.4; };
  sig.phase_dot = [](double) { return 0.0; };
  sig.omega_s = kWs;
  CHECK(derivative_rule_residual(PhasorRepresentation::Baseband, sig) < 1e-8);
}

TEST_CASE("space-phasor derivative identity holds for a modulated envelope") {
  DerivativeTestSignal sig;
  sig.amplitude = [](double t) { return 1.0 + 0.1 * std::sin(2.0 * kPi * 5.0 * t); };
  sig.amplitude_dot = [](double t) { return 0.1 * 2.0 * kPi * 5.0 * std::cos(2.0 * kPi * 5.0 * t); };
  sig.phase = [](double) { return 0.0; };
  sig.phase_dot = [](double) { return 0.0; };
  sig.rho = [](double t) { return kWs * t; };
  sig.omega_rad = [](double) { return kWs; };
  sig.omega_s = kWs;
  CHECK(derivative_rule_residual(PhasorRepresentation::SpacePhasor, sig) < 1e-6);
}

TEST_CASE("space-phasor identity reduces to the baseband identity at synchronous speed") {
  DerivativeTestSignal sig;
  sig.amplitude = [](double t) { return 1.0 + 0.05 * std::sin(2.0 * kPi * 3.0 * t); };
  sig.amplitude_dot = [](double t) { return 0.05 * 2.0 * kPi * 3.0 * std::cos(2.0 * kPi * 3.0 * t); };
  sig.phase = [](double) { return 0.2; };
  sig.phase_dot = [](double) { return 0.0; };
  sig.rho = [](double t) { return kWs * t; };
  sig.omega_rad = [](double) { return kWs; };
  sig.omega_s = kWs;
  const double baseband = derivative_rule_residual(PhasorRepresentation::Baseband, sig);
  const double spc = derivative_rule_residual(PhasorRepresentation::SpacePhasor, sig);
  CHECK(std::abs(baseband - spc) < 1e-8);
}

TEST_CASE("generalized-averaging derivative identity holds for a ramped cosine") {
  DerivativeTestSignal sig;
  sig.x = [](double t) { return std::cos(kWs * t) * (1.0 + 0.1 * t); };
  sig.x_dot = [](double t) { return -kWs * std::sin(kWs * t) * (1.0 + 0.1 * t) +
                                    0.1 * std::cos(kWs * t); };
  sig.k = 1;
  sig.t_end = 0.1;
  sig.omega_s = kWs;
  CHECK(derivative_rule_residual(PhasorRepresentation::GeneralizedAveraging, sig) < 1e-4);
}
