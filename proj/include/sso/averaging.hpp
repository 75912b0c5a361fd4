#pragma once

// Generalized averaging (sliding-window Fourier coefficients) and the
// derivative-rule residual checks used to cross-validate the three
// time-varying phasor representations. These are calculus/oracle utilities,
// not part of the simulator path.

#include <functional>
#include <span>
#include <vector>

#include "sso/phasor.hpp"

namespace sso {

/// kth sliding Fourier coefficient <x>_k(t) over a window of T seconds.
struct FourierCoefficient {
  int k = 0;
  Complex value{};
  double window = 0.0;  // T, seconds
};

/// kth dynamical positive/negative/zero sequence coefficients.
struct SequenceCoefficients {
  Complex pos{};
  Complex neg{};
  Complex zero{};
};

/// Uniformly sampled real signal starting at t_start with period dt.
struct SampledSignal {
  double t_start = 0.0;
  double dt = 0.0;
  std::vector<double> samples;
};

/// <x>_k(t) = (1/T) \int_{t-T}^{t} x(tau) e^{-j k omega_s tau} d tau by
/// trapezoidal quadrature on the uniform samples. Requires a full window of
/// samples ending at t and a sample period dividing T to within one sample.
FourierCoefficient sliding_coefficient(const SampledSignal& x, int k, double T, double t);

/// Sequence coefficients (1/T) \int_{t-T}^{t} e^{+j k omega_s tau} T^H x(tau) d tau.
/// Note the e^{+j k omega_s tau} kernel: the sign is asymmetric with respect to
/// the scalar coefficient above (implemented as printed in the source material);
/// the conventional positive-sequence coefficient of harmonic k is obtained by
/// passing -k.
SequenceCoefficients sequence_coefficients(const SampledSignal& a, const SampledSignal& b,
                                           const SampledSignal& c, int k, double T, double t);

enum class PhasorRepresentation { Baseband, SpacePhasor, GeneralizedAveraging };

/// Analytic test signal for the derivative-rule residual checks.
/// For Baseband/SpacePhasor the signal is x(t) = X(t) cos(omega_s t + theta(t))
/// (a balanced three-phase set for SpacePhasor) described by its envelope and
/// the envelope's analytic derivatives. For SpacePhasor, `rho`/`omega_rad`
/// give the observation frame (omega_rad = d rho/dt, rad/s). For
/// GeneralizedAveraging the scalar signal and its derivative are given
/// directly along with the harmonic index k.
struct DerivativeTestSignal {
  std::function<double(double)> amplitude;
  std::function<double(double)> amplitude_dot;
  std::function<double(double)> phase;
  std::function<double(double)> phase_dot;
  std::function<double(double)> rho;        // SpacePhasor only
  std::function<double(double)> omega_rad;  // SpacePhasor only
  std::function<double(double)> x;          // GeneralizedAveraging only
  std::function<double(double)> x_dot;      // GeneralizedAveraging only
  int k = 1;
  double t_begin = 0.0;
  double t_end = 0.1;
  double sample_rate = 10000.0;  // Hz
  double omega_s = 2.0 * kPi * 60.0;
};

/// Evaluates both sides of the applicable derivative identity numerically and
/// returns the max residual magnitude over the window.
double derivative_rule_residual(PhasorRepresentation representation,
                                const DerivativeTestSignal& sig);

}  // namespace sso
