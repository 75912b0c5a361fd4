#pragma once

// Prony analysis of uniformly sampled ringdowns: linear-prediction least
// squares for the characteristic polynomial, companion-matrix roots for the
// discrete poles, and a Vandermonde least-squares fit for the residues.

#include <string>
#include <vector>

#include "sso/network.hpp"

namespace sso {

struct PronyTerm {
  Complex lambda;        // continuous-time pole, rad/s
  Complex amplitude;     // complex residue (amplitude & phase)
  double frequency_hz = 0.0;
  double damping_ratio = 0.0;
  double energy = 0.0;   // |amplitude|^2 summed over the window
};

struct PronyResult {
  std::vector<PronyTerm> terms;  // sorted by descending energy
  double rms_residual = 0.0;     // reconstruction error over the fit window
  double rms_signal = 0.0;
  int order = 0;
};

/// Fits `order` exponentials to y sampled at dt; dc content is captured by a
/// pole at the origin when the order allows it. Throws ValidationError when
/// the window is too short for the requested order.
PronyResult prony_fit(const RealVector& y, double dt, int order);

/// Suggests a model order from the normalized singular-value spectrum of the
/// linear-prediction matrix (cutoff: sigma_k / sigma_1 > rel_threshold),
/// rounded up to even so complex pairs stay intact.
int prony_order_suggestion(const RealVector& y, double dt, int max_order,
                           double rel_threshold = 1e-8);

/// Reconstructs the fitted signal on the original grid.
RealVector prony_reconstruct(const PronyResult& fit, int n_samples, double dt);

/// Terms with frequency inside [f_lo, f_hi] Hz, by descending energy.
std::vector<PronyTerm> prony_terms_in_band(const PronyResult& fit, double f_lo, double f_hi);

}  // namespace sso
