#pragma once

// Small-signal machinery: finite-difference linearization with step-halving
// verification, eigenvalue/participation reporting, and the largest-singular-
// value frequency sweep of the input/output transfer matrix.

#include <functional>
#include <string>
#include <vector>

#include "sso/network.hpp"

namespace sso {

struct LinearModel {
  RealMatrix a, b, c, d;
  std::vector<std::string> state_labels, input_labels, output_labels;
  double max_richardson_error = 0.0;  // worst relative h vs h/2 disagreement
  std::vector<std::string> flagged;   // entries whose disagreement exceeded 1e-3
};

using VectorFn = std::function<RealVector(const RealVector&, const RealVector&)>;

/// Central differences with h_i = max(1e-6, 1e-6 |x_i|); every column is
/// re-evaluated at h/2 and entries disagreeing by more than 1e-3 relative
/// are flagged (never silently dropped).
LinearModel linearize(const VectorFn& f, const VectorFn& g, const RealVector& x0,
                      const RealVector& u0);
RealMatrix fd_jacobian_x(const VectorFn& f, const RealVector& x0, const RealVector& u0,
                         double* max_rel_err = nullptr, std::vector<int>* flagged = nullptr);

struct Mode {
  Complex lambda;
  double frequency_hz = 0.0;    // |Im| / 2 pi
  double damping_ratio = 0.0;   // -Re / |lambda|
  RealVector participation;     // normalized to max 1
  RealVector shape_angle_deg;   // right-eigenvector angle per state
  std::vector<int> top_states;  // indices by descending participation
};

struct EigenReport {
  std::vector<Mode> modes;  // sorted by descending real part
  std::vector<std::string> state_labels;
};

/// Full eigenanalysis of A. Left eigenvectors from the inverse of the right
/// eigenvector matrix; participation p_ki = |V_ki W_ik| column-normalized to
/// a maximum of one. Throws NumericalError if V is numerically singular.
EigenReport eigen_analysis(const RealMatrix& a, const std::vector<std::string>& labels);

/// Modes with Re > threshold, excluding the rotational-symmetry zero mode.
std::vector<Mode> unstable_modes(const EigenReport& rep, double threshold = 1e-3);

/// Oscillatory modes (Im > 0 representative) within [f_lo, f_hi] Hz.
std::vector<Mode> modes_in_band(const EigenReport& rep, double f_lo, double f_hi);

struct SigmaSweep {
  RealVector f_hz;       // logarithmic grid
  RealVector sigma_max;  // largest singular value of G(j 2 pi f)
};

/// sigma_max(C (j w I - A)^-1 B + D) on a log grid.
SigmaSweep sigma_max_sweep(const LinearModel& lm, double f_min, double f_max, int n_points);

/// Single-frequency evaluation (used by tests against analytic transfer
/// functions).
double sigma_max_at(const LinearModel& lm, double f_hz);

}  // namespace sso
