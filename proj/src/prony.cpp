#include "sso/prony.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace sso {

namespace {

// Linear-prediction matrix: rows [y_k ... y_{k+p-1}] predicting y_{k+p}.
void prediction_system(const RealVector& y, int p, RealMatrix& m, RealVector& rhs) {
  const int rows = static_cast<int>(y.size()) - p;
  m.resize(rows, p);
  rhs.resize(rows);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < p; ++c) m(r, c) = y(r + c);
    rhs(r) = y(r + p);
  }
}

}  // namespace

PronyResult prony_fit(const RealVector& y_in, double dt, int order) {
  if (dt <= 0.0) throw ValidationError("prony_fit: dt must be positive");
  if (order < 1) throw ValidationError("prony_fit: order must be >= 1");
  const int n = static_cast<int>(y_in.size());
  if (n < 3 * order)
    throw ValidationError("prony_fit: need at least 3x order samples (" +
                          std::to_string(3 * order) + "), got " + std::to_string(n));

  const double mean = y_in.mean();
  const RealVector& y = y_in;
  const double rms = std::sqrt(y_in.squaredNorm() / n);

  PronyResult out;
  out.order = order;
  out.rms_signal = rms;

  // Degenerate pure-dc input: a single zero-frequency term.
  if ((y_in.array() - mean).abs().maxCoeff() <= 1e-14 * std::max(1.0, std::abs(mean))) {
    if (std::abs(mean) > 0.0) {
      PronyTerm t;
      t.lambda = 0.0;
      t.amplitude = mean;
      t.energy = mean * mean * n;
      out.terms.push_back(t);
    }
    out.rms_residual = 0.0;
    return out;
  }

  RealMatrix m;
  RealVector rhs;
  prediction_system(y, order, m, rhs);
  Eigen::JacobiSVD<RealMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.singularValues()(0) <= 0.0)
    throw NumericalError("prony_fit: empty prediction matrix");
  // A rank-deficient prediction matrix just means the order exceeds the mode
  // count; the minimum-norm coefficients still annihilate the signal, and the
  // surplus roots carry negligible residues.
  svd.setThreshold(1e-12);
  const RealVector a = svd.solve(rhs);

  // Companion matrix of z^p - a_{p-1} z^{p-1} - ... - a_0.
  RealMatrix comp = RealMatrix::Zero(order, order);
  comp.row(order - 1) = a.transpose();
  for (int i = 0; i + 1 < order; ++i) comp(i, i + 1) = 1.0;
  Eigen::EigenSolver<RealMatrix> es(comp);
  if (es.info() != Eigen::Success) throw NumericalError("prony_fit: root finding failed");
  const ComplexVector z = es.eigenvalues();

  // Residues from the complex Vandermonde least squares. Any dc content is
  // carried by a root at z = 1, so the signal is fit as sampled.
  ComplexMatrix vand(n, order);
  for (int k = 0; k < order; ++k) {
    Complex zk = 1.0;
    for (int r = 0; r < n; ++r) {
      vand(r, k) = zk;
      zk *= z(k);
      if (!std::isfinite(std::abs(zk))) zk = 0.0;
    }
  }
  const ComplexVector amp =
      vand.completeOrthogonalDecomposition().solve(y.cast<Complex>().eval());
  const ComplexVector recon = vand * amp;
  out.rms_residual = std::sqrt((y.cast<Complex>() - recon).squaredNorm() / n);

  for (int k = 0; k < order; ++k) {
    if (std::abs(z(k)) <= 1e-12) continue;  // spurious root at the origin
    PronyTerm t;
    t.lambda = std::log(z(k)) / dt;
    t.amplitude = amp(k);
    t.frequency_hz = std::abs(t.lambda.imag()) / (2.0 * kPi);
    const double mag = std::abs(t.lambda);
    t.damping_ratio = mag > 0.0 ? -t.lambda.real() / mag : 0.0;
    t.energy = std::norm(t.amplitude) * n;
    out.terms.push_back(t);
  }
  std::sort(out.terms.begin(), out.terms.end(),
            [](const PronyTerm& p, const PronyTerm& q) { return p.energy > q.energy; });
  return out;
}

int prony_order_suggestion(const RealVector& y_in, double dt, int max_order,
                           double rel_threshold) {
  if (dt <= 0.0 || max_order < 2) throw ValidationError("prony_order_suggestion: bad arguments");
  const int n = static_cast<int>(y_in.size());
  if (n < 3 * max_order)
    throw ValidationError("prony_order_suggestion: too few samples for max_order");
  const RealVector& y = y_in;
  RealMatrix m;
  RealVector rhs;
  prediction_system(y, max_order, m, rhs);
  Eigen::JacobiSVD<RealMatrix> svd(m);
  const RealVector sv = svd.singularValues();
  if (sv(0) <= 0.0) return 0;
  int order = 0;
  for (int k = 0; k < sv.size(); ++k)
    if (sv(k) / sv(0) > rel_threshold) order = k + 1;
  if (order % 2) ++order;  // keep conjugate pairs whole
  return std::min(order, max_order);
}

RealVector prony_reconstruct(const PronyResult& fit, int n_samples, double dt) {
  RealVector y = RealVector::Zero(n_samples);
  for (const auto& t : fit.terms) {
    for (int r = 0; r < n_samples; ++r)
      y(r) += (t.amplitude * std::exp(t.lambda * (r * dt))).real();
  }
  return y;
}

std::vector<PronyTerm> prony_terms_in_band(const PronyResult& fit, double f_lo, double f_hi) {
  std::vector<PronyTerm> out;
  for (const auto& t : fit.terms)
    if (t.lambda.imag() > 0.0 && t.frequency_hz >= f_lo && t.frequency_hz <= f_hi)
      out.push_back(t);
  return out;
}

}  // namespace sso
