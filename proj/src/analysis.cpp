#include "sso/analysis.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace sso {

namespace {

RealMatrix fd_jacobian(const VectorFn& f, const RealVector& x0, const RealVector& u0, bool wrt_x,
                       double h_scale, double* max_rel_err, std::vector<int>* flagged_cols) {
  const RealVector& v0 = wrt_x ? x0 : u0;
  const int n = static_cast<int>(v0.size());
  const int rows = static_cast<int>(f(x0, u0).size());
  RealMatrix jac(rows, n);
  if (max_rel_err) *max_rel_err = 0.0;

  RealVector v = v0;
  auto eval = [&](int i, double h) {
    v(i) = v0(i) + h;
    const RealVector fp = wrt_x ? f(v, u0) : f(x0, v);
    v(i) = v0(i) - h;
    const RealVector fm = wrt_x ? f(v, u0) : f(x0, v);
    v(i) = v0(i);
    return RealVector((fp - fm) / (2.0 * h));
  };

  for (int i = 0; i < n; ++i) {
    const double h = h_scale * std::max(1.0, std::abs(v0(i)));
    const RealVector col = eval(i, h);
    jac.col(i) = col;
    if (max_rel_err) {
      const RealVector col_half = eval(i, 0.5 * h);
      const double scale = std::max(col.cwiseAbs().maxCoeff(), col_half.cwiseAbs().maxCoeff());
      if (scale > 1e-9) {
        const double rel = (col - col_half).cwiseAbs().maxCoeff() / scale;
        *max_rel_err = std::max(*max_rel_err, rel);
        if (rel > 1e-3 && flagged_cols) flagged_cols->push_back(i);
      }
      // Richardson combination of the h and h/2 stencils cancels the leading
      // O(h^2) truncation term.
      jac.col(i) = (4.0 * col_half - col) / 3.0;
    }
  }
  return jac;
}

}  // namespace

RealMatrix fd_jacobian_x(const VectorFn& f, const RealVector& x0, const RealVector& u0,
                         double* max_rel_err, std::vector<int>* flagged) {
  return fd_jacobian(f, x0, u0, true, 1e-6, max_rel_err, flagged);
}

LinearModel linearize(const VectorFn& f, const VectorFn& g, const RealVector& x0,
                      const RealVector& u0) {
  LinearModel lm;
  double err = 0.0;
  std::vector<int> flagged;
  lm.a = fd_jacobian(f, x0, u0, true, 1e-6, &err, &flagged);
  lm.max_richardson_error = err;
  for (int i : flagged) lm.flagged.push_back("A:x" + std::to_string(i));

  if (u0.size() > 0) {
    flagged.clear();
    lm.b = fd_jacobian(f, x0, u0, false, 1e-6, &err, &flagged);
    lm.max_richardson_error = std::max(lm.max_richardson_error, err);
    for (int i : flagged) lm.flagged.push_back("B:u" + std::to_string(i));
  } else {
    lm.b = RealMatrix::Zero(lm.a.rows(), 0);
  }

  if (g) {
    flagged.clear();
    lm.c = fd_jacobian(g, x0, u0, true, 1e-6, &err, &flagged);
    lm.max_richardson_error = std::max(lm.max_richardson_error, err);
    for (int i : flagged) lm.flagged.push_back("C:x" + std::to_string(i));
    if (u0.size() > 0) {
      flagged.clear();
      lm.d = fd_jacobian(g, x0, u0, false, 1e-6, &err, &flagged);
      lm.max_richardson_error = std::max(lm.max_richardson_error, err);
      for (int i : flagged) lm.flagged.push_back("D:u" + std::to_string(i));
    } else {
      lm.d = RealMatrix::Zero(lm.c.rows(), 0);
    }
  } else {
    lm.c = RealMatrix::Identity(lm.a.rows(), lm.a.cols());
    lm.d = RealMatrix::Zero(lm.a.rows(), lm.b.cols());
  }
  return lm;
}

EigenReport eigen_analysis(const RealMatrix& a, const std::vector<std::string>& labels) {
  if (a.rows() != a.cols()) throw ValidationError("eigen_analysis: matrix is not square");
  const int n = static_cast<int>(a.rows());
  Eigen::EigenSolver<RealMatrix> es(a);
  if (es.info() != Eigen::Success) throw NumericalError("eigen_analysis: eigensolver failed");
  const ComplexVector lam = es.eigenvalues();
  const ComplexMatrix v = es.eigenvectors();

  Eigen::PartialPivLU<ComplexMatrix> lu(v);
  const ComplexMatrix w = lu.solve(ComplexMatrix::Identity(n, n));  // left eigenvectors (rows)
  if (!w.allFinite() || (v * w - ComplexMatrix::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-6)
    throw NumericalError("eigen_analysis: eigenvector matrix is numerically singular");

  EigenReport rep;
  rep.state_labels = labels;
  rep.modes.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Mode& m = rep.modes[static_cast<std::size_t>(i)];
    m.lambda = lam(i);
    m.frequency_hz = std::abs(lam(i).imag()) / (2.0 * kPi);
    const double mag = std::abs(lam(i));
    m.damping_ratio = mag > 0.0 ? -lam(i).real() / mag : 0.0;
    m.participation.resize(n);
    m.shape_angle_deg.resize(n);
    for (int k = 0; k < n; ++k) m.participation(k) = std::abs(v(k, i) * w(i, k));
    for (int k = 0; k < n; ++k) m.shape_angle_deg(k) = std::arg(v(k, i)) * 180.0 / kPi;
    const double pmax = m.participation.maxCoeff();
    if (pmax > 0.0) m.participation /= pmax;
    m.top_states.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) m.top_states[static_cast<std::size_t>(k)] = k;
    std::sort(m.top_states.begin(), m.top_states.end(),
              [&](int p, int q) { return m.participation(p) > m.participation(q); });
  }
  std::sort(rep.modes.begin(), rep.modes.end(), [](const Mode& p, const Mode& q) {
    if (p.lambda.real() != q.lambda.real()) return p.lambda.real() > q.lambda.real();
    return p.lambda.imag() > q.lambda.imag();
  });
  return rep;
}

std::vector<Mode> unstable_modes(const EigenReport& rep, double threshold) {
  // The autonomous system is invariant under a common rotation of every
  // frame angle and phasor, so one eigenvalue sits at exactly zero in exact
  // arithmetic; finite-difference Jacobians smear it by O(1e-3). Modes inside
  // that numerical ball are never reported as unstable.
  constexpr double kZeroModeRadius = 0.05;  // rad/s
  std::vector<Mode> out;
  for (const auto& m : rep.modes)
    if (m.lambda.real() > threshold && std::abs(m.lambda) > kZeroModeRadius) out.push_back(m);
  return out;
}

std::vector<Mode> modes_in_band(const EigenReport& rep, double f_lo, double f_hi) {
  std::vector<Mode> out;
  for (const auto& m : rep.modes)
    if (m.lambda.imag() > 0.0 && m.frequency_hz >= f_lo && m.frequency_hz <= f_hi)
      out.push_back(m);
  return out;
}

double sigma_max_at(const LinearModel& lm, double f_hz) {
  const int n = static_cast<int>(lm.a.rows());
  const Complex jw{0.0, 2.0 * kPi * f_hz};
  ComplexMatrix m = -lm.a.cast<Complex>();
  m.diagonal().array() += jw;
  Eigen::PartialPivLU<ComplexMatrix> lu(m);
  const ComplexMatrix x = lu.solve(lm.b.cast<Complex>());
  // A purely imaginary eigenvalue at this frequency: report infinite gain
  // and let the sweep continue.
  if (!x.allFinite()) return std::numeric_limits<double>::infinity();
  const ComplexMatrix g = lm.c.cast<Complex>() * x + lm.d.cast<Complex>();
  Eigen::JacobiSVD<ComplexMatrix> svd(g);
  (void)n;
  return svd.singularValues()(0);
}

SigmaSweep sigma_max_sweep(const LinearModel& lm, double f_min, double f_max, int n_points) {
  if (!(f_min > 0.0) || !(f_max > f_min) || n_points < 2)
    throw ValidationError("sigma_max_sweep: invalid frequency grid");
  if (lm.b.cols() == 0) throw ValidationError("sigma_max_sweep: model has no inputs");
  SigmaSweep sw;
  sw.f_hz.resize(n_points);
  sw.sigma_max.resize(n_points);
  const double lr = std::log10(f_max / f_min) / (n_points - 1);
  for (int i = 0; i < n_points; ++i) {
    sw.f_hz(i) = f_min * std::pow(10.0, lr * i);
    sw.sigma_max(i) = sigma_max_at(lm, sw.f_hz(i));
  }
  return sw;
}

}  // namespace sso
