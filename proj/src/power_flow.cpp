#include "sso/power_flow.hpp"

#include <cmath>

namespace sso {

namespace {

ComplexMatrix pf_admittance(const Topology& t, const std::vector<PowerFlowBusSpec>& buses) {
  const int n = t.node_count();
  ComplexMatrix y = ComplexMatrix::Zero(n, n);
  for (const auto& b : t.branches) {
    const Complex ys = 1.0 / Complex{b.r, b.l};
    y(b.from, b.from) += ys + Complex{0.0, 0.5 * b.c};
    y(b.to, b.to) += ys + Complex{0.0, 0.5 * b.c};
    y(b.from, b.to) -= ys;
    y(b.to, b.from) -= ys;
  }
  for (int i = 0; i < n; ++i) y(i, i) += Complex{0.0, buses[i].b_shunt};
  return y;
}

struct NewtonResult {
  ComplexVector v;
  int iterations = 0;
  double max_mismatch = 0.0;
};

NewtonResult newton_solve(const Topology& t, const std::vector<PowerFlowBusSpec>& buses,
                          const PowerFlowSettings& st) {
  const int n = t.node_count();
  if (static_cast<int>(buses.size()) != n)
    throw ValidationError("power flow: bus spec count does not match topology");
  int slack = -1;
  for (int i = 0; i < n; ++i)
    if (buses[i].type == BusType::Slack) {
      if (slack >= 0) throw ValidationError("power flow: more than one slack bus");
      slack = i;
    }
  if (slack < 0) throw ValidationError("power flow: no slack bus");

  const ComplexMatrix y = pf_admittance(t, buses);
  RealVector vm(n), th = RealVector::Zero(n);
  for (int i = 0; i < n; ++i)
    vm(i) = (buses[i].type == BusType::PQ) ? 1.0 : buses[i].v_set;  // flat start

  std::vector<int> ang_idx, mag_idx;
  for (int i = 0; i < n; ++i) {
    if (i != slack) ang_idx.push_back(i);
    if (buses[i].type == BusType::PQ) mag_idx.push_back(i);
  }
  const int na = static_cast<int>(ang_idx.size());
  const int nm = static_cast<int>(mag_idx.size());

  auto calc_power = [&](RealVector& p, RealVector& q) {
    for (int i = 0; i < n; ++i) {
      double pi = 0.0, qi = 0.0;
      for (int k = 0; k < n; ++k) {
        const double g = y(i, k).real(), b = y(i, k).imag();
        const double d = th(i) - th(k);
        pi += vm(i) * vm(k) * (g * std::cos(d) + b * std::sin(d));
        qi += vm(i) * vm(k) * (g * std::sin(d) - b * std::cos(d));
      }
      p(i) = pi;
      q(i) = qi;
    }
  };

  NewtonResult out;
  RealVector p(n), q(n);
  for (int it = 0; it <= st.max_iterations; ++it) {
    calc_power(p, q);
    RealVector mis(na + nm);
    for (int a = 0; a < na; ++a) {
      const int i = ang_idx[a];
      mis(a) = (buses[i].p_gen - buses[i].p_load) - p(i);
    }
    for (int m = 0; m < nm; ++m) {
      const int i = mag_idx[m];
      mis(na + m) = (-buses[i].q_load) - q(i);
    }
    out.max_mismatch = (na + nm) ? mis.cwiseAbs().maxCoeff() : 0.0;
    out.iterations = it;
    if (out.max_mismatch < st.tolerance) break;
    if (it == st.max_iterations)
      throw NumericalError("power flow: no convergence in " +
                           std::to_string(st.max_iterations) + " iterations");

    RealMatrix jac = RealMatrix::Zero(na + nm, na + nm);
    auto dp_dth = [&](int i, int k) {
      if (i == k) return -q(i) - y(i, i).imag() * vm(i) * vm(i);
      const double d = th(i) - th(k);
      return vm(i) * vm(k) * (y(i, k).real() * std::sin(d) - y(i, k).imag() * std::cos(d));
    };
    auto dq_dth = [&](int i, int k) {
      if (i == k) return p(i) - y(i, i).real() * vm(i) * vm(i);
      const double d = th(i) - th(k);
      return -vm(i) * vm(k) * (y(i, k).real() * std::cos(d) + y(i, k).imag() * std::sin(d));
    };
    auto dp_dv = [&](int i, int k) {  // times V_k (scaled variable dV/V)
      if (i == k) return p(i) + y(i, i).real() * vm(i) * vm(i);
      const double d = th(i) - th(k);
      return vm(i) * vm(k) * (y(i, k).real() * std::cos(d) + y(i, k).imag() * std::sin(d));
    };
    auto dq_dv = [&](int i, int k) {
      if (i == k) return q(i) - y(i, i).imag() * vm(i) * vm(i);
      const double d = th(i) - th(k);
      return vm(i) * vm(k) * (y(i, k).real() * std::sin(d) - y(i, k).imag() * std::cos(d));
    };
    for (int a = 0; a < na; ++a)
      for (int a2 = 0; a2 < na; ++a2) jac(a, a2) = -dp_dth(ang_idx[a], ang_idx[a2]);
    for (int a = 0; a < na; ++a)
      for (int m = 0; m < nm; ++m) jac(a, na + m) = -dp_dv(ang_idx[a], mag_idx[m]);
    for (int m = 0; m < nm; ++m)
      for (int a = 0; a < na; ++a) jac(na + m, a) = -dq_dth(mag_idx[m], ang_idx[a]);
    for (int m = 0; m < nm; ++m)
      for (int m2 = 0; m2 < nm; ++m2) jac(na + m, na + m2) = -dq_dv(mag_idx[m], mag_idx[m2]);

    const RealVector dx = jac.partialPivLu().solve(-mis);
    if (!dx.allFinite()) throw NumericalError("power flow: singular Jacobian");
    for (int a = 0; a < na; ++a) th(ang_idx[a]) += dx(a);
    for (int m = 0; m < nm; ++m) vm(mag_idx[m]) *= 1.0 + dx(na + m);
  }

  out.v.resize(n);
  for (int i = 0; i < n; ++i) out.v(i) = std::polar(vm(i), th(i));
  return out;
}

double tie_flow_at(const Topology& t, const ComplexVector& v, const TieFlowTarget& tie) {
  double total = 0.0;
  for (const auto& name : tie.branches) total += branch_sending_power(t, v, name);
  return total;
}

}  // namespace

double branch_sending_power(const Topology& t, const ComplexVector& v, const std::string& branch) {
  const auto& b = t.branches[t.branch_index(branch)];
  const Complex i_series = (v(b.from) - v(b.to)) / Complex{b.r, b.l};
  const Complex i_from = i_series + Complex{0.0, 0.5 * b.c} * v(b.from);
  return (v(b.from) * std::conj(i_from)).real();
}

PowerFlowRecord solve_power_flow(const Topology& t, const std::vector<PowerFlowBusSpec>& buses,
                                 const PowerFlowSettings& settings) {
  std::vector<PowerFlowBusSpec> work = buses;

  auto run = [&]() { return newton_solve(t, work, settings); };
  NewtonResult nr = run();

  if (settings.tie) {
    const auto& tie = *settings.tie;
    if (tie.adjust_bus < 0 || tie.adjust_bus >= t.node_count() ||
        work[tie.adjust_bus].type != BusType::PV)
      throw ValidationError("power flow: tie-flow adjustment bus must be a PV bus");
    // Secant iteration on the adjusted generator's dispatch.
    double p0 = work[tie.adjust_bus].p_gen;
    double f0 = tie_flow_at(t, nr.v, tie) - tie.target;
    double p1 = p0 - f0;  // tie flow moves ~1:1 with local dispatch
    for (int it = 0; it < 30 && std::abs(f0) > settings.tie_tolerance; ++it) {
      work[tie.adjust_bus].p_gen = p1;
      nr = run();
      const double f1 = tie_flow_at(t, nr.v, tie) - tie.target;
      const double denom = f1 - f0;
      const double p2 = (std::abs(denom) > 1e-14) ? p1 - f1 * (p1 - p0) / denom : p1;
      p0 = p1;
      f0 = f1;
      p1 = p2;
    }
    if (std::abs(f0) > settings.tie_tolerance)
      throw NumericalError("power flow: tie-flow target not reached");
  }

  const int n = t.node_count();
  PowerFlowRecord rec;
  rec.v = nr.v;
  rec.iterations = nr.iterations;
  rec.max_mismatch = nr.max_mismatch;
  rec.s_inj.resize(n);
  rec.p_gen.resize(n);
  rec.q_gen.resize(n);
  const ComplexMatrix y = pf_admittance(t, work);
  const ComplexVector i_bus = y * nr.v;
  for (int i = 0; i < n; ++i) {
    rec.s_inj(i) = nr.v(i) * std::conj(i_bus(i));
    rec.p_gen(i) = rec.s_inj(i).real() + work[i].p_load;
    rec.q_gen(i) = rec.s_inj(i).imag() + work[i].q_load;
  }
  if (settings.tie) rec.tie_flow = tie_flow_at(t, nr.v, *settings.tie);
  return rec;
}

}  // namespace sso
