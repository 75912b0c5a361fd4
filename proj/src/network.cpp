#include "sso/network.hpp"

#include <queue>

namespace sso {

std::vector<int> Topology::inductive_loads() const {
  std::vector<int> idx;
  for (int i = 0; i < load_count(); ++i)
    if (loads[i].l_l > 0.0) idx.push_back(i);
  return idx;
}

std::vector<double> Topology::node_capacitance() const {
  std::vector<double> c(node_names.size(), 0.0);
  for (const auto& b : branches) {
    c[b.from] += 0.5 * b.c;
    c[b.to] += 0.5 * b.c;
  }
  for (const auto& ld : loads) c[ld.node] += ld.c_l;
  return c;
}

int Topology::node_index(const std::string& name) const {
  for (int i = 0; i < node_count(); ++i)
    if (node_names[i] == name) return i;
  throw ValidationError("unknown node: " + name);
}

int Topology::branch_index(const std::string& name) const {
  for (int i = 0; i < branch_count(); ++i)
    if (branches[i].name == name) return i;
  throw ValidationError("unknown branch: " + name);
}

void Topology::validate(bool spc) const {
  const int n = node_count();
  if (n == 0) throw ValidationError("topology: no nodes");
  auto check_node = [&](int k, const std::string& what) {
    if (k < 0 || k >= n) throw ValidationError("topology: " + what + " references invalid node");
  };
  for (const auto& b : branches) {
    check_node(b.from, "branch " + b.name);
    check_node(b.to, "branch " + b.name);
    if (b.from == b.to) throw ValidationError("topology: branch " + b.name + " is a self-loop");
    if (b.r < 0.0 || b.l <= 0.0 || b.c < 0.0)
      throw ValidationError("topology: branch " + b.name + " needs R >= 0, L > 0, C >= 0");
  }
  for (const auto& d : devices) check_node(d.node, "device " + d.name);
  for (const auto& ld : loads) {
    check_node(ld.node, "load " + ld.name);
    if (ld.r_l <= 0.0 || ld.l_l < 0.0 || ld.c_l < 0.0)
      throw ValidationError("topology: load " + ld.name + " needs R > 0, L >= 0, C >= 0");
  }
  // Connectivity over series branches.
  if (n > 1) {
    std::vector<char> seen(n, 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (const auto& b : branches) {
        const int v = (b.from == u) ? b.to : (b.to == u ? b.from : -1);
        if (v >= 0 && !seen[v]) {
          seen[v] = 1;
          q.push(v);
        }
      }
    }
    for (int i = 0; i < n; ++i)
      if (!seen[i]) throw ValidationError("topology: node " + node_names[i] + " is disconnected");
  }
  if (spc) {
    const auto c = node_capacitance();
    for (int i = 0; i < n; ++i)
      if (c[i] <= 0.0)
        throw ValidationError("topology: node " + node_names[i] +
                              " has zero shunt capacitance; not representable as an SPC state");
  }
}

IncidenceMatrices build_incidence(const Topology& t) {
  t.validate(false);
  const int n = t.node_count(), l = t.branch_count(), m = t.device_count();
  IncidenceMatrices inc;
  inc.cci = RealMatrix::Zero(n, m + l);
  inc.ccu = RealMatrix::Zero(l, n);
  for (int j = 0; j < m; ++j) inc.cci(t.devices[j].node, j) = 1.0;
  for (int b = 0; b < l; ++b) {
    inc.cci(t.branches[b].from, m + b) = -1.0;  // branch current leaves 'from'
    inc.cci(t.branches[b].to, m + b) = 1.0;
    inc.ccu(b, t.branches[b].from) = 1.0;  // v_branch = v_from - v_to
    inc.ccu(b, t.branches[b].to) = -1.0;
  }
  return inc;
}

NetworkDerivatives spc_network_derivatives(const NetworkStateSPC& state, const ComplexVector& inj,
                                           const Topology& t, const IncidenceMatrices& inc) {
  const int n = t.node_count(), l = t.branch_count(), m = t.device_count();
  const double ws = t.omega_s;
  const Complex jw{0.0, 1.0};  // omega* = 1 pu

  ComplexVector all(m + l);
  all.head(m) = inj;
  all.tail(l) = state.i_branch;
  const ComplexVector i_n = inc.cci.cast<Complex>() * all;
  const ComplexVector v_b = inc.ccu.cast<Complex>() * state.v_node;

  NetworkDerivatives d;
  d.di_branch.resize(l);
  for (int b = 0; b < l; ++b) {
    const auto& br = t.branches[b];
    d.di_branch(b) =
        (ws / br.l) * (v_b(b) - jw * br.l * state.i_branch(b) - br.r * state.i_branch(b));
  }

  // Node equations: shunt capacitance, load R and load inductor draw.
  const auto cap = t.node_capacitance();
  ComplexVector draw = ComplexVector::Zero(n);
  const auto ind = t.inductive_loads();
  d.di_load.resize(static_cast<Eigen::Index>(ind.size()));
  for (std::size_t k = 0; k < ind.size(); ++k) {
    const auto& ld = t.loads[ind[k]];
    draw(ld.node) += state.i_load(static_cast<Eigen::Index>(k));
    d.di_load(static_cast<Eigen::Index>(k)) =
        (ws / ld.l_l) * (state.v_node(ld.node) - jw * ld.l_l * state.i_load(static_cast<Eigen::Index>(k)));
  }
  for (const auto& ld : t.loads)
    if (std::isfinite(ld.r_l)) draw(ld.node) += state.v_node(ld.node) / ld.r_l;

  d.dv_node.resize(n);
  for (int i = 0; i < n; ++i)
    d.dv_node(i) = (ws / cap[i]) * (i_n(i) - draw(i) - jw * cap[i] * state.v_node(i));
  return d;
}

RealMatrix spc_network_jacobian(const Topology& t, const IncidenceMatrices& inc) {
  const int n = t.node_count(), l = t.branch_count(), m = t.device_count();
  const auto ind = t.inductive_loads();
  const int nl = static_cast<int>(ind.size());
  const int dim = 2 * (l + n + nl);
  const double ws = t.omega_s;
  RealMatrix a = RealMatrix::Zero(dim, dim);

  auto put = [&](int row2, int col2, Complex g) {
    // d/dx of g * z for complex z stored as (D, Q): [[Re -Im],[Im Re]].
    a(row2, col2) += g.real();
    a(row2, col2 + 1) -= g.imag();
    a(row2 + 1, col2) += g.imag();
    a(row2 + 1, col2 + 1) += g.real();
  };
  const auto cap = t.node_capacitance();
  const Complex jw{0.0, 1.0};
  const int ob = 0, on = 2 * l, ol = 2 * (l + n);

  for (int b = 0; b < l; ++b) {
    const auto& br = t.branches[b];
    put(ob + 2 * b, ob + 2 * b, ws / br.l * (-jw * br.l - br.r));
    for (int i = 0; i < n; ++i)
      if (inc.ccu(b, i) != 0.0) put(ob + 2 * b, on + 2 * i, ws / br.l * inc.ccu(b, i));
  }
  for (int i = 0; i < n; ++i) {
    put(on + 2 * i, on + 2 * i, ws / cap[i] * (-jw * cap[i]));
    for (int b = 0; b < l; ++b)
      if (inc.cci(i, m + b) != 0.0) put(on + 2 * i, ob + 2 * b, ws / cap[i] * inc.cci(i, m + b));
  }
  for (const auto& ld : t.loads)
    if (std::isfinite(ld.r_l))
      put(on + 2 * ld.node, on + 2 * ld.node, Complex{-ws / (cap[ld.node] * ld.r_l), 0.0});
  for (int k = 0; k < nl; ++k) {
    const auto& ld = t.loads[ind[k]];
    put(on + 2 * ld.node, ol + 2 * k, Complex{-ws / cap[ld.node], 0.0});
    put(ol + 2 * k, on + 2 * ld.node, Complex{ws / ld.l_l, 0.0});
    put(ol + 2 * k, ol + 2 * k, -jw * ws);
  }
  return a;
}

AdmittanceMatrix build_admittance(const Topology& t) {
  t.validate(false);
  const int n = t.node_count();
  AdmittanceMatrix y;
  y.y = ComplexMatrix::Zero(n, n);
  const Complex jw{0.0, 1.0};
  for (const auto& b : t.branches) {
    const Complex ys = 1.0 / Complex{b.r, b.l};
    y.y(b.from, b.from) += ys + jw * 0.5 * b.c;
    y.y(b.to, b.to) += ys + jw * 0.5 * b.c;
    y.y(b.from, b.to) -= ys;
    y.y(b.to, b.from) -= ys;
  }
  for (const auto& ld : t.loads) {
    Complex ysh{0.0, ld.c_l};
    if (std::isfinite(ld.r_l)) ysh += 1.0 / ld.r_l;
    if (ld.l_l > 0.0) ysh += 1.0 / Complex{0.0, ld.l_l};
    y.y(ld.node, ld.node) += ysh;
  }
  return y;
}

ComplexVector qpc_solve(const AdmittanceMatrix& y, const ComplexVector& inj) {
  Eigen::PartialPivLU<ComplexMatrix> lu(y.y);
  ComplexVector v = lu.solve(inj);
  const double resid = (y.y * v - inj).cwiseAbs().maxCoeff();
  if (!v.allFinite() || resid > 1e-10 * std::max(1.0, inj.cwiseAbs().maxCoeff()))
    throw NumericalError("qpc_solve: admittance matrix is singular or ill-conditioned");
  return v;
}

}  // namespace sso
