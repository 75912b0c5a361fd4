#include "sso/system_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace sso {

std::string framework_name(Framework fw) { return fw == Framework::SPC ? "spc" : "qpc"; }

// ---------------------------------------------------------------------------
// Case validation
// ---------------------------------------------------------------------------

void CaseDefinition::validate() const {
  auto req = [&](bool ok, const std::string& msg) {
    if (!ok) throw ValidationError("case '" + name + "': " + msg);
  };
  req(!name.empty(), "missing name");
  req(f_hz > 0.0 && s_base_mva > 0.0, "base quantities must be positive");
  req(!buses.empty(), "no buses");

  std::set<std::string> bus_names;
  for (const auto& b : buses) {
    req(!b.name.empty(), "bus with empty name");
    req(bus_names.insert(b.name).second, "duplicate bus " + b.name);
  }
  auto has_bus = [&](const std::string& n) { return bus_names.count(n) != 0; };

  std::set<std::string> branch_names;
  for (const auto& b : branches) {
    req(branch_names.insert(b.name).second, "duplicate branch " + b.name);
    req(has_bus(b.from) && has_bus(b.to), "branch " + b.name + " references unknown bus");
  }
  std::set<std::string> elem_names;
  for (const auto& l : loads) {
    req(elem_names.insert(l.name).second, "duplicate load " + l.name);
    req(has_bus(l.bus), "load " + l.name + " references unknown bus");
    req(l.p >= 0.0 && l.q >= 0.0 && l.c_shunt >= 0.0, "load " + l.name + " values out of range");
  }

  std::set<std::string> dev_buses;
  int slack_count = 0;
  auto check_device = [&](const std::string& dname, const std::string& dbus,
                          const DispatchDef& dis) {
    req(elem_names.insert(dname).second, "duplicate device " + dname);
    req(has_bus(dbus), "device " + dname + " references unknown bus");
    req(dev_buses.insert(dbus).second, "more than one device at bus " + dbus);
    req(dis.type != BusType::PQ, "device " + dname + " must dispatch as slack or PV");
    if (dis.type == BusType::Slack) ++slack_count;
    req(dis.v > 0.0, "device " + dname + " voltage setpoint must be positive");
  };
  for (const auto& g : sgs) {
    check_device(g.name, g.bus, g.dispatch);
    g.params.validate("sg " + g.name);
  }
  for (const auto& g : gfcs) {
    check_device(g.name, g.bus, g.dispatch);
    g.params.validate("gfc " + g.name);
  }
  req(slack_count == 1, "exactly one device must dispatch as slack");

  if (tie) {
    req(!tie->branches.empty(), "tie-flow constraint lists no branches");
    for (const auto& b : tie->branches)
      req(branch_names.count(b) != 0, "tie-flow branch " + b + " unknown");
    const bool adj_pv =
        std::any_of(sgs.begin(), sgs.end(),
                    [&](const SgDef& g) {
                      return g.name == tie->adjust_device && g.dispatch.type == BusType::PV;
                    }) ||
        std::any_of(gfcs.begin(), gfcs.end(), [&](const GfcDef& g) {
          return g.name == tie->adjust_device && g.dispatch.type == BusType::PV;
        });
    req(adj_pv, "tie-flow adjust device must be a PV-dispatched device");
  }

  for (const auto& in : inputs) {
    const bool is_gfc =
        std::any_of(gfcs.begin(), gfcs.end(), [&](const GfcDef& g) { return g.name == in; });
    req(is_gfc, "input " + in + " does not name a grid-forming converter");
  }

  req(sim.t_end > 0.0 && sim.dt_spc > 0.0 && sim.dt_qpc > 0.0, "simulation times out of range");
  req(sim.method == "rk4" || sim.method == "trapezoidal",
      "simulation method must be rk4 or trapezoidal");
  req(sim.decimation >= 1, "decimation must be >= 1");
  const auto& dw = sim.disturbance.waveform;
  req(dw == "none" || dw == "step" || dw == "pulse", "unknown disturbance waveform " + dw);
  req(analysis.f_min > 0.0 && analysis.f_max > analysis.f_min && analysis.n_points >= 2,
      "frequency-sweep grid out of range");
  req(analysis.prony_order >= 2, "prony order must be >= 2");
  req(analysis.prony_window_end > analysis.prony_window_begin && analysis.prony_window_begin >= 0.0,
      "prony window out of range");
}

// ---------------------------------------------------------------------------
// State packing
// ---------------------------------------------------------------------------

void pack_sg(const SGState& s, bool spc, double* out) {
  out[0] = s.delta;
  out[1] = s.omega;
  out[2] = s.eqp;
  out[3] = s.edp;
  out[4] = s.psi1d;
  out[5] = s.psi2q;
  out[6] = s.efd;
  out[7] = s.pgv;
  out[8] = s.pm;
  if (spc) {
    out[9] = s.i_s.real();
    out[10] = s.i_s.imag();
  }
}

SGState unpack_sg(const double* x, bool spc) {
  SGState s;
  s.delta = x[0];
  s.omega = x[1];
  s.eqp = x[2];
  s.edp = x[3];
  s.psi1d = x[4];
  s.psi2q = x[5];
  s.efd = x[6];
  s.pgv = x[7];
  s.pm = x[8];
  if (spc) s.i_s = {x[9], x[10]};
  return s;
}

void pack_gfc(const GFCState& s, double* out) {
  out[0] = s.v_dc;
  out[1] = s.i_src;
  out[2] = s.i_f.real();
  out[3] = s.i_f.imag();
  out[4] = s.v_c.real();
  out[5] = s.v_c.imag();
  out[6] = s.i_t.real();
  out[7] = s.i_t.imag();
  out[8] = s.rho_c;
  out[9] = s.x_p;
  out[10] = s.x_al;
  out[11] = s.xi_o.real();
  out[12] = s.xi_o.imag();
  out[13] = s.xi_v.real();
  out[14] = s.xi_v.imag();
  out[15] = s.xi_i.real();
  out[16] = s.xi_i.imag();
}

GFCState unpack_gfc(const double* x) {
  GFCState s;
  s.v_dc = x[0];
  s.i_src = x[1];
  s.i_f = {x[2], x[3]};
  s.v_c = {x[4], x[5]};
  s.i_t = {x[6], x[7]};
  s.rho_c = x[8];
  s.x_p = x[9];
  s.x_al = x[10];
  s.xi_o = {x[11], x[12]};
  s.xi_v = {x[13], x[14]};
  s.xi_i = {x[15], x[16]};
  return s;
}

namespace {

const char* kSgFields[] = {"delta", "omega", "eqp",   "edp",   "psi1d", "psi2q",
                           "efd",   "pgv",   "pm",    "i_s_D", "i_s_Q"};
const char* kGfcFields[] = {"v_dc",   "i_src",  "i_f_d",  "i_f_q", "v_c_d",  "v_c_q",
                            "i_t_d",  "i_t_q",  "rho_c",  "x_p",   "x_al",   "xi_o_d",
                            "xi_o_q", "xi_v_d", "xi_v_q", "xi_i_d", "xi_i_q"};

}  // namespace

int SystemModel::state_index(const std::string& label) const {
  for (int i = 0; i < n_states; ++i)
    if (state_labels[static_cast<std::size_t>(i)] == label) return i;
  return -1;
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

SystemModel build_system(const CaseDefinition& def, Framework fw) {
  def.validate();
  const bool spc = fw == Framework::SPC;

  SystemModel m;
  m.framework = fw;
  m.topology.omega_s = def.omega_s();
  for (const auto& b : def.buses) m.topology.node_names.push_back(b.name);
  for (const auto& b : def.branches)
    m.topology.branches.push_back(
        {b.name, m.topology.node_index(b.from), m.topology.node_index(b.to), b.r, b.l, b.c});
  m.load_defs = def.loads;

  // Devices in declaration order: machines first, converters second. The
  // same order fixes the device columns of the incidence matrices.
  int offset = 0;
  for (const auto& g : def.sgs) {
    SgSlot slot;
    slot.name = g.name;
    slot.node = m.topology.node_index(g.bus);
    slot.offset = offset;
    slot.params = g.params;
    slot.params.omega_s = def.omega_s();
    m.topology.devices.push_back({g.name, slot.node});
    const int ns = spc ? kSgStatesSpc : kSgStatesQpc;
    for (int k = 0; k < ns; ++k) m.state_labels.push_back(g.name + "." + kSgFields[k]);
    offset += ns;
    m.sgs.push_back(std::move(slot));
  }
  for (const auto& g : def.gfcs) {
    GfcSlot slot;
    slot.name = g.name;
    slot.node = m.topology.node_index(g.bus);
    slot.offset = offset;
    slot.params = g.params;
    slot.params.omega_s = def.omega_s();
    m.topology.devices.push_back({g.name, slot.node});
    for (int k = 0; k < kGfcStates; ++k) m.state_labels.push_back(g.name + "." + kGfcFields[k]);
    offset += kGfcStates;
    m.gfcs.push_back(std::move(slot));
  }
  m.network_offset = offset;

  if (spc) {
    for (const auto& b : m.topology.branches) {
      m.state_labels.push_back(b.name + ".i_D");
      m.state_labels.push_back(b.name + ".i_Q");
    }
    for (const auto& n : m.topology.node_names) {
      m.state_labels.push_back(n + ".v_D");
      m.state_labels.push_back(n + ".v_Q");
    }
    for (const auto& l : def.loads)
      if (l.q > 0.0) {
        m.state_labels.push_back(l.name + ".i_D");
        m.state_labels.push_back(l.name + ".i_Q");
      }
  }
  m.n_states = static_cast<int>(m.state_labels.size());

  for (const auto& in : def.inputs) {
    for (auto& g : m.gfcs)
      if (g.name == in) g.input = static_cast<int>(m.input_labels.size());
    m.input_labels.push_back(in + ".u_p");
  }

  if (!def.outputs.empty()) {
    m.output_channels = def.outputs;
  } else {
    // Default observation set: dc-link voltage and transformer current
    // components of every converter.
    for (const auto& g : m.gfcs) {
      m.output_channels.push_back(g.name + ".v_dc");
      m.output_channels.push_back(g.name + ".i_t_D");
      m.output_channels.push_back(g.name + ".i_t_Q");
    }
  }

  m.incidence = build_incidence(m.topology);
  return m;
}

PowerFlowRecord run_case_power_flow(const CaseDefinition& def, const SystemModel& model) {
  const Topology& t = model.topology;
  std::vector<PowerFlowBusSpec> buses(static_cast<std::size_t>(t.node_count()));
  for (const auto& l : def.loads) {
    auto& b = buses[static_cast<std::size_t>(t.node_index(l.bus))];
    b.p_load += l.p;
    b.q_load += l.q;
    b.b_shunt += l.c_shunt;
  }
  auto dispatch = [&](const std::string& bus, const DispatchDef& d) {
    auto& b = buses[static_cast<std::size_t>(t.node_index(bus))];
    b.type = d.type;
    b.p_gen = d.p;
    b.v_set = d.v;
  };
  for (const auto& g : def.sgs) dispatch(g.bus, g.dispatch);
  for (const auto& g : def.gfcs) dispatch(g.bus, g.dispatch);

  PowerFlowSettings settings;
  if (def.tie) {
    TieFlowTarget tie;
    tie.branches = def.tie->branches;
    tie.target = def.tie->target;
    for (const auto& g : def.sgs)
      if (g.name == def.tie->adjust_device) tie.adjust_bus = t.node_index(g.bus);
    for (const auto& g : def.gfcs)
      if (g.name == def.tie->adjust_device) tie.adjust_bus = t.node_index(g.bus);
    settings.tie = tie;
  }
  return solve_power_flow(t, buses, settings);
}

// ---------------------------------------------------------------------------
// Evaluation core
// ---------------------------------------------------------------------------

namespace {

struct Evaluation {
  ComplexVector v_node;  // bus voltages, synchronous frame
  ComplexVector inj;     // device injections, topology device order
};

ComplexVector qpc_injections(const SystemModel& m, const RealVector& x) {
  const int nd = m.topology.device_count();
  ComplexVector inj(nd);
  int di = 0;
  for (const auto& g : m.sgs) {
    const SGState s = unpack_sg(x.data() + g.offset, false);
    const Complex z{g.params.rs + g.params.rg, g.params.ldpp + g.params.lg};
    inj(di++) = machine_to_dq(sg_subtransient_emf(s, g.params), s.delta) / z;
  }
  for (const auto& g : m.gfcs) {
    const GFCState s = unpack_gfc(x.data() + g.offset);
    inj(di++) = s.i_t * std::polar(1.0, s.rho_c);
  }
  return inj;
}

Evaluation evaluate_network(const SystemModel& m, const RealVector& x) {
  Evaluation ev;
  const int nd = m.topology.device_count();
  if (m.framework == Framework::SPC) {
    const int nb = m.topology.branch_count();
    const int off = m.network_offset + 2 * nb;
    ev.v_node.resize(m.topology.node_count());
    for (int i = 0; i < m.topology.node_count(); ++i)
      ev.v_node(i) = {x(off + 2 * i), x(off + 2 * i + 1)};
    ev.inj.resize(nd);
    int di = 0;
    for (const auto& g : m.sgs) ev.inj(di++) = Complex{x(g.offset + 9), x(g.offset + 10)};
    for (const auto& g : m.gfcs) {
      ev.inj(di++) = Complex{x(g.offset + 6), x(g.offset + 7)} * std::polar(1.0, x(g.offset + 8));
    }
  } else {
    if (!m.y_qpc_lu)
      throw ValidationError("system model: initialize() must run before evaluating a QPC model");
    const ComplexVector i_norton = qpc_injections(m, x);
    ComplexVector node_inj = ComplexVector::Zero(m.topology.node_count());
    for (int d = 0; d < nd; ++d) node_inj(m.topology.devices[static_cast<std::size_t>(d)].node) += i_norton(d);
    ev.v_node = m.y_qpc_lu->solve(node_inj);
    if (!ev.v_node.allFinite())
      throw NumericalError("system model: singular QPC network solve");
    // Terminal currents (Norton source minus the internal-admittance draw).
    ev.inj = i_norton;
    int di = 0;
    for (const auto& g : m.sgs) {
      const Complex z{g.params.rs + g.params.rg, g.params.ldpp + g.params.lg};
      ev.inj(di) -= ev.v_node(g.node) / z;
      ++di;
    }
  }
  return ev;
}

}  // namespace

ComplexVector bus_voltages(const SystemModel& model, const RealVector& x, const RealVector&) {
  return evaluate_network(model, x).v_node;
}

void vector_field(const SystemModel& m, const RealVector& x, const RealVector& u, RealVector& dx) {
  if (x.size() != m.n_states)
    throw ValidationError("vector_field: state dimension mismatch");
  if (u.size() != m.input_count())
    throw ValidationError("vector_field: input dimension mismatch");
  dx.resize(m.n_states);

  const bool spc = m.framework == Framework::SPC;
  const Evaluation ev = evaluate_network(m, x);

  for (const auto& g : m.sgs) {
    const SGState s = unpack_sg(x.data() + g.offset, spc);
    const SGDerivatives d = spc ? sg_spc_derivatives(s, ev.v_node(g.node), g.refs, g.params)
                                : sg_qpc_derivatives(s, ev.v_node(g.node), g.refs, g.params);
    pack_sg(d.d, spc, dx.data() + g.offset);
  }
  for (const auto& g : m.gfcs) {
    const GFCState s = unpack_gfc(x.data() + g.offset);
    const double up = g.input >= 0 ? u(g.input) : 0.0;
    const GFCDerivatives d = gfc_derivatives(s, ev.v_node(g.node), up, g.refs, g.params);
    pack_gfc(d.d, dx.data() + g.offset);
  }

  if (spc) {
    const int nb = m.topology.branch_count();
    const int nn = m.topology.node_count();
    NetworkStateSPC ns;
    ns.i_branch.resize(nb);
    ns.v_node = ev.v_node;
    const auto ind = m.topology.inductive_loads();
    ns.i_load.resize(static_cast<Eigen::Index>(ind.size()));
    const int off = m.network_offset;
    for (int b = 0; b < nb; ++b) ns.i_branch(b) = {x(off + 2 * b), x(off + 2 * b + 1)};
    const int ol = off + 2 * (nb + nn);
    for (Eigen::Index k = 0; k < ns.i_load.size(); ++k)
      ns.i_load(k) = {x(ol + 2 * k), x(ol + 2 * k + 1)};

    const NetworkDerivatives nd = spc_network_derivatives(ns, ev.inj, m.topology, m.incidence);
    for (int b = 0; b < nb; ++b) {
      dx(off + 2 * b) = nd.di_branch(b).real();
      dx(off + 2 * b + 1) = nd.di_branch(b).imag();
    }
    for (int i = 0; i < nn; ++i) {
      dx(off + 2 * (nb + i)) = nd.dv_node(i).real();
      dx(off + 2 * (nb + i) + 1) = nd.dv_node(i).imag();
    }
    for (Eigen::Index k = 0; k < ns.i_load.size(); ++k) {
      dx(ol + 2 * k) = nd.di_load(k).real();
      dx(ol + 2 * k + 1) = nd.di_load(k).imag();
    }
  }
}

RealVector vector_field(const SystemModel& m, const RealVector& x, const RealVector& u) {
  RealVector dx;
  vector_field(m, x, u, dx);
  return dx;
}

// ---------------------------------------------------------------------------
// Channels
// ---------------------------------------------------------------------------

RealVector evaluate_channels(const SystemModel& m, const RealVector& x, const RealVector& u,
                             const std::vector<std::string>& channels) {
  // Lazily built shared context.
  bool have_ev = false;
  Evaluation ev;
  auto ensure_ev = [&]() {
    if (!have_ev) {
      ev = evaluate_network(m, x);
      have_ev = true;
    }
  };

  RealVector out(static_cast<Eigen::Index>(channels.size()));
  for (std::size_t c = 0; c < channels.size(); ++c) {
    const std::string& ch = channels[c];
    const int si = m.state_index(ch);
    if (si >= 0) {
      out(static_cast<Eigen::Index>(c)) = x(si);
      continue;
    }
    const auto dot = ch.rfind('.');
    if (dot == std::string::npos) throw ValidationError("unknown channel: " + ch);
    const std::string who = ch.substr(0, dot), what = ch.substr(dot + 1);

    auto find_gfc = [&]() -> const GfcSlot* {
      for (const auto& g : m.gfcs)
        if (g.name == who) return &g;
      return nullptr;
    };
    auto find_sg = [&]() -> const SgSlot* {
      for (const auto& g : m.sgs)
        if (g.name == who) return &g;
      return nullptr;
    };

    double value = 0.0;
    bool handled = false;
    // Bus channels.
    for (int i = 0; i < m.topology.node_count() && !handled; ++i) {
      if (m.topology.node_names[static_cast<std::size_t>(i)] != who) continue;
      ensure_ev();
      const Complex v = ev.v_node(i);
      if (what == "v_D") value = v.real();
      else if (what == "v_Q") value = v.imag();
      else if (what == "v_mag") value = std::abs(v);
      else if (what == "v_ang") value = std::arg(v);
      else throw ValidationError("unknown channel: " + ch);
      handled = true;
    }
    if (!handled) {
      if (const GfcSlot* g = find_gfc()) {
        ensure_ev();
        const GFCState s = unpack_gfc(x.data() + g->offset);
        const double up = g->input >= 0 ? u(g->input) : 0.0;
        const GFCSignals sig = gfc_signals(s, ev.v_node(g->node), up, g->refs, g->params);
        const Complex i_inj = s.i_t * std::polar(1.0, s.rho_c);
        if (what == "i_t_D") value = i_inj.real();
        else if (what == "i_t_Q") value = i_inj.imag();
        else if (what == "p_t") value = sig.p_t;
        else if (what == "p_pcc") value = (ev.v_node(g->node) * std::conj(i_inj)).real();
        else if (what == "omega_c") value = sig.omega_c_pu;
        else if (what == "f_c") value = sig.omega_c_pu * m.topology.omega_s / (2.0 * kPi);
        else throw ValidationError("unknown channel: " + ch);
        handled = true;
      } else if (const SgSlot* g = find_sg()) {
        ensure_ev();
        const int di = static_cast<int>(g - m.sgs.data());
        const Complex i_inj = ev.inj(di);
        if (what == "i_s_D") value = i_inj.real();
        else if (what == "i_s_Q") value = i_inj.imag();
        else if (what == "p_e") value = (ev.v_node(g->node) * std::conj(i_inj)).real();
        else if (what == "f") value = x(g->offset + 1) * m.topology.omega_s / (2.0 * kPi);
        else throw ValidationError("unknown channel: " + ch);
        handled = true;
      }
    }
    if (!handled) {
      // Branch currents: SPC resolves them as states above; for QPC compute
      // the series current from the algebraic node voltages.
      for (int b = 0; b < m.topology.branch_count() && !handled; ++b) {
        const Branch& br = m.topology.branches[static_cast<std::size_t>(b)];
        if (br.name != who) continue;
        ensure_ev();
        const Complex i_series =
            (ev.v_node(br.from) - ev.v_node(br.to)) / Complex{br.r, br.l};
        if (what == "i_D") value = i_series.real();
        else if (what == "i_Q") value = i_series.imag();
        else if (what == "i_mag") value = std::abs(i_series);
        else throw ValidationError("unknown channel: " + ch);
        handled = true;
      }
    }
    if (!handled) throw ValidationError("unknown channel: " + ch);
    out(static_cast<Eigen::Index>(c)) = value;
  }
  return out;
}

RealVector record_channels(const SystemModel& m, const RealVector& x, const RealVector& u) {
  return evaluate_channels(m, x, u, m.output_channels);
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

OperatingPoint initialize(SystemModel& m, const PowerFlowRecord& pf) {
  const bool spc = m.framework == Framework::SPC;
  const Topology& t = m.topology;

  // Constant-impedance load synthesis at the solved voltages.
  m.topology.loads.clear();
  for (const auto& l : m.load_defs) {
    const int node = t.node_index(l.bus);
    const double vm2 = std::norm(pf.v(node));
    Load ld;
    ld.name = l.name;
    ld.node = node;
    ld.r_l = l.p > 0.0 ? vm2 / l.p : std::numeric_limits<double>::infinity();
    ld.l_l = l.q > 0.0 ? vm2 / l.q : 0.0;
    ld.c_l = l.c_shunt;
    m.topology.loads.push_back(ld);
  }
  m.topology.validate(spc);
  m.incidence = build_incidence(m.topology);

  if (!spc) {
    m.y_qpc = build_admittance(m.topology);
    for (const auto& g : m.sgs) {
      const Complex z{g.params.rs + g.params.rg, g.params.ldpp + g.params.lg};
      m.y_qpc.y(g.node, g.node) += 1.0 / z;
    }
    m.y_qpc_lu = std::make_shared<Eigen::PartialPivLU<ComplexMatrix>>(m.y_qpc.y);
  }

  OperatingPoint op;
  op.pf = pf;
  op.x0 = RealVector::Zero(m.n_states);
  op.u0 = RealVector::Zero(m.input_count());

  for (auto& g : m.sgs) {
    const Complex s_inj{pf.p_gen(g.node), pf.q_gen(g.node)};
    const SGInit init = sg_initialize(pf.v(g.node), s_inj, g.params);
    g.refs = init.refs;
    pack_sg(init.state, spc, op.x0.data() + g.offset);
  }
  for (auto& g : m.gfcs) {
    const Complex s_inj{pf.p_gen(g.node), pf.q_gen(g.node)};
    const GFCInit init = gfc_initialize(pf.v(g.node), s_inj, g.params);
    g.refs = init.refs;
    pack_gfc(init.state, op.x0.data() + g.offset);
  }

  if (spc) {
    const int nb = t.branch_count(), nn = t.node_count();
    const int off = m.network_offset;
    for (int b = 0; b < nb; ++b) {
      const auto& br = t.branches[b];
      const Complex i = (pf.v(br.from) - pf.v(br.to)) / Complex{br.r, br.l};
      op.x0(off + 2 * b) = i.real();
      op.x0(off + 2 * b + 1) = i.imag();
    }
    for (int i = 0; i < nn; ++i) {
      op.x0(off + 2 * (nb + i)) = pf.v(i).real();
      op.x0(off + 2 * (nb + i) + 1) = pf.v(i).imag();
    }
    const auto ind = t.inductive_loads();
    const int ol = off + 2 * (nb + nn);
    for (std::size_t k = 0; k < ind.size(); ++k) {
      const auto& ld = t.loads[static_cast<std::size_t>(ind[k])];
      const Complex i = pf.v(ld.node) / Complex{0.0, ld.l_l};
      op.x0(ol + 2 * static_cast<int>(k)) = i.real();
      op.x0(ol + 2 * static_cast<int>(k) + 1) = i.imag();
    }
  }

  // Damped Newton refinement of the full equilibrium. The closed-form
  // back-solve is exact up to the constant-power vs constant-impedance load
  // mismatch at the solved point, so this converges in a few steps. The
  // Jacobian has a zero singular value from the rotational symmetry of the
  // autonomous system; a complete orthogonal decomposition picks the
  // minimum-norm step.
  RealVector f = vector_field(m, op.x0, op.u0);
  double res = f.cwiseAbs().maxCoeff();
  for (int it = 0; it < 25 && res > 1e-11; ++it) {
    RealMatrix jac(m.n_states, m.n_states);
    RealVector xp = op.x0, fp(m.n_states), fm(m.n_states);
    for (int i = 0; i < m.n_states; ++i) {
      const double h = 1e-7 * std::max(1.0, std::abs(op.x0(i)));
      xp(i) = op.x0(i) + h;
      vector_field(m, xp, op.u0, fp);
      xp(i) = op.x0(i) - h;
      vector_field(m, xp, op.u0, fm);
      xp(i) = op.x0(i);
      jac.col(i) = (fp - fm) / (2.0 * h);
    }
    Eigen::CompleteOrthogonalDecomposition<RealMatrix> cod(jac);
    cod.setThreshold(1e-9);
    const RealVector step = cod.solve(-f);
    if (!step.allFinite()) break;
    double alpha = 1.0;
    RealVector x_try, f_try;
    bool accepted = false;
    for (int ls = 0; ls < 12 && !accepted; ++ls) {
      x_try = op.x0 + alpha * step;
      double r_try = std::numeric_limits<double>::infinity();
      try {
        f_try = vector_field(m, x_try, op.u0);
        if (f_try.allFinite()) r_try = f_try.cwiseAbs().maxCoeff();
      } catch (const NumericalError&) {
        // Step left the model's domain (e.g. collapsed dc link): shorten it.
      }
      if (r_try < res) {
        op.x0 = x_try;
        f = f_try;
        res = r_try;
        accepted = true;
      } else {
        alpha *= 0.5;
      }
    }
    if (!accepted) break;
  }
  op.residual = res;
  if (!(res < 1e-8)) {
    // Name the worst-offending equations in the diagnostic.
    std::vector<int> idx(static_cast<std::size_t>(m.n_states));
    for (int i = 0; i < m.n_states; ++i) idx[static_cast<std::size_t>(i)] = i;
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return std::abs(f(a)) > std::abs(f(b)); });
    std::string worst;
    for (int k = 0; k < std::min(5, m.n_states); ++k)
      worst += " " + m.state_labels[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])] +
               "=" + std::to_string(f(idx[static_cast<std::size_t>(k)]));
    throw NumericalError("initialize: equilibrium residual " + std::to_string(res) +
                         " exceeds 1e-8; worst equations:" + worst);
  }
  return op;
}

// ---------------------------------------------------------------------------
// Power audit
// ---------------------------------------------------------------------------

PowerAudit power_audit(const SystemModel& m, const RealVector& x, const RealVector& u) {
  if (m.framework != Framework::SPC)
    throw ValidationError("power_audit: only defined for the dynamic (SPC) network");
  const Topology& t = m.topology;
  const Evaluation ev = evaluate_network(m, x);
  RealVector dx = vector_field(m, x, u);
  const double ws = t.omega_s;
  const int nb = t.branch_count(), nn = t.node_count();
  const int off = m.network_offset;

  PowerAudit audit;
  for (int d = 0; d < t.device_count(); ++d)
    audit.injected += (ev.v_node(t.devices[static_cast<std::size_t>(d)].node) *
                       std::conj(ev.inj(d))).real();

  for (int b = 0; b < nb; ++b) {
    const auto& br = t.branches[b];
    const Complex i{x(off + 2 * b), x(off + 2 * b + 1)};
    const Complex di{dx(off + 2 * b), dx(off + 2 * b + 1)};
    audit.dissipated += br.r * std::norm(i);
    audit.stored_rate += (br.l / ws) * (std::conj(i) * di).real();
  }
  const auto cap = t.node_capacitance();
  for (int i = 0; i < nn; ++i) {
    const Complex v = ev.v_node(i);
    const Complex dv{dx(off + 2 * (nb + i)), dx(off + 2 * (nb + i) + 1)};
    audit.stored_rate += (cap[static_cast<std::size_t>(i)] / ws) * (std::conj(v) * dv).real();
  }
  for (const auto& ld : t.loads)
    if (std::isfinite(ld.r_l)) audit.dissipated += std::norm(ev.v_node(ld.node)) / ld.r_l;
  const auto ind = t.inductive_loads();
  const int ol = off + 2 * (nb + nn);
  for (std::size_t k = 0; k < ind.size(); ++k) {
    const auto& ld = t.loads[static_cast<std::size_t>(ind[k])];
    const Complex i{x(ol + 2 * static_cast<int>(k)), x(ol + 2 * static_cast<int>(k) + 1)};
    const Complex di{dx(ol + 2 * static_cast<int>(k)), dx(ol + 2 * static_cast<int>(k) + 1)};
    audit.stored_rate += (ld.l_l / ws) * (std::conj(i) * di).real();
  }
  return audit;
}

}  // namespace sso
