#include "sso/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace sso {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError("config: " + path + ": " + msg);
}

class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  ~Section() = default;

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(path_ + "." + it.key(), "unknown key");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, std::optional<double> def = {}) {
    seen_.insert(key);
    if (!j_.contains(key)) {
      if (def) return *def;
      fail(path_ + "." + key, "missing required number");
    }
    const json& v = j_.at(key);
    if (!v.is_number()) fail(path_ + "." + key, "expected a number");
    return v.get<double>();
  }

  int integer(const std::string& key, std::optional<int> def = {}) {
    seen_.insert(key);
    if (!j_.contains(key)) {
      if (def) return *def;
      fail(path_ + "." + key, "missing required integer");
    }
    const json& v = j_.at(key);
    if (!v.is_number_integer()) fail(path_ + "." + key, "expected an integer");
    return v.get<int>();
  }

  std::string text(const std::string& key, std::optional<std::string> def = {}) {
    seen_.insert(key);
    if (!j_.contains(key)) {
      if (def) return *def;
      fail(path_ + "." + key, "missing required string");
    }
    const json& v = j_.at(key);
    if (!v.is_string()) fail(path_ + "." + key, "expected a string");
    return v.get<std::string>();
  }

  std::vector<std::string> text_list(const std::string& key, bool required = false) {
    seen_.insert(key);
    if (!j_.contains(key)) {
      if (required) fail(path_ + "." + key, "missing required array");
      return {};
    }
    const json& v = j_.at(key);
    if (!v.is_array()) fail(path_ + "." + key, "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string())
        fail(path_ + "." + key + "[" + std::to_string(i) + "]", "expected a string");
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }

  const json* array(const std::string& key, bool required = false) {
    seen_.insert(key);
    if (!j_.contains(key)) {
      if (required) fail(path_ + "." + key, "missing required array");
      return nullptr;
    }
    const json& v = j_.at(key);
    if (!v.is_array()) fail(path_ + "." + key, "expected an array");
    return &v;
  }

  const json* object(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) return nullptr;
    const json& v = j_.at(key);
    if (!v.is_object()) fail(path_ + "." + key, "expected an object");
    return &v;
  }

  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

DispatchDef parse_dispatch(const json& j, const std::string& path) {
  Section s(j, path);
  DispatchDef d;
  const std::string type = s.text("type");
  if (type == "slack") d.type = BusType::Slack;
  else if (type == "pv") d.type = BusType::PV;
  else fail(path + ".type", "expected 'slack' or 'pv'");
  d.p = s.number("p", 0.0);
  d.v = s.number("v", 1.0);
  s.finish();
  return d;
}

SGParams parse_sg_params(const json& j, const std::string& path, double omega_s) {
  Section s(j, path);
  SGParams p;
  p.rs = s.number("rs");
  p.rg = s.number("rg", 0.0);
  p.lg = s.number("lg", 0.0);
  p.ld = s.number("ld");
  p.lq = s.number("lq");
  p.ldp = s.number("ldp");
  p.lqp = s.number("lqp");
  p.ldpp = s.number("ldpp");
  p.lqpp = s.number("lqpp");
  p.lls = s.number("lls");
  p.td0p = s.number("td0p");
  p.tq0p = s.number("tq0p");
  p.td0pp = s.number("td0pp");
  p.tq0pp = s.number("tq0pp");
  p.h = s.number("h");
  p.d = s.number("d", 0.0);
  p.ka = s.number("ka", 200.0);
  p.ta = s.number("ta", 0.01);
  p.efd_min = s.number("efd_min", -8.0);
  p.efd_max = s.number("efd_max", 8.0);
  p.r_gov = s.number("r_gov", 0.05);
  p.t_gov = s.number("t_gov", 0.2);
  p.t_t = s.number("t_t", 0.5);
  p.omega_s = omega_s;
  s.finish();
  return p;
}

GFCParams parse_gfc_params(const json& j, const std::string& path, double omega_s) {
  Section s(j, path);
  GFCParams p;
  p.tau_c = s.number("tau_c", p.tau_c);
  p.g_c = s.number("g_c", p.g_c);
  p.c_c = s.number("c_c", p.c_c);
  p.k_dc = s.number("k_dc", p.k_dc);
  p.v_dc_ref = s.number("v_dc_ref", p.v_dc_ref);
  p.r = s.number("r", p.r);
  p.l = s.number("l", p.l);
  p.c = s.number("c", p.c);
  p.r_on = s.number("r_on", p.r_on);
  p.r_t = s.number("r_t", p.r_t);
  p.l_t = s.number("l_t", p.l_t);
  p.m_p = s.number("m_p", p.m_p);
  p.omega_f = s.number("omega_f", p.omega_f);
  p.kp_ac = s.number("kp_ac", p.kp_ac);
  p.ki_ac = s.number("ki_ac", p.ki_ac);
  p.kp_al = s.number("kp_al", p.kp_al);
  p.ki_al = s.number("ki_al", p.ki_al);
  p.omega_al = s.number("omega_al", p.omega_al);
  p.kp_v = s.number("kp_v", p.kp_v);
  p.ki_v = s.number("ki_v", p.ki_v);
  p.kp_i = s.number("kp_i", p.kp_i);
  p.ki_i = s.number("ki_i", p.ki_i);
  p.omega_s = omega_s;
  s.finish();
  return p;
}

}  // namespace

CaseDefinition parse_case(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: malformed document: ") + e.what());
  }

  Section top(root, "$");
  CaseDefinition d;
  d.name = top.text("name");
  d.f_hz = top.number("f_hz", 60.0);
  d.s_base_mva = top.number("s_base_mva", 100.0);
  const std::string fw = top.text("framework", "spc");
  if (fw == "spc") d.default_framework = Framework::SPC;
  else if (fw == "qpc") d.default_framework = Framework::QPC;
  else fail("$.framework", "expected 'spc' or 'qpc'");
  const double ws = d.omega_s();

  if (const json* a = top.array("buses", true)) {
    for (std::size_t i = 0; i < a->size(); ++i) {
      Section s((*a)[i], "$.buses[" + std::to_string(i) + "]");
      BusDef b;
      b.name = s.text("name");
      b.v_base_kv = s.number("v_base_kv", 230.0);
      s.finish();
      d.buses.push_back(b);
    }
  }
  if (const json* a = top.array("branches", true)) {
    for (std::size_t i = 0; i < a->size(); ++i) {
      Section s((*a)[i], "$.branches[" + std::to_string(i) + "]");
      BranchDef b;
      b.name = s.text("name");
      b.from = s.text("from");
      b.to = s.text("to");
      b.r = s.number("r");
      b.l = s.number("l");
      b.c = s.number("c", 0.0);
      s.finish();
      d.branches.push_back(b);
    }
  }
  if (const json* a = top.array("loads")) {
    for (std::size_t i = 0; i < a->size(); ++i) {
      Section s((*a)[i], "$.loads[" + std::to_string(i) + "]");
      LoadDef l;
      l.name = s.text("name");
      l.bus = s.text("bus");
      l.p = s.number("p", 0.0);
      l.q = s.number("q", 0.0);
      l.c_shunt = s.number("c_shunt", 0.0);
      s.finish();
      d.loads.push_back(l);
    }
  }
  if (const json* a = top.array("sgs")) {
    for (std::size_t i = 0; i < a->size(); ++i) {
      const std::string path = "$.sgs[" + std::to_string(i) + "]";
      Section s((*a)[i], path);
      SgDef g;
      g.name = s.text("name");
      g.bus = s.text("bus");
      const json* params = s.object("params");
      if (!params) fail(path + ".params", "missing required object");
      g.params = parse_sg_params(*params, path + ".params", ws);
      const json* disp = s.object("dispatch");
      if (!disp) fail(path + ".dispatch", "missing required object");
      g.dispatch = parse_dispatch(*disp, path + ".dispatch");
      s.finish();
      d.sgs.push_back(g);
    }
  }
  if (const json* a = top.array("gfcs")) {
    for (std::size_t i = 0; i < a->size(); ++i) {
      const std::string path = "$.gfcs[" + std::to_string(i) + "]";
      Section s((*a)[i], path);
      GfcDef g;
      g.name = s.text("name");
      g.bus = s.text("bus");
      if (const json* params = s.object("params"))
        g.params = parse_gfc_params(*params, path + ".params", ws);
      else
        g.params.omega_s = ws;
      const json* disp = s.object("dispatch");
      if (!disp) fail(path + ".dispatch", "missing required object");
      g.dispatch = parse_dispatch(*disp, path + ".dispatch");
      s.finish();
      d.gfcs.push_back(g);
    }
  }
  if (const json* o = top.object("tie")) {
    Section s(*o, "$.tie");
    TieDef tie;
    tie.branches = s.text_list("branches", true);
    tie.target = s.number("target");
    tie.adjust_device = s.text("adjust_device");
    s.finish();
    d.tie = tie;
  }
  d.inputs = top.text_list("inputs");
  d.outputs = top.text_list("outputs");

  if (const json* o = top.object("simulation")) {
    Section s(*o, "$.simulation");
    d.sim.t_end = s.number("t_end", d.sim.t_end);
    d.sim.dt_spc = s.number("dt_spc", d.sim.dt_spc);
    d.sim.dt_qpc = s.number("dt_qpc", d.sim.dt_qpc);
    d.sim.method = s.text("method", d.sim.method);
    d.sim.record = s.text_list("record");
    d.sim.decimation = s.integer("decimation", d.sim.decimation);
    if (const json* dist = s.object("disturbance")) {
      Section ds(*dist, "$.simulation.disturbance");
      d.sim.disturbance.targets = ds.text_list("targets");
      d.sim.disturbance.waveform = ds.text("waveform", "none");
      d.sim.disturbance.magnitude = ds.number("magnitude", 0.0);
      d.sim.disturbance.start = ds.number("start", 0.0);
      d.sim.disturbance.duration = ds.number("duration", 0.0);
      ds.finish();
    }
    s.finish();
  }
  if (const json* o = top.object("analysis")) {
    Section s(*o, "$.analysis");
    d.analysis.f_min = s.number("f_min", d.analysis.f_min);
    d.analysis.f_max = s.number("f_max", d.analysis.f_max);
    d.analysis.n_points = s.integer("n_points", d.analysis.n_points);
    d.analysis.prony_order = s.integer("prony_order", d.analysis.prony_order);
    d.analysis.prony_window_begin = s.number("prony_window_begin", d.analysis.prony_window_begin);
    d.analysis.prony_window_end = s.number("prony_window_end", d.analysis.prony_window_end);
    s.finish();
  }
  top.finish();

  try {
    d.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return d;
}

CaseDefinition load_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_case(ss.str());
}

std::string dump_case(const CaseDefinition& d) {
  json root;
  root["name"] = d.name;
  root["f_hz"] = d.f_hz;
  root["s_base_mva"] = d.s_base_mva;
  root["framework"] = framework_name(d.default_framework);
  root["buses"] = json::array();
  for (const auto& b : d.buses)
    root["buses"].push_back({{"name", b.name}, {"v_base_kv", b.v_base_kv}});
  root["branches"] = json::array();
  for (const auto& b : d.branches)
    root["branches"].push_back({{"name", b.name},
                                {"from", b.from},
                                {"to", b.to},
                                {"r", b.r},
                                {"l", b.l},
                                {"c", b.c}});
  root["loads"] = json::array();
  for (const auto& l : d.loads)
    root["loads"].push_back(
        {{"name", l.name}, {"bus", l.bus}, {"p", l.p}, {"q", l.q}, {"c_shunt", l.c_shunt}});

  auto dump_dispatch = [](const DispatchDef& disp) {
    return json{{"type", disp.type == BusType::Slack ? "slack" : "pv"},
                {"p", disp.p},
                {"v", disp.v}};
  };
  root["sgs"] = json::array();
  for (const auto& g : d.sgs) {
    const SGParams& p = g.params;
    json params{{"rs", p.rs},         {"rg", p.rg},           {"lg", p.lg},
                {"ld", p.ld},         {"lq", p.lq},           {"ldp", p.ldp},
                {"lqp", p.lqp},       {"ldpp", p.ldpp},       {"lqpp", p.lqpp},
                {"lls", p.lls},       {"td0p", p.td0p},       {"tq0p", p.tq0p},
                {"td0pp", p.td0pp},   {"tq0pp", p.tq0pp},     {"h", p.h},
                {"d", p.d},           {"ka", p.ka},           {"ta", p.ta},
                {"efd_min", p.efd_min}, {"efd_max", p.efd_max}, {"r_gov", p.r_gov},
                {"t_gov", p.t_gov},   {"t_t", p.t_t}};
    root["sgs"].push_back(
        {{"name", g.name}, {"bus", g.bus}, {"params", params}, {"dispatch", dump_dispatch(g.dispatch)}});
  }
  root["gfcs"] = json::array();
  for (const auto& g : d.gfcs) {
    const GFCParams& p = g.params;
    json params{{"tau_c", p.tau_c}, {"g_c", p.g_c},     {"c_c", p.c_c},
                {"k_dc", p.k_dc},   {"v_dc_ref", p.v_dc_ref}, {"r", p.r},
                {"l", p.l},         {"c", p.c},         {"r_on", p.r_on},
                {"r_t", p.r_t},     {"l_t", p.l_t},     {"m_p", p.m_p},
                {"omega_f", p.omega_f}, {"kp_ac", p.kp_ac}, {"ki_ac", p.ki_ac},
                {"kp_al", p.kp_al},     {"ki_al", p.ki_al},
                {"omega_al", p.omega_al},
                {"kp_v", p.kp_v},   {"ki_v", p.ki_v},   {"kp_i", p.kp_i},
                {"ki_i", p.ki_i}};
    root["gfcs"].push_back(
        {{"name", g.name}, {"bus", g.bus}, {"params", params}, {"dispatch", dump_dispatch(g.dispatch)}});
  }
  if (d.tie)
    root["tie"] = {{"branches", d.tie->branches},
                   {"target", d.tie->target},
                   {"adjust_device", d.tie->adjust_device}};
  root["inputs"] = d.inputs;
  root["outputs"] = d.outputs;
  root["simulation"] = {{"t_end", d.sim.t_end},
                        {"dt_spc", d.sim.dt_spc},
                        {"dt_qpc", d.sim.dt_qpc},
                        {"method", d.sim.method},
                        {"record", d.sim.record},
                        {"decimation", d.sim.decimation},
                        {"disturbance",
                         {{"targets", d.sim.disturbance.targets},
                          {"waveform", d.sim.disturbance.waveform},
                          {"magnitude", d.sim.disturbance.magnitude},
                          {"start", d.sim.disturbance.start},
                          {"duration", d.sim.disturbance.duration}}}};
  root["analysis"] = {{"f_min", d.analysis.f_min},
                      {"f_max", d.analysis.f_max},
                      {"n_points", d.analysis.n_points},
                      {"prony_order", d.analysis.prony_order},
                      {"prony_window_begin", d.analysis.prony_window_begin},
                      {"prony_window_end", d.analysis.prony_window_end}};
  return root.dump(2) + "\n";
}

std::string config_hash(const CaseDefinition& def) {
  const std::string text = dump_case(def);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

}  // namespace sso
