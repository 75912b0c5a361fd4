#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "sso/config.hpp"

using namespace sso;

namespace {

std::string config_path(const char* name) {
  return std::string(SSO_CONFIG_DIR) + "/" + name;
}

std::string minimal_doc() {
  return R"({
    "name": "tiny",
    "buses": [{"name": "b1"}, {"name": "b2"}],
    "branches": [{"name": "ln", "from": "b1", "to": "b2",
                  "r": 0.0025, "l": 0.025, "c": 0.04375}],
    "loads": [{"name": "ld", "bus": "b2", "p": 0.5, "q": 0.1}],
    "gfcs": [{"name": "gfc1", "bus": "b1",
              "dispatch": {"type": "slack", "v": 1.0}}],
    "inputs": ["gfc1"]
  })";
}

}  // namespace

TEST_CASE("both shipped cases load and validate") {
  const CaseDefinition c1 = load_case(config_path("case1.json"));
  CHECK(c1.name == "case1");
  CHECK(c1.f_hz == 60.0);
  CHECK(c1.buses.size() == 7);
  CHECK(c1.branches.size() == 8);
  CHECK(c1.sgs.size() == 1);
  CHECK(c1.gfcs.size() == 3);
  REQUIRE(c1.tie.has_value());
  CHECK(c1.tie->target == 4.0);
  CHECK(c1.tie->branches.size() == 2);
  CHECK(c1.inputs.size() == 3);
  CHECK(c1.sim.dt_spc == 2e-5);

  const CaseDefinition c2 = load_case(config_path("case2.json"));
  CHECK(c2.sgs.empty());
  CHECK(c2.gfcs.size() == 4);
}

TEST_CASE("a minimal document fills the documented defaults") {
  const CaseDefinition def = parse_case(minimal_doc());
  CHECK(def.f_hz == 60.0);
  CHECK(def.s_base_mva == 100.0);
  CHECK(def.default_framework == Framework::SPC);
  CHECK(def.buses[0].v_base_kv == 230.0);
  CHECK(def.sim.t_end == 1.0);
  CHECK(def.sim.method == "rk4");
  CHECK(def.analysis.n_points == 400);
  CHECK(!def.tie.has_value());
  CHECK(def.outputs.empty());
}

TEST_CASE("dump and reparse are semantically lossless") {
  for (const char* name : {"case1.json", "case2.json"}) {
    CAPTURE(name);
    const CaseDefinition a = load_case(config_path(name));
    const CaseDefinition b = parse_case(dump_case(a));
    CHECK(dump_case(a) == dump_case(b));
    CHECK(config_hash(a) == config_hash(b));
    CHECK(a.gfcs.size() == b.gfcs.size());
    for (std::size_t i = 0; i < a.gfcs.size(); ++i) {
      CHECK(a.gfcs[i].params.kp_al == b.gfcs[i].params.kp_al);
      CHECK(a.gfcs[i].params.ki_al == b.gfcs[i].params.ki_al);
      CHECK(a.gfcs[i].dispatch.p == b.gfcs[i].dispatch.p);
    }
    if (!a.sgs.empty()) {
      CHECK(a.sgs[0].params.h == b.sgs[0].params.h);
      CHECK(a.sgs[0].params.td0p == b.sgs[0].params.td0p);
    }
    CHECK(a.sim.disturbance.magnitude == b.sim.disturbance.magnitude);
    CHECK(a.analysis.prony_window_end == b.analysis.prony_window_end);
  }
}

TEST_CASE("distinct configurations hash differently") {
  const CaseDefinition a = load_case(config_path("case1.json"));
  CaseDefinition b = a;
  b.gfcs[0].params.kp_al += 1.0;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("unknown keys are rejected with their field path") {
  std::string doc = minimal_doc();
  doc.insert(doc.rfind('}'), R"(, "typo_key": 1)");
  try {
    parse_case(doc);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find("typo_key") != std::string::npos);
    CHECK(what.find("unknown key") != std::string::npos);
  }
}

TEST_CASE("unknown nested keys report the full path") {
  std::string doc = minimal_doc();
  const auto pos = doc.find(R"("r": 0.0025)");
  REQUIRE(pos != std::string::npos);
  doc.insert(pos, R"("resistance": 1, )");
  try {
    parse_case(doc);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find("branches") != std::string::npos);
    CHECK(what.find("resistance") != std::string::npos);
  }
}

TEST_CASE("missing required fields are reported") {
  std::string doc = minimal_doc();
  const auto pos = doc.find(R"("r": 0.0025, )");
  REQUIRE(pos != std::string::npos);
  doc.erase(pos, std::string(R"("r": 0.0025, )").size());
  try {
    parse_case(doc);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find(".r") != std::string::npos);
    CHECK(what.find("missing") != std::string::npos);
  }
}

TEST_CASE("malformed JSON is reported as such") {
  CHECK_THROWS_AS(parse_case("{ not json"), ConfigError);
}

TEST_CASE("a missing file is reported by path") {
  try {
    load_case("/nonexistent/nowhere.json");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("nowhere.json") != std::string::npos);
  }
}

TEST_CASE("physical invariants of referenced modules are re-checked") {
  std::string doc = minimal_doc();
  const auto pos = doc.find(R"("l": 0.025)");
  REQUIRE(pos != std::string::npos);
  doc.replace(pos, std::string(R"("l": 0.025)").size(), R"("l": -0.025)");
  CHECK_THROWS(parse_case(doc));
}

TEST_CASE("unknown device references in inputs are rejected") {
  std::string doc = minimal_doc();
  const auto pos = doc.find(R"(["gfc1"])");
  REQUIRE(pos != std::string::npos);
  doc.replace(pos, std::string(R"(["gfc1"])").size(), R"(["gfc9"])");
  CHECK_THROWS(parse_case(doc));
}
