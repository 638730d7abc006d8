#include <doctest.h>

#include <functional>

#include "support/generators.hpp"
#include "twin/error.hpp"
#include "twin/matcher.hpp"
#include "twin/scenario.hpp"

using namespace twin;
using namespace twin::testing;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::io;
}

kg::KnowledgeGraph matched(const std::string& package) {
  const auto shells = ingest::read_aasx_file(fixture(package));
  const auto seq = ingest::load_sequence(read_file(fixture("sequence.json")));
  const auto g = kg::build_graph(shells, ingest::build_hierarchy(shells, ingest::infer_root(shells)), seq);
  return matcher::match_ports(g, seq, units::UnitRegistry::builtin()).first;
}

scenario::Scenario load(const std::string& name) {
  return scenario::parse_scenario(read_file(fixture("scenarios/" + name + ".json")));
}

scenario::LoopOptions defaults() {
  scenario::LoopOptions o;
  o.budget.max_computing_time = 60.0;
  return o;
}

std::vector<adaption::Verdict> verdicts(const scenario::LoopResult& r) {
  std::vector<adaption::Verdict> v;
  for (const auto& rec : r.records) v.push_back(rec.decision.verdict);
  return v;
}

}  // namespace

TEST_CASE("scenario parsing") {
  const auto s = load("jump");
  CHECK(s.system_id == "PtX-1");
  CHECK(s.level == DecisionLevel::control);
  CHECK(s.duration == 180.0);
  CHECK(s.window == 60.0);
  CHECK(s.exogenous.at("Electrolysis.power").size() == 7);
  REQUIRE(s.truth.at("Electrolysis").size() == 2);
  CHECK(s.truth.at("Electrolysis")[1].from == 60.0);
  CHECK(s.truth.at("Electrolysis")[1].a == std::vector<std::vector<double>>{{3.0}, {24.0}});
  CHECK(code_of([] { scenario::parse_scenario("{"); }) == ErrorCode::syntax);
  CHECK(code_of([] { scenario::parse_scenario(R"({"systemId":"S"})"); }) == ErrorCode::schema);
}

TEST_CASE("gain drift is refitted once, then kept") {
  const auto r = scenario::run_closed_loop(matched("platform.aasx"), load("drift"), defaults());
  REQUIRE(r.records.size() == 3);
  CHECK(verdicts(r) == std::vector<adaption::Verdict>{adaption::Verdict::keep, adaption::Verdict::reparameterize,
                                                      adaption::Verdict::keep});
  CHECK(r.records[0].deviation.aggregate == 0.0);
  // |2.0 - 2.5| / 2.5 on every sample.
  CHECK(r.records[1].deviation.aggregate == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(r.records[1].decision.offending_model == "ELY-PEM-Surrogate");
  const auto& fit = *r.records[1].decision.new_parameters;
  CHECK(std::abs(fit.a[0][0] - 2.5) <= 1e-9 * 2.5);
  CHECK(std::abs(fit.a[1][0] - 16.0) <= 1e-9 * 16.0);
  CHECK(r.records[2].deviation.aggregate <= 1e-9);
  CHECK(kg::model_descriptor(r.graph, "ELY-PEM-Surrogate").surrogate->a[0][0] == doctest::Approx(2.5));
  CHECK(r.graph.node("model:ELY-PEM-Surrogate")->properties.at("evaluationCount") == 3);
  CHECK(r.final_configuration == r.initial);
}

TEST_CASE("gain jump triggers reselection of the detailed model") {
  const auto r = scenario::run_closed_loop(matched("platform_alt.aasx"), load("jump"), defaults());
  REQUIRE(r.records.size() == 3);
  CHECK(verdicts(r) == std::vector<adaption::Verdict>{adaption::Verdict::keep, adaption::Verdict::reselect,
                                                      adaption::Verdict::keep});
  CHECK(r.records[1].deviation.aggregate == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(r.records[1].decision.offending_model == "ELY-PEM-Surrogate");
  CHECK(r.initial.selection.at("Electrolysis") == "ELY-PEM-Surrogate");
  CHECK(r.final_configuration.selection.at("Electrolysis") == "ELY-PEM-Detailed");
  CHECK(r.records[2].selection[1] == "ELY-PEM-Detailed");
  CHECK(r.records[2].deviation.aggregate <= 1e-9);
}

TEST_CASE("drift below epsilon is kept") {
  const auto r = scenario::run_closed_loop(matched("platform.aasx"), load("drift_small"), defaults());
  REQUIRE(r.records.size() == 3);
  for (const auto& rec : r.records) {
    CHECK(rec.decision.verdict == adaption::Verdict::keep);
    // 0.04 / 2.04.
    CHECK(rec.deviation.aggregate == doctest::Approx(0.0196078431372549).epsilon(1e-12));
  }
}

TEST_CASE("decision log is deterministic and one object per window") {
  const auto a = scenario::to_ndjson(scenario::run_closed_loop(matched("platform.aasx"), load("drift"), defaults()).records);
  const auto b = scenario::to_ndjson(scenario::run_closed_loop(matched("platform.aasx"), load("drift"), defaults()).records);
  CHECK(a == b);
  std::size_t lines = 0;
  std::size_t pos = 0;
  while ((pos = a.find('\n', pos)) != std::string::npos) {
    ++lines;
    ++pos;
  }
  CHECK(lines == 3);
  const auto first = json::parse(a.substr(0, a.find('\n')));
  for (const auto* key : {"window", "tStart", "tEnd", "selection", "perSignal", "aggregate", "verdict", "rationale",
                          "offendingModel"}) {
    CHECK(first.contains(key));
  }
}

TEST_CASE("window override and loop errors") {
  auto options = defaults();
  options.window = 30.0;
  const auto r = scenario::run_closed_loop(matched("platform.aasx"), load("drift_small"), options);
  CHECK(r.records.size() == 6);

  auto other = load("drift");
  other.system_id = "Elsewhere";
  CHECK(code_of([&] { scenario::run_closed_loop(matched("platform.aasx"), other, defaults()); }) ==
        ErrorCode::consistency);
  auto no_power = load("drift");
  no_power.exogenous.erase("Electrolysis.power");
  CHECK(code_of([&] { scenario::run_closed_loop(matched("platform.aasx"), no_power, defaults()); }) ==
        ErrorCode::missing_input);
}
