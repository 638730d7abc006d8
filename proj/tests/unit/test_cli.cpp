#include <doctest.h>

#include "support/generators.hpp"
#include "twin/adaption.hpp"
#include "twin/kgraph.hpp"
#include "twin/matcher.hpp"

using namespace twin;
using namespace twin::testing;

namespace {

std::string cli() { return TWIN_CLI_PATH; }

std::string quoted(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

std::string package(const std::string& name = "platform.aasx") { return " --source " + quoted(fixture(name)); }
std::string sequence() { return " --sequence " + quoted(fixture("sequence.json")); }

CommandResult run(const std::string& args) { return run_command(cli() + " " + args + " 2>/dev/null"); }

// Exit status plus the error object written to stderr.
std::pair<int, json> run_failing(const std::string& args) {
  const auto err = temp_dir("cli-err") / "stderr.txt";
  const auto r = run_command(cli() + " " + args + " 2>" + quoted(err));
  const auto text = read_file(err);
  return {r.status, json::parse(text.substr(0, text.find('\n')))};
}

}  // namespace

TEST_CASE("ingest report") {
  const auto r = run("ingest" + package());
  REQUIRE(r.status == 0);
  const auto j = json::parse(r.out);
  REQUIRE(j.at("shells").size() == 4);
  CHECK(j.at("failures").empty());
  CHECK(j.at("shells")[0].at("id") == "Platform");
  CHECK(j.at("shells")[0].at("assetKind") == "instance");
  CHECK(j.at("shells")[0].at("bomChildren") == json{"DAC", "Electrolysis", "Methanation"});
  CHECK(j.at("shells")[2].at("simulationModels") == json{"ELY-PEM-Surrogate"});
  CHECK(run("ingest --source " + quoted(fixture("platform"))).out == r.out);
}

TEST_CASE("graph, match and export agree with the library") {
  const auto graph = run("graph" + package() + sequence());
  REQUIRE(graph.status == 0);
  const auto shells = ingest::read_aasx_file(fixture("platform.aasx"));
  const auto seq = ingest::load_sequence(read_file(fixture("sequence.json")));
  const auto g = kg::build_graph(shells, ingest::build_hierarchy(shells, "Platform"), seq);
  CHECK(graph.out == kg::export_graph(g, kg::ExportFormat::json));

  const auto match = run("match" + package() + sequence());
  REQUIRE(match.status == 0);
  const auto [mg, report] = matcher::match_ports(g, seq, units::UnitRegistry::builtin());
  CHECK(json::parse(match.out) == matcher::to_json(report));

  const auto cypher = run("export" + package() + sequence());
  REQUIRE(cypher.status == 0);
  CHECK(cypher.out == kg::export_graph(g, kg::ExportFormat::statements));
}

TEST_CASE("select picks the cheaper surrogate on the alternative fixture") {
  const auto r = run("select" + package("platform_alt.aasx") + sequence());
  REQUIRE(r.status == 0);
  const auto c = adaption::configuration_from_json(json::parse(r.out));
  CHECK(c.selection.at("Electrolysis") == "ELY-PEM-Surrogate");
  CHECK(c.min_accuracy == 0.8);
  const auto excluded = run("select" + package("platform_alt.aasx") + sequence() + " --exclude ELY-PEM-Surrogate");
  REQUIRE(excluded.status == 0);
  CHECK(json::parse(excluded.out).at("selection").dump().find("ELY-PEM-Detailed") != std::string::npos);
}

TEST_CASE("simulate writes one decision per window") {
  const auto r = run("simulate" + package() + sequence() + " --scenario " + quoted(fixture("scenarios/drift.json")));
  REQUIRE(r.status == 0);
  std::vector<std::string> verdicts;
  std::size_t start = 0;
  for (auto end = r.out.find('\n'); end != std::string::npos; start = end + 1, end = r.out.find('\n', start)) {
    verdicts.push_back(json::parse(r.out.substr(start, end - start)).at("verdict"));
  }
  CHECK(verdicts == std::vector<std::string>{"keep", "reparameterize", "keep"});
}

TEST_CASE("stages compose through files") {
  const auto dir = temp_dir("cli-compose");
  const auto scen = " --scenario " + quoted(fixture("scenarios/jump.json"));
  REQUIRE(run("graph" + package("platform_alt.aasx") + sequence() + " --out-dir " + quoted(dir / "g")).status == 0);
  REQUIRE(run("match --graph " + quoted(dir / "g/graph.json") + " --out-dir " + quoted(dir / "m")).status == 0);
  const auto via_files = run("simulate --graph " + quoted(dir / "m/graph.matched.json") + scen);
  const auto direct = run("simulate" + package("platform_alt.aasx") + sequence() + scen);
  REQUIRE(direct.status == 0);
  CHECK(via_files.status == 0);
  CHECK(via_files.out == direct.out);
  CHECK(run("select --graph " + quoted(dir / "m/graph.matched.json")).out ==
        run("select" + package("platform_alt.aasx") + sequence()).out);
  CHECK(run("export --format json --graph " + quoted(dir / "g/graph.json")).out == read_file(dir / "g/graph.json"));

  REQUIRE(run("simulate --graph " + quoted(dir / "m/graph.matched.json") + scen + " --out-dir " + quoted(dir / "s"))
              .status == 0);
  CHECK(read_file(dir / "s/decisions.ndjson") == direct.out);
  const auto adapted = kg::import_graph(read_file(dir / "s/graph.adapted.json"));
  CHECK(adapted.node("model:ELY-PEM-Surrogate")->properties.contains("lastDeviation"));
}

TEST_CASE("server source through the environment") {
  // An unreachable endpoint is a transport error, not a usage error.
  const auto [status, err] = run_failing("ingest --source http://127.0.0.1:9");
  CHECK(status == 1);
  CHECK(err.at("code") == "TransportError");
}

TEST_CASE("domain errors exit 1 with a JSON error") {
  auto [status, err] = run_failing("ingest --source " + quoted(fixture("empty_manifest.aasx")));
  CHECK(status == 1);
  CHECK(err == json{{"code", "ArchiveError"}, {"message", "empty manifest"}, {"path", "aasx/manifest.json"}});

  const auto dir = temp_dir("cli-seq");
  write_file(dir / "seq.json", R"({"systemId":"PtX-1","steps":["DAC","Compressor"]})");
  std::tie(status, err) = run_failing("graph" + package() + " --sequence " + quoted(dir / "seq.json"));
  CHECK(status == 1);
  CHECK(err.at("code") == "ConsistencyError");

  std::tie(status, err) = run_failing("select" + package() + sequence() + " --max-time 0.5");
  CHECK(status == 1);
  CHECK(err.at("code") == "Infeasible");

  std::tie(status, err) = run_failing("select --graph " + quoted(dir / "nothing.json"));
  CHECK(status == 1);
  CHECK(err.at("code") == "IoError");
}

TEST_CASE("usage errors exit 2") {
  for (const auto* args : {"", "frobnicate", "simulate --source x.aasx", "select --max-time abc",
                           "select --source x --level Strategic", "export --format dot --graph x"}) {
    CAPTURE(args);
    const auto [status, err] = run_failing(args);
    CHECK(status == 2);
    CHECK(err.at("code") == "UsageError");
  }
  const auto [status, err] = run_failing("graph" + package());
  CHECK(status == 2);
  CHECK(err.at("code") == "UsageError");
}
