// ptx-twin: command-line pipeline from shells to an adapting twin.
//
//   ingest    parsed-shell report
//   graph     canonical knowledge graph (JSON)
//   match     matched graph + match report
//   select    model configuration
//   simulate  closed-loop adaption log (NDJSON)
//   export    graph as a Cypher statement script
//
// Exit codes: 0 success, 1 domain error, 2 usage error. Errors go to stderr
// as one JSON object {code, message, path?}.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "twin/adaption.hpp"
#include "twin/descriptor.hpp"
#include "twin/error.hpp"
#include "twin/ingest.hpp"
#include "twin/kgraph.hpp"
#include "twin/matcher.hpp"
#include "twin/scenario.hpp"
#include "twin/units.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace twin;

namespace {

struct Options {
  std::string source;
  std::string graph_path;
  std::string sequence_path;
  std::string root;
  std::string units_path;
  std::string range_mode = "subset";
  std::string level = "Control";
  double max_time = 60.0;
  double min_accuracy = 0.0;
  std::vector<std::string> exclude;
  std::string scenario_path;
  double epsilon = 0.05;
  double escalation = 4.0;
  std::optional<double> window;
  std::string format = "statements";
  std::string out_dir;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read file", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const Options& o, const std::string& name, const std::string& content, bool primary) {
  if (o.out_dir.empty()) {
    if (primary) std::cout << content;
    return;
  }
  std::error_code ec;
  fs::create_directories(o.out_dir, ec);
  const auto path = fs::path(o.out_dir) / name;
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw Error(ErrorCode::io, "cannot write file", path.string());
}

bool is_url(const std::string& s) { return s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0; }

std::string source_of(const Options& o) {
  if (!o.source.empty()) return o.source;
  if (const char* env = std::getenv("TWIN_AAS_ENDPOINT"); env != nullptr && *env != '\0') return env;
  throw Error(ErrorCode::usage, "no source: pass --source or set TWIN_AAS_ENDPOINT");
}

ingest::FetchResult load_source(const std::string& source) {
  if (is_url(source)) return ingest::fetch_shells(source);
  if (fs::is_directory(source)) return {ingest::read_directory(source), {}};
  return {ingest::read_aasx_file(source), {}};
}

std::vector<aas::AdministrationShell> load_shells(const Options& o) {
  auto r = load_source(source_of(o));
  if (!r.failures.empty()) {
    const auto& f = r.failures.front();
    throw Error(f.error.code(), "shell '" + f.shell_id + "': " + f.error.what(), f.error.path());
  }
  return std::move(r.shells);
}

ingest::ProductionSequence load_sequence(const Options& o) {
  if (o.sequence_path.empty()) throw Error(ErrorCode::usage, "--sequence is required with --source");
  return ingest::load_sequence(read_text(o.sequence_path));
}

kg::KnowledgeGraph build_from_source(const Options& o) {
  const auto shells = load_shells(o);
  const auto seq = load_sequence(o);
  ingest::check_unique_ids(shells);
  const auto root = o.root.empty() ? ingest::infer_root(shells) : o.root;
  const auto tree = ingest::build_hierarchy(shells, root);
  auto g = kg::build_graph(shells, tree, seq);
  g.validate();
  return g;
}

units::UnitRegistry registry_of(const Options& o) {
  auto r = units::UnitRegistry::builtin();
  if (!o.units_path.empty()) r.merge_json(read_text(o.units_path));
  return r;
}

matcher::RangeMode range_mode_of(const Options& o) {
  auto m = matcher::range_mode_from(o.range_mode);
  if (!m) throw Error(ErrorCode::usage, "--range-mode must be subset or overlap", o.range_mode);
  return *m;
}

// A graph artifact is taken as is; a source is built and matched.
kg::KnowledgeGraph matched_graph(const Options& o) {
  if (!o.graph_path.empty()) {
    auto g = kg::import_graph(read_text(o.graph_path));
    if (!o.sequence_path.empty() && ingest::load_sequence(read_text(o.sequence_path)) != kg::recorded_sequence(g)) {
      throw Error(ErrorCode::consistency, "--sequence differs from the sequence recorded in the graph",
                  o.sequence_path);
    }
    return g;
  }
  auto g = build_from_source(o);
  const auto seq = kg::recorded_sequence(g);
  return matcher::match_ports(g, seq, registry_of(o), range_mode_of(o)).first;
}

adaption::Budget budget_of(const Options& o) { return {o.max_time, o.min_accuracy}; }

DecisionLevel level_of(const Options& o) {
  auto l = decision_level_from(o.level);
  if (!l) throw Error(ErrorCode::usage, "--level must be Control, Scheduling or Planning", o.level);
  return *l;
}

adaption::SelectionOptions selection_of(const Options& o) {
  return {std::set<std::string>(o.exclude.begin(), o.exclude.end()), {}};
}

void cmd_ingest(const Options& o) {
  const auto r = load_source(source_of(o));
  json shells = json::array();
  for (const auto& s : r.shells) {
    json submodels = json::array();
    for (const auto& sm : s.submodels) submodels.push_back(json{{"idShort", sm.id_short}, {"kind", sm.kind.name}});
    json models = json::array();
    for (const auto& d : extract_simulation_descriptors(s)) models.push_back(d.model_id);
    shells.push_back(json{{"id", s.id},
                          {"idShort", s.id_short},
                          {"assetKind", s.asset_kind == aas::AssetKind::instance ? "instance" : "type"},
                          {"submodels", submodels},
                          {"simulationModels", models},
                          {"bomChildren", extract_bom(s)}});
  }
  json failures = json::array();
  for (const auto& f : r.failures) failures.push_back(json{{"shellId", f.shell_id}, {"error", f.error.to_json()}});
  emit(o, "ingest.json", json{{"shells", shells}, {"failures", failures}}.dump(2) + "\n", true);
}

void cmd_graph(const Options& o) {
  emit(o, "graph.json", kg::export_graph(build_from_source(o), kg::ExportFormat::json), true);
}

void cmd_match(const Options& o) {
  kg::KnowledgeGraph g;
  if (!o.graph_path.empty()) {
    g = kg::import_graph(read_text(o.graph_path));
  } else {
    g = build_from_source(o);
  }
  const auto seq = o.sequence_path.empty() ? kg::recorded_sequence(g) : load_sequence(o);
  const auto [matched, report] = matcher::match_ports(g, seq, registry_of(o), range_mode_of(o));
  emit(o, "match_report.json", matcher::to_json(report).dump(2) + "\n", true);
  emit(o, "graph.matched.json", kg::export_graph(matched, kg::ExportFormat::json), false);
}

void cmd_select(const Options& o) {
  const auto g = matched_graph(o);
  const auto c = adaption::select_configuration(g, level_of(o), budget_of(o), selection_of(o));
  emit(o, "configuration.json", adaption::to_json(c).dump(2) + "\n", true);
}

void cmd_simulate(const Options& o) {
  if (o.scenario_path.empty()) throw Error(ErrorCode::usage, "--scenario is required");
  const auto sc = scenario::parse_scenario(read_text(o.scenario_path));
  scenario::LoopOptions lo;
  lo.thresholds = {o.epsilon, o.escalation};
  lo.budget = budget_of(o);
  lo.selection = selection_of(o);
  lo.window = o.window;
  const auto result = scenario::run_closed_loop(matched_graph(o), sc, lo);
  emit(o, "decisions.ndjson", scenario::to_ndjson(result.records), true);
  emit(o, "graph.adapted.json", kg::export_graph(result.graph, kg::ExportFormat::json), false);
}

void cmd_export(const Options& o) {
  kg::KnowledgeGraph g = o.graph_path.empty() ? build_from_source(o) : kg::import_graph(read_text(o.graph_path));
  if (o.format == "statements") {
    emit(o, "graph.cypher", kg::export_graph(g, kg::ExportFormat::statements), true);
  } else if (o.format == "json") {
    emit(o, "graph.json", kg::export_graph(g, kg::ExportFormat::json), true);
  } else {
    throw Error(ErrorCode::usage, "--format must be statements or json", o.format);
  }
}

int fail(const Error& e, int code) {
  std::cerr << e.to_json().dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Power-to-X digital twin pipeline"};
  app.require_subcommand(1);

  auto add_source = [&](CLI::App* c) {
    c->add_option("--source", o.source, "AASX file, shell directory or server URL (default $TWIN_AAS_ENDPOINT)");
    c->add_option("--root", o.root, "root asset id (inferred when omitted)");
    c->add_option("--out-dir", o.out_dir, "write artifacts here instead of stdout");
  };
  auto add_sequence = [&](CLI::App* c) { c->add_option("--sequence", o.sequence_path, "production sequence JSON"); };
  auto add_matching = [&](CLI::App* c) {
    c->add_option("--graph", o.graph_path, "graph artifact to start from instead of a source");
    c->add_option("--units", o.units_path, "unit registry extension JSON");
    c->add_option("--range-mode", o.range_mode, "subset or overlap");
  };
  auto add_budget = [&](CLI::App* c) {
    c->add_option("--level", o.level, "decision level");
    c->add_option("--max-time", o.max_time, "computing time budget in s");
    c->add_option("--min-accuracy", o.min_accuracy, "accuracy floor");
    c->add_option("--exclude", o.exclude, "model ids never to select");
  };

  auto* ingest = app.add_subcommand("ingest", "parse shells and report them");
  add_source(ingest);
  auto* graph = app.add_subcommand("graph", "build the knowledge graph");
  add_source(graph);
  add_sequence(graph);
  auto* match = app.add_subcommand("match", "connect compatible ports");
  add_source(match);
  add_sequence(match);
  add_matching(match);
  auto* select = app.add_subcommand("select", "select a model configuration");
  add_source(select);
  add_sequence(select);
  add_matching(select);
  add_budget(select);
  auto* simulate = app.add_subcommand("simulate", "run the closed adaption loop on a scenario");
  add_source(simulate);
  add_sequence(simulate);
  add_matching(simulate);
  add_budget(simulate);
  simulate->add_option("--scenario", o.scenario_path, "scenario JSON")->required();
  simulate->add_option("--epsilon", o.epsilon, "keep threshold");
  simulate->add_option("--escalation", o.escalation, "reselect threshold as a multiple of epsilon");
  simulate->add_option("--window", o.window, "deviation window in s (default from the scenario)");
  auto* exp = app.add_subcommand("export", "write the graph as statements");
  add_source(exp);
  add_sequence(exp);
  exp->add_option("--graph", o.graph_path, "graph artifact to export instead of a source");
  exp->add_option("--format", o.format, "statements or json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(Error(ErrorCode::usage, e.what()), 2);
  }

  try {
    // Option values are checked before any input is read.
    level_of(o);
    range_mode_of(o);
    if (o.format != "statements" && o.format != "json") {
      throw Error(ErrorCode::usage, "--format must be statements or json", o.format);
    }
    if (*ingest) cmd_ingest(o);
    if (*graph) cmd_graph(o);
    if (*match) cmd_match(o);
    if (*select) cmd_select(o);
    if (*simulate) cmd_simulate(o);
    if (*exp) cmd_export(o);
  } catch (const Error& e) {
    return fail(e, e.code() == ErrorCode::usage ? 2 : 1);
  } catch (const std::exception& e) {
    return fail(Error(ErrorCode::io, e.what()), 1);
  }
  return 0;
}
