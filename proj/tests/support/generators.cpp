#include "support/generators.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "twin/ingest.hpp"

namespace twin::testing {

namespace fs = std::filesystem;

namespace {

template <typename T, std::size_t N>
const T& pick(Rng& rng, const std::array<T, N>& items) {
  return items[std::uniform_int_distribution<std::size_t>(0, N - 1)(rng)];
}

int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

bool chance(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

constexpr std::array<const char*, 3> kQuantities{"q_flow", "q_power", "q_pressure"};
constexpr std::array<const char*, 9> kUnits{"W", "kW", "kg/h", "g/s", "bar", "Pa", "mol/h", "s", "h"};
constexpr std::array<std::array<const char*, 2>, 3> kFamilies{{{"kg/h", "g/s"}, {"W", "kW"}, {"bar", "Pa"}}};
constexpr std::array<double, 3> kMins{0.0, 1.0, 10.0};
constexpr std::array<double, 6> kSpans{5.0, 10.0, 50.0, 100.0, 1000.0, 3600.0};
constexpr std::array<Datatype, 4> kDatatypes{Datatype::real, Datatype::real, Datatype::integer, Datatype::boolean};

json random_value(Rng& rng) {
  switch (uniform(rng, 0, 3)) {
    case 0: return std::uniform_real_distribution<double>(-1e6, 1e6)(rng);
    case 1: return chance(rng, 0.5);
    case 2: return "text-" + std::to_string(uniform(rng, 0, 999));
    default: return static_cast<double>(uniform(rng, -50, 50)) / 4.0;
  }
}

json random_elements(Rng& rng, int depth, const std::string& prefix) {
  json out = json::array();
  const int n = uniform(rng, 0, depth > 0 ? 4 : 3);
  for (int i = 0; i < n; ++i) {
    const auto name = prefix + std::to_string(i);
    const int kind = uniform(rng, 0, depth > 0 ? 4 : 3);
    if (kind == 0 || kind == 1) {
      std::optional<std::string> unit;
      if (chance(rng, 0.4)) unit = pick(rng, kUnits);
      out.push_back(property(name, random_value(rng), unit));
    } else if (kind == 2) {
      out.push_back(reference(name, "urn:asset:" + std::to_string(uniform(rng, 0, 99))));
    } else if (kind == 3) {
      out.push_back(json{{"idShort", name}, {"type", "File"}, {"contentType", "application/pdf"},
                         {"value", "/docs/" + name + ".pdf"}, {"meta", {{"pages", uniform(rng, 1, 9)}}}});
    } else {
      out.push_back(collection(name, random_elements(rng, depth - 1, name + "_")));
    }
  }
  return out;
}

}  // namespace

SimulationModelDescriptor base_descriptor(const std::string& model_id, const std::string& owner) {
  SimulationModelDescriptor d;
  d.model_id = model_id;
  d.owner_asset_id = owner;
  d.storage_location = "file:///models/" + model_id + ".fmu";
  d.simulation_environment = "python-surrogate";
  d.solver = {"fixed-step-euler", 0.1, 1e-6};
  d.level_of_detail = LevelOfDetail::process_unit;
  d.discipline = "generic";
  d.decision_level = DecisionLevel::control;
  d.computing_time = 1.0;
  d.accuracy = 0.8;
  return d;
}

fs::path fixture(const std::string& relative) { return fs::path(TWIN_FIXTURE_DIR) / relative; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
}

fs::path temp_dir(const std::string& tag) {
  static int counter = 0;
  auto dir = fs::temp_directory_path() / ("twin-" + tag + "-" + std::to_string(::getpid()) + "-" +
                                          std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

CommandResult run_command(const std::string& command) {
  CommandResult r;
  FILE* pipe = ::popen(command.c_str(), "r");
  if (pipe == nullptr) return {-1, {}};
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

json property(const std::string& id_short, json value, std::optional<std::string> unit) {
  json el{{"idShort", id_short}, {"type", "Property"}, {"value", std::move(value)}};
  if (unit) el["unit"] = *unit;
  return el;
}

json collection(const std::string& id_short, std::vector<json> children) {
  return json{{"idShort", id_short}, {"type", "Collection"}, {"children", std::move(children)}};
}

json reference(const std::string& id_short, const std::string& target) {
  return json{{"idShort", id_short}, {"type", "Reference"}, {"targetId", target}};
}

json model_element(const SimulationModelDescriptor& d, const std::string& id_short) {
  std::vector<json> params;
  for (const auto& p : d.parameters) params.push_back(property(p.name, p.value, p.unit));
  std::vector<json> ports;
  for (const auto& p : d.ports) {
    ports.push_back(collection(p.name, {property("Name", p.name), property("Direction", to_string(p.direction)),
                                        property("Quantity", p.quantity), property("Unit", p.unit),
                                        property("Min", p.min), property("Max", p.max),
                                        property("Datatype", to_string(p.datatype))}));
  }
  std::vector<json> children{
      property("ModelId", d.model_id),
      property("StorageLocation", d.storage_location),
      property("SimulationEnvironment", d.simulation_environment),
      collection("Solver", {property("Method", d.solver.method), property("StepSize", d.solver.step_size, "s"),
                            property("Tolerance", d.solver.tolerance)}),
      collection("Parameters", params),
      collection("Ports", ports),
      property("LevelOfDetail", to_string(d.level_of_detail)),
      property("Discipline", d.discipline),
      property("DecisionLevel", to_string(d.decision_level)),
      property("ComputingTime", d.computing_time, "s"),
      property("Accuracy", d.accuracy),
  };
  if (d.surrogate) {
    const auto& s = *d.surrogate;
    std::vector<json> ins, outs, rows, bs;
    for (std::size_t k = 0; k < s.inputs.size(); ++k) ins.push_back(property("i" + std::to_string(k), s.inputs[k]));
    for (std::size_t k = 0; k < s.outputs.size(); ++k) {
      outs.push_back(property("o" + std::to_string(k), s.outputs[k]));
      std::vector<json> row;
      for (std::size_t c = 0; c < s.a[k].size(); ++c) row.push_back(property("c" + std::to_string(c), s.a[k][c]));
      rows.push_back(collection("r" + std::to_string(k), row));
      bs.push_back(property("b" + std::to_string(k), s.b[k]));
    }
    children.push_back(collection("Surrogate", {property("Kind", "affine"), collection("Inputs", ins),
                                                collection("Outputs", outs), collection("A", rows),
                                                collection("b", bs)}));
  }
  return collection(id_short, children);
}

json shell_document(const std::string& id, const std::vector<json>& model_elements,
                    const std::vector<std::string>& bom_children) {
  json submodels = json::array();
  if (!model_elements.empty()) {
    submodels.push_back(json{{"idShort", "SimulationModels"}, {"kind", "Simulation"}, {"elements", model_elements}});
  }
  if (!bom_children.empty()) {
    json elements = json::array({property("Archetype", "Full")});
    for (std::size_t k = 0; k < bom_children.size(); ++k) {
      elements.push_back(reference("Part" + std::to_string(k), bom_children[k]));
    }
    submodels.push_back(json{{"idShort", "BillOfMaterial"}, {"kind", "BillOfMaterial"}, {"elements", elements}});
  }
  return json{{"id", id}, {"idShort", id}, {"assetKind", "instance"}, {"submodels", submodels}};
}

json random_shell_document(Rng& rng) {
  static constexpr std::array<const char*, 4> kKinds{"Simulation", "BillOfMaterial", "Nameplate", "TechnicalData"};
  const auto n = uniform(rng, 0, 999);
  json submodels = json::array();
  const int count = uniform(rng, 0, 4);
  for (int i = 0; i < count; ++i) {
    submodels.push_back(json{{"idShort", "Sm" + std::to_string(i)},
                             {"kind", pick(rng, kKinds)},
                             {"elements", random_elements(rng, 3, "E")}});
  }
  return json{{"id", "urn:shell:" + std::to_string(n)},
              {"idShort", "Shell" + std::to_string(n)},
              {"assetKind", chance(rng, 0.5) ? "instance" : "type"},
              {"submodels", submodels}};
}

Instance random_match_instance(Rng& rng, const InstanceShape& shape) {
  Instance inst;
  const int n = uniform(rng, 1, shape.max_assets);
  std::vector<std::string> assets;
  for (int a = 0; a < n; ++a) assets.push_back("A" + std::to_string(a));
  inst.shells.push_back(shell_document("Plant", {}, assets));
  for (const auto& asset : assets) {
    std::vector<json> models;
    const int m = uniform(rng, 0, shape.max_models);
    for (int k = 0; k < m; ++k) {
      auto d = base_descriptor("M" + asset + "_" + std::to_string(k), asset);
      const int ports = uniform(rng, 1, shape.max_ports);
      for (int p = 0; p < ports; ++p) {
        Port port;
        port.name = "p" + std::to_string(p);
        port.direction = chance(rng, 0.5) ? Direction::output : Direction::input;
        const auto q = std::uniform_int_distribution<std::size_t>(0, kQuantities.size() - 1)(rng);
        port.quantity = kQuantities[q];
        // Mostly a unit of the quantity's own dimension, so that pairs get past the unit check.
        port.unit = chance(rng, 0.25) ? pick(rng, kUnits) : kFamilies[q][uniform(rng, 0, 1)];
        port.min = pick(rng, kMins);
        port.max = port.min + pick(rng, kSpans);
        port.datatype = pick(rng, kDatatypes);
        d.ports.push_back(port);
      }
      models.push_back(model_element(d, "Model" + std::to_string(k)));
    }
    inst.shells.push_back(shell_document(asset, models, {}));
  }
  auto steps = assets;
  std::shuffle(steps.begin(), steps.end(), rng);
  if (!shape.all_in_sequence) steps.resize(static_cast<std::size_t>(uniform(rng, 1, n)));
  inst.sequence = {"Sys", steps};
  return inst;
}

Instance random_selection_instance(Rng& rng, int max_assets, int max_models) {
  static constexpr std::array<double, 3> kAccuracies{0.7, 0.8, 0.9};
  static constexpr std::array<double, 3> kTimes{1.0, 2.0, 5.0};
  static constexpr std::array<const char*, 2> kTokens{"q_a", "q_b"};
  Instance inst;
  const int n = uniform(rng, 1, max_assets);
  std::vector<std::string> assets;
  for (int a = 0; a < n; ++a) assets.push_back("A" + std::to_string(a));
  inst.shells.push_back(shell_document("Plant", {}, assets));
  for (const auto& asset : assets) {
    std::vector<json> models;
    const int m = uniform(rng, 1, max_models);
    for (int k = 0; k < m; ++k) {
      auto d = base_descriptor("M" + asset + "_" + std::to_string(k), asset);
      d.accuracy = pick(rng, kAccuracies);
      d.computing_time = pick(rng, kTimes);
      d.decision_level = chance(rng, 0.8) ? DecisionLevel::control : DecisionLevel::scheduling;
      const int outs = uniform(rng, 0, 2);
      const int ins = uniform(rng, outs == 0 ? 1 : 0, 2);
      for (int p = 0; p < outs + ins; ++p) {
        Port port;
        port.name = "p" + std::to_string(p);
        port.direction = p < outs ? Direction::output : Direction::input;
        port.quantity = pick(rng, kTokens);
        port.unit = "kg/h";
        // Narrow outputs, wide inputs: compatibility hinges on the tokens, with
        // an occasional wide output that fails the subset rule.
        port.min = 0.0;
        port.max = p < outs ? (chance(rng, 0.2) ? 500.0 : 10.0) : 100.0;
        d.ports.push_back(port);
      }
      models.push_back(model_element(d, "Model" + std::to_string(k)));
    }
    inst.shells.push_back(shell_document(asset, models, {}));
  }
  inst.sequence = {"Sys", assets};
  return inst;
}

void write_instance(const Instance& instance, const fs::path& dir) {
  json manifest = json::array();
  for (const auto& s : instance.shells) {
    const auto rel = "shells/" + s.at("id").get<std::string>() + ".json";
    write_file(dir / rel, s.dump(2) + "\n");
    manifest.push_back(rel);
  }
  write_file(dir / "aasx" / "manifest.json", json{{"shells", manifest}}.dump(2) + "\n");
  write_file(dir / "sequence.json", ingest::serialize_sequence(instance.sequence));
}

std::vector<aas::AdministrationShell> parse_shells(const Instance& instance) {
  std::vector<aas::AdministrationShell> out;
  for (const auto& s : instance.shells) out.push_back(aas::parse_shell_json(s));
  return out;
}

kg::KnowledgeGraph graph_of(const Instance& instance) {
  const auto shells = parse_shells(instance);
  const auto tree = ingest::build_hierarchy(shells, shells.front().id);
  return kg::build_graph(shells, tree, instance.sequence);
}

Dag random_dag(Rng& rng, int max_nodes, double shared) {
  Dag dag;
  const int n = uniform(rng, 1, max_nodes);
  for (int i = 0; i < n; ++i) dag.nodes.push_back("N" + std::to_string(i));
  dag.root = dag.nodes.front();
  for (const auto& v : dag.nodes) dag.children[v];
  // Edges only from lower to higher index keep it acyclic. Most nodes get one
  // parent; a few get none and stay unreachable unless a shared edge lands.
  for (int i = 1; i < n; ++i) {
    if (chance(rng, 0.9)) dag.children[dag.nodes[static_cast<std::size_t>(uniform(rng, 0, i - 1))]].push_back(dag.nodes[static_cast<std::size_t>(i)]);
  }
  for (int i = 1; i < n; ++i) {
    if (!chance(rng, shared)) continue;
    const auto& parent = dag.nodes[static_cast<std::size_t>(uniform(rng, 0, i - 1))];
    auto& kids = dag.children[parent];
    const auto& child = dag.nodes[static_cast<std::size_t>(i)];
    if (std::find(kids.begin(), kids.end(), child) == kids.end()) kids.push_back(child);
  }
  for (auto& [_, kids] : dag.children) std::shuffle(kids.begin(), kids.end(), rng);
  return dag;
}

std::vector<aas::AdministrationShell> dag_shells(const Dag& dag) {
  std::vector<aas::AdministrationShell> out;
  for (const auto& v : dag.nodes) out.push_back(aas::parse_shell_json(shell_document(v, {}, dag.children.at(v))));
  return out;
}

}  // namespace twin::testing
