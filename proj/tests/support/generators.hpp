#pragma once

// Random and hand-built inputs shared by the unit tests and the acceptance run.

#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "twin/aas.hpp"
#include "twin/descriptor.hpp"
#include "twin/ingest.hpp"
#include "twin/kgraph.hpp"

namespace twin::testing {

using nlohmann::json;
using Rng = std::mt19937_64;

std::filesystem::path fixture(const std::string& relative);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

/// Runs a command through the shell; returns exit status and captured stdout.
struct CommandResult {
  int status = 0;
  std::string out;
};
CommandResult run_command(const std::string& command);

// --- shell documents in the canonical JSON form --------------------------------

json property(const std::string& id_short, json value, std::optional<std::string> unit = std::nullopt);
json collection(const std::string& id_short, std::vector<json> children);
json reference(const std::string& id_short, const std::string& target);

/// Valid descriptor without ports: Control level, 1 s, accuracy 0.8.
SimulationModelDescriptor base_descriptor(const std::string& model_id, const std::string& owner);

/// Simulation-submodel element describing `d`.
json model_element(const SimulationModelDescriptor& d, const std::string& id_short);

/// Shell document with an optional Simulation submodel and an optional Full BOM.
json shell_document(const std::string& id, const std::vector<json>& model_elements,
                    const std::vector<std::string>& bom_children);

/// Arbitrary well-formed shell document: nested collections, every property
/// value kind, references, opaque elements, all submodel kinds.
json random_shell_document(Rng& rng);

// --- multi-shell instances ---------------------------------------------------

struct Instance {
  std::vector<json> shells;  ///< root shell first
  ingest::ProductionSequence sequence;
};

struct InstanceShape {
  int max_assets = 8;
  int max_models = 4;
  int max_ports = 6;
  bool all_in_sequence = false;  ///< otherwise some assets stay off the sequence
};

/// A root "Plant" shell whose BOM lists every asset, assets with random models
/// and ports drawn from a small quantity/unit/range vocabulary.
Instance random_match_instance(Rng& rng, const InstanceShape& shape = {});

/// Instance for configuration search: every asset in the sequence, models
/// with tied accuracies/times, mixed decision levels.
Instance random_selection_instance(Rng& rng, int max_assets = 4, int max_models = 3);

/// Writes shells/{id}.json, aasx/manifest.json and sequence.json.
void write_instance(const Instance& instance, const std::filesystem::path& dir);

std::vector<aas::AdministrationShell> parse_shells(const Instance& instance);

/// Hierarchy from the root shell plus build_graph.
kg::KnowledgeGraph graph_of(const Instance& instance);

// --- random BOM DAGs -------------------------------------------------------------

struct Dag {
  std::string root;
  std::vector<std::string> nodes;
  std::map<std::string, std::vector<std::string>> children;  ///< BOM order
};

/// DAG over ≤ max_nodes nodes; with probability `shared` extra edges give
/// some nodes a second parent; some nodes stay unreachable from the root.
Dag random_dag(Rng& rng, int max_nodes, double shared);

std::vector<aas::AdministrationShell> dag_shells(const Dag& dag);

}  // namespace twin::testing
