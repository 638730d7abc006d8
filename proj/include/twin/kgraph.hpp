#pragma once

/**
 * @file kgraph.hpp
 * @brief Embedded typed property graph holding the twin's model comprehension.
 *
 * Node ids follow a fixed scheme so rebuilding from the same sources yields
 * the same graph:
 *
 *   system:{systemId}  asset:{assetId}  model:{modelId}  port:{modelId}#{portName}
 *
 * Edge signatures (checked on insert):
 *
 *   hasPart       Asset -> Asset, ProductionSystem -> Asset
 *   followedBy    Asset -> Asset
 *   describedBy   Asset -> Model
 *   hasPort       Model -> Port
 *   connectsWith  Port(output) -> Port(input), {conversionFactor, rangeMode}
 */

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "twin/aas.hpp"
#include "twin/descriptor.hpp"
#include "twin/ingest.hpp"

namespace twin::kg {

enum class NodeKind { production_system, asset, model, port };
enum class EdgeKind { has_part, followed_by, described_by, has_port, connects_with };

std::string_view to_string(NodeKind k);
std::string_view to_string(EdgeKind k);
std::optional<NodeKind> node_kind_from(std::string_view s);
std::optional<EdgeKind> edge_kind_from(std::string_view s);

std::string system_node_id(std::string_view system_id);
std::string asset_node_id(std::string_view asset_id);
std::string model_node_id(std::string_view model_id);
std::string port_node_id(std::string_view model_id, std::string_view port_name);

struct Node {
  std::string id;
  NodeKind kind;
  nlohmann::json properties = nlohmann::json::object();

  bool operator==(const Node&) const = default;
};

/// (src, kind, dst); kind compares by wire name so that ordering matches the
/// canonical export.
struct EdgeKey {
  std::string src;
  EdgeKind kind;
  std::string dst;

  bool operator<(const EdgeKey& o) const {
    return std::tuple(src, to_string(kind), dst) < std::tuple(o.src, to_string(o.kind), o.dst);
  }
  bool operator==(const EdgeKey&) const = default;
};

struct Edge {
  EdgeKey key;
  nlohmann::json properties = nlohmann::json::object();
};

class KnowledgeGraph {
 public:
  /// Mutators throw Error{schema} on a violated signature and return the new
  /// version number.
  std::uint64_t add_node(Node node);
  std::uint64_t add_edge(EdgeKey key, nlohmann::json properties = nlohmann::json::object());
  std::uint64_t remove_edges(EdgeKind kind);
  std::uint64_t set_node_property(const std::string& id, const std::string& key, nlohmann::json value);

  const Node* node(std::string_view id) const;
  const std::map<std::string, Node>& nodes() const { return nodes_; }
  const std::map<EdgeKey, nlohmann::json>& edges() const { return edges_; }
  const std::set<std::string>& nodes_of_kind(NodeKind kind) const;
  /// Model and port node ids owned by an asset.
  const std::set<std::string>& owned_by(std::string_view asset_id) const;

  std::vector<EdgeKey> out_edges(std::string_view id, EdgeKind kind) const;
  std::vector<EdgeKey> in_edges(std::string_view id, EdgeKind kind) const;
  std::size_t edge_count(EdgeKind kind) const;

  /// Whole-graph invariants beyond the per-insert checks: every Model has a
  /// port, followedBy edges form one simple path. Throws Error{schema}.
  void validate() const;

  std::uint64_t version() const { return version_; }

  /// Structural equality; the version counter is not compared.
  bool operator==(const KnowledgeGraph& o) const { return nodes_ == o.nodes_ && edges_ == o.edges_; }

 private:
  std::map<std::string, Node> nodes_;
  std::map<EdgeKey, nlohmann::json> edges_;
  std::map<NodeKind, std::set<std::string>> by_kind_;
  std::map<std::string, std::set<std::string>, std::less<>> by_owner_;
  std::map<std::string, std::set<EdgeKey>, std::less<>> out_;
  std::map<std::string, std::set<EdgeKey>, std::less<>> in_;
  std::uint64_t version_ = 0;
};

/**
 * Single-writer, many-reader holder. Readers take an immutable snapshot;
 * a writer copies the current graph, mutates the copy and publishes it.
 */
class SharedGraph {
 public:
  explicit SharedGraph(KnowledgeGraph graph)
      : current_(std::make_shared<const KnowledgeGraph>(std::move(graph))) {}

  std::shared_ptr<const KnowledgeGraph> snapshot() const {
    std::lock_guard lock(publish_);
    return current_;
  }

  /// Applies `fn(KnowledgeGraph&)` to a private copy, publishes it and returns
  /// the published version.
  template <typename Fn>
  std::uint64_t update(Fn&& fn) {
    std::lock_guard writer(write_);
    auto next = std::make_shared<KnowledgeGraph>(*snapshot());
    fn(*next);
    const auto v = next->version();
    std::lock_guard lock(publish_);
    current_ = std::move(next);
    return v;
  }

 private:
  mutable std::mutex publish_;
  std::mutex write_;
  std::shared_ptr<const KnowledgeGraph> current_;
};

/// Builds the topology (system, assets, hasPart, followedBy) and the model
/// layer (models, ports, describedBy, hasPort). Throws Error{consistency} when
/// the sequence or a model owner is outside the hierarchy.
KnowledgeGraph build_graph(const std::vector<aas::AdministrationShell>& shells, const ingest::HierarchyTree& hierarchy,
                           const ingest::ProductionSequence& sequence);

struct ModelFilter {
  std::optional<std::string> asset_id;
  std::optional<LevelOfDetail> level_of_detail;
  std::optional<std::string> discipline;
  std::optional<DecisionLevel> decision_level;
};

/// Model ids matching every set filter field, sorted.
std::vector<std::string> query_models(const KnowledgeGraph& graph, const ModelFilter& filter);

/// Descriptor stored on a Model node (including any refitted surrogate).
SimulationModelDescriptor model_descriptor(const KnowledgeGraph& graph, std::string_view model_id);

/// The production sequence recorded on the ProductionSystem node.
ingest::ProductionSequence recorded_sequence(const KnowledgeGraph& graph);

enum class ExportFormat { json, statements };

/// json: canonical document (nodes by id, edges by (src, kind, dst)).
/// statements: one Cypher MERGE statement per node, then one per edge.
std::string export_graph(const KnowledgeGraph& graph, ExportFormat format);

/// Inverse of the json export. Throws Error{syntax} or Error{schema}.
KnowledgeGraph import_graph(std::string_view text);

}  // namespace twin::kg
