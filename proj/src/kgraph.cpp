#include "twin/kgraph.hpp"

#include <algorithm>
#include <sstream>

#include "twin/error.hpp"

namespace twin::kg {

namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& message, const std::string& path = {}) {
  throw Error(ErrorCode::schema, message, path);
}

const std::set<std::string> kEmpty;

bool signature_ok(EdgeKind e, NodeKind src, NodeKind dst) {
  switch (e) {
    case EdgeKind::has_part:
      return (src == NodeKind::asset || src == NodeKind::production_system) && dst == NodeKind::asset;
    case EdgeKind::followed_by: return src == NodeKind::asset && dst == NodeKind::asset;
    case EdgeKind::described_by: return src == NodeKind::asset && dst == NodeKind::model;
    case EdgeKind::has_port: return src == NodeKind::model && dst == NodeKind::port;
    case EdgeKind::connects_with: return src == NodeKind::port && dst == NodeKind::port;
  }
  return false;
}

std::string port_direction(const Node& n) {
  auto it = n.properties.find("direction");
  return it != n.properties.end() && it->is_string() ? it->get<std::string>() : std::string{};
}

std::string edge_label(const EdgeKey& k) { return k.src + " -[" + std::string(to_string(k.kind)) + "]-> " + k.dst; }

bool is_identifier(std::string_view s) {
  if (s.empty() || std::isdigit(static_cast<unsigned char>(s.front()))) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

std::string cypher_key(std::string_view k) { return is_identifier(k) ? std::string(k) : "`" + std::string(k) + "`"; }

// Graph databases store primitives and flat lists; anything nested becomes a
// JSON string.
std::string cypher_value(const json& v) {
  if (v.is_array()) {
    const bool flat = std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_primitive() && !x.is_null(); });
    return flat ? v.dump() : json(v.dump()).dump();
  }
  if (v.is_object()) return json(v.dump()).dump();
  return v.dump();
}

std::string cypher_map(const json& props) {
  std::string out = "{";
  bool first = true;
  for (const auto& [k, v] : props.items()) {
    if (v.is_null()) continue;
    out += (first ? "" : ", ") + cypher_key(k) + ": " + cypher_value(v);
    first = false;
  }
  return out + "}";
}

}  // namespace

std::string_view to_string(NodeKind k) {
  switch (k) {
    case NodeKind::production_system: return "ProductionSystem";
    case NodeKind::asset: return "Asset";
    case NodeKind::model: return "Model";
    case NodeKind::port: return "Port";
  }
  return "";
}

std::string_view to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::has_part: return "hasPart";
    case EdgeKind::followed_by: return "followedBy";
    case EdgeKind::described_by: return "describedBy";
    case EdgeKind::has_port: return "hasPort";
    case EdgeKind::connects_with: return "connectsWith";
  }
  return "";
}

std::optional<NodeKind> node_kind_from(std::string_view s) {
  for (auto k : {NodeKind::production_system, NodeKind::asset, NodeKind::model, NodeKind::port}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<EdgeKind> edge_kind_from(std::string_view s) {
  for (auto k : {EdgeKind::has_part, EdgeKind::followed_by, EdgeKind::described_by, EdgeKind::has_port,
                 EdgeKind::connects_with}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::string system_node_id(std::string_view system_id) { return "system:" + std::string(system_id); }
std::string asset_node_id(std::string_view asset_id) { return "asset:" + std::string(asset_id); }
std::string model_node_id(std::string_view model_id) { return "model:" + std::string(model_id); }
std::string port_node_id(std::string_view model_id, std::string_view port_name) {
  return "port:" + std::string(model_id) + "#" + std::string(port_name);
}

// --- KnowledgeGraph ----------------------------------------------------------

std::uint64_t KnowledgeGraph::add_node(Node node) {
  if (node.id.empty()) schema_error("node with empty id");
  if (!node.properties.is_object()) schema_error("node properties must be an object", node.id);
  if (nodes_.count(node.id) != 0) schema_error("duplicate node id '" + node.id + "'", node.id);
  if (node.kind == NodeKind::port) {
    auto d = port_direction(node);
    if (d != "input" && d != "output") schema_error("port node without input/output direction", node.id);
  }
  by_kind_[node.kind].insert(node.id);
  if (auto owner = node.properties.find("ownerAssetId");
      owner != node.properties.end() && owner->is_string() &&
      (node.kind == NodeKind::model || node.kind == NodeKind::port)) {
    by_owner_[owner->get<std::string>()].insert(node.id);
  }
  auto id = node.id;
  nodes_.emplace(std::move(id), std::move(node));
  return ++version_;
}

std::uint64_t KnowledgeGraph::add_edge(EdgeKey key, json properties) {
  const auto* src = node(key.src);
  const auto* dst = node(key.dst);
  if (src == nullptr || dst == nullptr) {
    schema_error("dangling edge " + edge_label(key), src == nullptr ? key.src : key.dst);
  }
  if (!signature_ok(key.kind, src->kind, dst->kind)) {
    schema_error("edge kind mismatch: " + edge_label(key) + " joins " + std::string(to_string(src->kind)) + " to " +
                     std::string(to_string(dst->kind)),
                 key.src);
  }
  if (key.kind == EdgeKind::connects_with && (port_direction(*src) != "output" || port_direction(*dst) != "input")) {
    schema_error("connectsWith must run from an output port to an input port: " + edge_label(key), key.src);
  }
  if (!properties.is_object()) schema_error("edge properties must be an object", key.src);
  out_[key.src].insert(key);
  in_[key.dst].insert(key);
  edges_.insert_or_assign(std::move(key), std::move(properties));
  return ++version_;
}

std::uint64_t KnowledgeGraph::remove_edges(EdgeKind kind) {
  for (auto it = edges_.begin(); it != edges_.end();) {
    if (it->first.kind == kind) {
      out_[it->first.src].erase(it->first);
      in_[it->first.dst].erase(it->first);
      it = edges_.erase(it);
    } else {
      ++it;
    }
  }
  return ++version_;
}

std::uint64_t KnowledgeGraph::set_node_property(const std::string& id, const std::string& key, json value) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) schema_error("no node '" + id + "'", id);
  it->second.properties[key] = std::move(value);
  return ++version_;
}

const Node* KnowledgeGraph::node(std::string_view id) const {
  auto it = nodes_.find(std::string(id));
  return it == nodes_.end() ? nullptr : &it->second;
}

const std::set<std::string>& KnowledgeGraph::nodes_of_kind(NodeKind kind) const {
  auto it = by_kind_.find(kind);
  return it == by_kind_.end() ? kEmpty : it->second;
}

const std::set<std::string>& KnowledgeGraph::owned_by(std::string_view asset_id) const {
  auto it = by_owner_.find(asset_id);
  return it == by_owner_.end() ? kEmpty : it->second;
}

std::vector<EdgeKey> KnowledgeGraph::out_edges(std::string_view id, EdgeKind kind) const {
  std::vector<EdgeKey> out;
  if (auto it = out_.find(id); it != out_.end()) {
    for (const auto& k : it->second) {
      if (k.kind == kind) out.push_back(k);
    }
  }
  return out;
}

std::vector<EdgeKey> KnowledgeGraph::in_edges(std::string_view id, EdgeKind kind) const {
  std::vector<EdgeKey> out;
  if (auto it = in_.find(id); it != in_.end()) {
    for (const auto& k : it->second) {
      if (k.kind == kind) out.push_back(k);
    }
  }
  return out;
}

std::size_t KnowledgeGraph::edge_count(EdgeKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(edges_.begin(), edges_.end(), [kind](const auto& e) { return e.first.kind == kind; }));
}

void KnowledgeGraph::validate() const {
  for (const auto& id : nodes_of_kind(NodeKind::model)) {
    if (out_edges(id, EdgeKind::has_port).empty()) schema_error("model node without ports", id);
  }
  if (nodes_of_kind(NodeKind::production_system).size() > 1) {
    schema_error("more than one ProductionSystem node");
  }

  // followedBy: one simple path.
  std::map<std::string, std::string> next;
  std::set<std::string> has_pred;
  for (const auto& [k, _] : edges_) {
    if (k.kind != EdgeKind::followed_by) continue;
    if (!next.emplace(k.src, k.dst).second) schema_error("asset with two followedBy successors", k.src);
    if (!has_pred.insert(k.dst).second) schema_error("asset with two followedBy predecessors", k.dst);
  }
  std::vector<std::string> chain;
  if (!next.empty()) {
    std::vector<std::string> heads;
  for (const auto& [src, _] : next) {
    if (has_pred.count(src) == 0) heads.push_back(src);
  }
    if (heads.size() != 1) schema_error("followedBy edges do not form a single path");
    chain.push_back(heads.front());
    for (auto it = next.find(heads.front()); it != next.end(); it = next.find(it->second)) {
      chain.push_back(it->second);
      if (chain.size() > next.size() + 1) schema_error("followedBy cycle");
    }
    if (chain.size() != next.size() + 1) schema_error("followedBy edges do not form a single path");
  }

  for (const auto& sys : nodes_of_kind(NodeKind::production_system)) {
    const auto& props = node(sys)->properties;
    auto steps = props.find("steps");
    if (steps == props.end()) continue;
    std::vector<std::string> expected;
    for (const auto& s : *steps) expected.push_back(asset_node_id(s.get<std::string>()));
    if (expected.size() == 1 && chain.empty()) continue;
    if (expected != chain) schema_error("followedBy path does not match the recorded sequence", sys);
  }
}

// --- construction and queries -----------------------------------------------

KnowledgeGraph build_graph(const std::vector<aas::AdministrationShell>& shells, const ingest::HierarchyTree& hierarchy,
                           const ingest::ProductionSequence& sequence) {
  for (const auto& step : sequence.steps) {
    if (!hierarchy.contains(step)) {
      throw Error(ErrorCode::consistency, "sequence step '" + step + "' is not part of the asset hierarchy", step);
    }
  }
  std::map<std::string, const aas::AdministrationShell*> by_id;
  for (const auto& s : shells) by_id.emplace(s.id, &s);

  KnowledgeGraph g;
  g.add_node({system_node_id(sequence.system_id), NodeKind::production_system,
              json{{"systemId", sequence.system_id},
                   {"rootAssetId", hierarchy.root_asset_id},
                   {"steps", sequence.steps}}});

  for (const auto& asset : hierarchy.assets()) {
    json props{{"assetId", asset}};
    if (auto it = by_id.find(asset); it != by_id.end()) {
      props["idShort"] = it->second->id_short;
      props["assetKind"] = it->second->asset_kind == aas::AssetKind::instance ? "instance" : "type";
    }
    g.add_node({asset_node_id(asset), NodeKind::asset, std::move(props)});
  }
  for (const auto& [parent, kids] : hierarchy.children) {
    for (const auto& kid : kids) g.add_edge({asset_node_id(parent), EdgeKind::has_part, asset_node_id(kid)});
  }
  for (std::size_t i = 1; i < sequence.steps.size(); ++i) {
    g.add_edge({asset_node_id(sequence.steps[i - 1]), EdgeKind::followed_by, asset_node_id(sequence.steps[i])});
  }

  for (const auto& shell : shells) {
    for (const auto& d : extract_simulation_descriptors(shell)) {
      if (!hierarchy.contains(d.owner_asset_id)) {
        throw Error(ErrorCode::consistency,
                    "model '" + d.model_id + "' belongs to '" + d.owner_asset_id + "', which is outside the hierarchy",
                    d.model_id);
      }
      const auto model_id = model_node_id(d.model_id);
      if (g.node(model_id) != nullptr) {
        throw Error(ErrorCode::consistency, "model id '" + d.model_id + "' declared twice", d.model_id);
      }
      g.add_node({model_id, NodeKind::model, to_json(d)});
      g.add_edge({asset_node_id(d.owner_asset_id), EdgeKind::described_by, model_id});
      for (const auto& p : d.ports) {
        auto props = to_json(p);
        props["modelId"] = d.model_id;
        props["ownerAssetId"] = d.owner_asset_id;
        const auto port_id = port_node_id(d.model_id, p.name);
        g.add_node({port_id, NodeKind::port, std::move(props)});
        g.add_edge({model_id, EdgeKind::has_port, port_id});
      }
    }
  }
  g.validate();
  return g;
}

std::vector<std::string> query_models(const KnowledgeGraph& graph, const ModelFilter& filter) {
  std::vector<std::string> out;
  auto str = [](const json& props, const char* key) {
    auto it = props.find(key);
    return it != props.end() && it->is_string() ? it->get<std::string>() : std::string{};
  };
  for (const auto& id : graph.nodes_of_kind(NodeKind::model)) {
    const auto& p = graph.node(id)->properties;
    if (filter.asset_id && str(p, "ownerAssetId") != *filter.asset_id) continue;
    if (filter.level_of_detail && str(p, "levelOfDetail") != to_string(*filter.level_of_detail)) continue;
    if (filter.discipline && str(p, "discipline") != *filter.discipline) continue;
    if (filter.decision_level && str(p, "decisionLevel") != to_string(*filter.decision_level)) continue;
    out.push_back(str(p, "modelId"));
  }
  std::sort(out.begin(), out.end());
  return out;
}

SimulationModelDescriptor model_descriptor(const KnowledgeGraph& graph, std::string_view model_id) {
  const auto* n = graph.node(model_node_id(model_id));
  if (n == nullptr || n->kind != NodeKind::model) {
    throw Error(ErrorCode::not_found, "no model '" + std::string(model_id) + "' in the graph", std::string(model_id));
  }
  try {
    return descriptor_from_json(n->properties);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::schema, std::string("malformed model node: ") + e.what(), n->id);
  }
}

ingest::ProductionSequence recorded_sequence(const KnowledgeGraph& graph) {
  const auto& systems = graph.nodes_of_kind(NodeKind::production_system);
  if (systems.size() != 1) {
    throw Error(ErrorCode::consistency, "graph has no ProductionSystem node");
  }
  const auto& p = graph.node(*systems.begin())->properties;
  try {
    return {p.at("systemId").get<std::string>(), p.at("steps").get<std::vector<std::string>>()};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema, std::string("malformed ProductionSystem node: ") + e.what(), *systems.begin());
  }
}

// --- export / import ---------------------------------------------------------

std::string export_graph(const KnowledgeGraph& graph, ExportFormat format) {
  if (format == ExportFormat::json) {
    json doc{{"nodes", json::array()}, {"edges", json::array()}};
    for (const auto& [id, n] : graph.nodes()) {
      doc["nodes"].push_back(json{{"id", id}, {"kind", to_string(n.kind)}, {"properties", n.properties}});
    }
    for (const auto& [k, props] : graph.edges()) {
      doc["edges"].push_back(json{{"src", k.src}, {"kind", to_string(k.kind)}, {"dst", k.dst}, {"properties", props}});
    }
    return doc.dump(2) + "\n";
  }

  std::ostringstream out;
  for (const auto& [id, n] : graph.nodes()) {
    out << "MERGE (n:" << to_string(n.kind) << " {id: " << json(id).dump() << "}) SET n += "
        << cypher_map(n.properties) << ";\n";
  }
  for (const auto& [k, props] : graph.edges()) {
    out << "MATCH (a {id: " << json(k.src).dump() << "}), (b {id: " << json(k.dst).dump() << "}) MERGE (a)-[r:"
        << to_string(k.kind) << "]->(b) SET r += " << cypher_map(props) << ";\n";
  }
  return out.str();
}

KnowledgeGraph import_graph(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::syntax, e.what(), "byte " + std::to_string(e.byte));
  }
  if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("edges") || !doc["nodes"].is_array() ||
      !doc["edges"].is_array()) {
    schema_error("graph document needs 'nodes' and 'edges' arrays");
  }
  auto field = [](const json& obj, const char* key, const std::string& where) -> std::string {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) schema_error(std::string("missing '") + key + "'", where);
    return it->get<std::string>();
  };
  auto props_of = [](const json& obj) {
    auto it = obj.find("properties");
    return it == obj.end() ? json::object() : *it;
  };

  KnowledgeGraph g;
  for (std::size_t i = 0; i < doc["nodes"].size(); ++i) {
    const auto& n = doc["nodes"][i];
    const auto where = "nodes/" + std::to_string(i);
    if (!n.is_object()) schema_error("node must be an object", where);
    const auto id = field(n, "id", where);
    auto kind = node_kind_from(field(n, "kind", id));
    if (!kind) schema_error("unknown node kind", id);
    g.add_node({id, *kind, props_of(n)});
  }
  for (std::size_t i = 0; i < doc["edges"].size(); ++i) {
    const auto& e = doc["edges"][i];
    const auto where = "edges/" + std::to_string(i);
    if (!e.is_object()) schema_error("edge must be an object", where);
    auto kind = edge_kind_from(field(e, "kind", where));
    if (!kind) schema_error("unknown edge kind", where);
    g.add_edge({field(e, "src", where), *kind, field(e, "dst", where)}, props_of(e));
  }
  g.validate();
  return g;
}

}  // namespace twin::kg
