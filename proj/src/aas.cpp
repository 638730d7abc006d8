#include "twin/aas.hpp"

#include <set>

#include "twin/error.hpp"

namespace twin::aas {

namespace {

using nlohmann::json;

std::string join_path(const std::string& parent, const std::string& leaf) {
  return parent.empty() ? leaf : parent + "/" + leaf;
}

[[noreturn]] void schema_error(const std::string& message, const std::string& path) {
  throw Error(ErrorCode::schema, message, path);
}

std::string require_id_short(const json& node, const std::string& where) {
  auto it = node.find("idShort");
  if (it == node.end() || !it->is_string()) {
    schema_error("missing idShort", where);
  }
  auto value = it->get<std::string>();
  if (!is_valid_id_short(value)) {
    schema_error("invalid idShort '" + value + "'", join_path(where, value));
  }
  return value;
}

std::vector<SubmodelElement> parse_elements(const json& array, const std::string& parent_path);

SubmodelElement parse_element(const json& node, const std::string& parent_path, std::size_t index) {
  if (!node.is_object()) {
    schema_error("element is not an object", join_path(parent_path, "[" + std::to_string(index) + "]"));
  }
  SubmodelElement el;
  el.id_short = require_id_short(node, join_path(parent_path, "[" + std::to_string(index) + "]"));
  const auto path = join_path(parent_path, el.id_short);

  auto type_it = node.find("type");
  if (type_it == node.end() || !type_it->is_string()) {
    schema_error("element without type", path);
  }
  const auto type = type_it->get<std::string>();

  if (type == "Property") {
    Property p;
    auto v = node.find("value");
    if (v == node.end()) {
      schema_error("property without value", path);
    }
    if (v->is_boolean()) {
      p.value = v->get<bool>();
    } else if (v->is_number()) {
      p.value = v->get<double>();
    } else if (v->is_string()) {
      p.value = v->get<std::string>();
    } else {
      schema_error("property value must be string, number or boolean", path);
    }
    if (auto u = node.find("unit"); u != node.end()) {
      if (!u->is_string()) {
        schema_error("unit must be a string", path);
      }
      p.unit = u->get<std::string>();
    }
    el.payload = std::move(p);
  } else if (type == "Collection") {
    auto c = node.find("children");
    if (c == node.end() || !c->is_array()) {
      schema_error("collection without children array", path);
    }
    el.payload = Collection{parse_elements(*c, path)};
  } else if (type == "Reference") {
    auto t = node.find("targetId");
    if (t == node.end() || !t->is_string() || t->get<std::string>().empty()) {
      schema_error("reference without targetId", path);
    }
    el.payload = Reference{t->get<std::string>()};
  } else {
    el.payload = Opaque{type, node};
  }
  return el;
}

std::vector<SubmodelElement> parse_elements(const json& array, const std::string& parent_path) {
  std::vector<SubmodelElement> out;
  out.reserve(array.size());
  std::set<std::string> seen;
  for (std::size_t i = 0; i < array.size(); ++i) {
    auto el = parse_element(array[i], parent_path, i);
    if (!seen.insert(el.id_short).second) {
      schema_error("duplicate sibling idShort '" + el.id_short + "'", join_path(parent_path, el.id_short));
    }
    out.push_back(std::move(el));
  }
  return out;
}

json property_value_json(const PropertyValue& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

}  // namespace

const SubmodelElement* SubmodelElement::child(std::string_view id_short) const {
  const auto* c = as_collection();
  if (c == nullptr) {
    return nullptr;
  }
  for (const auto& ch : c->children) {
    if (ch.id_short == id_short) {
      return &ch;
    }
  }
  return nullptr;
}

bool operator==(const Collection& a, const Collection& b) { return a.children == b.children; }

bool operator==(const SubmodelElement& a, const SubmodelElement& b) {
  return a.id_short == b.id_short && a.payload == b.payload;
}

SubmodelKind SubmodelKind::from_name(std::string name) {
  SubmodelKind k;
  if (name == "Simulation") {
    k.tag = Tag::simulation;
  } else if (name == "BillOfMaterial") {
    k.tag = Tag::bill_of_material;
  }
  k.name = std::move(name);
  return k;
}

const Submodel* AdministrationShell::submodel(std::string_view id_short) const {
  for (const auto& sm : submodels) {
    if (sm.id_short == id_short) {
      return &sm;
    }
  }
  return nullptr;
}

bool is_valid_id_short(std::string_view s) {
  if (s.empty()) {
    return false;
  }
  auto alpha = [](char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); };
  auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (!alpha(s.front())) {
    return false;
  }
  for (char c : s) {
    if (!alpha(c) && !digit(c) && c != '_') {
      return false;
    }
  }
  return true;
}

AdministrationShell parse_shell(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::syntax, e.what(), "byte " + std::to_string(e.byte));
  }
  return parse_shell_json(doc);
}

AdministrationShell parse_shell_json(const json& doc) {
  if (!doc.is_object()) {
    schema_error("shell document must be a JSON object", "");
  }
  AdministrationShell shell;
  auto id = doc.find("id");
  if (id == doc.end() || !id->is_string() || id->get<std::string>().empty()) {
    schema_error("missing id", "id");
  }
  shell.id = id->get<std::string>();
  for (char c : shell.id) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      schema_error("id contains whitespace", "id");
    }
  }
  shell.id_short = require_id_short(doc, "idShort");

  if (auto kind = doc.find("assetKind"); kind != doc.end()) {
    const auto k = kind->is_string() ? kind->get<std::string>() : std::string{};
    if (k == "instance") {
      shell.asset_kind = AssetKind::instance;
    } else if (k == "type") {
      shell.asset_kind = AssetKind::type;
    } else {
      schema_error("assetKind must be 'instance' or 'type'", "assetKind");
    }
  }

  auto sms = doc.find("submodels");
  if (sms == doc.end()) {
    return shell;
  }
  if (!sms->is_array()) {
    schema_error("submodels must be an array", "submodels");
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < sms->size(); ++i) {
    const auto& node = (*sms)[i];
    if (!node.is_object()) {
      schema_error("submodel is not an object", "submodels/[" + std::to_string(i) + "]");
    }
    Submodel sm;
    sm.id_short = require_id_short(node, "submodels/[" + std::to_string(i) + "]");
    if (!seen.insert(sm.id_short).second) {
      schema_error("duplicate submodel idShort '" + sm.id_short + "'", sm.id_short);
    }
    auto kind = node.find("kind");
    sm.kind = SubmodelKind::from_name(kind != node.end() && kind->is_string() ? kind->get<std::string>()
                                                                              : std::string{"Other"});
    auto els = node.find("elements");
    if (els != node.end()) {
      if (!els->is_array()) {
        schema_error("elements must be an array", sm.id_short);
      }
      sm.elements = parse_elements(*els, sm.id_short);
    }
    shell.submodels.push_back(std::move(sm));
  }
  return shell;
}

json to_json(const SubmodelElement& element) {
  return std::visit(
      [&](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Opaque>) {
          return p.raw;
        } else {
          json j;
          j["idShort"] = element.id_short;
          if constexpr (std::is_same_v<T, Property>) {
            j["type"] = "Property";
            j["value"] = property_value_json(p.value);
            if (p.unit) {
              j["unit"] = *p.unit;
            }
          } else if constexpr (std::is_same_v<T, Collection>) {
            j["type"] = "Collection";
            j["children"] = json::array();
            for (const auto& c : p.children) {
              j["children"].push_back(to_json(c));
            }
          } else {
            j["type"] = "Reference";
            j["targetId"] = p.target_id;
          }
          return j;
        }
      },
      element.payload);
}

json to_json(const AdministrationShell& shell) {
  json j;
  j["id"] = shell.id;
  j["idShort"] = shell.id_short;
  j["assetKind"] = shell.asset_kind == AssetKind::instance ? "instance" : "type";
  j["submodels"] = json::array();
  for (const auto& sm : shell.submodels) {
    json s;
    s["idShort"] = sm.id_short;
    s["kind"] = sm.kind.name;
    s["elements"] = json::array();
    for (const auto& el : sm.elements) {
      s["elements"].push_back(to_json(el));
    }
    j["submodels"].push_back(std::move(s));
  }
  return j;
}

std::string serialize_shell(const AdministrationShell& shell) { return to_json(shell).dump(2) + "\n"; }

SubmodelElement resolve_id_short(const AdministrationShell& shell, std::string_view path) {
  if (path.empty()) {
    throw Error(ErrorCode::not_found, "empty idShort path");
  }
  std::vector<std::string_view> segments;
  std::size_t start = 0;
  while (true) {
    auto pos = path.find('/', start);
    segments.push_back(path.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) {
      break;
    }
    start = pos + 1;
  }

  const Submodel* sm = shell.submodel(segments.front());
  if (sm == nullptr) {
    throw Error(ErrorCode::not_found, "no submodel '" + std::string(segments.front()) + "'", std::string(path));
  }
  if (segments.size() == 1) {
    return SubmodelElement{sm->id_short, Collection{sm->elements}};
  }

  const std::vector<SubmodelElement>* level = &sm->elements;
  const SubmodelElement* current = nullptr;
  for (std::size_t i = 1; i < segments.size(); ++i) {
    if (level == nullptr) {
      throw Error(ErrorCode::not_found, "'" + std::string(segments[i - 1]) + "' is not a collection", std::string(path));
    }
    current = nullptr;
    for (const auto& el : *level) {
      if (el.id_short == segments[i]) {
        current = &el;
        break;
      }
    }
    if (current == nullptr) {
      throw Error(ErrorCode::not_found, "no element '" + std::string(segments[i]) + "'", std::string(path));
    }
    const auto* coll = current->as_collection();
    level = coll != nullptr ? &coll->children : nullptr;
  }
  return *current;
}

}  // namespace twin::aas
