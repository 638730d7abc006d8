#pragma once

/**
 * @file aas.hpp
 * @brief Asset Administration Shell subset: shells, submodels and the
 *        ID-Short addressable element tree.
 *
 * The canonical document is one JSON object per shell:
 *
 *   { "id", "idShort", "assetKind": "instance"|"type",
 *     "submodels": [ { "idShort", "kind", "elements": [...] } ] }
 *
 * Elements carry a `type` discriminator: `Property` (value + optional unit),
 * `Collection` (children) or `Reference` (targetId). Element types outside
 * that set are kept verbatim as Opaque elements.
 */

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace twin::aas {

enum class AssetKind { instance, type };

using PropertyValue = std::variant<std::string, double, bool>;

struct Property {
  PropertyValue value;
  std::optional<std::string> unit;

  bool operator==(const Property&) const = default;
};

struct SubmodelElement;

struct Collection {
  std::vector<SubmodelElement> children;
};

struct Reference {
  std::string target_id;

  bool operator==(const Reference&) const = default;
};

/// Element of an unknown type, preserved as its raw JSON object.
struct Opaque {
  std::string type;
  nlohmann::json raw;

  bool operator==(const Opaque&) const = default;
};

struct SubmodelElement {
  std::string id_short;
  std::variant<Property, Collection, Reference, Opaque> payload;

  const Property* as_property() const { return std::get_if<Property>(&payload); }
  const Collection* as_collection() const { return std::get_if<Collection>(&payload); }
  const Reference* as_reference() const { return std::get_if<Reference>(&payload); }

  /// Child by idShort; nullptr if this is not a collection or no child matches.
  const SubmodelElement* child(std::string_view id_short) const;
};

bool operator==(const Collection& a, const Collection& b);
bool operator==(const SubmodelElement& a, const SubmodelElement& b);

struct SubmodelKind {
  enum class Tag { simulation, bill_of_material, other };

  Tag tag = Tag::other;
  std::string name;  ///< wire name; "Simulation", "BillOfMaterial" or anything else

  static SubmodelKind from_name(std::string name);

  bool operator==(const SubmodelKind&) const = default;
};

struct Submodel {
  std::string id_short;
  SubmodelKind kind;
  std::vector<SubmodelElement> elements;

  bool operator==(const Submodel&) const = default;
};

struct AdministrationShell {
  std::string id;
  std::string id_short;
  AssetKind asset_kind = AssetKind::instance;
  std::vector<Submodel> submodels;

  const Submodel* submodel(std::string_view id_short) const;

  bool operator==(const AdministrationShell&) const = default;
};

/// True for tokens of the form [A-Za-z][A-Za-z0-9_]*.
bool is_valid_id_short(std::string_view s);

/// Parses a canonical shell document. Throws Error{syntax} on malformed JSON
/// and Error{schema} (with an idShort path) on structural violations.
AdministrationShell parse_shell(std::string_view document);
AdministrationShell parse_shell_json(const nlohmann::json& document);

nlohmann::json to_json(const AdministrationShell& shell);
nlohmann::json to_json(const SubmodelElement& element);

/// Canonical text form: pretty-printed JSON with a trailing newline.
std::string serialize_shell(const AdministrationShell& shell);

/// Resolves a `/`-separated, case-sensitive idShort path. The first segment
/// names a submodel; a single-segment path yields the submodel's elements
/// wrapped in a collection. Throws Error{not_found}.
SubmodelElement resolve_id_short(const AdministrationShell& shell, std::string_view path);

}  // namespace twin::aas
