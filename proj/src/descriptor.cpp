#include "twin/descriptor.hpp"

#include <cmath>
#include <set>

#include "twin/error.hpp"

namespace twin {

namespace {

using aas::SubmodelElement;
using nlohmann::json;

[[noreturn]] void schema_error(const std::string& message, const std::string& path) {
  throw Error(ErrorCode::schema, message, path);
}

std::string sub(const std::string& path, std::string_view leaf) { return path + "/" + std::string(leaf); }

const aas::Property& require_property(const SubmodelElement& parent, std::string_view name,
                                      const std::string& path) {
  const auto* el = parent.child(name);
  if (el == nullptr) {
    schema_error("missing " + std::string(name), sub(path, name));
  }
  const auto* p = el->as_property();
  if (p == nullptr) {
    schema_error(std::string(name) + " must be a property", sub(path, name));
  }
  return *p;
}

std::string require_string(const SubmodelElement& parent, std::string_view name, const std::string& path) {
  const auto& p = require_property(parent, name, path);
  const auto* s = std::get_if<std::string>(&p.value);
  if (s == nullptr) {
    schema_error(std::string(name) + " must be a string", sub(path, name));
  }
  return *s;
}

double require_number(const SubmodelElement& parent, std::string_view name, const std::string& path) {
  const auto& p = require_property(parent, name, path);
  const auto* d = std::get_if<double>(&p.value);
  if (d == nullptr || !std::isfinite(*d)) {
    schema_error(std::string(name) + " must be a finite number", sub(path, name));
  }
  return *d;
}

const SubmodelElement& require_collection(const SubmodelElement& parent, std::string_view name,
                                          const std::string& path) {
  const auto* el = parent.child(name);
  if (el == nullptr) {
    schema_error("missing " + std::string(name), sub(path, name));
  }
  if (el->as_collection() == nullptr) {
    schema_error(std::string(name) + " must be a collection", sub(path, name));
  }
  return *el;
}

template <typename E>
E require_enum(const SubmodelElement& parent, std::string_view name, const std::string& path,
               std::optional<E> (*parse)(std::string_view)) {
  auto raw = require_string(parent, name, path);
  auto v = parse(raw);
  if (!v) {
    schema_error("unrecognized " + std::string(name) + " '" + raw + "'", sub(path, name));
  }
  return *v;
}

Port parse_port(const SubmodelElement& el, const std::string& path) {
  if (el.as_collection() == nullptr) {
    schema_error("port entry must be a collection", path);
  }
  Port p;
  p.name = require_string(el, "Name", path);
  p.direction = require_enum<Direction>(el, "Direction", path, direction_from);
  p.quantity = require_string(el, "Quantity", path);
  p.datatype = require_enum<Datatype>(el, "Datatype", path, datatype_from);
  const bool numeric = p.datatype == Datatype::real || p.datatype == Datatype::integer;
  p.unit = require_string(el, "Unit", path);
  if (numeric && p.unit.empty()) {
    schema_error("port '" + p.name + "' has an empty unit", sub(path, "Unit"));
  }
  if (numeric || el.child("Min") != nullptr || el.child("Max") != nullptr) {
    p.min = require_number(el, "Min", path);
    p.max = require_number(el, "Max", path);
  }
  return p;
}

std::vector<std::string> string_list(const SubmodelElement& coll, const std::string& path) {
  std::vector<std::string> out;
  for (const auto& ch : coll.as_collection()->children) {
    const auto* p = ch.as_property();
    const auto* s = p != nullptr ? std::get_if<std::string>(&p->value) : nullptr;
    if (s == nullptr) {
      schema_error("expected a string property", sub(path, ch.id_short));
    }
    out.push_back(*s);
  }
  return out;
}

std::vector<double> number_list(const SubmodelElement& coll, const std::string& path) {
  std::vector<double> out;
  for (const auto& ch : coll.as_collection()->children) {
    const auto* p = ch.as_property();
    const auto* d = p != nullptr ? std::get_if<double>(&p->value) : nullptr;
    if (d == nullptr || !std::isfinite(*d)) {
      schema_error("expected a finite number", sub(path, ch.id_short));
    }
    out.push_back(*d);
  }
  return out;
}

SurrogateSpec parse_surrogate(const SubmodelElement& el, const std::string& path) {
  if (el.as_collection() == nullptr) {
    schema_error("Surrogate must be a collection", path);
  }
  if (el.child("Kind") != nullptr) {
    auto kind = require_string(el, "Kind", path);
    if (kind != "affine") {
      schema_error("unsupported surrogate kind '" + kind + "'", sub(path, "Kind"));
    }
  }
  SurrogateSpec s;
  s.inputs = string_list(require_collection(el, "Inputs", path), sub(path, "Inputs"));
  s.outputs = string_list(require_collection(el, "Outputs", path), sub(path, "Outputs"));
  const auto& a = require_collection(el, "A", path);
  for (const auto& row : a.as_collection()->children) {
    if (row.as_collection() == nullptr) {
      schema_error("matrix row must be a collection", sub(sub(path, "A"), row.id_short));
    }
    s.a.push_back(number_list(row, sub(sub(path, "A"), row.id_short)));
  }
  s.b = number_list(require_collection(el, "b", path), sub(path, "b"));
  return s;
}

SimulationModelDescriptor parse_model(const SubmodelElement& entry, const std::string& owner,
                                      const std::string& path) {
  SimulationModelDescriptor d;
  d.owner_asset_id = owner;
  d.model_id = entry.child("ModelId") != nullptr ? require_string(entry, "ModelId", path) : entry.id_short;
  d.storage_location = require_string(entry, "StorageLocation", path);
  d.simulation_environment = require_string(entry, "SimulationEnvironment", path);

  const auto& solver = require_collection(entry, "Solver", path);
  const auto solver_path = sub(path, "Solver");
  d.solver.method = require_string(solver, "Method", solver_path);
  d.solver.step_size = require_number(solver, "StepSize", solver_path);
  d.solver.tolerance = require_number(solver, "Tolerance", solver_path);

  if (const auto* params = entry.child("Parameters"); params != nullptr) {
    if (params->as_collection() == nullptr) {
      schema_error("Parameters must be a collection", sub(path, "Parameters"));
    }
    for (const auto& p : params->as_collection()->children) {
      const auto* prop = p.as_property();
      const auto* v = prop != nullptr ? std::get_if<double>(&prop->value) : nullptr;
      if (v == nullptr) {
        schema_error("parameter must be a numeric property", sub(sub(path, "Parameters"), p.id_short));
      }
      d.parameters.push_back({p.id_short, *v, prop->unit.value_or("")});
    }
  }

  const auto& ports = require_collection(entry, "Ports", path);
  for (const auto& p : ports.as_collection()->children) {
    d.ports.push_back(parse_port(p, sub(sub(path, "Ports"), p.id_short)));
  }

  d.level_of_detail = require_enum<LevelOfDetail>(entry, "LevelOfDetail", path, level_of_detail_from);
  d.discipline = require_string(entry, "Discipline", path);
  d.decision_level = require_enum<DecisionLevel>(entry, "DecisionLevel", path, decision_level_from);
  d.computing_time = require_number(entry, "ComputingTime", path);
  d.accuracy = require_number(entry, "Accuracy", path);
  if (const auto* s = entry.child("Surrogate"); s != nullptr) {
    d.surrogate = parse_surrogate(*s, sub(path, "Surrogate"));
  }
  validate(d, path);
  return d;
}

}  // namespace

std::string_view to_string(LevelOfDetail v) {
  switch (v) {
    case LevelOfDetail::molecular: return "molecular";
    case LevelOfDetail::phase: return "phase";
    case LevelOfDetail::process_unit: return "processUnit";
    case LevelOfDetail::plant: return "plant";
    case LevelOfDetail::production_system: return "productionSystem";
  }
  return "";
}

std::string_view to_string(DecisionLevel v) {
  switch (v) {
    case DecisionLevel::control: return "Control";
    case DecisionLevel::scheduling: return "Scheduling";
    case DecisionLevel::planning: return "Planning";
  }
  return "";
}

std::string_view to_string(Direction v) { return v == Direction::input ? "input" : "output"; }

std::string_view to_string(Datatype v) {
  switch (v) {
    case Datatype::real: return "real";
    case Datatype::integer: return "integer";
    case Datatype::boolean: return "boolean";
    case Datatype::string: return "string";
  }
  return "";
}

std::optional<LevelOfDetail> level_of_detail_from(std::string_view s) {
  for (auto v : {LevelOfDetail::molecular, LevelOfDetail::phase, LevelOfDetail::process_unit, LevelOfDetail::plant,
                 LevelOfDetail::production_system}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

std::optional<DecisionLevel> decision_level_from(std::string_view s) {
  for (auto v : {DecisionLevel::control, DecisionLevel::scheduling, DecisionLevel::planning}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

std::optional<Direction> direction_from(std::string_view s) {
  if (s == "input") return Direction::input;
  if (s == "output") return Direction::output;
  return std::nullopt;
}

std::optional<Datatype> datatype_from(std::string_view s) {
  for (auto v : {Datatype::real, Datatype::integer, Datatype::boolean, Datatype::string}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

const Port* SimulationModelDescriptor::port(std::string_view name) const {
  for (const auto& p : ports) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

void validate(const SurrogateSpec& s, const std::vector<Port>& ports, const std::string& path) {
  auto check = [&](const std::vector<std::string>& names, Direction dir, const char* what) {
    std::set<std::string> seen;
    for (const auto& n : names) {
      const Port* p = nullptr;
      for (const auto& q : ports) {
        if (q.name == n) p = &q;
      }
      if (p == nullptr || p->direction != dir) {
        schema_error(std::string("surrogate ") + what + " '" + n + "' is not an " + std::string(to_string(dir)) +
                         " port",
                     path);
      }
      if (!seen.insert(n).second) {
        schema_error(std::string("surrogate ") + what + " '" + n + "' listed twice", path);
      }
    }
  };
  check(s.inputs, Direction::input, "input");
  check(s.outputs, Direction::output, "output");
  if (s.a.size() != s.outputs.size() || s.b.size() != s.outputs.size()) {
    schema_error("surrogate matrix must have one row per output", path);
  }
  for (const auto& row : s.a) {
    if (row.size() != s.inputs.size()) {
      schema_error("surrogate matrix row length must equal the input count", path);
    }
  }
}

void validate(const SimulationModelDescriptor& d, const std::string& path) {
  if (d.model_id.empty()) schema_error("empty model id", path);
  if (d.storage_location.empty()) schema_error("empty storage location", sub(path, "StorageLocation"));
  if (!(d.solver.step_size > 0.0)) schema_error("solver step size must be > 0", sub(path, "Solver/StepSize"));
  if (!(d.solver.tolerance > 0.0)) schema_error("solver tolerance must be > 0", sub(path, "Solver/Tolerance"));
  if (d.ports.empty()) schema_error("model has no ports", sub(path, "Ports"));
  std::set<std::string> names;
  for (const auto& p : d.ports) {
    if (p.name.empty()) schema_error("port with empty name", sub(path, "Ports"));
    if (!names.insert(p.name).second) schema_error("duplicate port name '" + p.name + "'", sub(path, "Ports/" + p.name));
    if (!(p.min <= p.max)) {
      schema_error("port '" + p.name + "' has min > max", sub(path, "Ports/" + p.name));
    }
  }
  if (!(d.computing_time >= 0.0)) schema_error("computing time must be >= 0", sub(path, "ComputingTime"));
  if (!(d.accuracy >= 0.0 && d.accuracy <= 1.0)) schema_error("accuracy must lie in [0,1]", sub(path, "Accuracy"));
  if (d.surrogate) validate(*d.surrogate, d.ports, sub(path, "Surrogate"));
}

std::vector<SimulationModelDescriptor> extract_simulation_descriptors(const aas::AdministrationShell& shell) {
  std::vector<SimulationModelDescriptor> out;
  for (const auto& sm : shell.submodels) {
    if (sm.kind.tag != aas::SubmodelKind::Tag::simulation) continue;
    for (const auto& entry : sm.elements) {
      const auto path = sm.id_short + "/" + entry.id_short;
      if (entry.as_collection() == nullptr) {
        schema_error("model entry must be a collection", path);
      }
      out.push_back(parse_model(entry, shell.id, path));
    }
  }
  return out;
}

std::vector<std::string> extract_bom(const aas::AdministrationShell& shell) {
  std::vector<std::string> out;
  for (const auto& sm : shell.submodels) {
    if (sm.kind.tag != aas::SubmodelKind::Tag::bill_of_material) continue;
    std::optional<std::string> archetype;
    for (const auto& el : sm.elements) {
      if (el.id_short == "Archetype") {
        const auto* p = el.as_property();
        const auto* s = p != nullptr ? std::get_if<std::string>(&p->value) : nullptr;
        archetype = s != nullptr ? *s : std::string{};
      } else if (const auto* r = el.as_reference(); r != nullptr) {
        out.push_back(r->target_id);
      }
    }
    if (archetype != "Full") {
      schema_error("bill of material archetype must be 'Full', got '" + archetype.value_or("<missing>") + "'",
                   sm.id_short + "/Archetype");
    }
  }
  return out;
}

// --- JSON form used for graph node properties -------------------------------

json to_json(const Port& p) {
  return json{{"name", p.name},
              {"direction", to_string(p.direction)},
              {"quantity", p.quantity},
              {"unit", p.unit},
              {"min", p.min},
              {"max", p.max},
              {"datatype", to_string(p.datatype)}};
}

json to_json(const SurrogateSpec& s) {
  return json{{"kind", "affine"}, {"inputs", s.inputs}, {"outputs", s.outputs}, {"A", s.a}, {"b", s.b}};
}

json to_json(const SimulationModelDescriptor& d) {
  json params = json::array();
  for (const auto& p : d.parameters) {
    params.push_back(json{{"name", p.name}, {"value", p.value}, {"unit", p.unit}});
  }
  json ports = json::array();
  for (const auto& p : d.ports) {
    ports.push_back(to_json(p));
  }
  json j{{"modelId", d.model_id},
         {"ownerAssetId", d.owner_asset_id},
         {"storageLocation", d.storage_location},
         {"simulationEnvironment", d.simulation_environment},
         {"solver", {{"method", d.solver.method}, {"stepSize", d.solver.step_size}, {"tolerance", d.solver.tolerance}}},
         {"parameters", params},
         {"ports", ports},
         {"levelOfDetail", to_string(d.level_of_detail)},
         {"discipline", d.discipline},
         {"decisionLevel", to_string(d.decision_level)},
         {"computingTime", d.computing_time},
         {"accuracy", d.accuracy}};
  if (d.surrogate) {
    j["surrogate"] = to_json(*d.surrogate);
  }
  return j;
}

Port port_from_json(const json& j) {
  Port p;
  p.name = j.at("name").get<std::string>();
  p.direction = direction_from(j.at("direction").get<std::string>()).value();
  p.quantity = j.at("quantity").get<std::string>();
  p.unit = j.at("unit").get<std::string>();
  p.min = j.at("min").get<double>();
  p.max = j.at("max").get<double>();
  p.datatype = datatype_from(j.at("datatype").get<std::string>()).value();
  return p;
}

SurrogateSpec surrogate_from_json(const json& j) {
  SurrogateSpec s;
  s.inputs = j.at("inputs").get<std::vector<std::string>>();
  s.outputs = j.at("outputs").get<std::vector<std::string>>();
  s.a = j.at("A").get<std::vector<std::vector<double>>>();
  s.b = j.at("b").get<std::vector<double>>();
  return s;
}

SimulationModelDescriptor descriptor_from_json(const json& j) {
  SimulationModelDescriptor d;
  d.model_id = j.at("modelId").get<std::string>();
  d.owner_asset_id = j.at("ownerAssetId").get<std::string>();
  d.storage_location = j.at("storageLocation").get<std::string>();
  d.simulation_environment = j.at("simulationEnvironment").get<std::string>();
  const auto& s = j.at("solver");
  d.solver = {s.at("method").get<std::string>(), s.at("stepSize").get<double>(), s.at("tolerance").get<double>()};
  for (const auto& p : j.at("parameters")) {
    d.parameters.push_back({p.at("name").get<std::string>(), p.at("value").get<double>(), p.at("unit").get<std::string>()});
  }
  for (const auto& p : j.at("ports")) {
    d.ports.push_back(port_from_json(p));
  }
  d.level_of_detail = level_of_detail_from(j.at("levelOfDetail").get<std::string>()).value();
  d.discipline = j.at("discipline").get<std::string>();
  d.decision_level = decision_level_from(j.at("decisionLevel").get<std::string>()).value();
  d.computing_time = j.at("computingTime").get<double>();
  d.accuracy = j.at("accuracy").get<double>();
  if (auto it = j.find("surrogate"); it != j.end()) {
    d.surrogate = surrogate_from_json(*it);
  }
  return d;
}

}  // namespace twin
