#pragma once

/**
 * @file descriptor.hpp
 * @brief Behavior-model descriptors read from the Simulation submodel, and
 *        Bill-of-Material child references.
 */

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "twin/aas.hpp"

namespace twin {

/// Model hierarchy pyramid, bottom to top.
enum class LevelOfDetail { molecular, phase, process_unit, plant, production_system };
enum class DecisionLevel { control, scheduling, planning };
enum class Direction { input, output };
enum class Datatype { real, integer, boolean, string };

std::string_view to_string(LevelOfDetail v);
std::string_view to_string(DecisionLevel v);
std::string_view to_string(Direction v);
std::string_view to_string(Datatype v);

// Parse the wire names above; nullopt for anything else.
std::optional<LevelOfDetail> level_of_detail_from(std::string_view s);
std::optional<DecisionLevel> decision_level_from(std::string_view s);
std::optional<Direction> direction_from(std::string_view s);
std::optional<Datatype> datatype_from(std::string_view s);

struct SolverSpec {
  std::string method;
  double step_size = 0.0;  ///< s, > 0
  double tolerance = 0.0;  ///< > 0

  bool operator==(const SolverSpec&) const = default;
};

struct Parameter {
  std::string name;
  double value = 0.0;
  std::string unit;

  bool operator==(const Parameter&) const = default;
};

struct Port {
  std::string name;
  Direction direction = Direction::input;
  std::string quantity;  ///< physical quantity token, e.g. "h2_mass_flow"
  std::string unit;
  double min = 0.0;
  double max = 0.0;
  Datatype datatype = Datatype::real;

  bool operator==(const Port&) const = default;
};

/// y = A x + b over the named input and output ports.
struct SurrogateSpec {
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<std::vector<double>> a;  ///< outputs x inputs
  std::vector<double> b;               ///< outputs

  bool operator==(const SurrogateSpec&) const = default;
};

struct SimulationModelDescriptor {
  std::string model_id;
  std::string owner_asset_id;
  std::string storage_location;
  std::string simulation_environment;
  SolverSpec solver;
  std::vector<Parameter> parameters;
  std::vector<Port> ports;
  LevelOfDetail level_of_detail = LevelOfDetail::process_unit;
  std::string discipline;
  DecisionLevel decision_level = DecisionLevel::control;
  double computing_time = 0.0;  ///< s
  double accuracy = 0.0;        ///< [0, 1]
  std::optional<SurrogateSpec> surrogate;

  const Port* port(std::string_view name) const;

  bool operator==(const SimulationModelDescriptor&) const = default;
};

/// Throws Error{schema} naming the first violated invariant; `path` prefixes
/// the reported location.
void validate(const SimulationModelDescriptor& d, const std::string& path = {});
void validate(const SurrogateSpec& s, const std::vector<Port>& ports, const std::string& path = {});

/// One descriptor per model collection in every Simulation submodel, in
/// document order. Shells without one yield an empty list.
std::vector<SimulationModelDescriptor> extract_simulation_descriptors(const aas::AdministrationShell& shell);

/// Reference targets of the BillOfMaterial submodel, in document order.
/// Throws Error{schema} unless the submodel's Archetype is "Full".
std::vector<std::string> extract_bom(const aas::AdministrationShell& shell);

nlohmann::json to_json(const Port& p);
nlohmann::json to_json(const SurrogateSpec& s);
nlohmann::json to_json(const SimulationModelDescriptor& d);
Port port_from_json(const nlohmann::json& j);
SurrogateSpec surrogate_from_json(const nlohmann::json& j);
SimulationModelDescriptor descriptor_from_json(const nlohmann::json& j);

}  // namespace twin
