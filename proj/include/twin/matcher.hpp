#pragma once

/**
 * @file matcher.hpp
 * @brief Port matching: links output ports of upstream models to compatible
 *        input ports of downstream models with connectsWith edges.
 *
 * A pair is compatible when, checked in this order, the quantity tokens are
 * equal, the datatypes are equal (or integer feeds real), the units convert
 * by a pure factor, and the converted output range satisfies the range rule
 * against the input range. The first failing check decides the verdict.
 */

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "twin/descriptor.hpp"
#include "twin/ingest.hpp"
#include "twin/kgraph.hpp"
#include "twin/units.hpp"

namespace twin::matcher {

enum class RangeMode { subset, overlap };

std::string_view to_string(RangeMode m);
std::optional<RangeMode> range_mode_from(std::string_view s);

enum class Verdict { match, unit_mismatch, dimension_mismatch, range_violation, datatype_mismatch };

std::string_view to_string(Verdict v);

struct MatchResult {
  Verdict verdict = Verdict::match;
  std::optional<double> conversion_factor;  ///< set iff verdict == match
  std::string detail;
};

/// Throws Error{direction} unless `out` is an output and `in` an input port.
MatchResult ports_compatible(const units::UnitRegistry& registry, const Port& out, const Port& in, RangeMode mode);

struct MatchedEdge {
  std::string out_port_id;  ///< port node id
  std::string in_port_id;
  double conversion_factor = 1.0;

  bool operator==(const MatchedEdge&) const = default;
};

struct ExcludedModel {
  std::string model_id;
  std::string reason;

  bool operator==(const ExcludedModel&) const = default;
};

struct UnsatisfiedInput {
  std::string model_id;
  std::string port_name;

  bool operator==(const UnsatisfiedInput&) const = default;
};

inline constexpr std::string_view kReasonNotInSequence = "asset not in production sequence";
inline constexpr std::string_view kReasonNoConnections = "no topology connections";

struct MatchReport {
  RangeMode range_mode = RangeMode::subset;
  std::vector<MatchedEdge> edges_added;           ///< sorted by (out, in)
  std::vector<ExcludedModel> excluded_models;     ///< sorted by model id
  std::vector<UnsatisfiedInput> unsatisfied_inputs;  ///< sorted by (model, port)

  bool operator==(const MatchReport&) const = default;
};

nlohmann::json to_json(const MatchReport& report);
MatchReport match_report_from_json(const nlohmann::json& j);

/**
 * Pairs every output port of a model owned by the asset at sequence position
 * i with every input port of a model owned by the asset at position j > i,
 * and writes a connectsWith edge {conversionFactor, rangeMode} per match.
 * Existing connectsWith edges are replaced. Models of assets outside the
 * sequence are excluded up front; models left without any connectsWith edge
 * are excluded afterwards. Inputs of models of the first asset are exogenous
 * and never reported unsatisfied.
 *
 * Throws Error{consistency} if the graph was built for another sequence.
 */
std::pair<kg::KnowledgeGraph, MatchReport> match_ports(const kg::KnowledgeGraph& graph,
                                                       const ingest::ProductionSequence& sequence,
                                                       const units::UnitRegistry& registry,
                                                       RangeMode mode = RangeMode::subset);

}  // namespace twin::matcher
