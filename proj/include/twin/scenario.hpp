#pragma once

/**
 * @file scenario.hpp
 * @brief Desk-scale closed loop: a synthetic plant driven by a scenario file,
 *        the selected surrogates run against its measurements, and one
 *        adaption decision per window.
 *
 * Scenario file:
 *
 *   {
 *     "systemId": "PtX-1", "level": "Control",
 *     "duration": 180, "sampleInterval": 1, "window": 60,
 *     "exogenous": {"Electrolysis.power": [[t, value], ...], ...},
 *     "truth": [{"asset": "Electrolysis",
 *                "segments": [{"from": 0, "A": [[2.0], [16.0]], "b": [0, 0]}, ...]}]
 *   }
 *
 * The plant's port names and wiring are those of the initial configuration.
 * An asset without a truth entry behaves exactly like its initial surrogate.
 */

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "twin/adaption.hpp"
#include "twin/kgraph.hpp"

namespace twin::scenario {

struct TruthSegment {
  double from = 0.0;  ///< s, segment active for t >= from
  std::vector<std::vector<double>> a;
  std::vector<double> b;
};

struct Scenario {
  std::string system_id;
  DecisionLevel level = DecisionLevel::control;
  double duration = 0.0;
  double sample_interval = 1.0;
  double window = 60.0;
  /// signal -> breakpoints (t, value), linearly interpolated, held at the ends.
  std::map<std::string, std::vector<std::pair<double, double>>> exogenous;
  std::map<std::string, std::vector<TruthSegment>> truth;  ///< assetId -> segments by `from`
};

/// Throws Error{syntax} or Error{schema}.
Scenario parse_scenario(std::string_view text);

struct LoopOptions {
  adaption::Thresholds thresholds;
  adaption::Budget budget;
  adaption::SelectionOptions selection;
  std::optional<double> window;  ///< overrides the scenario's window
};

struct WindowRecord {
  std::size_t index = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<std::string> selection;  ///< model ids in force during the window
  adaption::DeviationReport deviation;
  adaption::AdaptionDecision decision;
};

nlohmann::json to_json(const WindowRecord& r);

struct LoopResult {
  std::vector<WindowRecord> records;
  adaption::ModelConfiguration initial;
  adaption::ModelConfiguration final_configuration;
  kg::KnowledgeGraph graph;  ///< with refits and evaluation metadata
};

/// Runs the loop on a matched graph. Throws Error{consistency} if the
/// scenario's system differs from the graph's, Error{missing_input} if a
/// plant input is neither exogenous nor wired, and whatever select/adapt raise.
LoopResult run_closed_loop(kg::KnowledgeGraph graph, const Scenario& scenario, const LoopOptions& options);

/// One JSON object per line.
std::string to_ndjson(const std::vector<WindowRecord>& records);

}  // namespace twin::scenario
