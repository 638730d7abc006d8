#pragma once

/**
 * @file adaption.hpp
 * @brief Model adaption: surrogate execution, simulated-vs-measured
 *        deviation, configuration selection and the keep / reparameterize /
 *        reselect decision.
 *
 * Signals are named "{assetId}.{portName}".
 */

#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "twin/descriptor.hpp"
#include "twin/kgraph.hpp"

namespace twin::adaption {

struct Sample {
  double t = 0.0;  ///< s
  double value = 0.0;

  bool operator==(const Sample&) const = default;
};

struct TelemetrySeries {
  std::string signal;
  std::vector<Sample> samples;  ///< strictly increasing t

  bool operator==(const TelemetrySeries&) const = default;
};

std::string signal_name(std::string_view asset_id, std::string_view port);

// --- surrogate execution -----------------------------------------------------

enum class RangePolicy { clamp, strict };

struct SurrogateOutput {
  std::map<std::string, double> values;
  std::set<std::string> clamped;  ///< outputs pulled back into their port range
};

/// outputs = A x + b, clamped to the output port ranges. Strict mode rejects
/// inputs outside their port ranges with Error{out_of_range}. Throws
/// Error{no_surrogate} and Error{missing_input}.
SurrogateOutput evaluate_surrogate(const SimulationModelDescriptor& descriptor,
                                   const std::map<std::string, double>& inputs,
                                   RangePolicy policy = RangePolicy::clamp);

// --- deviation ---------------------------------------------------------------

/// RMS floor of the measured signal in the normalization.
inline constexpr double kDeviationFloor = 1e-9;

struct DeviationReport {
  std::map<std::string, double> per_signal;
  double aggregate = 0.0;  ///< max over per_signal
  double window_seconds = 0.0;

  bool operator==(const DeviationReport&) const = default;
};

/// Per signal: RMS(sim - meas) / max(RMS(meas), floor) over the simulated
/// samples within `window` seconds of the last simulated sample, with the
/// measured series linearly interpolated onto the simulated timestamps.
/// Throws Error{signal_mismatch}, Error{empty_window}, Error{validation}.
DeviationReport compute_deviation(const std::vector<TelemetrySeries>& simulated,
                                  const std::vector<TelemetrySeries>& measured, double window);

nlohmann::json to_json(const DeviationReport& report);

// --- configuration selection -------------------------------------------------

struct Budget {
  double max_computing_time = std::numeric_limits<double>::infinity();  ///< s
  double min_accuracy = 0.0;
};

struct Binding {
  std::string out_port_id;
  std::string in_port_id;
  double conversion_factor = 1.0;

  bool operator==(const Binding&) const = default;
};

struct ModelConfiguration {
  std::string system_id;
  DecisionLevel level = DecisionLevel::control;
  std::vector<std::string> assets;               ///< sequence order
  std::map<std::string, std::string> selection;  ///< assetId -> modelId
  std::vector<Binding> bindings;                 ///< connectsWith edges between selected models
  double total_computing_time = 0.0;
  double min_accuracy = 0.0;

  /// Model ids in sequence order.
  std::vector<std::string> model_vector() const;

  bool operator==(const ModelConfiguration&) const = default;
};

nlohmann::json to_json(const ModelConfiguration& c);
ModelConfiguration configuration_from_json(const nlohmann::json& j);

struct SelectionOptions {
  std::set<std::string> exclude;               ///< model ids never selected
  std::set<std::string> exogenous_quantities;  ///< inputs of these quantities need no binding
};

/**
 * Backtracking search over per-asset candidate models of the given decision
 * level. An input port with no incoming connectsWith edge in the graph is
 * exogenous; every other input of a non-first asset's model needs an edge
 * from a selected model. Maximizes the minimum accuracy, then minimizes the
 * total computing time, then takes the lexicographically smallest model-id
 * vector. Throws Error{infeasible} naming the blocking asset.
 */
ModelConfiguration select_configuration(const kg::KnowledgeGraph& graph, DecisionLevel level, const Budget& budget,
                                        const SelectionOptions& options = {});

/// Rechecks every ModelConfiguration invariant against the graph; returns the
/// first violation, or nullopt.
std::optional<std::string> check_configuration(const kg::KnowledgeGraph& graph, const ModelConfiguration& c,
                                               const Budget& budget, const SelectionOptions& options = {});

// --- adaption decision -------------------------------------------------------

struct Thresholds {
  double epsilon = 0.05;
  double escalation = 4.0;
};

/// Relative slack applied at both thresholds so that an aggregate landing on
/// a boundary in exact arithmetic is not pushed across it by rounding.
inline constexpr double kThresholdSlack = 1e-9;

enum class Verdict { keep, reparameterize, reselect };

std::string_view to_string(Verdict v);

/// keep if aggregate <= eps, reparameterize if <= escalation * eps, else reselect.
Verdict classify(double aggregate, const Thresholds& thresholds);

struct AdaptionDecision {
  Verdict verdict = Verdict::keep;
  std::optional<std::string> offending_model;
  std::optional<SurrogateSpec> new_parameters;        ///< iff reparameterize
  std::optional<ModelConfiguration> new_configuration;  ///< iff reselect
  std::string rationale;
};

nlohmann::json to_json(const AdaptionDecision& d);

/// Measured series of the window: inputs and outputs of the selected models.
struct WindowData {
  std::vector<TelemetrySeries> measured;
};

/// Least-squares refit of an affine surrogate on the window's (input, output)
/// pairs. Throws Error{degenerate_fit} if the design matrix is rank-deficient
/// or a signal is missing.
SurrogateSpec refit_surrogate(const SimulationModelDescriptor& descriptor, const WindowData& window);

/**
 * Decides how to react to a deviation report and records `lastDeviation` /
 * `evaluationCount` on the Model nodes of the current configuration. The
 * offending model is the selected model of the asset owning the signal with
 * the largest deviation. A degenerate refit falls back to reselection.
 * Throws Error{validation} for eps <= 0 or escalation <= 1, and propagates
 * Error{infeasible} from reselection.
 */
AdaptionDecision adapt(kg::KnowledgeGraph& graph, const ModelConfiguration& current, const DeviationReport& deviation,
                       const Thresholds& thresholds, const Budget& budget, const WindowData& window,
                       const SelectionOptions& options = {});

/// Writes a reparameterization into the offending Model node, or swaps in the
/// new configuration.
void apply_decision(kg::KnowledgeGraph& graph, ModelConfiguration& current, const AdaptionDecision& decision);

}  // namespace twin::adaption
