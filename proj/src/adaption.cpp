#include "twin/adaption.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "twin/error.hpp"

namespace twin::adaption {

namespace {

using nlohmann::json;

void check_increasing(const TelemetrySeries& s) {
  for (std::size_t i = 1; i < s.samples.size(); ++i) {
    if (!(s.samples[i].t > s.samples[i - 1].t)) {
      throw Error(ErrorCode::validation, "timestamps must be strictly increasing", s.signal);
    }
  }
}

// Linear interpolation, holding the end values outside the sampled span.
double interpolate(const std::vector<Sample>& s, double t) {
  if (t <= s.front().t) return s.front().value;
  if (t >= s.back().t) return s.back().value;
  auto hi = std::lower_bound(s.begin(), s.end(), t, [](const Sample& a, double x) { return a.t < x; });
  if (hi->t == t) return hi->value;
  auto lo = hi - 1;
  const double w = (t - lo->t) / (hi->t - lo->t);
  return lo->value + w * (hi->value - lo->value);
}

std::string asset_of_signal(const std::string& signal) {
  const auto dot = signal.rfind('.');
  return dot == std::string::npos ? signal : signal.substr(0, dot);
}

const TelemetrySeries* find_series(const WindowData& w, const std::string& signal) {
  for (const auto& s : w.measured) {
    if (s.signal == signal) return &s;
  }
  return nullptr;
}

std::string join(const std::set<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : "; ") + p;
  return out;
}

struct Candidate {
  SimulationModelDescriptor descriptor;
  // For each bindable input port: the set of model ids with an edge into it.
  std::vector<std::pair<std::string, std::set<std::string>>> required_sources;
};

}  // namespace

std::string signal_name(std::string_view asset_id, std::string_view port) {
  return std::string(asset_id) + "." + std::string(port);
}

// --- surrogate execution -----------------------------------------------------

SurrogateOutput evaluate_surrogate(const SimulationModelDescriptor& d, const std::map<std::string, double>& inputs,
                                   RangePolicy policy) {
  if (!d.surrogate) {
    throw Error(ErrorCode::no_surrogate, "model '" + d.model_id + "' has no surrogate", d.model_id);
  }
  const auto& s = *d.surrogate;
  std::vector<double> x;
  x.reserve(s.inputs.size());
  for (const auto& name : s.inputs) {
    auto it = inputs.find(name);
    if (it == inputs.end()) {
      throw Error(ErrorCode::missing_input, "missing input '" + name + "' for model '" + d.model_id + "'", name);
    }
    if (policy == RangePolicy::strict) {
      const auto* p = d.port(name);
      if (it->second < p->min || it->second > p->max) {
        throw Error(ErrorCode::out_of_range, "input '" + name + "' outside its port range", name);
      }
    }
    x.push_back(it->second);
  }
  SurrogateOutput out;
  for (std::size_t r = 0; r < s.outputs.size(); ++r) {
    double y = s.b[r];
    for (std::size_t c = 0; c < x.size(); ++c) y += s.a[r][c] * x[c];
    const auto* p = d.port(s.outputs[r]);
    const double clamped = std::clamp(y, p->min, p->max);
    if (clamped != y) out.clamped.insert(s.outputs[r]);
    out.values[s.outputs[r]] = clamped;
  }
  return out;
}

// --- deviation ---------------------------------------------------------------

DeviationReport compute_deviation(const std::vector<TelemetrySeries>& simulated,
                                  const std::vector<TelemetrySeries>& measured, double window) {
  if (!(window > 0.0)) throw Error(ErrorCode::validation, "window must be > 0");
  std::map<std::string, const TelemetrySeries*> sim;
  std::map<std::string, const TelemetrySeries*> meas;
  for (const auto& s : simulated) {
    check_increasing(s);
    if (!sim.emplace(s.signal, &s).second) throw Error(ErrorCode::signal_mismatch, "signal listed twice", s.signal);
  }
  for (const auto& s : measured) {
    check_increasing(s);
    if (!meas.emplace(s.signal, &s).second) throw Error(ErrorCode::signal_mismatch, "signal listed twice", s.signal);
  }
  for (const auto& [name, _] : sim) {
    if (meas.count(name) == 0) throw Error(ErrorCode::signal_mismatch, "no measured series for '" + name + "'", name);
  }
  for (const auto& [name, _] : meas) {
    if (sim.count(name) == 0) throw Error(ErrorCode::signal_mismatch, "no simulated series for '" + name + "'", name);
  }
  if (sim.empty()) throw Error(ErrorCode::signal_mismatch, "no signals to compare");

  DeviationReport report;
  report.window_seconds = window;
  for (const auto& [name, s] : sim) {
    const auto& m = meas.at(name)->samples;
    if (s->samples.empty()) throw Error(ErrorCode::empty_window, "empty simulated series", name);
    const double t_start = s->samples.back().t - window;
    auto in_window = [&](const Sample& x) { return x.t >= t_start; };
    const auto n_sim = std::count_if(s->samples.begin(), s->samples.end(), in_window);
    const auto n_meas = std::count_if(m.begin(), m.end(), in_window);
    if (n_sim < 2 || n_meas < 2) {
      throw Error(ErrorCode::empty_window, "fewer than 2 samples inside the window", name);
    }
    double sum_diff = 0.0;
    double sum_meas = 0.0;
    for (const auto& x : s->samples) {
      if (!in_window(x)) continue;
      const double y = interpolate(m, x.t);
      sum_diff += (x.value - y) * (x.value - y);
      sum_meas += y * y;
    }
    const double n = static_cast<double>(n_sim);
    const double d = std::sqrt(sum_diff / n) / std::max(std::sqrt(sum_meas / n), kDeviationFloor);
    if (!std::isfinite(d)) throw Error(ErrorCode::validation, "non-finite deviation", name);
    report.per_signal[name] = d;
    report.aggregate = std::max(report.aggregate, d);
  }
  return report;
}

json to_json(const DeviationReport& r) {
  return json{{"perSignal", r.per_signal}, {"aggregate", r.aggregate}, {"windowSeconds", r.window_seconds}};
}

// --- configuration -----------------------------------------------------------

std::vector<std::string> ModelConfiguration::model_vector() const {
  std::vector<std::string> out;
  for (const auto& a : assets) out.push_back(selection.at(a));
  return out;
}

json to_json(const ModelConfiguration& c) {
  json bindings = json::array();
  for (const auto& b : c.bindings) {
    bindings.push_back(json{{"out", b.out_port_id}, {"in", b.in_port_id}, {"conversionFactor", b.conversion_factor}});
  }
  json selection = json::array();
  for (const auto& a : c.assets) selection.push_back(json{{"assetId", a}, {"modelId", c.selection.at(a)}});
  return json{{"systemId", c.system_id},
              {"decisionLevel", to_string(c.level)},
              {"selection", selection},
              {"bindings", bindings},
              {"totalComputingTime", c.total_computing_time},
              {"minAccuracy", c.min_accuracy}};
}

ModelConfiguration configuration_from_json(const json& j) {
  ModelConfiguration c;
  try {
    c.system_id = j.at("systemId").get<std::string>();
    c.level = decision_level_from(j.at("decisionLevel").get<std::string>()).value();
    for (const auto& s : j.at("selection")) {
      c.assets.push_back(s.at("assetId").get<std::string>());
      c.selection[c.assets.back()] = s.at("modelId").get<std::string>();
    }
    for (const auto& b : j.at("bindings")) {
      c.bindings.push_back(
          {b.at("out").get<std::string>(), b.at("in").get<std::string>(), b.at("conversionFactor").get<double>()});
    }
    c.total_computing_time = j.at("totalComputingTime").get<double>();
    c.min_accuracy = j.at("minAccuracy").get<double>();
  } catch (const std::exception& e) {
    throw Error(ErrorCode::schema, std::string("malformed model configuration: ") + e.what());
  }
  return c;
}

namespace {

Candidate make_candidate(const kg::KnowledgeGraph& graph, const std::string& model_id, const SelectionOptions& options,
                         bool first_asset) {
  Candidate c{kg::model_descriptor(graph, model_id), {}};
  if (first_asset) return c;
  for (const auto& p : c.descriptor.ports) {
    if (p.direction != Direction::input || options.exogenous_quantities.count(p.quantity) != 0) continue;
    const auto port_id = kg::port_node_id(model_id, p.name);
    std::set<std::string> sources;
    for (const auto& e : graph.in_edges(port_id, kg::EdgeKind::connects_with)) {
      sources.insert(graph.node(e.src)->properties.at("modelId").get<std::string>());
    }
    if (!sources.empty()) c.required_sources.emplace_back(p.name, std::move(sources));
  }
  return c;
}

std::vector<Binding> bindings_between(const kg::KnowledgeGraph& graph, const std::set<std::string>& models) {
  std::vector<Binding> out;
  for (const auto& [k, props] : graph.edges()) {
    if (k.kind != kg::EdgeKind::connects_with) continue;
    const auto& src = graph.node(k.src)->properties.at("modelId").get_ref<const std::string&>();
    const auto& dst = graph.node(k.dst)->properties.at("modelId").get_ref<const std::string&>();
    if (models.count(src) != 0 && models.count(dst) != 0) {
      out.push_back({k.src, k.dst, props.value("conversionFactor", 1.0)});
    }
  }
  return out;
}

}  // namespace

ModelConfiguration select_configuration(const kg::KnowledgeGraph& graph, DecisionLevel level, const Budget& budget,
                                        const SelectionOptions& options) {
  const auto seq = kg::recorded_sequence(graph);
  const std::size_t n = seq.steps.size();

  // Per-asset candidates after the individual filters, in model-id order.
  std::vector<std::vector<Candidate>> candidates(n);
  for (std::size_t k = 0; k < n; ++k) {
    kg::ModelFilter f;
    f.asset_id = seq.steps[k];
    f.decision_level = level;
    std::set<std::string> rejected;
    const auto ids = kg::query_models(graph, f);
    for (const auto& id : ids) {
      if (options.exclude.count(id) != 0) {
        rejected.insert(id + " is excluded");
        continue;
      }
      auto c = make_candidate(graph, id, options, k == 0);
      if (c.descriptor.accuracy < budget.min_accuracy) {
        rejected.insert(id + " accuracy " + json(c.descriptor.accuracy).dump() + " below the floor");
        continue;
      }
      if (c.descriptor.computing_time > budget.max_computing_time) {
        rejected.insert(id + " computing time " + json(c.descriptor.computing_time).dump() + " s exceeds the budget");
        continue;
      }
      candidates[k].push_back(std::move(c));
    }
    if (candidates[k].empty()) {
      const auto why = ids.empty() ? "no " + std::string(to_string(level)) + " model" : join(rejected);
      throw Error(ErrorCode::infeasible, "no viable candidate for asset '" + seq.steps[k] + "': " + why, seq.steps[k]);
    }
  }

  std::vector<const Candidate*> chosen(n, nullptr);
  std::set<std::string> chosen_ids;
  std::map<std::string, std::size_t> owner_position;
  for (std::size_t k = 0; k < n; ++k) {
    for (const auto& c : candidates[k]) owner_position[c.descriptor.model_id] = k;
  }

  std::optional<std::vector<const Candidate*>> best;
  double best_acc = -1.0;
  double best_time = 0.0;
  std::vector<bool> accepted_at(n, false);
  std::vector<std::set<std::string>> failures(n);

  // An input is decidable at position k once every possible source model has
  // a position <= k.
  auto inputs_ok = [&](const Candidate& c, std::size_t k, bool final_check, std::string& why) {
    for (const auto& [port, sources] : c.required_sources) {
      bool decidable = true;
      bool bound = false;
      for (const auto& s : sources) {
        auto pos = owner_position.find(s);
        if (pos == owner_position.end()) continue;  // never selectable
        if (pos->second > k && !final_check) decidable = false;
        if (chosen_ids.count(s) != 0) bound = true;
      }
      if (!bound && (decidable || final_check)) {
        why = c.descriptor.model_id + " input '" + port + "' has no bound source among the selected models";
        return false;
      }
    }
    return true;
  };

  std::function<void(std::size_t, double, double)> search = [&](std::size_t k, double acc, double time) {
    if (k == n) {
      std::string why;
      for (std::size_t i = 0; i < n; ++i) {
        if (!inputs_ok(*chosen[i], i, true, why)) {
          failures[n - 1].insert(why);
          return;
        }
      }
      if (!best || acc > best_acc || (acc == best_acc && time < best_time)) {
        best = chosen;
        best_acc = acc;
        best_time = time;
      }
      return;
    }
    for (const auto& c : candidates[k]) {
      const double t = time + c.descriptor.computing_time;
      const double a = std::min(acc, c.descriptor.accuracy);
      if (t > budget.max_computing_time) {
        failures[k].insert("total computing time exceeds " + json(budget.max_computing_time).dump() + " s");
        continue;
      }
      if (best && (a < best_acc || (a == best_acc && t > best_time))) continue;
      chosen[k] = &c;
      chosen_ids.insert(c.descriptor.model_id);
      std::string why;
      bool ok = true;
      // Re-check earlier picks whose inputs became decidable, then this one.
      for (std::size_t i = 0; i <= k && ok; ++i) ok = inputs_ok(*chosen[i], k, false, why);
      if (ok) {
        accepted_at[k] = true;
        search(k + 1, a, t);
      } else {
        failures[k].insert(why);
      }
      chosen_ids.erase(c.descriptor.model_id);
      chosen[k] = nullptr;
    }
  };
  search(0, std::numeric_limits<double>::infinity(), 0.0);

  if (!best) {
    std::size_t blocking = n - 1;
    for (std::size_t k = 0; k < n; ++k) {
      if (!accepted_at[k]) {
        blocking = k;
        break;
      }
    }
    throw Error(ErrorCode::infeasible,
                "no feasible configuration; blocked at asset '" + seq.steps[blocking] + "': " + join(failures[blocking]),
                seq.steps[blocking]);
  }

  ModelConfiguration cfg;
  cfg.system_id = seq.system_id;
  cfg.level = level;
  cfg.assets = seq.steps;
  std::set<std::string> ids;
  cfg.total_computing_time = 0.0;
  cfg.min_accuracy = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const auto& d = (*best)[k]->descriptor;
    cfg.selection[seq.steps[k]] = d.model_id;
    ids.insert(d.model_id);
    cfg.total_computing_time += d.computing_time;
    cfg.min_accuracy = std::min(cfg.min_accuracy, d.accuracy);
  }
  cfg.bindings = bindings_between(graph, ids);
  return cfg;
}

std::optional<std::string> check_configuration(const kg::KnowledgeGraph& graph, const ModelConfiguration& c,
                                               const Budget& budget, const SelectionOptions& options) {
  const auto seq = kg::recorded_sequence(graph);
  if (c.assets != seq.steps) return "configuration assets differ from the production sequence";
  std::set<std::string> ids;
  double time = 0.0;
  double acc = std::numeric_limits<double>::infinity();
  for (const auto& a : c.assets) {
    auto it = c.selection.find(a);
    if (it == c.selection.end()) return "asset '" + a + "' has no model";
    const auto d = kg::model_descriptor(graph, it->second);
    if (d.owner_asset_id != a) return "model '" + d.model_id + "' does not describe '" + a + "'";
    if (d.decision_level != c.level) return "model '" + d.model_id + "' has another decision level";
    if (options.exclude.count(d.model_id) != 0) return "model '" + d.model_id + "' is excluded";
    ids.insert(d.model_id);
    time += d.computing_time;
    acc = std::min(acc, d.accuracy);
  }
  for (std::size_t k = 1; k < c.assets.size(); ++k) {
    const auto cand = make_candidate(graph, c.selection.at(c.assets[k]), options, false);
    for (const auto& [port, sources] : cand.required_sources) {
      if (std::none_of(sources.begin(), sources.end(), [&](const auto& s) { return ids.count(s) != 0; })) {
        return "input '" + port + "' of '" + cand.descriptor.model_id + "' is unbound";
      }
    }
  }
  if (time != c.total_computing_time) return "totalComputingTime is not the sum of the selected models";
  if (acc != c.min_accuracy) return "minAccuracy is not the minimum of the selected models";
  if (time > budget.max_computing_time) return "computing time budget exceeded";
  if (acc < budget.min_accuracy) return "accuracy floor violated";
  if (c.bindings != bindings_between(graph, ids)) return "bindings do not match the selected models";
  return std::nullopt;
}

// --- adaption ----------------------------------------------------------------

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::keep: return "keep";
    case Verdict::reparameterize: return "reparameterize";
    case Verdict::reselect: return "reselect";
  }
  return "";
}

Verdict classify(double aggregate, const Thresholds& t) {
  if (aggregate <= t.epsilon * (1.0 + kThresholdSlack)) return Verdict::keep;
  if (aggregate <= t.escalation * t.epsilon * (1.0 + kThresholdSlack)) return Verdict::reparameterize;
  return Verdict::reselect;
}

json to_json(const AdaptionDecision& d) {
  json j{{"verdict", to_string(d.verdict)}, {"rationale", d.rationale}};
  j["offendingModel"] = d.offending_model ? json(*d.offending_model) : json(nullptr);
  if (d.new_parameters) j["newParameters"] = to_json(*d.new_parameters);
  if (d.new_configuration) j["newConfiguration"] = to_json(*d.new_configuration);
  return j;
}

SurrogateSpec refit_surrogate(const SimulationModelDescriptor& d, const WindowData& window) {
  if (!d.surrogate) throw Error(ErrorCode::degenerate_fit, "model has no affine surrogate to refit", d.model_id);
  const auto& old = *d.surrogate;
  const auto m = static_cast<Eigen::Index>(old.inputs.size());

  std::vector<const TelemetrySeries*> inputs;
  for (const auto& name : old.inputs) {
    const auto* s = find_series(window, signal_name(d.owner_asset_id, name));
    if (s == nullptr || s->samples.empty()) {
      throw Error(ErrorCode::degenerate_fit, "no measured series for input '" + name + "'", d.model_id);
    }
    inputs.push_back(s);
  }

  SurrogateSpec fitted = old;
  for (std::size_t r = 0; r < old.outputs.size(); ++r) {
    const auto* y = find_series(window, signal_name(d.owner_asset_id, old.outputs[r]));
    if (y == nullptr) {
      throw Error(ErrorCode::degenerate_fit, "no measured series for output '" + old.outputs[r] + "'", d.model_id);
    }
    const auto rows = static_cast<Eigen::Index>(y->samples.size());
    Eigen::MatrixXd design(rows, m + 1);
    Eigen::VectorXd target(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const auto& sample = y->samples[static_cast<std::size_t>(i)];
      for (Eigen::Index c = 0; c < m; ++c) design(i, c) = interpolate(inputs[static_cast<std::size_t>(c)]->samples, sample.t);
      design(i, m) = 1.0;
      target(i) = sample.value;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (rows < m + 1 || qr.rank() < m + 1) {
      throw Error(ErrorCode::degenerate_fit,
                  "rank-deficient least squares for output '" + old.outputs[r] + "' (rank " +
                      std::to_string(qr.rank()) + " of " + std::to_string(m + 1) + ")",
                  d.model_id);
    }
    const Eigen::VectorXd coef = qr.solve(target);
    for (Eigen::Index c = 0; c < m; ++c) fitted.a[r][static_cast<std::size_t>(c)] = coef(c);
    fitted.b[r] = coef(m);
  }
  return fitted;
}

AdaptionDecision adapt(kg::KnowledgeGraph& graph, const ModelConfiguration& current, const DeviationReport& deviation,
                       const Thresholds& thresholds, const Budget& budget, const WindowData& window,
                       const SelectionOptions& options) {
  if (!(thresholds.epsilon > 0.0)) throw Error(ErrorCode::validation, "epsilon must be > 0");
  if (!(thresholds.escalation > 1.0)) throw Error(ErrorCode::validation, "escalation must be > 1");

  // Knowledge extension: evaluation metadata on every selected model.
  std::map<std::string, double> per_asset;
  for (const auto& [signal, d] : deviation.per_signal) {
    auto& v = per_asset[asset_of_signal(signal)];
    v = std::max(v, d);
  }
  for (const auto& asset : current.assets) {
    const auto node_id = kg::model_node_id(current.selection.at(asset));
    const auto* node = graph.node(node_id);
    if (node == nullptr) throw Error(ErrorCode::consistency, "selected model missing from the graph", node_id);
    const auto count = node->properties.value("evaluationCount", 0);
    graph.set_node_property(node_id, "evaluationCount", count + 1);
    auto it = per_asset.find(asset);
    graph.set_node_property(node_id, "lastDeviation", it == per_asset.end() ? 0.0 : it->second);
  }

  AdaptionDecision decision;
  decision.verdict = classify(deviation.aggregate, thresholds);
  const auto agg_text = json(deviation.aggregate).dump();
  if (decision.verdict == Verdict::keep) {
    decision.rationale = "aggregate deviation " + agg_text + " within epsilon " + json(thresholds.epsilon).dump();
    return decision;
  }

  std::string worst_signal;
  double worst = -1.0;
  for (const auto& [signal, d] : deviation.per_signal) {
    if (d > worst) {
      worst = d;
      worst_signal = signal;
    }
  }
  const auto asset = asset_of_signal(worst_signal);
  auto sel = current.selection.find(asset);
  if (sel == current.selection.end()) {
    throw Error(ErrorCode::consistency, "signal '" + worst_signal + "' belongs to no selected model", worst_signal);
  }
  const auto offender = sel->second;
  decision.offending_model = offender;
  const auto descriptor = kg::model_descriptor(graph, offender);

  if (decision.verdict == Verdict::reparameterize) {
    try {
      decision.new_parameters = refit_surrogate(descriptor, window);
      decision.rationale = "aggregate deviation " + agg_text + " on " + worst_signal + "; refitted surrogate of " +
                           offender + " by least squares";
      return decision;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::degenerate_fit) throw;
      decision.verdict = Verdict::reselect;
      decision.rationale = std::string("DegenerateFit: ") + e.what() + "; falling back to reselection. ";
    }
  }

  auto opts = options;
  opts.exclude.insert(offender);
  decision.new_configuration = select_configuration(graph, descriptor.decision_level, budget, opts);
  decision.rationale += "aggregate deviation " + agg_text + " on " + worst_signal + "; reselected without " + offender;
  return decision;
}

void apply_decision(kg::KnowledgeGraph& graph, ModelConfiguration& current, const AdaptionDecision& decision) {
  if (decision.new_parameters && decision.offending_model) {
    graph.set_node_property(kg::model_node_id(*decision.offending_model), "surrogate",
                            to_json(*decision.new_parameters));
  }
  if (decision.new_configuration) {
    current = *decision.new_configuration;
  }
}

}  // namespace twin::adaption
