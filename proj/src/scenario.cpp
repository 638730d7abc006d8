#include "twin/scenario.hpp"

#include <algorithm>
#include <cmath>

#include "twin/error.hpp"

namespace twin::scenario {

namespace {

using nlohmann::json;
using adaption::Sample;
using adaption::TelemetrySeries;

double positive(const json& j, const char* key) {
  const double v = j.at(key).get<double>();
  if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::schema, std::string(key) + " must be > 0", key);
  return v;
}

double breakpoint_value(const std::vector<std::pair<double, double>>& pts, double t) {
  if (t <= pts.front().first) return pts.front().second;
  if (t >= pts.back().first) return pts.back().second;
  auto hi = std::lower_bound(pts.begin(), pts.end(), t, [](const auto& p, double x) { return p.first < x; });
  auto lo = hi - 1;
  const double w = (t - lo->first) / (hi->first - lo->first);
  return lo->second + w * (hi->second - lo->second);
}

const TruthSegment& segment_at(const std::vector<TruthSegment>& segments, double t) {
  const TruthSegment* active = &segments.front();
  for (const auto& s : segments) {
    if (s.from <= t) active = &s;
  }
  return *active;
}

// Physical side of the loop: per asset, the input/output port names and the
// sources wired into each input.
struct PlantAsset {
  std::string asset;
  SurrogateSpec nominal;
  std::vector<TruthSegment> segments;
  std::map<std::string, std::vector<std::pair<std::string, double>>> feeds;  ///< input -> (signal, factor)
};

std::vector<PlantAsset> build_plant(const kg::KnowledgeGraph& graph, const adaption::ModelConfiguration& initial,
                                    const Scenario& sc) {
  std::vector<PlantAsset> plant;
  for (const auto& asset : initial.assets) {
    const auto d = kg::model_descriptor(graph, initial.selection.at(asset));
    if (!d.surrogate) {
      throw Error(ErrorCode::no_surrogate, "initial model '" + d.model_id + "' has no surrogate", d.model_id);
    }
    PlantAsset p{asset, *d.surrogate, {}, {}};
    auto t = sc.truth.find(asset);
    if (t != sc.truth.end()) {
      p.segments = t->second;
    } else {
      p.segments.push_back({0.0, d.surrogate->a, d.surrogate->b});
    }
    for (const auto& seg : p.segments) {
      const bool rows_ok = seg.a.size() == p.nominal.outputs.size() && seg.b.size() == p.nominal.outputs.size();
      const bool cols_ok = std::all_of(seg.a.begin(), seg.a.end(),
                                       [&](const auto& row) { return row.size() == p.nominal.inputs.size(); });
      if (!rows_ok || !cols_ok) {
        throw Error(ErrorCode::schema,
                    "truth for '" + asset + "' must be " + std::to_string(p.nominal.outputs.size()) + "x" +
                        std::to_string(p.nominal.inputs.size()) + " like its initial surrogate",
                    "truth/" + asset);
      }
    }
    for (const auto& in : p.nominal.inputs) {
      const auto signal = adaption::signal_name(asset, in);
      if (sc.exogenous.count(signal) != 0) continue;
      const auto port_id = kg::port_node_id(d.model_id, in);
      for (const auto& b : initial.bindings) {
        if (b.in_port_id != port_id) continue;
        const auto& src = graph.node(b.out_port_id)->properties;
        p.feeds[in].emplace_back(
            adaption::signal_name(src.at("ownerAssetId").get<std::string>(), src.at("name").get<std::string>()),
            b.conversion_factor);
      }
      if (p.feeds.count(in) == 0) {
        throw Error(ErrorCode::missing_input, "plant input '" + signal + "' is neither exogenous nor wired", signal);
      }
    }
    plant.push_back(std::move(p));
  }
  for (const auto& [asset, _] : sc.truth) {
    if (std::find(initial.assets.begin(), initial.assets.end(), asset) == initial.assets.end()) {
      throw Error(ErrorCode::consistency, "truth given for asset '" + asset + "' outside the sequence", asset);
    }
  }
  return plant;
}

std::vector<TelemetrySeries> as_series(const std::map<std::string, std::vector<Sample>>& all) {
  std::vector<TelemetrySeries> out;
  for (const auto& [signal, samples] : all) out.push_back({signal, samples});
  return out;
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::syntax, e.what(), "byte " + std::to_string(e.byte));
  }
  Scenario sc;
  try {
    sc.system_id = j.at("systemId").get<std::string>();
    const auto level = decision_level_from(j.value("level", std::string("Control")));
    if (!level) throw Error(ErrorCode::schema, "unknown decision level", "level");
    sc.level = *level;
    sc.duration = positive(j, "duration");
    if (j.contains("sampleInterval")) sc.sample_interval = positive(j, "sampleInterval");
    if (j.contains("window")) sc.window = positive(j, "window");
    const auto exogenous = j.value("exogenous", json::object());
    for (const auto& [signal, pts] : exogenous.items()) {
      auto& series = sc.exogenous[signal];
      for (const auto& p : pts) series.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
      if (series.empty()) throw Error(ErrorCode::schema, "exogenous series without breakpoints", signal);
      for (std::size_t i = 1; i < series.size(); ++i) {
        if (!(series[i].first > series[i - 1].first)) {
          throw Error(ErrorCode::schema, "breakpoint times must increase", signal);
        }
      }
    }
    const auto truth = j.value("truth", json::array());
    for (const auto& t : truth) {
      const auto asset = t.at("asset").get<std::string>();
      auto& segments = sc.truth[asset];
      if (!segments.empty()) throw Error(ErrorCode::schema, "asset listed twice", "truth/" + asset);
      for (const auto& s : t.at("segments")) {
        segments.push_back({s.value("from", 0.0), s.at("A").get<std::vector<std::vector<double>>>(),
                            s.at("b").get<std::vector<double>>()});
      }
      if (segments.empty()) throw Error(ErrorCode::schema, "truth without segments", "truth/" + asset);
      for (std::size_t i = 1; i < segments.size(); ++i) {
        if (!(segments[i].from > segments[i - 1].from)) {
          throw Error(ErrorCode::schema, "segment start times must increase", "truth/" + asset);
        }
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema, std::string("malformed scenario: ") + e.what());
  }
  return sc;
}

json to_json(const WindowRecord& r) {
  json j{{"window", r.index},
         {"tStart", r.t_start},
         {"tEnd", r.t_end},
         {"selection", r.selection},
         {"perSignal", r.deviation.per_signal},
         {"aggregate", r.deviation.aggregate}};
  const auto decision = adaption::to_json(r.decision);
  for (const auto& [k, v] : decision.items()) j[k] = v;
  return j;
}

std::string to_ndjson(const std::vector<WindowRecord>& records) {
  std::string out;
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  return out;
}

LoopResult run_closed_loop(kg::KnowledgeGraph graph, const Scenario& sc, const LoopOptions& options) {
  const auto seq = kg::recorded_sequence(graph);
  if (seq.system_id != sc.system_id) {
    throw Error(ErrorCode::consistency,
                "scenario is for system '" + sc.system_id + "' but the graph holds '" + seq.system_id + "'",
                sc.system_id);
  }
  for (const auto& [signal, _] : sc.exogenous) {
    const auto dot = signal.rfind('.');
    if (dot == std::string::npos || !seq.position(signal.substr(0, dot))) {
      throw Error(ErrorCode::consistency, "exogenous signal '" + signal + "' names no sequenced asset", signal);
    }
  }
  const double window = options.window.value_or(sc.window);
  if (!(window > 0.0)) throw Error(ErrorCode::validation, "window must be > 0");

  LoopResult result;
  auto current = adaption::select_configuration(graph, sc.level, options.budget, options.selection);
  result.initial = current;
  const auto plant = build_plant(graph, current, sc);

  std::map<std::string, std::vector<Sample>> measured;
  std::map<std::string, std::vector<Sample>> simulated;
  std::size_t window_index = 0;
  std::size_t step = 0;

  // Histories hold the current window only; models change only between windows.
  auto close_window = [&]() {
    const bool scorable = !simulated.empty() && simulated.begin()->second.size() >= 2;
    if (!scorable) return;  // a trailing sliver cannot be scored
    const auto sim = as_series(simulated);
    const auto meas_all = as_series(measured);
    std::vector<TelemetrySeries> meas_out;
    for (const auto& s : meas_all) {
      if (simulated.count(s.signal) != 0) meas_out.push_back(s);
    }
    WindowRecord rec;
    rec.index = window_index;
    rec.t_start = sim.front().samples.front().t;
    rec.t_end = sim.front().samples.back().t;
    rec.selection = current.model_vector();
    rec.deviation = adaption::compute_deviation(sim, meas_out, window);
    rec.decision = adaption::adapt(graph, current, rec.deviation, options.thresholds, options.budget,
                                   adaption::WindowData{meas_all}, options.selection);
    adaption::apply_decision(graph, current, rec.decision);
    result.records.push_back(std::move(rec));
  };

  for (;; ++step) {
    const double t = static_cast<double>(step) * sc.sample_interval;
    if (!(t < sc.duration)) break;
    const auto index = static_cast<std::size_t>(std::floor(t / window + 1e-9));
    if (index != window_index) {
      close_window();
      measured.clear();
      simulated.clear();
      window_index = index;
    }

    // Plant, in sequence order so that upstream outputs exist.
    std::map<std::string, double> now;
    for (const auto& p : plant) {
      std::vector<double> u;
      for (const auto& in : p.nominal.inputs) {
        const auto signal = adaption::signal_name(p.asset, in);
        double v = 0.0;
        auto ex = sc.exogenous.find(signal);
        if (ex != sc.exogenous.end()) {
          v = breakpoint_value(ex->second, t);
        } else {
          for (const auto& [src, factor] : p.feeds.at(in)) v += now.at(src) * factor;
        }
        now[signal] = v;
        u.push_back(v);
      }
      const auto& seg = segment_at(p.segments, t);
      for (std::size_t r = 0; r < p.nominal.outputs.size(); ++r) {
        double y = seg.b[r];
        for (std::size_t c = 0; c < u.size(); ++c) y += seg.a[r][c] * u[c];
        now[adaption::signal_name(p.asset, p.nominal.outputs[r])] = y;
      }
    }
    for (const auto& [signal, v] : now) measured[signal].push_back({t, v});

    // Twin: each selected model fed with the measured inputs of its asset.
    for (const auto& asset : current.assets) {
      const auto d = kg::model_descriptor(graph, current.selection.at(asset));
      std::map<std::string, double> inputs;
      for (const auto& p : d.ports) {
        if (p.direction != Direction::input) continue;
        auto it = now.find(adaption::signal_name(asset, p.name));
        if (it != now.end()) inputs[p.name] = it->second;
      }
      const auto out = adaption::evaluate_surrogate(d, inputs);
      for (const auto& [port, v] : out.values) simulated[adaption::signal_name(asset, port)].push_back({t, v});
    }
  }
  close_window();

  result.final_configuration = current;
  result.graph = std::move(graph);
  return result;
}

}  // namespace twin::scenario
