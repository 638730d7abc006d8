#include "twin/matcher.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "twin/error.hpp"

namespace twin::matcher {

namespace {

using nlohmann::json;

std::string range_text(double lo, double hi) {
  return "[" + json(lo).dump() + ", " + json(hi).dump() + "]";
}

bool datatypes_compatible(Datatype out, Datatype in) {
  return out == in || (out == Datatype::integer && in == Datatype::real);
}

struct ModelPorts {
  std::string model_id;
  std::size_t position = 0;
  std::vector<Port> ports;
};

}  // namespace

std::string_view to_string(RangeMode m) { return m == RangeMode::subset ? "subset" : "overlap"; }

std::optional<RangeMode> range_mode_from(std::string_view s) {
  if (s == "subset") return RangeMode::subset;
  if (s == "overlap") return RangeMode::overlap;
  return std::nullopt;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::match: return "match";
    case Verdict::unit_mismatch: return "unitMismatch";
    case Verdict::dimension_mismatch: return "dimensionMismatch";
    case Verdict::range_violation: return "rangeViolation";
    case Verdict::datatype_mismatch: return "datatypeMismatch";
  }
  return "";
}

MatchResult ports_compatible(const units::UnitRegistry& registry, const Port& out, const Port& in, RangeMode mode) {
  if (out.direction != Direction::output || in.direction != Direction::input) {
    throw Error(ErrorCode::direction, "ports_compatible needs an output port and an input port",
                out.name + "->" + in.name);
  }
  if (out.quantity != in.quantity) {
    return {Verdict::dimension_mismatch, std::nullopt,
            "quantity tokens differ: " + out.quantity + " vs " + in.quantity};
  }
  if (!datatypes_compatible(out.datatype, in.datatype)) {
    return {Verdict::datatype_mismatch, std::nullopt,
            "datatype " + std::string(to_string(out.datatype)) + " cannot feed " + std::string(to_string(in.datatype))};
  }

  units::Conversion conv;
  try {
    conv = units::unit_conversion(registry, out.unit, in.unit);
  } catch (const Error& e) {
    return {Verdict::unit_mismatch, std::nullopt, e.what()};
  }
  if (conv.status == units::Conversion::Status::dimension_mismatch) {
    return {Verdict::dimension_mismatch, std::nullopt, conv.reason};
  }
  if (conv.status == units::Conversion::Status::affine) {
    return {Verdict::unit_mismatch, std::nullopt, conv.reason};
  }
  const double f = conv.factor;

  // Ranges of boolean and string ports are markers only.
  if (out.datatype == Datatype::real || out.datatype == Datatype::integer) {
    const double lo = out.min * f;
    const double hi = out.max * f;
    const bool ok = mode == RangeMode::subset ? (in.min <= lo && hi <= in.max)
                                              : (std::max(lo, in.min) <= std::min(hi, in.max));
    if (!ok) {
      return {Verdict::range_violation, std::nullopt,
              "converted output range " + range_text(lo, hi) +
                  (mode == RangeMode::subset ? " is not contained in " : " does not overlap ") +
                  range_text(in.min, in.max)};
    }
  }
  return {Verdict::match, f, {}};
}

json to_json(const MatchReport& report) {
  json edges = json::array();
  for (const auto& e : report.edges_added) {
    edges.push_back(json{{"out", e.out_port_id}, {"in", e.in_port_id}, {"conversionFactor", e.conversion_factor}});
  }
  json excluded = json::array();
  for (const auto& m : report.excluded_models) {
    excluded.push_back(json{{"modelId", m.model_id}, {"reason", m.reason}});
  }
  json unsatisfied = json::array();
  for (const auto& u : report.unsatisfied_inputs) {
    unsatisfied.push_back(json{{"modelId", u.model_id}, {"port", u.port_name}});
  }
  return json{{"rangeMode", to_string(report.range_mode)},
              {"edgesAdded", edges},
              {"excludedModels", excluded},
              {"unsatisfiedInputs", unsatisfied}};
}

MatchReport match_report_from_json(const json& j) {
  MatchReport r;
  try {
    r.range_mode = range_mode_from(j.at("rangeMode").get<std::string>()).value();
    for (const auto& e : j.at("edgesAdded")) {
      r.edges_added.push_back(
          {e.at("out").get<std::string>(), e.at("in").get<std::string>(), e.at("conversionFactor").get<double>()});
    }
    for (const auto& m : j.at("excludedModels")) {
      r.excluded_models.push_back({m.at("modelId").get<std::string>(), m.at("reason").get<std::string>()});
    }
    for (const auto& u : j.at("unsatisfiedInputs")) {
      r.unsatisfied_inputs.push_back({u.at("modelId").get<std::string>(), u.at("port").get<std::string>()});
    }
  } catch (const std::exception& e) {
    throw Error(ErrorCode::schema, std::string("malformed match report: ") + e.what());
  }
  return r;
}

std::pair<kg::KnowledgeGraph, MatchReport> match_ports(const kg::KnowledgeGraph& graph,
                                                       const ingest::ProductionSequence& sequence,
                                                       const units::UnitRegistry& registry, RangeMode mode) {
  const auto recorded = kg::recorded_sequence(graph);
  if (recorded != sequence) {
    throw Error(ErrorCode::consistency, "graph was built for a different production sequence", sequence.system_id);
  }
  for (const auto& step : sequence.steps) {
    if (graph.node(kg::asset_node_id(step)) == nullptr) {
      throw Error(ErrorCode::consistency, "sequence step '" + step + "' has no asset node", step);
    }
  }

  MatchReport report;
  report.range_mode = mode;

  // Pre-filter: only models of sequenced assets take part.
  std::vector<ModelPorts> candidates;
  for (const auto& node_id : graph.nodes_of_kind(kg::NodeKind::model)) {
    const auto d = kg::model_descriptor(graph, graph.node(node_id)->properties.at("modelId").get<std::string>());
    auto pos = sequence.position(d.owner_asset_id);
    if (!pos) {
      report.excluded_models.push_back({d.model_id, std::string(kReasonNotInSequence)});
      continue;
    }
    candidates.push_back({d.model_id, *pos, d.ports});
  }

  auto out_graph = graph;
  out_graph.remove_edges(kg::EdgeKind::connects_with);

  std::set<std::string> connected;
  std::set<std::string> bound_inputs;
  for (const auto& src : candidates) {
    for (const auto& dst : candidates) {
      if (src.position >= dst.position) continue;
      for (const auto& op : src.ports) {
        if (op.direction != Direction::output) continue;
        for (const auto& ip : dst.ports) {
          if (ip.direction != Direction::input) continue;
          const auto r = ports_compatible(registry, op, ip, mode);
          if (r.verdict != Verdict::match) continue;
          report.edges_added.push_back(
              {kg::port_node_id(src.model_id, op.name), kg::port_node_id(dst.model_id, ip.name), *r.conversion_factor});
          connected.insert(src.model_id);
          connected.insert(dst.model_id);
          bound_inputs.insert(kg::port_node_id(dst.model_id, ip.name));
        }
      }
    }
  }
  std::sort(report.edges_added.begin(), report.edges_added.end(), [](const auto& a, const auto& b) {
    return std::tie(a.out_port_id, a.in_port_id) < std::tie(b.out_port_id, b.in_port_id);
  });
  for (const auto& e : report.edges_added) {
    out_graph.add_edge({e.out_port_id, kg::EdgeKind::connects_with, e.in_port_id},
                       json{{"conversionFactor", e.conversion_factor}, {"rangeMode", to_string(mode)}});
  }

  for (const auto& m : candidates) {
    if (connected.count(m.model_id) == 0) {
      report.excluded_models.push_back({m.model_id, std::string(kReasonNoConnections)});
    }
    if (m.position == 0) continue;
    for (const auto& p : m.ports) {
      if (p.direction == Direction::input && bound_inputs.count(kg::port_node_id(m.model_id, p.name)) == 0) {
        report.unsatisfied_inputs.push_back({m.model_id, p.name});
      }
    }
  }
  std::sort(report.excluded_models.begin(), report.excluded_models.end(),
            [](const auto& a, const auto& b) { return a.model_id < b.model_id; });
  std::sort(report.unsatisfied_inputs.begin(), report.unsatisfied_inputs.end(), [](const auto& a, const auto& b) {
    return std::tie(a.model_id, a.port_name) < std::tie(b.model_id, b.port_name);
  });
  return {std::move(out_graph), std::move(report)};
}

}  // namespace twin::matcher
