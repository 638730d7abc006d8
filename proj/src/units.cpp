#include "twin/units.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "twin/error.hpp"

namespace twin::units {

namespace {

constexpr Dimension kNone{0, 0, 0, 0, 0, 0, 0};
constexpr Dimension kMass{1, 0, 0, 0, 0, 0, 0};
constexpr Dimension kLength{0, 1, 0, 0, 0, 0, 0};
constexpr Dimension kTime{0, 0, 1, 0, 0, 0, 0};
constexpr Dimension kTemperature{0, 0, 0, 1, 0, 0, 0};
constexpr Dimension kAmount{0, 0, 0, 0, 1, 0, 0};
constexpr Dimension kCurrent{0, 0, 0, 0, 0, 1, 0};
constexpr Dimension kMassFlow{1, 0, -1, 0, 0, 0, 0};
constexpr Dimension kMolarFlow{0, 0, -1, 0, 1, 0, 0};
constexpr Dimension kPower{1, 2, -3, 0, 0, 0, 0};
constexpr Dimension kEnergy{1, 2, -2, 0, 0, 0, 0};
constexpr Dimension kPressure{1, -1, -2, 0, 0, 0, 0};
constexpr Dimension kVoltage{1, 2, -3, 0, 0, -1, 0};
constexpr Dimension kVolume{0, 3, 0, 0, 0, 0, 0};
constexpr Dimension kVolumeFlow{0, 3, -1, 0, 0, 0, 0};

constexpr double kHour = 3600.0;

std::string dimension_text(const Dimension& d) {
  static constexpr const char* kNames[] = {"M", "L", "T", "Θ", "N", "I", "J"};
  std::string out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] == 0) continue;
    out += (out.empty() ? "" : "·") + std::string(kNames[i]);
    if (d[i] != 1) out += "^" + std::to_string(d[i]);
  }
  return out.empty() ? "1" : out;
}

}  // namespace

UnitRegistry UnitRegistry::builtin() {
  UnitRegistry r;
  r.define("1", {kNone, 1.0, 0.0});
  r.define("%", {kNone, 0.01, 0.0});

  r.define("s", {kTime, 1.0, 0.0});
  r.define("min", {kTime, 60.0, 0.0});
  r.define("h", {kTime, kHour, 0.0});

  r.define("m", {kLength, 1.0, 0.0});
  r.define("m3", {kVolume, 1.0, 0.0});
  r.define("L", {kVolume, 1e-3, 0.0});
  r.define("m3/h", {kVolumeFlow, 1.0 / kHour, 0.0});

  r.define("kg", {kMass, 1.0, 0.0});
  r.define("g", {kMass, 1e-3, 0.0});
  r.define("t", {kMass, 1e3, 0.0});
  r.define("kg/s", {kMassFlow, 1.0, 0.0});
  r.define("kg/h", {kMassFlow, 1.0 / kHour, 0.0});
  r.define("g/s", {kMassFlow, 1e-3, 0.0});
  r.define("g/h", {kMassFlow, 1e-3 / kHour, 0.0});
  r.define("t/h", {kMassFlow, 1e3 / kHour, 0.0});

  r.define("mol", {kAmount, 1.0, 0.0});
  r.define("mol/s", {kMolarFlow, 1.0, 0.0});
  r.define("mol/h", {kMolarFlow, 1.0 / kHour, 0.0});
  r.define("kmol/h", {kMolarFlow, 1e3 / kHour, 0.0});

  r.define("W", {kPower, 1.0, 0.0});
  r.define("kW", {kPower, 1e3, 0.0});
  r.define("MW", {kPower, 1e6, 0.0});
  r.define("J", {kEnergy, 1.0, 0.0});
  r.define("kJ", {kEnergy, 1e3, 0.0});
  r.define("kWh", {kEnergy, 3.6e6, 0.0});

  r.define("K", {kTemperature, 1.0, 0.0});
  r.define("°C", {kTemperature, 1.0, 273.15});

  r.define("Pa", {kPressure, 1.0, 0.0});
  r.define("kPa", {kPressure, 1e3, 0.0});
  r.define("mbar", {kPressure, 1e2, 0.0});
  r.define("bar", {kPressure, 1e5, 0.0});

  r.define("A", {kCurrent, 1.0, 0.0});
  r.define("V", {kVoltage, 1.0, 0.0});
  return r;
}

void UnitRegistry::define(std::string symbol, UnitDef def) {
  if (symbol.empty()) throw Error(ErrorCode::validation, "empty unit symbol");
  if (!(def.scale_to_base > 0.0) || !std::isfinite(def.scale_to_base) || !std::isfinite(def.affine_offset)) {
    throw Error(ErrorCode::validation, "unit scale must be finite and > 0", symbol);
  }
  units_.insert_or_assign(std::move(symbol), def);
}

void UnitRegistry::merge_json(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::syntax, e.what(), "byte " + std::to_string(e.byte));
  }
  const json* list = &doc;
  if (doc.is_object() && doc.contains("units")) list = &doc["units"];
  if (!list->is_array()) throw Error(ErrorCode::schema, "unit extension must be an array of unit entries");
  for (std::size_t i = 0; i < list->size(); ++i) {
    const auto& e = (*list)[i];
    const auto where = "units/" + std::to_string(i);
    try {
      UnitDef def;
      const auto& dim = e.at("dimension");
      if (!dim.is_array() || dim.size() != 7) throw Error(ErrorCode::schema, "dimension needs 7 exponents", where);
      for (std::size_t k = 0; k < 7; ++k) def.dimension[k] = dim[k].get<int>();
      def.scale_to_base = e.at("scaleToBase").get<double>();
      def.affine_offset = e.value("affineOffset", 0.0);
      define(e.at("symbol").get<std::string>(), def);
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::schema, std::string("malformed unit entry: ") + ex.what(), where);
    } catch (const Error& ex) {
      throw Error(ErrorCode::schema, ex.what(), where);
    }
  }
}

const UnitDef* UnitRegistry::find(std::string_view symbol) const {
  auto it = units_.find(symbol);
  return it == units_.end() ? nullptr : &it->second;
}

std::vector<std::string> UnitRegistry::symbols() const {
  std::vector<std::string> out;
  for (const auto& [s, _] : units_) out.push_back(s);
  return out;
}

Conversion unit_conversion(const UnitRegistry& registry, std::string_view from, std::string_view to) {
  const auto* a = registry.find(from);
  const auto* b = registry.find(to);
  if (a == nullptr || b == nullptr) {
    const auto missing = std::string(a == nullptr ? from : to);
    throw Error(ErrorCode::unknown_unit, "unknown unit '" + missing + "'", missing);
  }
  if (from == to) {
    return {Conversion::Status::convertible, 1.0, {}};
  }
  if (a->dimension != b->dimension) {
    return {Conversion::Status::dimension_mismatch, 0.0,
            "dimensions differ: " + std::string(from) + " is " + dimension_text(a->dimension) + ", " +
                std::string(to) + " is " + dimension_text(b->dimension)};
  }
  if (a->affine_offset != 0.0 || b->affine_offset != 0.0) {
    return {Conversion::Status::affine, 0.0,
            "affine units " + std::string(from) + " and " + std::string(to) +
                " need an offset, not a conversion factor"};
  }
  return {Conversion::Status::convertible, a->scale_to_base / b->scale_to_base, {}};
}

}  // namespace twin::units
