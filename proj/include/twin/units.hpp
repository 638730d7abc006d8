#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace twin::units {

/// Exponents over (mass, length, time, temperature, amount, current, luminosity).
using Dimension = std::array<int, 7>;

struct UnitDef {
  Dimension dimension{};
  double scale_to_base = 1.0;  ///< value_base = value * scale + offset
  double affine_offset = 0.0;
};

class UnitRegistry {
 public:
  /// SI-anchored built-ins: W kW MW, kg/h kg/s g/s g/h t/h, K °C, Pa kPa bar
  /// mbar, mol/h mol/s kmol/h, V A, s min h, and a few more.
  static UnitRegistry builtin();

  /// Adds or replaces a unit. Throws Error{validation} unless scale > 0.
  void define(std::string symbol, UnitDef def);

  /// Merges an extension document (JSON array, or {"units": [...]}, of
  /// {symbol, dimension: [7 ints], scaleToBase, affineOffset?}) over the
  /// current entries. Throws Error{syntax} / Error{schema}.
  void merge_json(std::string_view text);

  const UnitDef* find(std::string_view symbol) const;
  std::vector<std::string> symbols() const;

 private:
  std::map<std::string, UnitDef, std::less<>> units_;
};

struct Conversion {
  enum class Status { convertible, dimension_mismatch, affine };

  Status status = Status::convertible;
  double factor = 1.0;  ///< valid iff convertible: value_to = value_from * factor
  std::string reason;

  bool convertible() const { return status == Status::convertible; }
};

/// Multiplicative conversion between two registered units. Identical symbols
/// convert with factor 1 even when affine; otherwise affine units never
/// convert. Throws Error{unknown_unit}.
Conversion unit_conversion(const UnitRegistry& registry, std::string_view from, std::string_view to);

}  // namespace twin::units
