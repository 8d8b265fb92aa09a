#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hbndb/model.hpp"

namespace hbndb {

enum class HistogramProperty { Zpl, Lifetime, Misalignment };

HistogramProperty parse_histogram_property(std::string_view name);  // Error("unknown_property")
std::string_view to_string(HistogramProperty property);

// Periodic-group label of a record: "III".."VI", or "none" for intrinsic defects.
std::string group_label(const DefectRecord& record);
inline const std::vector<std::string>& histogram_groups() {
  static const std::vector<std::string> groups{"III", "IV", "V", "VI", "none"};
  return groups;
}

struct HistogramBin {
  double lo = 0.0;  // inclusive, in the binned scale
  double hi = 0.0;  // exclusive
  std::map<std::string, int> counts;  // group -> count (all groups present)
};

struct HistogramReport {
  HistogramProperty property = HistogramProperty::Zpl;
  double bin_width = 0.0;
  bool log10_scale = false;  // lifetime bins are on log10(seconds)
  std::vector<HistogramBin> bins;
  std::map<std::string, int> group_totals;
  int total = 0;  // transitions carrying the property
};

// Exhaustive scan. Lifetimes are binned on log10(s); infinite lifetimes count
// as absent. Misalignment exists only for transitions with two in-plane polarizations.
// Errors: "bad_bin_width".
HistogramReport stats(const std::vector<DefectRecord>& records, HistogramProperty property, double bin_width);

nlohmann::json to_json(const HistogramReport& report);
// Columns: bin_lo,bin_hi,III,IV,V,VI,none
std::string histogram_csv(const HistogramReport& report);

}  // namespace hbndb
