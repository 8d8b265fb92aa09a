#include "hbndb/stats.hpp"

#include <cmath>
#include <optional>

#include "hbndb/error.hpp"

namespace hbndb {

HistogramProperty parse_histogram_property(std::string_view name) {
  if (name == "zpl") return HistogramProperty::Zpl;
  if (name == "lifetime") return HistogramProperty::Lifetime;
  if (name == "misalignment") return HistogramProperty::Misalignment;
  throw Error("unknown_property", "unknown histogram property '" + std::string(name) + "'");
}

std::string_view to_string(HistogramProperty p) {
  switch (p) {
    case HistogramProperty::Zpl: return "zpl";
    case HistogramProperty::Lifetime: return "lifetime";
    case HistogramProperty::Misalignment: return "misalignment";
  }
  return "unknown";
}

std::string group_label(const DefectRecord& r) {
  if (!r.host_group) return "none";
  static const char* names[] = {"III", "IV", "V", "VI"};
  const int g = *r.host_group;
  return (g >= 3 && g <= 6) ? names[g - 3] : "none";
}

namespace {

std::optional<double> property_value(const TransitionRecord& t, HistogramProperty p) {
  switch (p) {
    case HistogramProperty::Zpl: return t.zpl;
    case HistogramProperty::Lifetime:
      if (!t.radiative_lifetime || !std::isfinite(*t.radiative_lifetime) || !(*t.radiative_lifetime > 0.0)) {
        return std::nullopt;
      }
      return std::log10(*t.radiative_lifetime);
    case HistogramProperty::Misalignment: return t.misalignment_deg;
  }
  return std::nullopt;
}

}  // namespace

HistogramReport stats(const std::vector<DefectRecord>& records, HistogramProperty property, double bin_width) {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) throw Error("bad_bin_width", "bin width must be positive");
  HistogramReport rep;
  rep.property = property;
  rep.bin_width = bin_width;
  rep.log10_scale = property == HistogramProperty::Lifetime;
  for (const auto& g : histogram_groups()) rep.group_totals[g] = 0;

  std::map<long long, std::map<std::string, int>> by_index;
  for (const auto& r : records) {
    const std::string group = group_label(r);
    for (const auto& t : r.transitions) {
      const auto v = property_value(t, property);
      if (!v) continue;
      const auto idx = static_cast<long long>(std::floor(*v / bin_width));
      ++by_index[idx][group];
      ++rep.group_totals[group];
      ++rep.total;
    }
  }
  if (by_index.empty()) return rep;
  const long long first = by_index.begin()->first;
  const long long last = by_index.rbegin()->first;
  for (long long i = first; i <= last; ++i) {
    HistogramBin bin;
    bin.lo = static_cast<double>(i) * bin_width;
    bin.hi = static_cast<double>(i + 1) * bin_width;
    for (const auto& g : histogram_groups()) bin.counts[g] = 0;
    if (auto it = by_index.find(i); it != by_index.end()) {
      for (const auto& [g, c] : it->second) bin.counts[g] = c;
    }
    rep.bins.push_back(std::move(bin));
  }
  return rep;
}

nlohmann::json to_json(const HistogramReport& rep) {
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& b : rep.bins) bins.push_back({{"lo", b.lo}, {"hi", b.hi}, {"counts", b.counts}});
  return {{"property", std::string(to_string(rep.property))},
          {"bin_width", rep.bin_width},
          {"scale", rep.log10_scale ? "log10" : "linear"},
          {"bins", bins},
          {"group_totals", rep.group_totals},
          {"total", rep.total}};
}

std::string histogram_csv(const HistogramReport& rep) {
  std::string out = "bin_lo,bin_hi";
  for (const auto& g : histogram_groups()) out += "," + g;
  out += "\n";
  char buf[64];
  for (const auto& b : rep.bins) {
    std::snprintf(buf, sizeof buf, "%.6g,%.6g", b.lo, b.hi);
    out += buf;
    for (const auto& g : histogram_groups()) out += "," + std::to_string(b.counts.at(g));
    out += "\n";
  }
  return out;
}

}  // namespace hbndb
