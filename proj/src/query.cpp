#include "hbndb/query.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hbndb/error.hpp"
#include "hbndb/stats.hpp"

namespace hbndb {

namespace {

constexpr double kWindowSlack = 1e-9;  // index pre-filter is widened; the exact predicate decides

std::string hex_encode(std::string_view s) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (unsigned char c : s) {
    out += digits[c >> 4];
    out += digits[c & 15];
  }
  return out;
}

std::string hex_decode(std::string_view s) {
  if (s.size() % 2 != 0) throw Error("bad_cursor", "malformed cursor");
  auto val = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    throw Error("bad_cursor", "malformed cursor");
  };
  std::string out;
  for (std::size_t i = 0; i < s.size(); i += 2) out += static_cast<char>(val(s[i]) * 16 + val(s[i + 1]));
  return out;
}

bool has_elements(const DefectRecord& r, const std::vector<std::string>& wanted) {
  const auto have = elements_of(r);
  return std::all_of(wanted.begin(), wanted.end(),
                     [&](const std::string& e) { return std::binary_search(have.begin(), have.end(), e); });
}

double lifetime_midpoint_distance(const LifetimeCriterion& c, double tau) {
  const double mid = 0.5 * (std::log10(c.min) + std::log10(c.max));
  return std::abs(std::log10(tau) - mid);
}

}  // namespace

std::size_t Signature::criteria_count() const {
  return static_cast<std::size_t>(zpl.has_value()) + lifetime.has_value() + visibility_min.has_value() +
         misalignment_max_deg.has_value() + spin.has_value() + charge.has_value() +
         !must_contain_elements.empty() + host_group.has_value();
}

void validate_signature(const Signature& s) {
  if (s.criteria_count() == 0) throw Error("invalid_signature", "signature has no criteria");
  if (s.zpl) {
    if (!std::isfinite(s.zpl->value)) throw Error("invalid_signature", "zpl must be finite");
    if (!(s.zpl->tolerance > 0.0) || !std::isfinite(s.zpl->tolerance)) {
      throw Error("invalid_signature", "zpl tolerance must be positive");
    }
  }
  if (s.lifetime && !(s.lifetime->min > 0.0 && s.lifetime->min <= s.lifetime->max)) {
    throw Error("invalid_signature", "lifetime range needs 0 < min <= max");
  }
  if (s.visibility_min && !(*s.visibility_min >= 0.0 && *s.visibility_min <= 1.0)) {
    throw Error("invalid_signature", "visibility_min must lie in [0, 1]");
  }
  if (s.misalignment_max_deg && !(*s.misalignment_max_deg >= 0.0)) {
    throw Error("invalid_signature", "misalignment_max_deg must be non-negative");
  }
  if (s.host_group) {
    const auto& groups = histogram_groups();
    if (std::find(groups.begin(), groups.end(), *s.host_group) == groups.end()) {
      throw Error("invalid_signature", "host_group must be one of III, IV, V, VI, none");
    }
  }
  for (const auto& e : s.must_contain_elements) {
    if (e.empty()) throw Error("invalid_signature", "element symbols must be non-empty");
  }
}

std::vector<std::string> satisfied_criteria(const Signature& s, const DefectRecord& r, const TransitionRecord& t) {
  std::vector<std::string> out;
  if (s.zpl && std::abs(t.zpl - s.zpl->value) <= s.zpl->tolerance) out.push_back("zpl");
  if (s.lifetime && t.radiative_lifetime && *t.radiative_lifetime >= s.lifetime->min &&
      *t.radiative_lifetime <= s.lifetime->max) {
    out.push_back("lifetime");
  }
  if (s.visibility_min && t.visibility_em && *t.visibility_em >= *s.visibility_min) out.push_back("visibility");
  if (s.misalignment_max_deg && t.misalignment_deg && *t.misalignment_deg <= *s.misalignment_max_deg) {
    out.push_back("misalignment");
  }
  if (s.spin && r.spin_multiplicity == *s.spin) out.push_back("spin");
  if (s.charge && r.charge == *s.charge) out.push_back("charge");
  if (!s.must_contain_elements.empty() && has_elements(r, s.must_contain_elements)) out.push_back("elements");
  if (s.host_group && group_label(r) == *s.host_group) out.push_back("host_group");
  return out;
}

bool transition_matches(const Signature& s, const DefectRecord& r, const TransitionRecord& t) {
  return satisfied_criteria(s, r, t).size() == s.criteria_count();
}

bool match_before(const Match& a, const Match& b) {
  if (a.zpl_distance != b.zpl_distance) return a.zpl_distance < b.zpl_distance;
  if (a.lifetime_distance != b.lifetime_distance) return a.lifetime_distance < b.lifetime_distance;
  if (a.defect_id != b.defect_id) return a.defect_id < b.defect_id;
  return a.transition_index < b.transition_index;
}

bool defect_matches_filters(const ListQuery& q, const DefectRecord& r) {
  if (q.spin && r.spin_multiplicity != *q.spin) return false;
  if (q.charge && r.charge != *q.charge) return false;
  if (q.element && !has_elements(r, {*q.element})) return false;
  if (q.host_group && group_label(r) != *q.host_group) return false;
  if (q.zpl_min || q.zpl_max) {
    const double lo = q.zpl_min.value_or(-INFINITY);
    const double hi = q.zpl_max.value_or(INFINITY);
    const bool any = std::any_of(r.transitions.begin(), r.transitions.end(),
                                 [&](const TransitionRecord& t) { return t.zpl >= lo && t.zpl <= hi; });
    if (!any) return false;
  }
  return true;
}

Index::Index(std::vector<DefectRecord> records, std::filesystem::path root)
    : root_(std::move(root)), records_(std::move(records)) {
  std::sort(records_.begin(), records_.end(), [](const DefectRecord& a, const DefectRecord& b) { return a.id < b.id; });
  for (std::uint32_t d = 0; d < records_.size(); ++d) {
    const auto& r = records_[d];
    for (std::uint32_t t = 0; t < r.transitions.size(); ++t) {
      by_zpl_.push_back({r.transitions[t].zpl, d, t});
      const auto& tr = r.transitions[t];
      if (tr.phonon_ref && !root_.empty()) {
        try {
          hr_.emplace(std::pair{d, t}, hr_factors(parse_phonons(root_ / *tr.phonon_ref)));
        } catch (const Error&) {
          // leave uncached; the spectrum endpoint reports it as unavailable
        }
      }
    }
    for (const auto& e : elements_of(r)) by_element_[e].push_back(d);
  }
  std::sort(by_zpl_.begin(), by_zpl_.end(), [](const Entry& a, const Entry& b) {
    if (a.zpl != b.zpl) return a.zpl < b.zpl;
    if (a.defect != b.defect) return a.defect < b.defect;
    return a.transition < b.transition;
  });
}

Index Index::from_bundle(const Bundle& bundle) { return Index(bundle.records, bundle.root); }

const DefectRecord* Index::find(std::string_view id) const {
  auto it = std::lower_bound(records_.begin(), records_.end(), id,
                             [](const DefectRecord& r, std::string_view key) { return r.id < key; });
  return (it != records_.end() && it->id == id) ? &*it : nullptr;
}

const DefectRecord& Index::get_defect(std::string_view id) const {
  const DefectRecord* r = find(id);
  if (!r) throw Error("not_found", "no defect with id '" + std::string(id) + "'");
  return *r;
}

std::vector<Match> Index::identify(const Signature& s) const {
  validate_signature(s);
  std::vector<Match> out;
  auto consider = [&](std::uint32_t d, std::uint32_t t) {
    const auto& r = records_[d];
    const auto& tr = r.transitions[t];
    auto crit = satisfied_criteria(s, r, tr);
    if (crit.size() != s.criteria_count()) return;
    Match m;
    m.defect_id = r.id;
    m.transition_index = t;
    m.criteria_satisfied = static_cast<int>(crit.size());
    m.matched_criteria = std::move(crit);
    if (s.zpl) m.zpl_distance = std::abs(tr.zpl - s.zpl->value);
    if (s.lifetime) m.lifetime_distance = lifetime_midpoint_distance(*s.lifetime, *tr.radiative_lifetime);
    out.push_back(std::move(m));
  };

  if (s.zpl) {
    const double lo = s.zpl->value - s.zpl->tolerance - kWindowSlack;
    const double hi = s.zpl->value + s.zpl->tolerance + kWindowSlack;
    auto first = std::lower_bound(by_zpl_.begin(), by_zpl_.end(), lo,
                                  [](const Entry& e, double v) { return e.zpl < v; });
    auto last = std::upper_bound(by_zpl_.begin(), by_zpl_.end(), hi,
                                 [](double v, const Entry& e) { return v < e.zpl; });
    for (auto it = first; it != last; ++it) consider(it->defect, it->transition);
  } else if (!s.must_contain_elements.empty()) {
    const std::vector<std::uint32_t>* smallest = nullptr;
    for (const auto& e : s.must_contain_elements) {
      auto it = by_element_.find(e);
      if (it == by_element_.end()) return out;
      if (!smallest || it->second.size() < smallest->size()) smallest = &it->second;
    }
    for (std::uint32_t d : *smallest)
      for (std::uint32_t t = 0; t < records_[d].transitions.size(); ++t) consider(d, t);
  } else {
    for (const auto& e : by_zpl_) consider(e.defect, e.transition);
  }
  std::sort(out.begin(), out.end(), match_before);
  return out;
}

Page Index::list_defects(const ListQuery& q) const {
  if (q.page_size == 0) throw Error("bad_page_size", "page size must be positive");
  std::string after;
  if (!q.cursor.empty()) {
    if (q.cursor.rfind("c1.", 0) != 0) throw Error("bad_cursor", "malformed cursor");
    after = hex_decode(std::string_view(q.cursor).substr(3));
  }
  Page page;
  const DefectRecord* last = nullptr;
  bool more = false;
  for (const auto& r : records_) {
    if (!defect_matches_filters(q, r)) continue;
    ++page.total;
    if (!q.cursor.empty() && r.id <= after) continue;
    if (page.items.size() < q.page_size) {
      page.items.push_back(&r);
      last = &r;
    } else {
      more = true;
    }
  }
  if (more && last) page.next_cursor = "c1." + hex_encode(last->id);
  return page;
}

const HRSpectrum* Index::hr_spectrum(std::string_view id, std::size_t transition) const {
  auto it = std::lower_bound(records_.begin(), records_.end(), id,
                             [](const DefectRecord& r, std::string_view key) { return r.id < key; });
  if (it == records_.end() || it->id != id) return nullptr;
  const auto d = static_cast<std::uint32_t>(it - records_.begin());
  auto h = hr_.find({d, static_cast<std::uint32_t>(transition)});
  return h == hr_.end() ? nullptr : &h->second;
}

}  // namespace hbndb
