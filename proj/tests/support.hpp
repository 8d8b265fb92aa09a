#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "hbndb/model.hpp"
#include "hbndb/photophysics.hpp"
#include "hbndb/polarization.hpp"
#include "hbndb/query.hpp"

namespace testsupport {

namespace fs = std::filesystem;

inline fs::path fixture_dir() { return fs::path(HBNDB_FIXTURE_DIR); }
inline fs::path anchor_manifest() { return fixture_dir() / "anchor" / "manifest.ini"; }

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("hbndb_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

// Random but valid records. Values are drawn from small discrete sets so that
// ties in zpl, lifetime and ids are frequent.
class RecordFactory {
 public:
  explicit RecordFactory(std::uint64_t seed) : rng_(seed) {}

  std::vector<hbndb::DefectRecord> bundle(std::size_t max_transitions) {
    std::vector<hbndb::DefectRecord> out;
    std::vector<std::string> ids;
    std::size_t transitions = 0;
    const int n = uniform(0, static_cast<int>(max_transitions));
    for (int i = 0; i < n && transitions < max_transitions; ++i) {
      hbndb::DefectRecord r = record();
      if (std::find(ids.begin(), ids.end(), r.id) != ids.end()) continue;
      ids.push_back(r.id);
      transitions += r.transitions.size();
      out.push_back(std::move(r));
    }
    return out;
  }

  hbndb::DefectRecord record() {
    static const std::vector<std::string> elements{"C", "O", "Si", "Al", "S", "N", "B", "Ge"};
    static const std::vector<hbndb::SiteKind> sites{hbndb::SiteKind::SubstitutionB, hbndb::SiteKind::SubstitutionN,
                                                    hbndb::SiteKind::Antisite, hbndb::SiteKind::ComplexMember};
    hbndb::DefectRecord r;
    const int members = uniform(1, 3);
    for (int m = 0; m < members; ++m) {
      if (uniform(0, 3) == 0) {
        r.composition.push_back({"", uniform(0, 1) ? hbndb::SiteKind::VacancyB : hbndb::SiteKind::VacancyN});
      } else {
        r.composition.push_back({pick(elements), pick(sites)});
      }
    }
    r.charge = uniform(-1, 1);
    r.spin_multiplicity = static_cast<hbndb::SpinMultiplicity>(uniform(0, 2));
    if (uniform(0, 1)) r.host_group = uniform(3, 6);
    if (uniform(0, 4) == 0) r.variant = "v" + std::to_string(uniform(1, 3));
    r.id = hbndb::derive_id(r.composition, r.charge, r.spin_multiplicity, r.variant);
    r.ground_total_energy = -100.0 - uniform(0, 50);
    r.structure_ref = "structures/" + r.id + ".xyz";

    const int nt = uniform(0, 2);
    for (int k = 0; k < nt; ++k) {
      hbndb::TransitionRecord t;
      t.spin_channel = k == 0 ? hbndb::SpinChannel::Up : hbndb::SpinChannel::Down;
      t.zpl = 0.5 + 0.01 * uniform(0, 400);  // 0.5 .. 4.5 eV in 10 meV steps
      t.excited_total_energy = r.ground_total_energy + t.zpl;
      t.zpl = t.excited_total_energy - r.ground_total_energy;
      t.zpl_nm = 1239.84198 / t.zpl;
      if (uniform(0, 5) > 0) {
        const double mu_sq = uniform(0, 6) == 0 ? 0.0 : std::pow(10.0, 0.25 * uniform(-8, 8));
        const auto rad = hbndb::radiative_rate(t.zpl, mu_sq);
        t.radiative_rate = rad.rate;
        t.radiative_lifetime = rad.lifetime;
        t.refractive_index = rad.refractive_index_used;
      }
      if (uniform(0, 3) > 0) t.visibility_em = 0.125 * uniform(0, 8);
      if (uniform(0, 2) > 0) t.misalignment_deg = 2.5 * uniform(0, 12);
      r.transitions.push_back(t);
    }
    return r;
  }

  hbndb::Signature signature() {
    static const std::vector<std::string> elements{"C", "O", "Si", "Al", "S", "N", "B", "Ge", "Xe"};
    static const std::vector<std::string> groups{"III", "IV", "V", "VI", "none"};
    hbndb::Signature s;
    while (s.criteria_count() == 0) {
      if (uniform(0, 3) > 0) s.zpl = hbndb::ZplCriterion{0.5 + 0.01 * uniform(0, 400), 0.01 * uniform(1, 60)};
      if (uniform(0, 3) == 0) {
        const double lo = std::pow(10.0, 0.5 * uniform(-20, -12));
        s.lifetime = hbndb::LifetimeCriterion{lo, lo * std::pow(10.0, 0.5 * uniform(0, 6))};
      }
      if (uniform(0, 3) == 0) s.visibility_min = 0.125 * uniform(0, 8);
      if (uniform(0, 3) == 0) s.misalignment_max_deg = 2.5 * uniform(0, 12);
      if (uniform(0, 4) == 0) s.spin = static_cast<hbndb::SpinMultiplicity>(uniform(0, 2));
      if (uniform(0, 4) == 0) s.charge = uniform(-1, 1);
      if (uniform(0, 4) == 0) {
        const int n = uniform(1, 2);
        for (int i = 0; i < n; ++i) s.must_contain_elements.push_back(pick(elements));
      }
      if (uniform(0, 5) == 0) s.host_group = pick(groups);
    }
    return s;
  }

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  std::mt19937_64& rng() { return rng_; }

 private:
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(uniform(0, static_cast<int>(v.size()) - 1))];
  }

  std::mt19937_64 rng_;
};

struct OracleHit {
  std::string id;
  std::size_t transition = 0;
  double zpl_distance = 0.0;
  double lifetime_distance = 0.0;
};

// Exhaustive filter + sort over every transition of every record.
inline std::vector<OracleHit> brute_force_identify(const std::vector<hbndb::DefectRecord>& records,
                                                   const hbndb::Signature& s) {
  std::vector<OracleHit> hits;
  for (const auto& r : records) {
    std::vector<std::string> elems;
    for (const auto& c : r.composition)
      if (!c.element.empty()) elems.push_back(c.element);
    std::string group = "none";
    if (r.host_group) group = std::vector<std::string>{"III", "IV", "V", "VI"}[*r.host_group - 3];

    for (std::size_t k = 0; k < r.transitions.size(); ++k) {
      const auto& t = r.transitions[k];
      bool ok = true;
      if (s.zpl) ok = ok && std::abs(t.zpl - s.zpl->value) <= s.zpl->tolerance;
      if (s.lifetime) {
        ok = ok && t.radiative_lifetime && *t.radiative_lifetime >= s.lifetime->min &&
             *t.radiative_lifetime <= s.lifetime->max;
      }
      if (s.visibility_min) ok = ok && t.visibility_em && *t.visibility_em >= *s.visibility_min;
      if (s.misalignment_max_deg) ok = ok && t.misalignment_deg && *t.misalignment_deg <= *s.misalignment_max_deg;
      if (s.spin) ok = ok && r.spin_multiplicity == *s.spin;
      if (s.charge) ok = ok && r.charge == *s.charge;
      for (const auto& e : s.must_contain_elements) ok = ok && std::count(elems.begin(), elems.end(), e) > 0;
      if (s.host_group) ok = ok && group == *s.host_group;
      if (!ok) continue;

      OracleHit h{r.id, k, 0.0, 0.0};
      if (s.zpl) h.zpl_distance = std::abs(t.zpl - s.zpl->value);
      if (s.lifetime) {
        h.lifetime_distance =
            std::abs(std::log10(*t.radiative_lifetime) - 0.5 * (std::log10(s.lifetime->min) + std::log10(s.lifetime->max)));
      }
      hits.push_back(h);
    }
  }
  std::sort(hits.begin(), hits.end(), [](const OracleHit& a, const OracleHit& b) {
    return std::tie(a.zpl_distance, a.lifetime_distance, a.id, a.transition) <
           std::tie(b.zpl_distance, b.lifetime_distance, b.id, b.transition);
  });
  return hits;
}

inline bool same_result(const std::vector<hbndb::Match>& got, const std::vector<OracleHit>& want) {
  if (got.size() != want.size()) return false;
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (got[i].defect_id != want[i].id || got[i].transition_index != want[i].transition) return false;
  }
  return true;
}

}  // namespace testsupport
