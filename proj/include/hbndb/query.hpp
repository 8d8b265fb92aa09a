#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hbndb/bundle.hpp"
#include "hbndb/lineshape.hpp"
#include "hbndb/model.hpp"

namespace hbndb {

inline constexpr double kDefaultZplTolerance = 0.4;  // eV; DFT accuracy + residual strain

struct ZplCriterion {
  double value = 0.0;  // eV
  double tolerance = kDefaultZplTolerance;
};

struct LifetimeCriterion {
  double min = 0.0;  // s
  double max = 0.0;  // s
};

// An observed set of photophysical properties. A transition matches when it
// satisfies every present criterion.
struct Signature {
  std::optional<ZplCriterion> zpl;
  std::optional<LifetimeCriterion> lifetime;
  std::optional<double> visibility_min;        // emission visibility
  std::optional<double> misalignment_max_deg;
  std::optional<SpinMultiplicity> spin;
  std::optional<int> charge;
  std::vector<std::string> must_contain_elements;
  std::optional<std::string> host_group;       // "III".."VI" or "none"

  std::size_t criteria_count() const;
};

// Throws Error("invalid_signature") when no criterion is present or a parameter is out of range.
void validate_signature(const Signature& signature);

struct Match {
  std::string defect_id;
  std::size_t transition_index = 0;
  std::vector<std::string> matched_criteria;
  int criteria_satisfied = 0;
  double zpl_distance = 0.0;       // eV, 0 when no ZPL criterion
  double lifetime_distance = 0.0;  // |log10 tau - log10 midpoint|, 0 when no lifetime criterion

  bool operator==(const Match&) const = default;
};

// Criterion names, in the order they are reported.
std::vector<std::string> satisfied_criteria(const Signature& s, const DefectRecord& r, const TransitionRecord& t);
bool transition_matches(const Signature& s, const DefectRecord& r, const TransitionRecord& t);
// Ranking: ZPL distance, then lifetime distance, then id, then transition index.
bool match_before(const Match& a, const Match& b);

struct ListQuery {
  std::size_t page_size = 50;
  std::string cursor;  // opaque; empty for the first page
  std::optional<SpinMultiplicity> spin;
  std::optional<int> charge;
  std::optional<std::string> element;
  std::optional<std::string> host_group;
  std::optional<double> zpl_min;  // any transition inside [zpl_min, zpl_max]
  std::optional<double> zpl_max;
};

bool defect_matches_filters(const ListQuery& q, const DefectRecord& r);

struct Page {
  std::vector<const DefectRecord*> items;
  std::optional<std::string> next_cursor;
  std::size_t total = 0;  // records passing the filters
};

// Immutable in-memory index over a bundle's records.
class Index {
 public:
  Index() = default;
  explicit Index(std::vector<DefectRecord> records, std::filesystem::path root = {});
  static Index from_bundle(const Bundle& bundle);

  std::size_t defect_count() const { return records_.size(); }
  std::size_t transition_count() const { return by_zpl_.size(); }
  const std::vector<DefectRecord>& records() const { return records_; }
  const std::filesystem::path& root() const { return root_; }

  const DefectRecord* find(std::string_view id) const;
  const DefectRecord& get_defect(std::string_view id) const;  // Error("not_found")

  std::vector<Match> identify(const Signature& signature) const;
  Page list_defects(const ListQuery& query) const;

  // HR factors of a transition's phonon file, computed at build; nullptr when absent or unreadable.
  const HRSpectrum* hr_spectrum(std::string_view id, std::size_t transition) const;

 private:
  struct Entry {
    double zpl;
    std::uint32_t defect;
    std::uint32_t transition;
  };

  std::filesystem::path root_;
  std::vector<DefectRecord> records_;                       // sorted by id
  std::vector<Entry> by_zpl_;                               // sorted by zpl
  std::map<std::string, std::vector<std::uint32_t>> by_element_;  // element -> defect positions
  std::map<std::pair<std::uint32_t, std::uint32_t>, HRSpectrum> hr_;
};

// Shared slot holding the current index; readers keep the snapshot they grabbed.
class IndexSnapshot {
 public:
  explicit IndexSnapshot(std::shared_ptr<const Index> index = std::make_shared<const Index>())
      : index_(std::move(index)) {}

  std::shared_ptr<const Index> get() const {
    std::lock_guard lock(mutex_);
    return index_;
  }
  void swap(std::shared_ptr<const Index> next) {
    std::lock_guard lock(mutex_);
    index_ = std::move(next);
  }

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const Index> index_;
};

}  // namespace hbndb
