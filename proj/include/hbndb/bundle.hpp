#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hbndb/model.hpp"

namespace hbndb {

inline constexpr const char* kBundleFormat = "hbn-defect-bundle";
inline constexpr const char* kBundleVersion = "1";
inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kRecordFileName = "defects.jsonl";

struct RecordViolation {
  std::string record_id;
  Violation violation;
};

// A loaded bundle directory: manifest.json, defects.jsonl and the
// structures/, wavefunctions/, phonons/, lineshapes/ payload directories.
// Paths inside records are relative to `root`.
struct Bundle {
  std::filesystem::path root;
  std::string version = kBundleVersion;
  std::vector<DefectRecord> records;          // sorted by id
  std::vector<RecordViolation> violations;    // collected on non-strict load

  std::filesystem::path resolve(const std::string& ref) const { return root / ref; }
};

struct LoadOptions {
  bool strict = false;  // abort on the first violation instead of collecting
};

// Throws Error with codes "missing_manifest", "unsupported_version",
// "unreadable_file", "duplicate_id", and (strict) "invalid_record" / "missing_reference".
Bundle load_bundle(const std::filesystem::path& path, const LoadOptions& options = {});

// Writes the bundle to `path` atomically: a sibling temp directory is filled
// (records, manifest, every referenced payload file copied from bundle.root)
// and then renamed over `path`.
void save_bundle(const Bundle& bundle, const std::filesystem::path& path);

// Every bundle-relative path referenced by a record.
std::vector<std::string> referenced_paths(const DefectRecord& record);

// Bundle-level checks: unique ids, per-record invariants, referenced files exist.
std::vector<RecordViolation> validate_bundle(const Bundle& bundle);

std::string bundle_manifest_text(const std::string& version);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

// Moves a fully written staging directory onto `target`, replacing any existing directory.
void commit_directory(const std::filesystem::path& staging, const std::filesystem::path& target);
std::filesystem::path staging_path_for(const std::filesystem::path& target);

}  // namespace hbndb
