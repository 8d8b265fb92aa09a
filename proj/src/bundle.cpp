#include "hbndb/bundle.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "hbndb/error.hpp"
#include "hbndb/record_io.hpp"

namespace fs = std::filesystem;

namespace hbndb {

namespace {

constexpr const char* kPayloadDirs[] = {"structures", "wavefunctions", "phonons", "lineshapes"};

}  // namespace

std::string bundle_manifest_text(const std::string& version) {
  json m{{"format", kBundleFormat}, {"version", version}, {"record_file", kRecordFileName}};
  return m.dump(2) + "\n";
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("unreadable_file", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("unwritable_file", "cannot write " + path.string());
  out << content;
  if (!out) throw Error("unwritable_file", "failed writing " + path.string());
}

std::vector<std::string> referenced_paths(const DefectRecord& r) {
  std::vector<std::string> out;
  if (!r.structure_ref.empty()) out.push_back(r.structure_ref);
  for (const auto& t : r.transitions) {
    if (t.phonon_ref) out.push_back(*t.phonon_ref);
    if (t.lineshape_ref) out.push_back(*t.lineshape_ref);
    for (const auto& [role, p] : t.wavefunction_refs) out.push_back(p);
  }
  return out;
}

std::vector<RecordViolation> validate_bundle(const Bundle& bundle) {
  std::vector<RecordViolation> out;
  std::set<std::string> ids;
  for (const auto& r : bundle.records) {
    if (!ids.insert(r.id).second) out.push_back({r.id, {"id", "must be unique within the bundle"}});
    for (auto& v : validate_record(r)) out.push_back({r.id, std::move(v)});
    for (const auto& ref : referenced_paths(r)) {
      const fs::path rel(ref);
      if (rel.is_absolute() || ref.find("..") != std::string::npos) {
        out.push_back({r.id, {ref, "referenced path must stay inside the bundle"}});
      } else if (!fs::is_regular_file(bundle.resolve(ref))) {
        out.push_back({r.id, {ref, "referenced file does not exist"}});
      }
    }
  }
  return out;
}

Bundle load_bundle(const fs::path& path, const LoadOptions& options) {
  const fs::path manifest_path = path / kManifestName;
  if (!fs::is_regular_file(manifest_path)) {
    throw Error("missing_manifest", "no " + std::string(kManifestName) + " in " + path.string());
  }
  json manifest = json::parse(read_text_file(manifest_path), nullptr, false);
  if (manifest.is_discarded() || !manifest.is_object()) {
    throw Error("missing_manifest", "manifest is not a JSON object");
  }
  if (manifest.value("format", "") != kBundleFormat) {
    throw Error("missing_manifest", "manifest format tag is not '" + std::string(kBundleFormat) + "'");
  }
  if (!manifest.contains("version") || !manifest["version"].is_string()) {
    throw Error("unsupported_version", "manifest version string missing");
  }
  const std::string version = manifest["version"].get<std::string>();
  if (version != kBundleVersion) throw Error("unsupported_version", "bundle version '" + version + "' not supported");

  Bundle bundle;
  bundle.root = path;
  bundle.version = version;
  const fs::path record_path = path / manifest.value("record_file", kRecordFileName);
  bundle.records = parse_records(read_text_file(record_path));
  std::sort(bundle.records.begin(), bundle.records.end(),
            [](const DefectRecord& a, const DefectRecord& b) { return a.id < b.id; });

  for (std::size_t i = 1; i < bundle.records.size(); ++i) {
    if (bundle.records[i].id == bundle.records[i - 1].id) {
      throw Error("duplicate_id", "duplicate record id '" + bundle.records[i].id + "'");
    }
  }
  bundle.violations = validate_bundle(bundle);
  if (options.strict && !bundle.violations.empty()) {
    const auto& v = bundle.violations.front();
    const bool missing = v.violation.rule.find("does not exist") != std::string::npos;
    throw Error(missing ? "missing_reference" : "invalid_record",
                v.record_id + ": " + v.violation.field + ": " + v.violation.rule);
  }
  return bundle;
}

fs::path staging_path_for(const fs::path& target) {
  fs::path t = fs::absolute(target).lexically_normal();
  if (!t.has_filename()) t = t.parent_path();
  return t.parent_path() / ("." + t.filename().string() + ".staging");
}

void commit_directory(const fs::path& staging, const fs::path& target) {
  fs::path t = fs::absolute(target).lexically_normal();
  if (!t.has_filename()) t = t.parent_path();
  const fs::path old = t.parent_path() / ("." + t.filename().string() + ".old");
  fs::remove_all(old);
  if (fs::exists(t)) fs::rename(t, old);
  fs::rename(staging, t);
  fs::remove_all(old);
}

void save_bundle(const Bundle& bundle, const fs::path& path) {
  const fs::path staging = staging_path_for(path);
  fs::remove_all(staging);
  fs::create_directories(staging);
  for (const char* d : kPayloadDirs) fs::create_directories(staging / d);

  for (const auto& r : bundle.records) {
    for (const auto& ref : referenced_paths(r)) {
      const fs::path src = bundle.resolve(ref);
      const fs::path dst = staging / ref;
      if (fs::exists(dst)) continue;
      if (!fs::is_regular_file(src)) {
        fs::remove_all(staging);
        throw Error("unreadable_file", "referenced file missing: " + src.string());
      }
      fs::create_directories(dst.parent_path());
      fs::copy_file(src, dst);
    }
  }
  write_text_file(staging / kRecordFileName, serialize_records(bundle.records));
  write_text_file(staging / kManifestName, bundle_manifest_text(bundle.version));
  commit_directory(staging, path);
}

}  // namespace hbndb
