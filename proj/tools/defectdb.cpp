#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <thread>

#include <CLI11.hpp>

#include "hbndb/api.hpp"
#include "hbndb/bundle.hpp"
#include "hbndb/error.hpp"
#include "hbndb/ingest.hpp"
#include "hbndb/record_io.hpp"
#include "hbndb/stats.hpp"
#include "hbndb/structure.hpp"

namespace fs = std::filesystem;
using namespace hbndb;

namespace {

// exit codes
constexpr int kOk = 0;
constexpr int kDataFailure = 1;
constexpr int kUsage = 2;

std::atomic<bool> g_reload{false};
std::atomic<bool> g_stop{false};

fs::path bundle_or_home(const std::string& given) {
  if (!given.empty()) return given;
  if (const char* home = std::getenv("DEFECTDB_HOME"); home && *home) return home;
  throw Error("no_bundle", "no bundle given and DEFECTDB_HOME is unset");
}

fs::path existing_bundle(const std::string& given) {
  const fs::path p = bundle_or_home(given);
  if (!fs::is_directory(p)) throw Error("no_bundle", "bundle directory " + p.string() + " does not exist");
  return p;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text_file(path, text);
  }
}

int run_ingest(const std::string& manifest_path, const std::string& out, bool strict, unsigned jobs,
               double n_d, const std::string& convention) {
  IngestOptions opts;
  opts.strict = strict;
  opts.jobs = std::max(1u, jobs);
  opts.refractive_index = n_d;
  opts.polarization.convention =
      convention == "moduli" ? AngleConvention::ComponentModuli : AngleConvention::PrincipalAxis;
  const IngestManifest manifest = parse_ingest_manifest(manifest_path);
  const IngestResult result = ingest(manifest, bundle_or_home(out), opts);
  for (const auto& f : result.failures) {
    std::cerr << "entry " << f.entry << (f.id.empty() ? "" : " (" + f.id + ")") << ": " << f.code << ": "
              << f.message << "\n";
  }
  std::cerr << result.records.size() << " records ingested, " << result.failures.size() << " failed"
            << (result.written ? "" : ", bundle not written") << "\n";
  if (strict && !result.failures.empty()) return kDataFailure;
  return kOk;
}

int run_validate(const std::string& bundle_path) {
  const Bundle bundle = load_bundle(existing_bundle(bundle_path));
  const auto violations = validate_bundle(bundle);
  for (const auto& v : violations) {
    std::cout << v.record_id << ": " << v.violation.field << ": " << v.violation.rule << "\n";
  }
  std::cerr << bundle.records.size() << " records, " << violations.size() << " violations\n";
  return violations.empty() ? kOk : kDataFailure;
}

int run_stats(const std::string& bundle_path, const std::string& property, double bin, const std::string& format,
              const std::string& out) {
  const Bundle bundle = load_bundle(existing_bundle(bundle_path));
  const HistogramReport report = stats(bundle.records, parse_histogram_property(property), bin);
  write_output(out, format == "csv" ? histogram_csv(report) : to_json(report).dump(2) + "\n");
  return kOk;
}

int run_export(const std::string& bundle_path, const std::string& format, const std::string& id,
               const std::string& out) {
  const Bundle bundle = load_bundle(existing_bundle(bundle_path));
  std::vector<DefectRecord> chosen;
  for (const auto& r : bundle.records) {
    if (id.empty() || r.id == id) chosen.push_back(r);
  }
  if (!id.empty() && chosen.empty()) throw Error("not_found", "no defect with id '" + id + "'");
  if (format == "csv") {
    write_output(out, transitions_csv(chosen));
    return kOk;
  }
  const StructureFormat want = structure_format_from_name(format);
  auto render = [&](const DefectRecord& r) {
    const fs::path src = bundle.resolve(r.structure_ref);
    if (structure_format_from_path(src) == want) return read_text_file(src);
    return write_structure(read_structure(src), want);
  };
  if (!id.empty() && (out.empty() || out == "-" || fs::path(out).has_extension())) {
    write_output(out, render(chosen.front()));
    return kOk;
  }
  if (out.empty() || out == "-") throw Error("usage", "exporting several structures needs -o <directory>");
  fs::create_directories(out);
  for (const auto& r : chosen) write_text_file(fs::path(out) / (r.id + "." + format), render(r));
  std::cerr << chosen.size() << " structures written to " << out << "\n";
  return kOk;
}

int run_identify(const std::string& bundle_path, const std::string& signature_json) {
  const Bundle bundle = load_bundle(existing_bundle(bundle_path));
  const Index index = Index::from_bundle(bundle);
  const Signature sig = signature_from_json(json::parse(signature_json));
  json out = json::array();
  for (const auto& m : index.identify(sig)) out.push_back(to_json(m));
  std::cout << out.dump(2) << "\n";
  return kOk;
}

int run_serve(ApiConfig config) {
  config.bundle_path = existing_bundle(config.bundle_path.string());
  ApiService service(config);
  std::signal(SIGHUP, [](int) { g_reload = true; });
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  std::thread watcher([&] {
    while (!g_stop) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
      if (g_reload.exchange(false)) {
        std::string err;
        if (service.reload(&err)) {
          std::cerr << "reloaded " << service.snapshot()->defect_count() << " defects\n";
        } else {
          std::cerr << "reload failed, keeping previous snapshot: " << err << "\n";
        }
      }
    }
    service.stop();
  });
  std::cerr << "serving " << service.snapshot()->defect_count() << " defects on http://" << config.host << ":"
            << config.port << "/api/v1\n";
  try {
    service.serve();
  } catch (...) {
    g_stop = true;
    watcher.join();
    throw;
  }
  g_stop = true;
  watcher.join();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"defectdb: hBN fluorescent defect database"};
  app.require_subcommand(1);

  std::string manifest, out, bundle_path, convention = "principal";
  bool strict = false;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  double n_d = kDefaultRefractiveIndex;

  auto* ingest_cmd = app.add_subcommand("ingest", "Derive all properties from a manifest and write a bundle");
  ingest_cmd->add_option("manifest", manifest, "Ingest manifest")->required()->check(CLI::ExistingFile);
  ingest_cmd->add_option("-o,--output", out, "Bundle directory (default: $DEFECTDB_HOME)");
  ingest_cmd->add_flag("--strict", strict, "Write nothing and exit 1 if any entry fails");
  ingest_cmd->add_option("-j,--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  ingest_cmd->add_option("--refractive-index", n_d, "Host refractive index n_D")->check(CLI::PositiveNumber);
  ingest_cmd->add_option("--angle-convention", convention, "Polarization angle convention")
      ->check(CLI::IsMember({"principal", "moduli"}));

  auto* validate_cmd = app.add_subcommand("validate", "Check every record invariant and file reference");
  validate_cmd->add_option("bundle", bundle_path, "Bundle directory (default: $DEFECTDB_HOME)");

  std::string property, format = "json";
  double bin = 0.25;
  auto* stats_cmd = app.add_subcommand("stats", "Histogram of a property by periodic group");
  stats_cmd->add_option("-b,--bundle", bundle_path, "Bundle directory (default: $DEFECTDB_HOME)");
  stats_cmd->add_option("-p,--property", property, "zpl | lifetime | misalignment")->required();
  stats_cmd->add_option("--bin", bin, "Bin width (eV, log10 s, or degrees)")->check(CLI::PositiveNumber);
  stats_cmd->add_option("-f,--format", format)->check(CLI::IsMember({"json", "csv"}));
  stats_cmd->add_option("-o,--output", out, "Output file (default: stdout)");

  std::string export_format = "csv", id;
  auto* export_cmd = app.add_subcommand("export", "Export transitions as CSV or structures as XYZ/CIF");
  export_cmd->add_option("-b,--bundle", bundle_path, "Bundle directory (default: $DEFECTDB_HOME)");
  export_cmd->add_option("-f,--format", export_format)->check(CLI::IsMember({"csv", "xyz", "cif"}));
  export_cmd->add_option("--id", id, "Single defect id");
  export_cmd->add_option("-o,--output", out, "Output file, or directory for several structures");

  std::string signature;
  auto* identify_cmd = app.add_subcommand("identify", "Rank candidates for an observed signature (JSON)");
  identify_cmd->add_option("-b,--bundle", bundle_path, "Bundle directory (default: $DEFECTDB_HOME)");
  identify_cmd->add_option("signature", signature, "e.g. '{\"zpl\": 2.0, \"tol\": 0.1}'")->required();

  ApiConfig api;
  std::string static_dir;
  double serve_n_d = 0.0;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API (SIGHUP reloads the bundle)");
  serve_cmd->add_option("-b,--bundle", bundle_path, "Bundle directory (default: $DEFECTDB_HOME)");
  serve_cmd->add_option("--host", api.host);
  serve_cmd->add_option("--port", api.port)->check(CLI::Range(1, 65535));
  serve_cmd->add_option("--page-size", api.default_page_size)->check(CLI::PositiveNumber);
  serve_cmd->add_option("--max-page-size", api.max_page_size)->check(CLI::PositiveNumber);
  serve_cmd->add_option("--cors", api.cors_allow, "Allowed origins (repeatable; '*' for any)");
  serve_cmd->add_option("--refractive-index", serve_n_d, "Recompute rates with this n_D")
      ->check(CLI::PositiveNumber);
  serve_cmd->add_option("--static-dir", static_dir, "Web UI assets")->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest_cmd) return run_ingest(manifest, out, strict, jobs, n_d, convention);
    if (*validate_cmd) return run_validate(bundle_path);
    if (*stats_cmd) return run_stats(bundle_path, property, bin, format, out);
    if (*export_cmd) return run_export(bundle_path, export_format, id, out);
    if (*identify_cmd) return run_identify(bundle_path, signature);
    if (*serve_cmd) {
      if (api.default_page_size > api.max_page_size) throw Error("usage", "--page-size exceeds --max-page-size");
      api.bundle_path = bundle_path;
      api.static_dir = static_dir;
      if (serve_n_d > 0.0) api.refractive_index = serve_n_d;
      return run_serve(api);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
    static const std::set<std::string> usage{"usage", "no_bundle", "bad_manifest", "invalid_signature", "unknown_parameter"};
    return usage.count(e.code()) ? kUsage : kDataFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataFailure;
  }
  return kUsage;
}
