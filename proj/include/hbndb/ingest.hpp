#pragma once

#include <array>
#include <complex>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hbndb/bundle.hpp"
#include "hbndb/model.hpp"
#include "hbndb/photophysics.hpp"
#include "hbndb/polarization.hpp"

namespace hbndb {

struct TransitionInput {
  SpinChannel channel = SpinChannel::Up;
  // roles: ground_occ, ground_unocc, excited_occ, excited_unocc
  std::map<std::string, std::filesystem::path> wavefunctions;
  std::optional<std::array<std::complex<double>, 3>> excitation_dipole;  // e*Angstrom, precomputed
  std::optional<std::array<std::complex<double>, 3>> emission_dipole;
  std::optional<std::filesystem::path> phonons;
  std::optional<std::filesystem::path> coupling;
  double sigma = kDefaultDeltaBroadening;
};

struct DefectInput {
  std::size_t line = 0;  // manifest line of the [defect] header
  std::vector<CompositionEntry> composition;
  std::optional<std::string> variant;
  int charge = 0;
  SpinMultiplicity spin = SpinMultiplicity::Triplet;
  std::optional<int> electron_count;
  std::optional<int> host_group;
  std::filesystem::path totals;
  std::filesystem::path structure;
  std::string provenance;
  std::vector<std::string> tags;
  std::map<std::string, double> memory_metrics;
  std::vector<TransitionInput> transitions;
};

struct IngestManifest {
  std::filesystem::path base_dir;
  std::vector<DefectInput> defects;
};

// Totals file: "ground <eV>", "excited up <eV>", "excited down <eV>" (one per line).
struct TotalEnergies {
  double ground = 0.0;
  std::map<SpinChannel, double> excited;
};
TotalEnergies parse_totals(const std::filesystem::path& path);

// INI-style manifest; see docs/formats.md. Relative paths resolve against the
// manifest's directory. Throws Error("bad_manifest") with the offending line.
IngestManifest parse_ingest_manifest(const std::filesystem::path& path);
IngestManifest parse_ingest_manifest_text(const std::string& text, const std::filesystem::path& base_dir);

struct IngestOptions {
  bool strict = false;
  unsigned jobs = 1;
  double refractive_index = kDefaultRefractiveIndex;
  PolarizationOptions polarization;
};

struct EntryFailure {
  std::size_t entry = 0;  // index in manifest order
  std::string id;         // empty when the id could not be derived
  std::string code;
  std::string message;
};

struct IngestResult {
  std::vector<DefectRecord> records;  // sorted by id
  std::vector<EntryFailure> failures;
  bool written = false;
};

// Derives every property of every entry and writes a fresh bundle to `out_dir`
// (write-temp-then-rename). In strict mode any failure aborts before writing.
IngestResult ingest(const IngestManifest& manifest, const std::filesystem::path& out_dir,
                    const IngestOptions& options = {});

}  // namespace hbndb
