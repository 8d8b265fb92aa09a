#include "hbndb/ingest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "hbndb/error.hpp"
#include "hbndb/lineshape.hpp"
#include "hbndb/record_io.hpp"
#include "hbndb/structure.hpp"
#include "hbndb/units.hpp"
#include "hbndb/wavefunction.hpp"

namespace fs = std::filesystem;

namespace hbndb {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void fail_line(std::size_t line, const std::string& msg) {
  throw Error("bad_manifest", "manifest line " + std::to_string(line) + ": " + msg);
}

int parse_int(const std::string& v, std::size_t line) {
  try {
    std::size_t used = 0;
    const int x = std::stoi(v, &used);
    if (used != v.size()) fail_line(line, "expected integer, got '" + v + "'");
    return x;
  } catch (const std::logic_error&) {
    fail_line(line, "expected integer, got '" + v + "'");
  }
}

double parse_double(const std::string& v, std::size_t line) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) fail_line(line, "expected number, got '" + v + "'");
    return x;
  } catch (const std::logic_error&) {
    fail_line(line, "expected number, got '" + v + "'");
  }
}

std::optional<int> parse_group(const std::string& v, std::size_t line) {
  if (v == "none") return std::nullopt;
  if (v == "III") return 3;
  if (v == "IV") return 4;
  if (v == "V") return 5;
  if (v == "VI") return 6;
  return parse_int(v, line);
}

std::array<std::complex<double>, 3> parse_dipole(const std::string& v, std::size_t line) {
  std::istringstream in(v);
  std::array<double, 6> x{};
  for (auto& c : x)
    if (!(in >> c)) fail_line(line, "dipole needs 6 numbers: re_x im_x re_y im_y re_z im_z");
  std::string extra;
  if (in >> extra) fail_line(line, "dipole needs exactly 6 numbers");
  return {{{x[0], x[1]}, {x[2], x[3]}, {x[4], x[5]}}};
}

const std::set<std::string> kWfcRoles{"ground_occ", "ground_unocc", "excited_occ", "excited_unocc"};

struct PayloadCopy {
  fs::path source;
  std::string dest;  // bundle-relative
  std::optional<std::string> content;  // generated payload instead of a copy
};

struct DerivedEntry {
  DefectRecord record;
  std::vector<PayloadCopy> payloads;
};

std::optional<DipoleMoment> pair_dipole(const TransitionInput& in, const std::string& from, const std::string& to,
                                        std::map<std::string, PlaneWaveFunction>& cache) {
  const bool has_from = in.wavefunctions.count(from) != 0;
  const bool has_to = in.wavefunctions.count(to) != 0;
  if (!has_from && !has_to) return std::nullopt;
  if (has_from != has_to) {
    throw Error("incomplete_wfc_pair", "wavefunction pair " + from + "/" + to + " is incomplete");
  }
  for (const auto& role : {from, to}) {
    if (!cache.count(role)) cache.emplace(role, parse_wfc(in.wavefunctions.at(role)));
  }
  return transition_dipole(cache.at(from), cache.at(to));
}

DerivedEntry derive_entry(const DefectInput& in, const IngestOptions& opt) {
  DerivedEntry out;
  DefectRecord& r = out.record;
  r.composition = in.composition;
  r.variant = in.variant;
  r.charge = in.charge;
  r.spin_multiplicity = in.spin;
  r.electron_count = in.electron_count;
  r.host_group = in.host_group;
  r.id = derive_id(r.composition, r.charge, r.spin_multiplicity, r.variant);
  r.memory_metrics = in.memory_metrics;
  r.provenance.text = in.provenance;
  r.provenance.tags = in.tags;

  const TotalEnergies totals = parse_totals(in.totals);
  r.ground_total_energy = totals.ground;

  read_structure(in.structure);  // reject unparsable structures up front
  r.structure_ref = "structures/" + r.id + in.structure.extension().string();
  out.payloads.push_back({in.structure, r.structure_ref, std::nullopt});

  for (const auto& tin : in.transitions) {
    TransitionRecord t;
    t.spin_channel = tin.channel;
    const std::string tag = r.id + "_" + std::string(to_string(tin.channel));
    auto excited = totals.excited.find(tin.channel);
    if (excited == totals.excited.end()) {
      throw Error("missing_total", "totals file has no excited energy for spin " + std::string(to_string(tin.channel)));
    }
    t.excited_total_energy = excited->second;
    t.zpl = compute_zpl(totals.ground, t.excited_total_energy);
    t.zpl_nm = units::ev_to_nm(t.zpl);

    std::map<std::string, PlaneWaveFunction> wfcs;
    // excitation: ground-geometry occupied -> unoccupied; emission: excited-geometry upper -> lower
    std::optional<DipoleMoment> exc = pair_dipole(tin, "ground_occ", "ground_unocc", wfcs);
    std::optional<DipoleMoment> em = pair_dipole(tin, "excited_unocc", "excited_occ", wfcs);
    if (tin.excitation_dipole) {
      if (exc) throw Error("bad_manifest", "excitation dipole given both precomputed and via wavefunctions");
      exc = DipoleMoment::from_e_angstrom(*tin.excitation_dipole);
    }
    if (tin.emission_dipole) {
      if (em) throw Error("bad_manifest", "emission dipole given both precomputed and via wavefunctions");
      em = DipoleMoment::from_e_angstrom(*tin.emission_dipole);
    }
    if (wfcs.count("ground_occ")) {
      t.lower_level = wfcs.at("ground_occ").band_energy;
      t.upper_level = wfcs.at("ground_unocc").band_energy;
    }
    for (const auto& [role, path] : tin.wavefunctions) {
      const std::string dest = "wavefunctions/" + tag + "_" + role + ".wfc";
      t.wavefunction_refs[role] = dest;
      out.payloads.push_back({path, dest, std::nullopt});
    }

    t.excitation_dipole = exc;
    t.emission_dipole = em;
    std::optional<PolarizationResult> pol_exc, pol_em;
    if (exc && exc->norm_sq() > 0.0) {
      pol_exc = polarization_from_dipole(*exc, opt.polarization);
      t.excitation_polarization_deg = pol_exc->angle_deg;
      t.visibility_exc = pol_exc->visibility;
    }
    if (em && em->norm_sq() > 0.0) {
      pol_em = polarization_from_dipole(*em, opt.polarization);
      t.emission_polarization_deg = pol_em->angle_deg;
      t.visibility_em = pol_em->visibility;
    }
    if (pol_exc && pol_em && !pol_exc->out_of_plane && !pol_em->out_of_plane) {
      t.misalignment_deg = misalignment(*pol_exc, *pol_em);
    }

    const std::optional<DipoleMoment>& rad_dipole = em ? em : exc;
    if (rad_dipole) {
      const RadiativeResult rad = radiative_rate(t.zpl, rad_dipole->mu_sq_debye2, opt.refractive_index);
      t.radiative_rate = rad.rate;
      t.radiative_lifetime = rad.lifetime;
      t.refractive_index = rad.refractive_index_used;
    }

    if (tin.coupling) {
      if (!t.radiative_rate) throw Error("missing_dipole", "quantum efficiency needs a radiative rate");
      const double nr = nonradiative_rate(parse_coupling_csv(*tin.coupling), tin.sigma);
      t.nonradiative_rate = nr;
      t.quantum_efficiency = quantum_efficiency(*t.radiative_rate, nr);
    }

    if (tin.phonons) {
      const PhononSet phonons = parse_phonons(*tin.phonons);
      const HRSpectrum hr = hr_factors(phonons);
      t.total_hr_factor = hr.total;
      t.phonon_ref = "phonons/" + tag + ".phonons";
      out.payloads.push_back({*tin.phonons, *t.phonon_ref, std::nullopt});
      const PLSpectrum pl = pl_spectrum(hr, t.zpl, kDefaultLineshapeGamma, default_window(t.zpl));
      t.lineshape_ref = "lineshapes/" + tag + ".csv";
      out.payloads.push_back({{}, *t.lineshape_ref, spectrum_csv(pl)});
    }
    r.transitions.push_back(std::move(t));
  }
  std::sort(r.transitions.begin(), r.transitions.end(),
            [](const TransitionRecord& a, const TransitionRecord& b) { return a.spin_channel < b.spin_channel; });

  auto violations = validate_record(r);
  if (!violations.empty()) {
    throw Error("invalid_record", violations.front().field + ": " + violations.front().rule);
  }
  return out;
}

}  // namespace

TotalEnergies parse_totals(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("unreadable_file", "cannot read totals file " + path.string());
  TotalEnergies t;
  bool have_ground = false;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "ground") {
      if (!(ls >> t.ground)) throw Error("bad_totals", "bad ground energy line");
      have_ground = true;
    } else if (key == "excited") {
      std::string spin;
      double e = 0.0;
      if (!(ls >> spin >> e)) throw Error("bad_totals", "expected 'excited <up|down> <eV>'");
      t.excited[parse_spin_channel(spin)] = e;
    } else {
      throw Error("bad_totals", "unknown totals key '" + key + "'");
    }
  }
  if (!have_ground) throw Error("bad_totals", "totals file lacks a ground energy");
  return t;
}

IngestManifest parse_ingest_manifest_text(const std::string& text, const fs::path& base_dir) {
  IngestManifest m;
  m.base_dir = base_dir;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  enum class Section { None, Defect, Transition } section = Section::None;
  std::set<std::string> seen_keys;
  bool have_version = false;

  auto resolve = [&](const std::string& v) {
    const fs::path p(v);
    return p.is_absolute() ? p : base_dir / p;
  };
  auto finish_defect = [&]() {
    if (m.defects.empty()) return;
    const auto& d = m.defects.back();
    if (d.composition.empty()) fail_line(d.line, "[defect] needs 'composition'");
    if (d.totals.empty()) fail_line(d.line, "[defect] needs 'totals'");
    if (d.structure.empty()) fail_line(d.line, "[defect] needs 'structure'");
  };

  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line == "[defect]") {
      finish_defect();
      m.defects.emplace_back();
      m.defects.back().line = line_no;
      section = Section::Defect;
      seen_keys.clear();
      continue;
    }
    if (line == "[transition]") {
      if (m.defects.empty()) fail_line(line_no, "[transition] before any [defect]");
      m.defects.back().transitions.emplace_back();
      section = Section::Transition;
      seen_keys.clear();
      continue;
    }
    if (line.front() == '[') fail_line(line_no, "unknown section " + line);
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail_line(line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen_keys.insert(key).second) fail_line(line_no, "duplicate key '" + key + "'");

    if (section == Section::None) {
      if (key != "version") fail_line(line_no, "only 'version' may precede the first section");
      if (value != "1") fail_line(line_no, "unsupported manifest version '" + value + "'");
      have_version = true;
      continue;
    }
    if (section == Section::Defect) {
      DefectInput& d = m.defects.back();
      try {
        if (key == "composition") {
          for (const auto& member : split(value, ',')) {
            const auto colon = member.find(':');
            if (colon == std::string::npos) {
              const SiteKind k = parse_site_kind(member);
              if (k != SiteKind::VacancyB && k != SiteKind::VacancyN) {
                fail_line(line_no, "non-vacancy member needs 'Element:site'");
              }
              d.composition.push_back({"", k});
            } else {
              d.composition.push_back({trim(member.substr(0, colon)), parse_site_kind(trim(member.substr(colon + 1)))});
            }
          }
        } else if (key == "variant") {
          d.variant = value;
        } else if (key == "charge") {
          d.charge = parse_int(value, line_no);
        } else if (key == "spin") {
          d.spin = parse_spin_multiplicity(value);
        } else if (key == "electron_count") {
          d.electron_count = parse_int(value, line_no);
        } else if (key == "host_group") {
          d.host_group = parse_group(value, line_no);
        } else if (key == "totals") {
          d.totals = resolve(value);
        } else if (key == "structure") {
          d.structure = resolve(value);
        } else if (key == "provenance") {
          d.provenance = value;
        } else if (key == "tags") {
          d.tags = split(value, ',');
        } else if (key.rfind("memory.", 0) == 0 && key.size() > 7) {
          d.memory_metrics[key.substr(7)] = parse_double(value, line_no);
        } else {
          fail_line(line_no, "unknown [defect] key '" + key + "'");
        }
      } catch (const Error& e) {
        if (e.code() == "bad_manifest") throw;
        fail_line(line_no, e.what());
      }
      continue;
    }
    TransitionInput& t = m.defects.back().transitions.back();
    try {
      if (key == "channel") {
        t.channel = parse_spin_channel(value);
      } else if (key.rfind("wfc.", 0) == 0) {
        const std::string role = key.substr(4);
        if (!kWfcRoles.count(role)) fail_line(line_no, "unknown wavefunction role '" + role + "'");
        t.wavefunctions[role] = resolve(value);
      } else if (key == "dipole.excitation") {
        t.excitation_dipole = parse_dipole(value, line_no);
      } else if (key == "dipole.emission") {
        t.emission_dipole = parse_dipole(value, line_no);
      } else if (key == "phonons") {
        t.phonons = resolve(value);
      } else if (key == "coupling") {
        t.coupling = resolve(value);
      } else if (key == "sigma") {
        t.sigma = parse_double(value, line_no);
      } else {
        fail_line(line_no, "unknown [transition] key '" + key + "'");
      }
    } catch (const Error& e) {
      if (e.code() == "bad_manifest") throw;
      fail_line(line_no, e.what());
    }
  }
  finish_defect();
  if (!have_version && !m.defects.empty()) throw Error("bad_manifest", "manifest lacks 'version = 1'");
  return m;
}

IngestManifest parse_ingest_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("unreadable_file", "cannot read manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_ingest_manifest_text(ss.str(), path.parent_path());
}

IngestResult ingest(const IngestManifest& manifest, const fs::path& out_dir, const IngestOptions& opt) {
  const std::size_t n = manifest.defects.size();
  std::vector<std::optional<DerivedEntry>> derived(n);
  std::vector<std::optional<EntryFailure>> failed(n);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      const auto& in = manifest.defects[i];
      std::string id;
      try {
        id = derive_id(in.composition, in.charge, in.spin, in.variant);
        derived[i] = derive_entry(in, opt);
      } catch (const Error& e) {
        failed[i] = EntryFailure{i, id, e.code(), e.what()};
      } catch (const std::exception& e) {
        failed[i] = EntryFailure{i, id, "internal", e.what()};
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(opt.jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  IngestResult result;
  std::set<std::string> ids;
  std::vector<const DerivedEntry*> accepted;
  for (std::size_t i = 0; i < n; ++i) {
    if (failed[i]) {
      result.failures.push_back(*failed[i]);
      continue;
    }
    if (!ids.insert(derived[i]->record.id).second) {
      result.failures.push_back({i, derived[i]->record.id, "duplicate_id",
                                 "id '" + derived[i]->record.id + "' collides with an earlier entry"});
      continue;
    }
    accepted.push_back(&*derived[i]);
  }
  if (opt.strict && !result.failures.empty()) return result;

  const fs::path staging = staging_path_for(out_dir);
  fs::remove_all(staging);
  fs::create_directories(staging);
  for (const char* d : {"structures", "wavefunctions", "phonons", "lineshapes"}) fs::create_directories(staging / d);
  try {
    for (const DerivedEntry* e : accepted) {
      for (const auto& p : e->payloads) {
        const fs::path dst = staging / p.dest;
        if (p.content) {
          write_text_file(dst, *p.content);
        } else {
          fs::copy_file(p.source, dst, fs::copy_options::overwrite_existing);
        }
      }
      result.records.push_back(e->record);
    }
    std::sort(result.records.begin(), result.records.end(),
              [](const DefectRecord& a, const DefectRecord& b) { return a.id < b.id; });
    write_text_file(staging / kRecordFileName, serialize_records(result.records));
    write_text_file(staging / kManifestName, bundle_manifest_text(kBundleVersion));
  } catch (...) {
    fs::remove_all(staging);
    throw;
  }
  commit_directory(staging, out_dir);
  result.written = true;
  return result;
}

}  // namespace hbndb
