#include "hbndb/record_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "hbndb/error.hpp"

namespace hbndb {

namespace {

template <typename T>
void put(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <typename T>
std::optional<T> get_opt(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

json lifetime_to_json(double v) {
  if (std::isinf(v) && v > 0) return "inf";
  return v;
}

double lifetime_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    throw Error("bad_record", "unknown lifetime sentinel");
  }
  return j.get<double>();
}

}  // namespace

json to_json(const DipoleMoment& d) {
  json mu = json::array();
  for (const auto& c : d.mu) mu.push_back(json::array({c.real(), c.imag()}));
  return json{{"mu", mu}, {"mu_sq_debye2", d.mu_sq_debye2}};
}

DipoleMoment dipole_from_json(const json& j) {
  DipoleMoment d;
  const auto& mu = j.at("mu");
  if (!mu.is_array() || mu.size() != 3) throw Error("bad_record", "dipole mu must hold 3 components");
  for (std::size_t i = 0; i < 3; ++i) {
    d.mu[i] = {mu[i].at(0).get<double>(), mu[i].at(1).get<double>()};
  }
  d.mu_sq_debye2 = j.at("mu_sq_debye2").get<double>();
  return d;
}

json to_json(const TransitionRecord& t) {
  json j;
  j["spin_channel"] = std::string(to_string(t.spin_channel));
  j["excited_total_energy"] = t.excited_total_energy;
  j["zpl"] = t.zpl;
  j["zpl_nm"] = t.zpl_nm;
  put(j, "lower_level", t.lower_level);
  put(j, "upper_level", t.upper_level);
  if (t.excitation_dipole) j["excitation_dipole"] = to_json(*t.excitation_dipole);
  if (t.emission_dipole) j["emission_dipole"] = to_json(*t.emission_dipole);
  put(j, "excitation_polarization_deg", t.excitation_polarization_deg);
  put(j, "emission_polarization_deg", t.emission_polarization_deg);
  put(j, "visibility_exc", t.visibility_exc);
  put(j, "visibility_em", t.visibility_em);
  put(j, "misalignment_deg", t.misalignment_deg);
  put(j, "radiative_rate", t.radiative_rate);
  if (t.radiative_lifetime) j["radiative_lifetime"] = lifetime_to_json(*t.radiative_lifetime);
  put(j, "refractive_index", t.refractive_index);
  put(j, "nonradiative_rate", t.nonradiative_rate);
  put(j, "quantum_efficiency", t.quantum_efficiency);
  put(j, "total_hr_factor", t.total_hr_factor);
  put(j, "phonon_ref", t.phonon_ref);
  put(j, "lineshape_ref", t.lineshape_ref);
  if (!t.wavefunction_refs.empty()) j["wavefunction_refs"] = t.wavefunction_refs;
  return j;
}

TransitionRecord transition_from_json(const json& j) {
  TransitionRecord t;
  t.spin_channel = parse_spin_channel(j.at("spin_channel").get<std::string>());
  t.excited_total_energy = j.at("excited_total_energy").get<double>();
  t.zpl = j.at("zpl").get<double>();
  t.zpl_nm = j.at("zpl_nm").get<double>();
  t.lower_level = get_opt<double>(j, "lower_level");
  t.upper_level = get_opt<double>(j, "upper_level");
  if (j.contains("excitation_dipole")) t.excitation_dipole = dipole_from_json(j["excitation_dipole"]);
  if (j.contains("emission_dipole")) t.emission_dipole = dipole_from_json(j["emission_dipole"]);
  t.excitation_polarization_deg = get_opt<double>(j, "excitation_polarization_deg");
  t.emission_polarization_deg = get_opt<double>(j, "emission_polarization_deg");
  t.visibility_exc = get_opt<double>(j, "visibility_exc");
  t.visibility_em = get_opt<double>(j, "visibility_em");
  t.misalignment_deg = get_opt<double>(j, "misalignment_deg");
  t.radiative_rate = get_opt<double>(j, "radiative_rate");
  if (j.contains("radiative_lifetime")) t.radiative_lifetime = lifetime_from_json(j["radiative_lifetime"]);
  t.refractive_index = get_opt<double>(j, "refractive_index");
  t.nonradiative_rate = get_opt<double>(j, "nonradiative_rate");
  t.quantum_efficiency = get_opt<double>(j, "quantum_efficiency");
  t.total_hr_factor = get_opt<double>(j, "total_hr_factor");
  t.phonon_ref = get_opt<std::string>(j, "phonon_ref");
  t.lineshape_ref = get_opt<std::string>(j, "lineshape_ref");
  if (j.contains("wavefunction_refs")) {
    t.wavefunction_refs = j["wavefunction_refs"].get<std::map<std::string, std::string>>();
  }
  return t;
}

json to_json(const DefectRecord& r) {
  json j;
  j["id"] = r.id;
  json comp = json::array();
  for (const auto& c : r.composition) {
    comp.push_back(json{{"element", c.element}, {"site", std::string(to_string(c.site))}});
  }
  j["composition"] = comp;
  put(j, "variant", r.variant);
  j["charge"] = r.charge;
  j["spin_multiplicity"] = std::string(to_string(r.spin_multiplicity));
  put(j, "electron_count", r.electron_count);
  put(j, "host_group", r.host_group);
  j["ground_total_energy"] = r.ground_total_energy;
  j["structure_ref"] = r.structure_ref;
  json ts = json::array();
  for (const auto& t : r.transitions) ts.push_back(to_json(t));
  j["transitions"] = ts;
  j["memory_metrics"] = json::object();
  for (const auto& [k, v] : r.memory_metrics) j["memory_metrics"][k] = v;
  j["provenance"] = json{{"text", r.provenance.text}, {"tags", r.provenance.tags}};
  return j;
}

DefectRecord record_from_json(const json& j) {
  try {
    DefectRecord r;
    r.id = j.at("id").get<std::string>();
    for (const auto& c : j.at("composition")) {
      r.composition.push_back({c.at("element").get<std::string>(),
                               parse_site_kind(c.at("site").get<std::string>())});
    }
    r.variant = get_opt<std::string>(j, "variant");
    r.charge = j.at("charge").get<int>();
    r.spin_multiplicity = parse_spin_multiplicity(j.at("spin_multiplicity").get<std::string>());
    r.electron_count = get_opt<int>(j, "electron_count");
    r.host_group = get_opt<int>(j, "host_group");
    r.ground_total_energy = j.at("ground_total_energy").get<double>();
    r.structure_ref = j.at("structure_ref").get<std::string>();
    for (const auto& t : j.at("transitions")) r.transitions.push_back(transition_from_json(t));
    if (j.contains("memory_metrics")) {
      r.memory_metrics = j["memory_metrics"].get<std::map<std::string, double>>();
    }
    if (j.contains("provenance")) {
      const auto& p = j["provenance"];
      r.provenance.text = p.value("text", "");
      if (p.contains("tags")) r.provenance.tags = p["tags"].get<std::vector<std::string>>();
    }
    return r;
  } catch (const json::exception& e) {
    throw Error("bad_record", std::string("malformed record: ") + e.what());
  }
}

std::string serialize_record(const DefectRecord& record) { return to_json(record).dump(); }

DefectRecord parse_record_line(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error("bad_record", "record line is not a JSON object");
  return record_from_json(j);
}

std::string serialize_records(std::vector<DefectRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const DefectRecord& a, const DefectRecord& b) { return a.id < b.id; });
  std::string out;
  for (const auto& r : records) {
    out += serialize_record(r);
    out += '\n';
  }
  return out;
}

std::vector<DefectRecord> parse_records(std::string_view text) {
  std::vector<DefectRecord> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    try {
      out.push_back(parse_record_line(line));
    } catch (const Error& e) {
      throw Error(e.code(), "record file line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string transitions_csv(const std::vector<DefectRecord>& records) {
  std::string out =
      "id,formula,charge,spin_multiplicity,host_group,spin_channel,zpl_eV,zpl_nm,mu_exc_sq_D2,mu_em_sq_D2,"
      "pol_exc_deg,pol_em_deg,visibility_exc,visibility_em,misalignment_deg,radiative_rate_s,"
      "radiative_lifetime_s,nonradiative_rate_s,quantum_efficiency,total_hr_factor\n";
  auto num = [](std::optional<double> v) -> std::string {
    if (!v) return "";
    if (std::isinf(*v)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", *v);
    return buf;
  };
  auto sq = [](const std::optional<DipoleMoment>& d) -> std::optional<double> {
    if (!d) return std::nullopt;
    return d->mu_sq_debye2;
  };
  for (const auto& r : records) {
    for (const auto& t : r.transitions) {
      out += r.id + "," + formula_label(r.composition) + "," + std::to_string(r.charge) + "," +
             std::string(to_string(r.spin_multiplicity)) + "," +
             (r.host_group ? std::to_string(*r.host_group) : std::string()) + "," +
             std::string(to_string(t.spin_channel)) + "," + num(t.zpl) + "," + num(t.zpl_nm) + "," +
             num(sq(t.excitation_dipole)) + "," + num(sq(t.emission_dipole)) + "," +
             num(t.excitation_polarization_deg) + "," + num(t.emission_polarization_deg) + "," +
             num(t.visibility_exc) + "," + num(t.visibility_em) + "," + num(t.misalignment_deg) + "," +
             num(t.radiative_rate) + "," + num(t.radiative_lifetime) + "," + num(t.nonradiative_rate) + "," +
             num(t.quantum_efficiency) + "," + num(t.total_hr_factor) + "\n";
    }
  }
  return out;
}

}  // namespace hbndb
