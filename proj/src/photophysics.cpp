#include "hbndb/photophysics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "hbndb/error.hpp"
#include "hbndb/units.hpp"

namespace hbndb {

using namespace units;

RadiativeResult radiative_rate(double zpl, double mu_sq, double n_d) {
  if (!(zpl > 0.0) || !std::isfinite(zpl)) throw Error("non_positive_zpl", "ZPL must be positive");
  if (!(n_d > 0.0) || !std::isfinite(n_d)) throw Error("bad_refractive_index", "refractive index must be positive");
  if (!(mu_sq >= 0.0) || !std::isfinite(mu_sq)) throw Error("negative_dipole", "|mu|^2 must be non-negative");

  const double e0 = zpl * kJoulePerEv;
  const double mu_sq_si = mu_sq * kDebyeCm * kDebyeCm;  // (C m)^2
  const double hbar4 = kHbar * kHbar * kHbar * kHbar;
  const double c3 = kSpeedOfLight * kSpeedOfLight * kSpeedOfLight;
  const double rate = n_d * e0 * e0 * e0 * mu_sq_si / (3.0 * kPi * kVacuumPermittivity * hbar4 * c3);

  RadiativeResult r;
  r.rate = rate;
  r.lifetime = rate > 0.0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
  r.refractive_index_used = n_d;
  return r;
}

CouplingTable parse_coupling_csv(std::istream& in) {
  CouplingTable table;
  bool have_g = false, have_t = false, have_columns = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      auto trim = [](std::string s) {
        s.erase(0, s.find_first_not_of(" \t#"));
        s.erase(s.find_last_not_of(" \t") + 1);
        return s;
      };
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      try {
        if (key == "g") {
          table.degeneracy = std::stoi(value);
          have_g = true;
        } else if (key == "T") {
          table.temperature = std::stod(value);
          have_t = true;
        }
      } catch (const std::exception&) {
        throw Error("bad_coupling_csv", "bad header value for '" + key + "'");
      }
      continue;
    }
    if (!have_columns) {
      if (line.rfind("E_in_eV,E_fm_eV,coupling_sq_eV2", 0) != 0) {
        throw Error("bad_coupling_csv", "expected column header 'E_in_eV,E_fm_eV,coupling_sq_eV2'");
      }
      have_columns = true;
      continue;
    }
    std::istringstream ls(line);
    CouplingEntry e;
    char c1 = 0, c2 = 0;
    if (!(ls >> e.e_initial >> c1 >> e.e_final >> c2 >> e.coupling_sq) || c1 != ',' || c2 != ',') {
      throw Error("bad_coupling_csv", "malformed row at line " + std::to_string(line_no));
    }
    if (e.coupling_sq < 0.0) throw Error("negative_coupling", "coupling_sq must be non-negative at line " + std::to_string(line_no));
    table.entries.push_back(e);
  }
  if (!have_g || !have_t) throw Error("bad_coupling_csv", "header keys 'g' and 'T' are required");
  if (table.degeneracy < 1) throw Error("bad_coupling_csv", "degeneracy g must be a positive integer");
  return table;
}

CouplingTable parse_coupling_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("unreadable_file", "cannot read coupling table " + path.string());
  return parse_coupling_csv(in);
}

double nonradiative_rate(const CouplingTable& table, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error("bad_sigma", "broadening sigma must be positive");
  if (table.entries.empty()) throw Error("empty_table", "coupling table has no entries");
  if (!(table.temperature > 0.0)) throw Error("bad_temperature", "temperature must be positive");
  if (table.degeneracy < 1) throw Error("bad_degeneracy", "degeneracy must be a positive integer");

  // Boltzmann weights over distinct initial levels, shifted by the lowest level
  // so the T -> 0 limit stays finite.
  const double kt = kBoltzmannEvK * table.temperature;
  double e_min = std::numeric_limits<double>::infinity();
  for (const auto& e : table.entries) {
    if (e.coupling_sq < 0.0) throw Error("negative_coupling", "coupling_sq must be non-negative");
    e_min = std::min(e_min, e.e_initial);
  }
  std::map<double, double> weight;
  for (const auto& e : table.entries) weight.emplace(e.e_initial, std::exp(-(e.e_initial - e_min) / kt));
  double z = 0.0;
  for (const auto& [level, w] : weight) z += w;

  const double norm = 1.0 / (sigma * std::sqrt(2.0 * kPi));
  double sum = 0.0;  // eV^2 / eV = eV
  for (const auto& e : table.entries) {
    const double d = (e.e_final - e.e_initial) / sigma;
    sum += weight[e.e_initial] / z * e.coupling_sq * norm * std::exp(-0.5 * d * d);
  }
  return 2.0 * kPi / kHbarEvS * table.degeneracy * sum;
}

double quantum_efficiency(double rate_r, double rate_nr) {
  if (!(rate_r >= 0.0) || !(rate_nr >= 0.0)) throw Error("negative_rate", "rates must be non-negative");
  if (rate_r == 0.0 && rate_nr == 0.0) throw Error("undefined_efficiency", "both rates are zero");
  if (std::isinf(rate_r)) return 1.0;
  return rate_r / (rate_r + rate_nr);
}

}  // namespace hbndb
