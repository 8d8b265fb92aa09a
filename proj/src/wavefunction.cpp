#include "hbndb/wavefunction.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "hbndb/error.hpp"
#include "hbndb/units.hpp"

namespace hbndb {

namespace {

struct TripleHash {
  std::size_t operator()(const std::array<int, 3>& g) const noexcept {
    std::size_t h = static_cast<std::size_t>(g[0]) * 73856093u;
    h ^= static_cast<std::size_t>(g[1]) * 19349663u;
    h ^= static_cast<std::size_t>(g[2]) * 83492791u;
    return h;
  }
};

bool next_content_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    return true;
  }
  return false;
}

}  // namespace

double PlaneWaveFunction::norm_sq() const {
  double s = 0.0;
  for (const auto& c : coefficients) s += std::norm(c.c);
  return s;
}

PlaneWaveFunction parse_wfc(std::istream& in) {
  std::string line;
  if (!next_content_line(in, line) || line.rfind("WFC v1", 0) != 0) {
    throw Error("wfc_header", "missing 'WFC v1' magic line");
  }
  PlaneWaveFunction wf;
  if (!next_content_line(in, line)) throw Error("wfc_header", "missing reciprocal lattice line");
  {
    std::istringstream ls(line);
    for (auto& row : wf.reciprocal_lattice)
      for (auto& v : row)
        if (!(ls >> v)) throw Error("wfc_header", "reciprocal lattice needs 9 numbers");
  }
  if (!next_content_line(in, line)) throw Error("wfc_header", "missing count/energy/spin line");
  long long count = 0;
  {
    std::istringstream ls(line);
    std::string spin, occ;
    if (!(ls >> count >> wf.band_energy >> spin) || count < 0) {
      throw Error("wfc_header", "expected '<count> <band_energy_eV> <up|down>'");
    }
    try {
      wf.spin = parse_spin_channel(spin);
    } catch (const Error&) {
      throw Error("wfc_header", "spin tag must be 'up' or 'down'");
    }
    if (ls >> occ) {
      if (occ == "occupied") wf.occupancy = Occupancy::Occupied;
      else if (occ == "unoccupied") wf.occupancy = Occupancy::Unoccupied;
      else throw Error("wfc_header", "occupancy tag must be 'occupied' or 'unoccupied'");
    }
  }

  wf.coefficients.reserve(static_cast<std::size_t>(count));
  std::unordered_map<std::array<int, 3>, std::size_t, TripleHash> seen;
  while (next_content_line(in, line)) {
    std::istringstream ls(line);
    PlaneWaveCoefficient pw;
    double re = 0.0, im = 0.0;
    if (!(ls >> pw.g[0] >> pw.g[1] >> pw.g[2] >> re >> im)) {
      throw Error("wfc_header", "malformed coefficient line " + std::to_string(wf.coefficients.size() + 1));
    }
    pw.c = {re, im};
    if (!seen.emplace(pw.g, wf.coefficients.size()).second) {
      throw Error("wfc_duplicate_g", "duplicate G index triple");
    }
    wf.coefficients.push_back(pw);
  }
  if (static_cast<long long>(wf.coefficients.size()) != count) {
    throw Error("wfc_count_mismatch", "header declares " + std::to_string(count) + " coefficients, file has " +
                                          std::to_string(wf.coefficients.size()));
  }

  const double n = wf.norm_sq();
  const double dev = std::abs(n - 1.0);
  if (dev > 1e-3) {
    throw Error("wfc_normalization", "coefficient norm " + std::to_string(n) + " deviates from 1 (truncated file?)");
  }
  if (dev > 1e-6) {
    const double scale = 1.0 / std::sqrt(n);
    for (auto& c : wf.coefficients) c.c *= scale;
    wf.renormalized = true;
  }
  return wf;
}

PlaneWaveFunction parse_wfc(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("unreadable_file", "cannot read wavefunction " + path.string());
  return parse_wfc(in);
}

PlaneWaveFunction parse_wfc_text(const std::string& text) {
  std::istringstream in(text);
  return parse_wfc(in);
}

std::string format_wfc(const PlaneWaveFunction& wf) {
  std::ostringstream out;
  out.precision(17);
  out << "WFC v1\n";
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out << (r || c ? " " : "") << wf.reciprocal_lattice[r][c];
  out << "\n" << wf.coefficients.size() << " " << wf.band_energy << " " << to_string(wf.spin);
  if (wf.occupancy == Occupancy::Occupied) out << " occupied";
  if (wf.occupancy == Occupancy::Unoccupied) out << " unoccupied";
  out << "\n";
  for (const auto& c : wf.coefficients) {
    out << c.g[0] << " " << c.g[1] << " " << c.g[2] << " " << c.c.real() << " " << c.c.imag() << "\n";
  }
  return out.str();
}

MomentumMatrixElement momentum_element(const PlaneWaveFunction& wf_i, const PlaneWaveFunction& wf_f) {
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      if (std::abs(wf_i.reciprocal_lattice[r][c] - wf_f.reciprocal_lattice[r][c]) > 1e-8) {
        throw Error("lattice_mismatch", "wavefunctions use different reciprocal lattices");
      }

  std::unordered_map<std::array<int, 3>, std::complex<double>, TripleHash> initial;
  initial.reserve(wf_i.coefficients.size());
  for (const auto& pw : wf_i.coefficients) initial.emplace(pw.g, pw.c);

  // G in bohr^-1: (g . B) [1/A] * a0 [A]
  const auto& b = wf_i.reciprocal_lattice;
  MomentumMatrixElement out;
  for (const auto& pw : wf_f.coefficients) {
    auto it = initial.find(pw.g);
    if (it == initial.end()) continue;
    const std::complex<double> w = std::conj(pw.c) * it->second;
    for (int k = 0; k < 3; ++k) {
      const double gk = (pw.g[0] * b[0][k] + pw.g[1] * b[1][k] + pw.g[2] * b[2][k]) * units::kBohrAngstrom;
      out.p[k] += gk * w;
    }
  }
  return out;
}

DipoleMoment dipole_from_momentum(const MomentumMatrixElement& p, double e_i, double e_f) {
  const double de = e_f - e_i;
  if (!std::isfinite(de) || std::abs(de) < 1e-6) {
    throw Error("degenerate_levels", "initial and final levels are degenerate");
  }
  // Atomic units: hbar = m = 1, so mu[bohr] = i p / dE[Ha].
  const std::complex<double> prefactor = std::complex<double>(0.0, 1.0) / (de / units::kHartreeEv);
  std::array<std::complex<double>, 3> mu{};
  for (int k = 0; k < 3; ++k) mu[k] = prefactor * p.p[k] * units::kBohrAngstrom;
  return DipoleMoment::from_e_angstrom(mu);
}

DipoleMoment transition_dipole(const PlaneWaveFunction& wf_i, const PlaneWaveFunction& wf_f, double e_i,
                               double e_f) {
  if (std::abs(e_f - e_i) < 1e-6) throw Error("degenerate_levels", "initial and final levels are degenerate");
  return dipole_from_momentum(momentum_element(wf_i, wf_f), e_i, e_f);
}

DipoleMoment transition_dipole(const PlaneWaveFunction& wf_i, const PlaneWaveFunction& wf_f) {
  return transition_dipole(wf_i, wf_f, wf_i.band_energy, wf_f.band_energy);
}

}  // namespace hbndb
