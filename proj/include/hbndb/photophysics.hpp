#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace hbndb {

inline constexpr double kDefaultRefractiveIndex = 1.85;  // hBN, visible range
inline constexpr double kDefaultDeltaBroadening = 0.01;  // eV

struct RadiativeResult {
  double rate = 0.0;      // 1/s
  double lifetime = 0.0;  // s, +inf when rate == 0
  double refractive_index_used = kDefaultRefractiveIndex;
};

// Spontaneous emission rate of a dipole transition in a medium of index n_D:
//   Gamma_R = n_D e^2 E0^3 mu^2 / (3 pi eps0 hbar^4 c^3)
// with mu^2 taken as a charge-length product. zpl in eV, mu_sq in Debye^2.
// Errors: "non_positive_zpl", "bad_refractive_index", "negative_dipole".
RadiativeResult radiative_rate(double zpl, double mu_sq_debye2, double refractive_index = kDefaultRefractiveIndex);

struct CouplingEntry {
  double e_initial = 0.0;    // eV, initial vibronic level E_in
  double e_final = 0.0;      // eV, final vibronic level E_fm
  double coupling_sq = 0.0;  // eV^2, |<fm|H_eph|in>|^2
};

struct CouplingTable {
  int degeneracy = 1;
  double temperature = 300.0;  // K
  std::vector<CouplingEntry> entries;
};

// CSV with '#'-prefixed header keys, e.g.
//   # g = 2
//   # T = 300
//   E_in_eV,E_fm_eV,coupling_sq_eV2
//   0.0,0.0,1e-6
CouplingTable parse_coupling_csv(std::istream& in);
CouplingTable parse_coupling_csv(const std::filesystem::path& path);

// Golden-rule rate (2pi/hbar) g sum p_in |M|^2 delta(E_fm - E_in) with the delta
// replaced by a unit-area Gaussian of width sigma (eV) and Boltzmann weights
// p_in over the distinct initial energies of the table. Returns 1/s.
// Errors: "bad_sigma", "empty_table", "bad_temperature", "negative_coupling".
double nonradiative_rate(const CouplingTable& table, double sigma = kDefaultDeltaBroadening);

// eta = rate_r / (rate_r + rate_nr); errors "negative_rate", "undefined_efficiency".
double quantum_efficiency(double rate_r, double rate_nr);

}  // namespace hbndb
