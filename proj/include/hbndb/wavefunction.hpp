#pragma once

#include <array>
#include <complex>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "hbndb/model.hpp"
#include "hbndb/structure.hpp"

namespace hbndb {

enum class Occupancy { Occupied, Unoccupied, Unknown };

struct PlaneWaveCoefficient {
  std::array<int, 3> g{};  // Miller indices of G
  std::complex<double> c;
};

// Gamma-point Kohn-Sham orbital expanded in plane waves.
struct PlaneWaveFunction {
  Mat3 reciprocal_lattice{};  // rows b1, b2, b3 in 1/Angstrom (2*pi included)
  std::vector<PlaneWaveCoefficient> coefficients;
  double band_energy = 0.0;  // eV
  SpinChannel spin = SpinChannel::Up;
  Occupancy occupancy = Occupancy::Unknown;
  bool renormalized = false;  // set when parse rescaled a norm within (1e-6, 1e-3]

  double norm_sq() const;
};

// <psi_f| p |psi_i> in Hartree atomic units (hbar / bohr).
struct MomentumMatrixElement {
  std::array<std::complex<double>, 3> p{};
};

// WFC v1 text format:
//   WFC v1
//   b1x b1y b1z b2x b2y b2z b3x b3y b3z
//   N band_energy_eV spin [occupied|unoccupied]
//   N lines: g1 g2 g3 re im
// Errors: "wfc_header", "wfc_count_mismatch", "wfc_duplicate_g", "wfc_normalization".
PlaneWaveFunction parse_wfc(std::istream& in);
PlaneWaveFunction parse_wfc(const std::filesystem::path& path);
PlaneWaveFunction parse_wfc_text(const std::string& text);
std::string format_wfc(const PlaneWaveFunction& wf);

// p = sum_G c_f*(G) G c_i(G); G triples absent from either expansion contribute zero.
// Throws Error("lattice_mismatch") when lattices differ by more than 1e-8.
MomentumMatrixElement momentum_element(const PlaneWaveFunction& wf_i, const PlaneWaveFunction& wf_f);

// mu = i hbar / ((E_f - E_i) m) <psi_f|p|psi_i>, returned in e*Angstrom.
// Throws Error("degenerate_levels") when |E_f - E_i| < 1e-6 eV.
DipoleMoment dipole_from_momentum(const MomentumMatrixElement& p, double e_i, double e_f);
DipoleMoment transition_dipole(const PlaneWaveFunction& wf_i, const PlaneWaveFunction& wf_f,
                               double e_i, double e_f);
// Uses the band energies stored in the two wavefunctions.
DipoleMoment transition_dipole(const PlaneWaveFunction& wf_i, const PlaneWaveFunction& wf_f);

}  // namespace hbndb
