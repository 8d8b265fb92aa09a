#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "hbndb/structure.hpp"

namespace hbndb {

inline constexpr double kDefaultLineshapeGamma = 0.005;  // eV

struct PhononMode {
  double energy = 0.0;               // hbar*omega_k, eV
  std::vector<Vec3> displacement;    // per atom; sum_a m_a |d_a|^2 = 1 (m in amu)
};

struct PhononSet {
  std::vector<std::string> symbols;
  std::vector<double> masses;        // amu
  std::vector<Vec3> ground_positions;   // Angstrom
  std::vector<Vec3> excited_positions;  // Angstrom
  std::vector<PhononMode> modes;
};

// PHONONS v1 text format:
//   PHONONS v1
//   <n_atoms> <n_modes>
//   n_atoms lines: symbol mass_amu xg yg zg xe ye ze
//   per mode: "mode <hbar_omega_eV>" then n_atoms lines "dx dy dz"
PhononSet parse_phonons(std::istream& in);
PhononSet parse_phonons(const std::filesystem::path& path);
std::string format_phonons(const PhononSet& phonons);

// Throws Error("bad_phonons") on shape mismatch, non-positive frequency or
// a displacement set whose mass-weighted norm differs from 1 by more than 1e-6.
void check_phonons(const PhononSet& phonons);

// q_k = sum_{a,i} m_a (R_e - R_g)_{a,i} d_{k,a,i}, i.e. the projection of the
// mass-weighted distortion onto the mass-weighted eigenvector sqrt(m) d.
// Units amu^(1/2) Angstrom, sign retained.
std::vector<double> configuration_coordinates(const PhononSet& phonons);

struct HRFactor {
  double energy = 0.0;  // hbar*omega_k, eV
  double s = 0.0;       // partial Huang-Rhys factor
};

struct HRSpectrum {
  std::vector<HRFactor> partial;
  double total = 0.0;  // S(0)
};

HRSpectrum make_hr_spectrum(std::vector<HRFactor> partial);

// s_k = omega_k q_k^2 / (2 hbar)
double hr_factor(double energy_ev, double q_amu_angstrom);
HRSpectrum hr_factors(const PhononSet& phonons);

struct TimeGrid {
  double start = 0.0;  // fs
  double step = 1.0;   // fs
  std::size_t count = 0;
};

// S(t) = sum_k s_k exp(-i omega_k t); S(0) equals the total HR factor.
std::vector<std::complex<double>> spectral_function_time(const HRSpectrum& hr, const TimeGrid& grid);

struct SpectralWindow {
  double lo = 0.0;    // eV
  double hi = 0.0;    // eV
  double step = 0.001;  // eV
};

// [zpl - 1.0, zpl + 0.25] at 1 meV.
SpectralWindow default_window(double zpl);

struct PLSpectrum {
  std::vector<double> energies;           // eV, strictly increasing
  std::vector<double> intensities;        // L = C E^3 A, peak-normalized, clipped at 0
  std::vector<double> spectral_function;  // A(E) in 1/eV, unit area over the real line
  double zpl = 0.0;
  double gamma = 0.0;
  double normalization = 0.0;     // C
  double time_step = 0.0;         // fs
  double time_span = 0.0;         // fs
  double max_ringing = 0.0;       // largest negative excursion clipped, relative to peak
};

// Emission lineshape from the generating function G(t) = exp(S(t) - S(0)):
//   A(E_zpl - D) = (1/2pi) int G(t) exp(i D t/hbar - gamma |t|/hbar) dt
// so phonon sidebands sit on the red side of the ZPL. The time integral is a
// trapezoid sum with step pi*hbar / (4 max(max hbar*omega_k, window half-width))
// over a span of at least 10 hbar/gamma.
// Errors: "bad_gamma", "bad_window", "window_excludes_zpl".
PLSpectrum pl_spectrum(const HRSpectrum& hr, double zpl, double gamma = kDefaultLineshapeGamma,
                       const SpectralWindow& window = {});

// Two-column CSV: energy_eV,intensity
std::string spectrum_csv(const PLSpectrum& spectrum);

// Integrated weight of Lorentzian lines (HWHM = spectrum.gamma) centred at
// `centers`, recovered from the spectral function by partitioning the grid into
// nearest-centre windows and solving for the weights that reproduce every
// window integral (accounts for tail leakage between neighbouring lines).
std::vector<double> lorentzian_line_weights(const PLSpectrum& spectrum, std::span<const double> centers);

}  // namespace hbndb
