#pragma once

// Physical constants (CODATA 2018, SI) and unit conversions used across the library.

namespace hbndb::units {

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double kElementaryCharge = 1.602176634e-19;   // C
inline constexpr double kPlanck = 6.62607015e-34;              // J s
inline constexpr double kHbar = kPlanck / (2.0 * kPi);         // J s
inline constexpr double kSpeedOfLight = 299792458.0;           // m/s
inline constexpr double kVacuumPermittivity = 8.8541878128e-12;  // F/m
inline constexpr double kElectronMass = 9.1093837015e-31;      // kg
inline constexpr double kBoltzmann = 1.380649e-23;             // J/K
inline constexpr double kAtomicMassUnit = 1.66053906660e-27;   // kg

inline constexpr double kJoulePerEv = kElementaryCharge;
inline constexpr double kHbarEvS = kHbar / kJoulePerEv;        // eV s
inline constexpr double kHbarEvFs = kHbarEvS * 1e15;           // eV fs
inline constexpr double kBoltzmannEvK = kBoltzmann / kJoulePerEv;

inline constexpr double kBohrAngstrom = 0.529177210903;
inline constexpr double kHartreeEv = 27.211386245988;

// 1 Debye = 1e-21 / c  C m
inline constexpr double kDebyeCm = 1e-21 / kSpeedOfLight;
// e * 1 Angstrom expressed in Debye (~4.803204)
inline constexpr double kDebyePerEAngstrom = kElementaryCharge * 1e-10 / kDebyeCm;

// hc in eV nm, used for the ZPL wavelength field.
inline constexpr double kEvNm = 1239.84198;

inline double ev_to_nm(double ev) { return kEvNm / ev; }
inline double nm_to_ev(double nm) { return kEvNm / nm; }

}  // namespace hbndb::units
