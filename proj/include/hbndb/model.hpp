#pragma once

#include <array>
#include <complex>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hbndb {

enum class SiteKind {
  SubstitutionB,
  SubstitutionN,
  VacancyB,
  VacancyN,
  Antisite,
  ComplexMember,
};

enum class SpinMultiplicity { Singlet, Doublet, Triplet };

// Spin-conserving transition pathway: up->up or down->down.
enum class SpinChannel { Up, Down };

std::string_view to_string(SiteKind kind);
std::string_view to_string(SpinMultiplicity spin);
std::string_view to_string(SpinChannel channel);

// Parsers accept the strings produced by to_string; throw Error("bad_enum") otherwise.
SiteKind parse_site_kind(std::string_view text);
SpinMultiplicity parse_spin_multiplicity(std::string_view text);
SpinChannel parse_spin_channel(std::string_view text);

struct CompositionEntry {
  std::string element;  // empty for vacancies
  SiteKind site = SiteKind::SubstitutionB;

  bool operator==(const CompositionEntry&) const = default;
};

// Transition dipole moment. Components are complex, in e*Angstrom.
struct DipoleMoment {
  std::array<std::complex<double>, 3> mu{};
  double mu_sq_debye2 = 0.0;  // |mu|^2 in Debye^2

  static DipoleMoment from_e_angstrom(const std::array<std::complex<double>, 3>& mu);

  double in_plane_sq() const { return std::norm(mu[0]) + std::norm(mu[1]); }
  double norm_sq() const { return in_plane_sq() + std::norm(mu[2]); }

  bool operator==(const DipoleMoment&) const = default;
};

double mu_sq_debye2(const std::array<std::complex<double>, 3>& mu_e_angstrom);

struct TransitionRecord {
  SpinChannel spin_channel = SpinChannel::Up;
  double excited_total_energy = 0.0;  // eV
  double zpl = 0.0;                   // eV
  double zpl_nm = 0.0;

  // Kohn-Sham levels of the two defect orbitals in the ground geometry (eV).
  std::optional<double> lower_level;
  std::optional<double> upper_level;

  std::optional<DipoleMoment> excitation_dipole;
  std::optional<DipoleMoment> emission_dipole;
  std::optional<double> excitation_polarization_deg;
  std::optional<double> emission_polarization_deg;
  std::optional<double> visibility_exc;
  std::optional<double> visibility_em;
  std::optional<double> misalignment_deg;

  // Radiative rate in 1/s; lifetime in s, +inf when the rate is zero.
  std::optional<double> radiative_rate;
  std::optional<double> radiative_lifetime;
  std::optional<double> refractive_index;

  std::optional<double> nonradiative_rate;
  std::optional<double> quantum_efficiency;

  std::optional<double> total_hr_factor;
  std::optional<std::string> phonon_ref;
  std::optional<std::string> lineshape_ref;
  // role ("ground_occ", "ground_unocc", "excited_occ", "excited_unocc") -> bundle path
  std::map<std::string, std::string> wavefunction_refs;

  bool operator==(const TransitionRecord&) const = default;
};

struct Provenance {
  std::string text;
  std::vector<std::string> tags;

  bool operator==(const Provenance&) const = default;
};

struct DefectRecord {
  std::string id;
  std::vector<CompositionEntry> composition;
  std::optional<std::string> variant;  // distinguishes lattice configurations of one formula
  int charge = 0;
  SpinMultiplicity spin_multiplicity = SpinMultiplicity::Triplet;
  std::optional<int> electron_count;
  std::optional<int> host_group;  // 3..6, absent for intrinsic defects
  double ground_total_energy = 0.0;  // eV
  std::string structure_ref;
  std::vector<TransitionRecord> transitions;
  std::map<std::string, double> memory_metrics;
  Provenance provenance;

  bool operator==(const DefectRecord&) const = default;
};

struct Violation {
  std::string field;
  std::string rule;

  bool operator==(const Violation&) const = default;
};

// Checks every record invariant; an empty result means the record is valid.
std::vector<Violation> validate_record(const DefectRecord& record);

// ZPL from relaxed total energies (zero-point energies assumed to cancel).
// Throws Error("non_positive_zpl") when excited_total - ground_total <= 0.
double compute_zpl(double ground_total, double excited_total);

// Compact formula such as "CBVN" or "VB": element (or "V" for vacancies) followed by site letter.
std::string formula_label(const std::vector<CompositionEntry>& composition);

// Deterministic id: <formula>[-<variant>]_q<charge>_<spin>, e.g. "VB_q-1_triplet".
std::string derive_id(const std::vector<CompositionEntry>& composition, int charge,
                      SpinMultiplicity spin, const std::optional<std::string>& variant = {});

// Distinct element symbols present in the composition (vacancies excluded).
std::vector<std::string> elements_of(const DefectRecord& record);

}  // namespace hbndb
