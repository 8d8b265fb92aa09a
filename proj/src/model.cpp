#include "hbndb/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hbndb/error.hpp"
#include "hbndb/units.hpp"

namespace hbndb {

namespace {

constexpr std::array<std::pair<SiteKind, std::string_view>, 6> kSiteNames{{
    {SiteKind::SubstitutionB, "substitution-on-B"},
    {SiteKind::SubstitutionN, "substitution-on-N"},
    {SiteKind::VacancyB, "vacancy-on-B"},
    {SiteKind::VacancyN, "vacancy-on-N"},
    {SiteKind::Antisite, "antisite"},
    {SiteKind::ComplexMember, "complex-member"},
}};

bool is_vacancy(SiteKind kind) { return kind == SiteKind::VacancyB || kind == SiteKind::VacancyN; }

bool close_rel(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1e-300});
}

void check_range(std::vector<Violation>& out, const std::string& field, const std::optional<double>& v,
                 double lo, double hi, bool hi_open) {
  if (!v) return;
  bool ok = std::isfinite(*v) && *v >= lo && (hi_open ? *v < hi : *v <= hi);
  if (!ok) {
    out.push_back({field, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) +
                              (hi_open ? ")" : "]")});
  }
}

}  // namespace

std::string_view to_string(SiteKind kind) {
  for (const auto& [k, name] : kSiteNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::string_view to_string(SpinMultiplicity spin) {
  switch (spin) {
    case SpinMultiplicity::Singlet: return "singlet";
    case SpinMultiplicity::Doublet: return "doublet";
    case SpinMultiplicity::Triplet: return "triplet";
  }
  return "unknown";
}

std::string_view to_string(SpinChannel channel) {
  return channel == SpinChannel::Up ? "up" : "down";
}

SiteKind parse_site_kind(std::string_view text) {
  for (const auto& [k, name] : kSiteNames) {
    if (name == text) return k;
  }
  throw Error("bad_enum", "unknown site kind '" + std::string(text) + "'");
}

SpinMultiplicity parse_spin_multiplicity(std::string_view text) {
  if (text == "singlet") return SpinMultiplicity::Singlet;
  if (text == "doublet") return SpinMultiplicity::Doublet;
  if (text == "triplet") return SpinMultiplicity::Triplet;
  throw Error("bad_enum", "unknown spin multiplicity '" + std::string(text) + "'");
}

SpinChannel parse_spin_channel(std::string_view text) {
  if (text == "up") return SpinChannel::Up;
  if (text == "down") return SpinChannel::Down;
  throw Error("bad_enum", "unknown spin channel '" + std::string(text) + "'");
}

double mu_sq_debye2(const std::array<std::complex<double>, 3>& mu) {
  const double sq = std::norm(mu[0]) + std::norm(mu[1]) + std::norm(mu[2]);
  return sq * units::kDebyePerEAngstrom * units::kDebyePerEAngstrom;
}

DipoleMoment DipoleMoment::from_e_angstrom(const std::array<std::complex<double>, 3>& mu) {
  return DipoleMoment{mu, hbndb::mu_sq_debye2(mu)};
}

double compute_zpl(double ground_total, double excited_total) {
  if (!std::isfinite(ground_total) || !std::isfinite(excited_total)) {
    throw Error("non_finite_energy", "total energies must be finite");
  }
  const double zpl = excited_total - ground_total;
  if (!(zpl > 0.0)) {
    throw Error("non_positive_zpl",
                "non-positive ZPL (" + std::to_string(zpl) + " eV): ground/excited states mislabeled?");
  }
  return zpl;
}

std::string formula_label(const std::vector<CompositionEntry>& composition) {
  std::string out;
  for (const auto& c : composition) {
    switch (c.site) {
      case SiteKind::SubstitutionB: out += c.element + "B"; break;
      case SiteKind::SubstitutionN: out += c.element + "N"; break;
      case SiteKind::VacancyB: out += "VB"; break;
      case SiteKind::VacancyN: out += "VN"; break;
      case SiteKind::Antisite: out += c.element + "X"; break;
      case SiteKind::ComplexMember: out += c.element; break;
    }
  }
  return out;
}

std::string derive_id(const std::vector<CompositionEntry>& composition, int charge,
                      SpinMultiplicity spin, const std::optional<std::string>& variant) {
  std::string id = formula_label(composition);
  if (variant && !variant->empty()) id += "-" + *variant;
  id += "_q";
  if (charge > 0) id += "+";
  id += std::to_string(charge);
  id += "_";
  id += to_string(spin);
  return id;
}

std::vector<std::string> elements_of(const DefectRecord& record) {
  std::set<std::string> seen;
  for (const auto& c : record.composition) {
    if (!is_vacancy(c.site) && !c.element.empty()) seen.insert(c.element);
  }
  return {seen.begin(), seen.end()};
}

std::vector<Violation> validate_record(const DefectRecord& r) {
  std::vector<Violation> out;

  if (r.id.empty()) out.push_back({"id", "must be non-empty"});
  if (r.composition.empty()) {
    out.push_back({"composition", "must list at least one member"});
  } else if (r.id != derive_id(r.composition, r.charge, r.spin_multiplicity, r.variant)) {
    out.push_back({"id", "must equal the id derived from composition, charge and spin"});
  }
  for (std::size_t i = 0; i < r.composition.size(); ++i) {
    const auto& c = r.composition[i];
    const bool vac = is_vacancy(c.site);
    if (vac != c.element.empty()) {
      out.push_back({"composition[" + std::to_string(i) + "]",
                     "vacancies carry no element; other sites require one"});
    }
  }
  if (r.charge < -1 || r.charge > 1) out.push_back({"charge", "must be -1, 0 or +1"});
  if (r.electron_count) {
    const bool odd = (*r.electron_count % 2) != 0;
    const bool doublet = r.spin_multiplicity == SpinMultiplicity::Doublet;
    if (odd != doublet) {
      out.push_back({"spin_multiplicity",
                     odd ? "odd electron count requires doublet" : "even electron count forbids doublet"});
    }
  }
  if (r.host_group && (*r.host_group < 3 || *r.host_group > 6)) {
    out.push_back({"host_group", "must be a periodic group in III..VI"});
  }
  if (!std::isfinite(r.ground_total_energy)) out.push_back({"ground_total_energy", "must be finite"});

  std::set<SpinChannel> channels;
  for (std::size_t i = 0; i < r.transitions.size(); ++i) {
    const auto& t = r.transitions[i];
    const std::string p = "transitions[" + std::to_string(i) + "].";
    if (!channels.insert(t.spin_channel).second) {
      out.push_back({p + "spin_channel", "at most one transition per spin channel"});
    }
    if (!(t.zpl > 0.0) || !std::isfinite(t.zpl)) {
      out.push_back({p + "zpl", "zpl must be positive"});
    } else {
      const double expect = t.excited_total_energy - r.ground_total_energy;
      if (std::abs(expect - t.zpl) > 1e-9 * std::max(1.0, std::abs(expect))) {
        out.push_back({p + "zpl", "must equal excited_total_energy - ground_total_energy"});
      }
      if (!close_rel(t.zpl_nm, units::ev_to_nm(t.zpl), 1e-6)) {
        out.push_back({p + "zpl_nm", "must equal 1239.84198 / zpl"});
      }
    }
    for (const auto& [name, dip] : {std::pair{"excitation_dipole", &t.excitation_dipole},
                                    std::pair{"emission_dipole", &t.emission_dipole}}) {
      if (!*dip) continue;
      const auto& d = **dip;
      bool finite = true;
      for (const auto& c : d.mu) finite = finite && std::isfinite(c.real()) && std::isfinite(c.imag());
      if (!finite) out.push_back({p + name, "components must be finite"});
      const double expect_sq = mu_sq_debye2(d.mu);
      if (d.mu_sq_debye2 < 0.0 || std::abs(d.mu_sq_debye2 - expect_sq) > 1e-9 * expect_sq + 1e-12) {
        out.push_back({p + name + ".mu_sq", "must equal |mu|^2 converted to Debye^2"});
      }
    }
    check_range(out, p + "excitation_polarization_deg", t.excitation_polarization_deg, 0.0, 60.0, true);
    check_range(out, p + "emission_polarization_deg", t.emission_polarization_deg, 0.0, 60.0, true);
    check_range(out, p + "visibility_exc", t.visibility_exc, 0.0, 1.0, false);
    check_range(out, p + "visibility_em", t.visibility_em, 0.0, 1.0, false);
    check_range(out, p + "misalignment_deg", t.misalignment_deg, 0.0, 30.0, false);
    check_range(out, p + "quantum_efficiency", t.quantum_efficiency, 0.0, 1.0, false);

    if (t.radiative_rate.has_value() != t.radiative_lifetime.has_value()) {
      out.push_back({p + "radiative_lifetime", "rate and lifetime must be present together"});
    } else if (t.radiative_rate) {
      const double rate = *t.radiative_rate;
      const double life = *t.radiative_lifetime;
      if (!(rate >= 0.0) || !std::isfinite(rate)) {
        out.push_back({p + "radiative_rate", "must be finite and non-negative"});
      } else if (rate == 0.0) {
        if (!std::isinf(life)) out.push_back({p + "radiative_lifetime", "zero rate requires infinite lifetime"});
      } else if (std::abs(rate * life - 1.0) > 1e-12) {
        out.push_back({p + "radiative_lifetime", "lifetime * rate must equal 1"});
      }
    }
    if (t.nonradiative_rate.has_value() != t.quantum_efficiency.has_value()) {
      out.push_back({p + "quantum_efficiency", "present iff nonradiative_rate present"});
    }
    if (t.nonradiative_rate && !(*t.nonradiative_rate >= 0.0)) {
      out.push_back({p + "nonradiative_rate", "must be non-negative"});
    }
    if (t.refractive_index && !(*t.refractive_index > 0.0)) {
      out.push_back({p + "refractive_index", "must be positive"});
    }
    if (t.total_hr_factor && !(*t.total_hr_factor >= 0.0)) {
      out.push_back({p + "total_hr_factor", "must be non-negative"});
    }
  }
  return out;
}

}  // namespace hbndb
