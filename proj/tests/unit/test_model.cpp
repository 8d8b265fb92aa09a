#include <doctest.h>

#include <cmath>
#include <limits>

#include "hbndb/error.hpp"
#include "hbndb/model.hpp"
#include "hbndb/record_io.hpp"
#include "hbndb/units.hpp"
#include "support.hpp"

using namespace hbndb;

namespace {

DefectRecord vb_record() {
  DefectRecord r;
  r.composition = {{"", SiteKind::VacancyB}};
  r.charge = -1;
  r.spin_multiplicity = SpinMultiplicity::Triplet;
  r.id = derive_id(r.composition, r.charge, r.spin_multiplicity);
  r.ground_total_energy = -7.92;
  r.structure_ref = "structures/VB_q-1_triplet.xyz";
  TransitionRecord t;
  t.spin_channel = SpinChannel::Down;
  t.excited_total_energy = -5.84;
  t.zpl = 2.08;
  t.zpl_nm = 1239.84198 / 2.08;  // 596.08 to two decimals
  r.transitions.push_back(t);
  return r;
}

bool has_rule(const std::vector<Violation>& v, const std::string& field, const std::string& rule_part) {
  for (const auto& x : v)
    if (x.field == field && x.rule.find(rule_part) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("compute_zpl examples") {
  CHECK(compute_zpl(-7.92, -5.84) == doctest::Approx(2.08).epsilon(1e-12));
  const double e = -1234.5;
  CHECK(compute_zpl(e, e + 1.89) == doctest::Approx(1.89).epsilon(1e-12));
  try {
    compute_zpl(0.0, 0.0);
    FAIL("expected error");
  } catch (const Error& err) {
    CHECK(err.code() == "non_positive_zpl");
  }
  CHECK_THROWS_AS(compute_zpl(std::nan(""), 1.0), Error);
}

TEST_CASE("compute_zpl is antisymmetric") {
  testsupport::RecordFactory f(7);
  for (int i = 0; i < 200; ++i) {
    const double a = -0.001 * f.uniform(0, 100000);
    const double b = a + 0.001 * f.uniform(1, 5000);
    const double fwd = compute_zpl(a, b);
    // the reverse order is an error case; antisymmetry holds for the raw difference
    CHECK_THROWS_AS(compute_zpl(b, a), Error);
    CHECK(fwd == -(a - b));
  }
}

TEST_CASE("eV and nm conversion is involutive") {
  for (double ev = 0.5; ev < 6.0; ev += 0.037) {
    CHECK(units::nm_to_ev(units::ev_to_nm(ev)) == doctest::Approx(ev).epsilon(1e-9));
  }
  CHECK(units::ev_to_nm(2.08) == doctest::Approx(1239.84198 / 2.08).epsilon(1e-15));
}

TEST_CASE("validate_record examples") {
  SUBCASE("2.08 eV record with its derived zpl_nm is valid") {
    CHECK(validate_record(vb_record()).empty());
  }
  SUBCASE("exact rate and lifetime pair is valid") {
    auto r = vb_record();
    r.transitions[0].radiative_rate = 1e8;
    r.transitions[0].radiative_lifetime = 1e-8;
    CHECK(validate_record(r).empty());
  }
  SUBCASE("negative zpl") {
    auto r = vb_record();
    r.transitions[0].zpl = -0.3;
    CHECK(has_rule(validate_record(r), "transitions[0].zpl", "zpl must be positive"));
  }
}

TEST_CASE("validate_record rules") {
  auto r = vb_record();
  SUBCASE("charge range") {
    r.charge = 2;
    CHECK(has_rule(validate_record(r), "charge", "-1, 0 or +1"));
  }
  SUBCASE("odd electron count needs doublet") {
    r.electron_count = 31;
    CHECK(has_rule(validate_record(r), "spin_multiplicity", "doublet"));
    r.spin_multiplicity = SpinMultiplicity::Doublet;
    r.id = derive_id(r.composition, r.charge, r.spin_multiplicity);
    CHECK(validate_record(r).empty());
    r.electron_count = 32;
    CHECK(has_rule(validate_record(r), "spin_multiplicity", "forbids doublet"));
  }
  SUBCASE("zpl consistent with totals") {
    r.transitions[0].excited_total_energy = -5.0;
    CHECK(has_rule(validate_record(r), "transitions[0].zpl", "excited_total_energy"));
  }
  SUBCASE("zpl_nm consistency") {
    r.transitions[0].zpl_nm = 600.0;
    CHECK(has_rule(validate_record(r), "transitions[0].zpl_nm", "1239.84198"));
  }
  SUBCASE("lifetime times rate") {
    r.transitions[0].radiative_rate = 1e8;
    r.transitions[0].radiative_lifetime = 1.1e-8;
    CHECK(has_rule(validate_record(r), "transitions[0].radiative_lifetime", "must equal 1"));
  }
  SUBCASE("zero rate needs infinite lifetime") {
    r.transitions[0].radiative_rate = 0.0;
    r.transitions[0].radiative_lifetime = std::numeric_limits<double>::infinity();
    CHECK(validate_record(r).empty());
    r.transitions[0].radiative_lifetime = 1.0;
    CHECK_FALSE(validate_record(r).empty());
  }
  SUBCASE("quantum efficiency iff nonradiative rate") {
    r.transitions[0].nonradiative_rate = 1e6;
    CHECK(has_rule(validate_record(r), "transitions[0].quantum_efficiency", "iff"));
    r.transitions[0].quantum_efficiency = 0.5;
    CHECK(validate_record(r).empty());
  }
  SUBCASE("angle and visibility ranges") {
    r.transitions[0].emission_polarization_deg = 60.0;
    r.transitions[0].visibility_em = 1.5;
    r.transitions[0].misalignment_deg = 31.0;
    const auto v = validate_record(r);
    CHECK(has_rule(v, "transitions[0].emission_polarization_deg", "[0"));
    CHECK(has_rule(v, "transitions[0].visibility_em", "[0"));
    CHECK(has_rule(v, "transitions[0].misalignment_deg", "[0"));
  }
  SUBCASE("dipole mu_sq must match components") {
    DipoleMoment d = DipoleMoment::from_e_angstrom({{{1.0, 0.0}, {0.0, 0.5}, {0.0, 0.0}}});
    CHECK(d.mu_sq_debye2 == doctest::Approx(1.25 * 4.803204 * 4.803204).epsilon(1e-6));
    r.transitions[0].emission_dipole = d;
    CHECK(validate_record(r).empty());
    r.transitions[0].emission_dipole->mu_sq_debye2 *= 1.01;
    CHECK(has_rule(validate_record(r), "transitions[0].emission_dipole.mu_sq", "Debye"));
  }
  SUBCASE("id derived from composition") {
    r.id = "something_else";
    CHECK(has_rule(validate_record(r), "id", "derived"));
  }
  SUBCASE("one transition per spin channel") {
    r.transitions.push_back(r.transitions[0]);
    CHECK(has_rule(validate_record(r), "transitions[1].spin_channel", "at most one"));
  }
  SUBCASE("vacancies carry no element") {
    r.composition[0].element = "B";
    CHECK(has_rule(validate_record(r), "composition[0]", "vacancies"));
  }
}

TEST_CASE("ids") {
  CHECK(derive_id({{"", SiteKind::VacancyB}}, -1, SpinMultiplicity::Triplet) == "VB_q-1_triplet");
  CHECK(derive_id({{"C", SiteKind::SubstitutionB}, {"", SiteKind::VacancyN}}, 0, SpinMultiplicity::Triplet) ==
        "CBVN_q0_triplet");
  CHECK(derive_id({{"C", SiteKind::SubstitutionN}, {"C", SiteKind::SubstitutionN}}, 1, SpinMultiplicity::Singlet,
                  std::string("a")) == "CNCN-a_q+1_singlet");
}

TEST_CASE("record serialization round trip") {
  testsupport::RecordFactory f(11);
  for (int i = 0; i < 300; ++i) {
    DefectRecord r = f.record();
    r.memory_metrics["m"] = 0.1 * i;
    r.provenance = {"note " + std::to_string(i), {"a", "b"}};
    if (!r.transitions.empty()) {
      r.transitions[0].emission_dipole =
          DipoleMoment::from_e_angstrom({{{0.1 * i, -0.3}, {1.0 / 3.0, 0.0}, {0.0, 1e-17}}});
      r.transitions[0].wavefunction_refs["ground_occ"] = "wavefunctions/x.wfc";
    }
    const std::string line = serialize_record(r);
    CHECK(line.find('\n') == std::string::npos);
    const DefectRecord back = parse_record_line(line);
    CHECK(back == r);
    CHECK(serialize_record(back) == line);
  }
}

TEST_CASE("infinite lifetime is a string sentinel") {
  auto r = vb_record();
  r.transitions[0].radiative_rate = 0.0;
  r.transitions[0].radiative_lifetime = std::numeric_limits<double>::infinity();
  const std::string line = serialize_record(r);
  CHECK(line.find("\"radiative_lifetime\":\"inf\"") != std::string::npos);
  CHECK(std::isinf(*parse_record_line(line).transitions[0].radiative_lifetime));
}

TEST_CASE("record file parsing reports line numbers") {
  auto r = vb_record();
  const std::string text = serialize_record(r) + "\n{not json}\n";
  try {
    parse_records(text);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == "bad_record");
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}
