#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hbndb/error.hpp"
#include "hbndb/photophysics.hpp"
#include "support.hpp"

using namespace hbndb;

namespace {

// Published constants, written out here rather than shared with the library.
constexpr double kE = 1.602176634e-19;
constexpr double kH = 6.62607015e-34;
constexpr double kPiLocal = 3.14159265358979323846;
constexpr double kC = 299792458.0;
constexpr double kEps0 = 8.8541878128e-12;
constexpr double kKb = 1.380649e-23;

double rate_oracle(double zpl_ev, double mu_sq_debye2, double n) {
  const double hbar = kH / (2 * kPiLocal);
  const double e0 = zpl_ev * kE;
  const double debye = 1e-21 / kC;
  const double mu_sq = mu_sq_debye2 * debye * debye;
  return n * e0 * e0 * e0 * mu_sq / (3 * kPiLocal * kEps0 * std::pow(hbar, 4) * std::pow(kC, 3));
}

std::string code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST_CASE("radiative_rate examples") {
  const auto zero = radiative_rate(2.0, 0.0);
  CHECK(zero.rate == 0.0);
  CHECK(std::isinf(zero.lifetime));

  const auto r = radiative_rate(2.0, 25.0, 1.85);
  CHECK(r.rate == doctest::Approx(rate_oracle(2.0, 25.0, 1.85)).epsilon(1e-9));
  // value of tests/oracles/radiative_rate.py (40-digit arithmetic)
  CHECK(r.rate == doctest::Approx(60884239.971714766).epsilon(1e-9));
  CHECK(r.rate * r.lifetime == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(radiative_rate(4.0, 25.0).rate / radiative_rate(2.0, 25.0).rate == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("radiative_rate scaling and errors") {
  testsupport::RecordFactory f(41);
  for (int i = 0; i < 200; ++i) {
    const double e = 0.5 + 0.01 * f.uniform(0, 400);
    const double mu = 0.1 * f.uniform(1, 500);
    const double n = 1.0 + 0.01 * f.uniform(0, 150);
    const double k = 0.5 + 0.25 * f.uniform(0, 12);
    const double base = radiative_rate(e, mu, n).rate;
    CHECK(radiative_rate(k * e, mu, n).rate / base == doctest::Approx(k * k * k).epsilon(1e-12));
    CHECK(radiative_rate(e, k * mu, n).rate / base == doctest::Approx(k).epsilon(1e-12));
    CHECK(radiative_rate(e, mu, k * n).rate / base == doctest::Approx(k).epsilon(1e-12));
    CHECK(base == doctest::Approx(rate_oracle(e, mu, n)).epsilon(1e-9));
  }
  CHECK(code_of([] { radiative_rate(0.0, 1.0); }) == "non_positive_zpl");
  CHECK(code_of([] { radiative_rate(1.0, 1.0, 0.0); }) == "bad_refractive_index");
  CHECK(code_of([] { radiative_rate(1.0, -1.0); }) == "negative_dipole");
}

TEST_CASE("nonradiative_rate examples") {
  const double hbar_evs = kH / (2 * kPiLocal) / kE;
  SUBCASE("zero couplings") {
    CouplingTable t{1, 300.0, {{0.0, 0.0, 0.0}, {0.1, 0.12, 0.0}}};
    CHECK(nonradiative_rate(t, 0.01) == 0.0);
  }
  SUBCASE("single resonant term") {
    const double c = 3e-6, sigma = 0.02;
    CouplingTable t{2, 77.0, {{0.05, 0.05, c}}};
    const double hand = (2 * kPiLocal / hbar_evs) * 2 * c / (sigma * std::sqrt(2 * kPiLocal));
    CHECK(nonradiative_rate(t, sigma) == doctest::Approx(hand).epsilon(1e-12));
  }
  SUBCASE("low temperature keeps only the lowest initial level") {
    CouplingTable t{1, 1.0, {{0.0, 0.0, 1e-6}, {0.1, 0.1, 5e-6}}};
    CouplingTable only{1, 1.0, {{0.0, 0.0, 1e-6}}};
    CHECK(nonradiative_rate(t, 0.01) == doctest::Approx(nonradiative_rate(only, 0.01)).epsilon(1e-12));
  }
  SUBCASE("Boltzmann weights at finite temperature") {
    const double T = 600.0, sigma = 0.01;
    CouplingTable t{1, T, {{0.0, 0.0, 1e-6}, {0.03, 0.03, 2e-6}, {0.03, 0.05, 4e-6}}};
    const double kt = kKb * T / kE;
    const double w0 = 1.0, w1 = std::exp(-0.03 / kt), z = w0 + w1;
    const double g = [&](double d) { return std::exp(-d * d / (2 * sigma * sigma)) / (sigma * std::sqrt(2 * kPiLocal)); }(0.0);
    const double g2 = std::exp(-0.02 * 0.02 / (2 * sigma * sigma)) / (sigma * std::sqrt(2 * kPiLocal));
    const double hand = (2 * kPiLocal / hbar_evs) * (w0 / z * 1e-6 * g + w1 / z * (2e-6 * g + 4e-6 * g2));
    CHECK(nonradiative_rate(t, sigma) == doctest::Approx(hand).epsilon(1e-12));
  }
  SUBCASE("linear in each coupling") {
    CouplingTable t{1, 300.0, {{0.0, 0.01, 1e-6}, {0.02, 0.02, 3e-6}}};
    const double base = nonradiative_rate(t, 0.01);
    CouplingTable t2 = t;
    t2.entries[1].coupling_sq *= 3.0;
    CouplingTable only0 = t, only1 = t;
    only0.entries[1].coupling_sq = 0.0;
    only1.entries[0].coupling_sq = 0.0;
    CHECK(nonradiative_rate(t2, 0.01) ==
          doctest::Approx(nonradiative_rate(only0, 0.01) + 3.0 * nonradiative_rate(only1, 0.01)).epsilon(1e-12));
    CHECK(base == doctest::Approx(nonradiative_rate(only0, 0.01) + nonradiative_rate(only1, 0.01)).epsilon(1e-12));
  }
  SUBCASE("errors") {
    CouplingTable t{1, 300.0, {{0.0, 0.0, 1e-6}}};
    CHECK(code_of([&] { nonradiative_rate(t, 0.0); }) == "bad_sigma");
    CHECK(code_of([&] { nonradiative_rate(CouplingTable{1, 300.0, {}}, 0.01); }) == "empty_table");
  }
}

TEST_CASE("coupling csv") {
  std::istringstream in("# g = 2\n# T = 150\nE_in_eV,E_fm_eV,coupling_sq_eV2\n0.0,0.01,1e-6\n0.02,0.02,2.5e-6\n");
  const auto t = parse_coupling_csv(in);
  CHECK(t.degeneracy == 2);
  CHECK(t.temperature == 150.0);
  REQUIRE(t.entries.size() == 2);
  CHECK(t.entries[1].coupling_sq == 2.5e-6);
  std::istringstream bad("# g = 1\n# T = 300\nE_in_eV,E_fm_eV,coupling_sq_eV2\n0.0,0.0,-1\n");
  CHECK(code_of([&] { parse_coupling_csv(bad); }) == "negative_coupling");
}

TEST_CASE("quantum_efficiency") {
  CHECK(quantum_efficiency(5e7, 0.0) == 1.0);
  CHECK(quantum_efficiency(3e6, 3e6) == 0.5);
  CHECK(quantum_efficiency(1e8, 3e8) == 0.25);
  CHECK(code_of([] { quantum_efficiency(0.0, 0.0); }) == "undefined_efficiency");
  CHECK(code_of([] { quantum_efficiency(-1.0, 1.0); }) == "negative_rate");
  double prev = 2.0;
  for (double nr = 0.0; nr < 1e9; nr += 1e7) {
    const double q = quantum_efficiency(1e8, nr);
    CHECK(q >= 0.0);
    CHECK(q <= 1.0);
    CHECK(q < prev);
    prev = q;
  }
}
