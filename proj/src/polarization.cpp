#include "hbndb/polarization.hpp"

#include <cmath>

#include "hbndb/error.hpp"
#include "hbndb/units.hpp"

namespace hbndb {

namespace {

constexpr double kInPlaneEpsilon = 1e-14;

double wrap(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0.0) r += period;
  if (r >= period) r -= period;  // fmod rounding can land exactly on the period
  return r;
}

}  // namespace

PolarizationResult polarization_from_dipole(const DipoleMoment& mu, const PolarizationOptions& opt) {
  const double total = mu.norm_sq();
  if (!(total > 0.0)) throw Error("zero_dipole", "dipole moment is zero");

  PolarizationResult r;
  const double in_plane = mu.in_plane_sq();
  r.visibility = std::min(1.0, in_plane / total);
  if (in_plane <= kInPlaneEpsilon * total) {
    r.visibility = 0.0;
    r.out_of_plane = true;
    return r;
  }

  double theta = 0.0;  // radians
  if (opt.convention == AngleConvention::ComponentModuli) {
    theta = std::atan2(std::abs(mu.mu[1]), std::abs(mu.mu[0]));
  } else {
    // Covariance of Re/Im parts: C = a a^T + b b^T, major axis at 0.5 atan2(2Cxy, Cxx - Cyy).
    const auto& x = mu.mu[0];
    const auto& y = mu.mu[1];
    const double cxx = std::norm(x);
    const double cyy = std::norm(y);
    const double cxy = x.real() * y.real() + x.imag() * y.imag();
    theta = 0.5 * std::atan2(2.0 * cxy, cxx - cyy);
  }
  const double raw = wrap(theta * 180.0 / units::kPi - opt.crystal_axis_deg, 180.0);
  r.raw_dipole_angle_deg = raw;
  r.angle_deg = wrap(raw + 90.0, 60.0);
  return r;
}

double misalignment_deg(double a, double b) {
  const double d = wrap(std::abs(a - b), 60.0);
  return std::min(d, 60.0 - d);
}

double misalignment(const PolarizationResult& exc, const PolarizationResult& em) {
  if (exc.out_of_plane || em.out_of_plane || !exc.angle_deg || !em.angle_deg) {
    throw Error("out_of_plane", "misalignment needs two in-plane polarizations");
  }
  return misalignment_deg(*exc.angle_deg, *em.angle_deg);
}

}  // namespace hbndb
