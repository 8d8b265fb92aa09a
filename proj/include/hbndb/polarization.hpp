#pragma once

#include <optional>

#include "hbndb/model.hpp"

namespace hbndb {

// How the in-plane dipole direction is read off complex components.
enum class AngleConvention {
  // Major axis of the in-plane polarization ellipse; independent of the global
  // phase, equals atan2(mu_y, mu_x) mod 180 for real dipoles, and rotates with
  // the crystal (60-degree lattice symmetry preserved).
  PrincipalAxis,
  // atan2(|mu_y|, |mu_x|): discards the relative phase/sign, confining raw
  // angles to [0, 90].
  ComponentModuli,
};

struct PolarizationOptions {
  double crystal_axis_deg = 0.0;
  AngleConvention convention = AngleConvention::PrincipalAxis;
};

struct PolarizationResult {
  std::optional<double> angle_deg;           // [0, 60); absent when out of plane
  std::optional<double> raw_dipole_angle_deg;  // [0, 180)
  double visibility = 0.0;                   // (|mu_x|^2 + |mu_y|^2) / |mu|^2
  bool out_of_plane = false;
};

// Polarization is perpendicular to the dipole: angle = (raw + 90) mod 60.
// Throws Error("zero_dipole") for |mu| == 0.
PolarizationResult polarization_from_dipole(const DipoleMoment& mu, const PolarizationOptions& options = {});

// Angle between excitation and emission polarizations folded by the 60-degree
// lattice symmetry into [0, 30]. Throws Error("out_of_plane") if either is out of plane.
double misalignment(const PolarizationResult& exc, const PolarizationResult& em);
double misalignment_deg(double a, double b);

}  // namespace hbndb
