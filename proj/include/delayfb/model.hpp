#pragma once

// Parameter sets of the delayed-feedback oscillator, unit reduction and
// thermal scales. Everything downstream works in the reduced units
// (positions in x_th, velocities in x_th*Omega0, times in 1/Omega0).

#include <cmath>
#include <string>

#include "delayfb/constants.hpp"
#include "delayfb/errors.hpp"

namespace delayfb::model {

/// Laboratory-frame parameters of the oscillator and its feedback loop.
struct PhysicalParams {
  double mass;      // kg
  double omega0;    // rad/s, natural angular frequency
  double gamma0;    // rad/s, gas damping
  double temp0;     // K, bath temperature
  double t_fb;      // s, feedback delay
  double gamma_fb;  // rad/s, feedback damping rate
};

/// Dimensionless triple that fully determines the dynamics.
struct ReducedParams {
  double g;    // feedback gain, gamma_fb/gamma0
  double q0;   // quality factor, omega0/gamma0
  double tau;  // delay in units of 1/omega0
};

/// Thermal rms amplitudes used to normalize coordinates.
struct ThermalScale {
  double x_th;  // m
  double v_th;  // m/s
};

struct ValidityFlags {
  bool underdamped_asymptotics;  // long-delay asymptotic expressions applicable
};

inline void check(const PhysicalParams& p) {
  auto bad = [](const char* name) {
    throw InvalidParameterError(std::string("physical parameter must be positive: ") + name);
  };
  if (!(p.mass > 0)) bad("mass");
  if (!(p.omega0 > 0)) bad("omega0");
  if (!(p.gamma0 > 0)) bad("gamma0");
  if (!(p.temp0 > 0)) bad("temp0");
  if (!(p.t_fb >= 0)) bad("t_fb");
  if (!(p.gamma_fb >= 0)) bad("gamma_fb");
  if (!(p.omega0 > p.gamma0 / 2))
    throw InvalidParameterError("not underdamped: omega0 <= gamma0/2");
}

inline void check(const ReducedParams& r) {
  if (!(r.g >= 0)) throw InvalidParameterError("gain g must be >= 0");
  if (!(r.q0 > 0)) throw InvalidParameterError("quality factor q0 must be > 0");
  if (!(r.tau >= 0)) throw InvalidParameterError("delay tau must be >= 0");
}

/// Dimensionless reduction g = Gamma_fb/Gamma_0, Q0 = Omega_0/Gamma_0, tau = t_fb*Omega_0.
/// tau is kept exactly as given; rounding to a simulation grid is the
/// integrator's job and is always reported there.
inline ReducedParams reduce(const PhysicalParams& p) {
  check(p);
  return {p.gamma_fb / p.gamma0, p.omega0 / p.gamma0, p.t_fb * p.omega0};
}

/// x_th = sqrt(k_B T0 / (m Omega0^2)), v_th = x_th * Omega0.
inline ThermalScale thermal_scale(const PhysicalParams& p) {
  check(p);
  const double x = std::sqrt(k_boltzmann * p.temp0 / (p.mass * p.omega0 * p.omega0));
  return {x, x * p.omega0};
}

/// Long-delay asymptotics hold when Q0 > 1/2 and g < sqrt(1 - 1/(4 Q0^2)).
/// The same gain bound is the delay-independent stability condition.
inline ValidityFlags validity_domain(const ReducedParams& r) {
  check(r);
  const bool ok = r.q0 > 0.5 && r.g < std::sqrt(1.0 - 1.0 / (4.0 * r.q0 * r.q0));
  return {ok};
}

/// Mass of a sphere, diameter in meters, density in kg/m^3.
inline double sphere_mass(double diameter, double density) {
  if (!(diameter > 0) || !(density > 0))
    throw InvalidParameterError("sphere_mass: diameter and density must be positive");
  const double r = diameter / 2;
  return density * (4.0 / 3.0) * pi * r * r * r;
}

}  // namespace delayfb::model
