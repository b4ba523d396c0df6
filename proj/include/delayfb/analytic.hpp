#pragma once

// Closed-form steady-state moments and thermodynamic rates of the delayed
// feedback oscillator. Rates are per unit of dimensionless time (1/Omega0):
// entropy rates in k_B*Omega0, work rates in k_B*T0*Omega0.

#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "delayfb/errors.hpp"
#include "delayfb/model.hpp"
#include "delayfb/spectral.hpp"
#include "delayfb/threading.hpp"

namespace delayfb::analytic {

using model::ReducedParams;

/// Dimensionless steady-state second moments (units of x_th^2, v_th^2).
struct SteadyStateMoments {
  double sigma_q2;      // position variance
  double sigma_v2;      // velocity variance
  double corr_delayed;  // Pearson correlation of (q_{t-tau}, v_t)
};

/// All rate quantities at one parameter point. Efficiencies are reported
/// only in cooling regions (positive denominator rate), nullopt elsewhere.
struct ThermoRates {
  double s_pump;    // entropy pumping, k_B*Omega0
  double w_ext;     // extracted work, k_B*T0*Omega0
  double s_i;       // entropy production, k_B*Omega0
  double s_vfb;     // velocity-feedback bound g/Q0
  double s_highq;   // high-Q bound (g/Q0) sin tau
  double bound_nm;  // non-Markovian bound S_pump^y + I_flow
  std::optional<double> eta_pump;
  std::optional<double> eta_vfb;
  std::optional<double> eta_highq;
};

/// Effective Markovian oscillator of the high-Q mapping.
struct HighQEffective {
  double gamma_ratio;   // Gamma'/Gamma0 = 1 + g sin tau
  double omega2_ratio;  // Omega'^2/Omega0^2 = 1 - (g/Q0) cos tau
  double s_highq;       // (g/Q0) sin tau
  double s_vfb;         // g/Q0, the tau = pi/2 + 2 pi n value
};

struct LongDelayAsymptotics {
  double sigma_q2_inf;    // exact limit, 1/(2 Q0 sqrt(1-g^2/Q0^2) Im w1)
  double sigma_v2_inf;    // exact limit, 1/(2 Q0 Im w1)
  double t_eff_ratio_inf; // leading order 1 + g^2/2
  double w_ext_inf;       // leading order -g^2/(2 Q0)
  double corr_inf;        // leading order g/2 + g^3/8
};

struct SigmaV2Detail {
  double value;        // normalized velocity variance
  double raw_printed;  // the expression as printed (reference normalization)
  double residue;      // relative imaginary residue of the complex evaluation
};

namespace detail {

// tan(z) via one-sided exponentials; saturates to +-i for large |Im z|
// instead of overflowing.
inline std::complex<double> tan_stable(std::complex<double> z) {
  const std::complex<double> i(0.0, 1.0);
  if (z.imag() >= 0) {
    const std::complex<double> w = std::exp(2.0 * i * z);
    return -i * (w - 1.0) / (w + 1.0);
  }
  const std::complex<double> w = std::exp(-2.0 * i * z);
  return -i * (1.0 - w) / (1.0 + w);
}

}  // namespace detail

/// Velocity variance from the printed closed form (complex arithmetic).
///
/// Evaluated verbatim, the printed expression reproduces its reference's
/// normalization and returns Q0/2 at g = 0; the 2/Q0 factor below restores
/// the convention sigma_v^2(g=0) = 1 used throughout. The raw value is kept
/// in the detail struct so the discrepancy stays visible as a diagnostic.
inline SigmaV2Detail sigma_v2_closed_detail(const ReducedParams& r,
                                            bool check_stability = true) {
  model::check(r);
  if (r.g == 0.0) return {1.0, r.q0 / 2.0, 0.0};
  if (check_stability && !spectral::delay_stability(r))
    throw InstabilityError("sigma_v2_closed: no steady state at these parameters");

  const double q0 = r.q0;
  const std::complex<double> rad = std::sqrt(
      std::complex<double>(r.g * r.g - 1.0 + 1.0 / (4.0 * q0 * q0), 0.0));
  const std::complex<double> w1 = std::sqrt(1.0 - 1.0 / (2.0 * q0 * q0) + rad / q0);
  const std::complex<double> w2 = std::sqrt(1.0 - 1.0 / (2.0 * q0 * q0) - rad / q0);
  if (std::abs(w2 * w2 - w1 * w1) < 1e-14)
    throw NumericalInconsistencyError("sigma_v2_closed: degenerate roots w1 = w2", 0.0, 1.0);

  auto y_over_x = [&](std::complex<double> w) {
    const std::complex<double> h = -(1.0 / (1.0 - w * w - r.g / q0)) * (w / q0);
    const std::complex<double> t = detail::tan_stable(w * r.tau / 2.0);
    return (h - t) / (1.0 + h * t);
  };
  const std::complex<double> raw =
      0.5 / (w2 * w2 - w1 * w1) * (y_over_x(w1) * w1 - y_over_x(w2) * w2);
  const std::complex<double> val = (2.0 / q0) * raw;
  const double residue = std::abs(val.imag()) / std::max(std::abs(val), 1e-300);
  if (residue > 1e-10)
    throw NumericalInconsistencyError("sigma_v2_closed: imaginary residue above threshold",
                                      val.real(), residue);
  return {val.real(), raw.real(), residue};
}

inline double sigma_v2_closed(const ReducedParams& r, bool check_stability = true) {
  return sigma_v2_closed_detail(r, check_stability).value;
}

/// Gamma' = Gamma0 (1 + g sin tau), Omega'^2 = Omega0^2 (1 - (g/Q0) cos tau).
inline HighQEffective highq_effective(const ReducedParams& r) {
  model::check(r);
  return {1.0 + r.g * std::sin(r.tau), 1.0 - (r.g / r.q0) * std::cos(r.tau),
          (r.g / r.q0) * std::sin(r.tau), r.g / r.q0};
}

/// Delayed-position/velocity correlation c = (sigma_v^2 - 1)/(g sigma_q sigma_v);
/// sigma_q, sigma_v are standard deviations. Negative in cooling regions.
inline double correlation_closed(const ReducedParams& r, const SteadyStateMoments& m) {
  if (r.g == 0.0)
    throw UndefinedCorrelationError("correlation_closed: 0/0 form at g = 0");
  if (!(m.sigma_q2 > 0) || !(m.sigma_v2 > 0))
    throw InvalidParameterError("correlation_closed: moments must be positive");
  return (m.sigma_v2 - 1.0) / (r.g * std::sqrt(m.sigma_q2 * m.sigma_v2));
}

struct NonMarkovBound {
  double s_pump_y;  // coarse-graining contribution
  double i_flow;    // information flow between q_{t-tau} and v_t
  double bound_nm;  // their sum; upper bound on s_pump
  bool holds;       // s_pump <= bound_nm at these moments
};

/// Non-Markovian bound S_pump^y + I_flow on the entropy pumping rate.
inline NonMarkovBound nonmarkov_bound(const ReducedParams& r, const SteadyStateMoments& m) {
  const double sv2 = m.sigma_v2, sx2 = m.sigma_q2;
  const double den = r.g * r.g * sx2 * sv2 - (1.0 - sv2) * (1.0 - sv2);
  const double scale = std::max(r.g * r.g * sx2 * sv2, (1.0 - sv2) * (1.0 - sv2));
  if (std::abs(den) < 1e-14 * std::max(scale, 1e-300))
    throw SingularBoundError("nonmarkov_bound: vanishing denominator");
  const double s_pump_y = r.q0 * (sv2 - 1.0) * (sv2 - sx2) / den;
  const double i_flow = (1.0 / r.q0) * (1.0 - sv2) *
                        (r.q0 * r.q0 * (sv2 - sx2) + r.g * r.g * sx2 + 1.0 - sv2) / den;
  const double bound = (1.0 / r.q0) * (1.0 - sv2) * (r.g * r.g * sx2 + 1.0 - sv2) / den;
  const double s_pump = (1.0 - sv2) / (r.q0 * sv2);
  return {s_pump_y, i_flow, bound, s_pump <= bound + 1e-12 * std::abs(bound) + 1e-15};
}

/// All thermodynamic rates from the steady-state moments.
inline ThermoRates thermo_rates(const ReducedParams& r, const SteadyStateMoments& m) {
  if (!(m.sigma_v2 > 0))
    throw InvalidParameterError("thermo_rates: sigma_v2 must be positive");
  ThermoRates t{};
  const double sv2 = m.sigma_v2;
  t.s_pump = (1.0 - sv2) / (r.q0 * sv2);
  t.w_ext = (1.0 - sv2) / r.q0;
  t.s_i = (1.0 - sv2) * (1.0 - sv2) / (r.q0 * sv2);
  t.s_vfb = r.g / r.q0;
  t.s_highq = (r.g / r.q0) * std::sin(r.tau);
  t.bound_nm = r.g > 0 && m.sigma_q2 > 0 ? nonmarkov_bound(r, m).bound_nm : 0.0;
  if (t.s_pump > 0) t.eta_pump = t.w_ext / t.s_pump;
  if (t.s_vfb > 0 && t.w_ext > 0) t.eta_vfb = t.w_ext / t.s_vfb;
  if (t.s_highq > 0 && t.w_ext > 0) t.eta_highq = t.w_ext / t.s_highq;
  return t;
}

/// Long-delay asymptotics. Variance limits are the exact expressions with
/// Im(w1) = (sqrt2/2) sqrt(1/(2Q0^2) - 1 + sqrt(1 - g^2/Q0^2)); the derived
/// three are the leading-order forms quoted alongside them.
inline LongDelayAsymptotics asymptotic_long_delay(const ReducedParams& r) {
  if (!model::validity_domain(r).underdamped_asymptotics)
    throw DomainError("asymptotic_long_delay: outside the validity domain");
  const double g2q2 = r.g * r.g / (r.q0 * r.q0);
  const double im_w1 =
      (std::sqrt(2.0) / 2.0) *
      std::sqrt(1.0 / (2.0 * r.q0 * r.q0) - 1.0 + std::sqrt(1.0 - g2q2));
  LongDelayAsymptotics a{};
  a.sigma_q2_inf = 1.0 / (2.0 * r.q0 * std::sqrt(1.0 - g2q2) * im_w1);
  a.sigma_v2_inf = 1.0 / (2.0 * r.q0 * im_w1);
  a.t_eff_ratio_inf = 1.0 + r.g * r.g / 2.0;
  a.w_ext_inf = -r.g * r.g / (2.0 * r.q0);
  a.corr_inf = r.g / 2.0 + r.g * r.g * r.g / 8.0;
  return a;
}

/// Zero-mean bivariate Gaussian density of (q_{t-tau}, v_t).
struct JointDensity {
  double sigma_q2, sigma_v2, corr;
  double operator()(double q_delayed, double v) const {
    const double sq = std::sqrt(sigma_q2), sv = std::sqrt(sigma_v2);
    const double one_m_c2 = 1.0 - corr * corr;
    const double z = (q_delayed * q_delayed / sigma_q2 -
                      2.0 * corr * q_delayed * v / (sq * sv) + v * v / sigma_v2) /
                     one_m_c2;
    return std::exp(-0.5 * z) / (two_pi * sq * sv * std::sqrt(one_m_c2));
  }
};

inline JointDensity joint_density(const SteadyStateMoments& m) {
  if (!(m.sigma_q2 > 0) || !(m.sigma_v2 > 0))
    throw InvalidParameterError("joint_density: variances must be positive");
  if (std::abs(m.corr_delayed) >= 1.0)
    throw DegenerateCovarianceError("joint_density: |c| = 1, covariance singular");
  return {m.sigma_q2, m.sigma_v2, m.corr_delayed};
}

/// Full moments at a parameter point: sigma_v^2 from the closed form,
/// sigma_q^2 from the spectral oracle (no printed general closed form),
/// correlation from the exact relation.
inline SteadyStateMoments moments_closed(const ReducedParams& r) {
  auto quad = spectral::variance_quadrature(r);
  SteadyStateMoments m{quad.sigma_q2, sigma_v2_closed(r, false), 0.0};
  m.corr_delayed = r.g > 0 ? correlation_closed(r, m) : 0.0;
  return m;
}

/// Moments entirely from the spectral oracle.
inline SteadyStateMoments moments_quadrature(const ReducedParams& r) {
  auto quad = spectral::variance_quadrature(r);
  SteadyStateMoments m{quad.sigma_q2, quad.sigma_v2, 0.0};
  m.corr_delayed = r.g > 0 ? correlation_closed(r, m) : 0.0;
  return m;
}

struct CoolingBoundaryOptions {
  double scan_step = two_pi / 100.0;  // phase-window scan resolution
  double bisect_tol = 1e-6;           // absolute tolerance in tau
  double tau_cap = 0.0;               // 0: automatic (generous multiple of Q0)
  unsigned n_threads = 0;
};

/// Largest tau such that min over the phase window [tau - 2pi, tau] of
/// sigma_q^2(tau') < 1. nullopt when no window cools (never at g = 0).
/// Coarse 2pi scan on a cached global grid, then bisection.
inline std::optional<double> cooling_boundary(double g, double q0,
                                              const CoolingBoundaryOptions& opt = {}) {
  const ReducedParams base{g, q0, 0.0};
  if (!model::validity_domain(base).underdamped_asymptotics)
    throw DomainError("cooling_boundary: outside the validity domain");
  if (g == 0.0) return std::nullopt;

  auto sq2_at = [&](double tau) {
    const ReducedParams r{g, q0, std::max(tau, 0.0)};
    return spectral::variance_quadrature(r, {.check_stability = false}).sigma_q2;
  };
  std::vector<double> grid;  // sigma_q^2 at tau_j = j * scan_step
  auto extend_grid = [&](std::size_t j_max) {
    const std::size_t old = grid.size();
    if (j_max < old) return;
    grid.resize(j_max + 1);
    parallel_for(
        grid.size() - old,
        [&](std::size_t k) { grid[old + k] = sq2_at(double(old + k) * opt.scan_step); },
        opt.n_threads);
  };
  const auto wsteps = static_cast<std::size_t>(std::lround(two_pi / opt.scan_step));
  auto window_min_grid = [&](std::size_t j) {
    double mn = grid[j];
    for (std::size_t k = 1; k <= wsteps && k <= j; ++k) mn = std::min(mn, grid[j - k]);
    return mn;
  };
  // window minimum anchored at an arbitrary tau (bisection phase)
  auto window_min = [&](double tau) {
    std::vector<double> vals(wsteps + 1);
    parallel_for(
        wsteps + 1, [&](std::size_t k) { vals[k] = sq2_at(tau - double(k) * opt.scan_step); },
        opt.n_threads);
    double mn = vals[0];
    for (double v : vals) mn = std::min(mn, v);
    return mn;
  };

  const double cap = opt.tau_cap > 0 ? opt.tau_cap : std::max(40.0 * q0, 40.0 * two_pi);
  std::size_t last_cool = 0, first_warm_after = 0;
  bool seen_cool = false;
  int consecutive_warm = 0;
  for (std::size_t j = wsteps;; j += wsteps) {
    const double tau = double(j) * opt.scan_step;
    extend_grid(j);
    if (window_min_grid(j) < 1.0) {
      seen_cool = true;
      last_cool = j;
      consecutive_warm = 0;
    } else if (seen_cool) {
      if (consecutive_warm == 0) first_warm_after = j;
      ++consecutive_warm;
    }
    // done once cooling has clearly ended (with margin past the last flip)
    if (seen_cool && consecutive_warm >= 3 &&
        tau > double(last_cool) * opt.scan_step * 1.25 + 6 * two_pi)
      break;
    if (!seen_cool && tau > cap) return std::nullopt;
    if (tau > 2 * cap)
      throw AccuracyError("cooling_boundary: cooling persists beyond the scan cap", tau, cap);
  }
  if (first_warm_after <= last_cool) first_warm_after = last_cool + wsteps;

  // refine the bracket on the grid step, then bisect the window-min crossing
  std::size_t lo = last_cool, hi = first_warm_after;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (window_min_grid(mid) < 1.0) lo = mid;
    else hi = mid;
  }
  double a = double(lo) * opt.scan_step, b = double(hi) * opt.scan_step;
  while (b - a > opt.bisect_tol) {
    const double mid = 0.5 * (a + b);
    if (window_min(mid) < 1.0) a = mid;
    else b = mid;
  }
  return 0.5 * (a + b);
}

enum class RateQuantity { pump, work, entropy_production, sigma_v2 };

inline double evaluate_rate(const ReducedParams& r, RateQuantity q) {
  const double sv2 = sigma_v2_closed(r, false);
  switch (q) {
    case RateQuantity::pump: return (1.0 - sv2) / (r.q0 * sv2);
    case RateQuantity::work: return (1.0 - sv2) / r.q0;
    case RateQuantity::entropy_production: return (1.0 - sv2) * (1.0 - sv2) / (r.q0 * sv2);
    case RateQuantity::sigma_v2: return sv2;
  }
  return 0.0;
}

struct Envelope {
  std::vector<double> tau;
  std::vector<double> central;
  std::vector<double> lower;
  std::vector<double> upper;
};

/// Drift envelope: pointwise min/max over the four corners
/// {g(1 +- 2 rel_g)} x {tau(1 +- 2 rel_tau)} plus the central curve
/// (included so the envelope always contains it).
inline Envelope drift_envelope(const ReducedParams& r, double rel_g, double rel_tau,
                               RateQuantity quantity, const std::vector<double>& tau_grid) {
  if (rel_g < 0 || rel_tau < 0)
    throw InvalidParameterError("drift_envelope: relative uncertainties must be >= 0");
  Envelope env;
  env.tau = tau_grid;
  env.central.reserve(tau_grid.size());
  env.lower.reserve(tau_grid.size());
  env.upper.reserve(tau_grid.size());
  const double gfac[2] = {1.0 - 2.0 * rel_g, 1.0 + 2.0 * rel_g};
  const double tfac[2] = {1.0 - 2.0 * rel_tau, 1.0 + 2.0 * rel_tau};
  for (double tau : tau_grid) {
    const double central = evaluate_rate({r.g, r.q0, tau}, quantity);
    double lo = central, hi = central;
    for (double gf : gfac)
      for (double tf : tfac) {
        const double v = evaluate_rate({std::max(r.g * gf, 0.0), r.q0, tau * tf}, quantity);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    env.central.push_back(central);
    env.lower.push_back(lo);
    env.upper.push_back(hi);
  }
  return env;
}

}  // namespace delayfb::analytic
