#pragma once

// Frequency-domain oracle for the delayed oscillator: response function,
// steady-state variances by adaptive quadrature, and an argument-principle
// stability test of the characteristic function
//   D(s) = s^2 + s/Q0 + 1 - (g/Q0) e^{-s tau}.
//
// Fourier convention: q_t = int (dw/2pi) q~(w) e^{i w t}, so the delayed
// term contributes e^{-i w tau} and
//   chi(w) = 1 / (1 - w^2 + i w/Q0 - (g/Q0) e^{-i w tau}).

#include <algorithm>
#include <cmath>
#include <complex>
#include <queue>
#include <string>
#include <vector>

#include "delayfb/constants.hpp"
#include "delayfb/errors.hpp"
#include "delayfb/model.hpp"

namespace delayfb::spectral {

using model::ReducedParams;

/// Spectral density samples on a strictly increasing frequency grid,
/// normalized so sigma^2 = int S dw/2pi. Shared with analyze::welch_psd.
struct SpectrumGrid {
  std::vector<double> frequencies;  // dimensionless omega
  std::vector<double> values;       // >= 0
  std::string convention;           // "two-sided"
  std::string description;
};

/// Complex susceptibility of the delayed oscillator.
inline std::complex<double> response(const ReducedParams& r, double omega) {
  const std::complex<double> i(0.0, 1.0);
  return 1.0 / (1.0 - omega * omega + i * omega / r.q0 -
                (r.g / r.q0) * std::exp(-i * omega * r.tau));
}

namespace detail {

// Gauss-Kronrod 7-15 nodes/weights on [-1,1] (QUADPACK dqk15).
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct PanelResult {
  double value;
  double error;
};

template <typename F>
PanelResult gauss_kronrod_15(F&& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double fv[15];
  for (int j = 0; j < 7; ++j) {
    fv[j] = f(c - h * kXgk[j]);
    fv[14 - j] = f(c + h * kXgk[j]);
  }
  fv[7] = f(c);
  double resk = kWgk[7] * fv[7];
  double resg = kWg[3] * fv[7];
  for (int j = 0; j < 7; ++j) resk += kWgk[j] * (fv[j] + fv[14 - j]);
  for (int j = 0; j < 3; ++j) resg += kWg[j] * (fv[2 * j + 1] + fv[13 - 2 * j]);
  const double value = resk * h;
  const double error = std::abs((resk - resg) * h);
  return {value, error};
}

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

// Adaptive integration of f over [a, b], seeded with the given breakpoints.
template <typename F>
PanelResult adaptive(F&& f, const std::vector<double>& edges, double rel_tol,
                     std::size_t max_panels) {
  std::priority_queue<Panel> heap;
  double total = 0.0, total_err = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    auto [v, e] = gauss_kronrod_15(f, edges[i], edges[i + 1]);
    heap.push({edges[i], edges[i + 1], v, e});
    total += v;
    total_err += e;
  }
  std::size_t n = edges.size() - 1;
  while (total_err > rel_tol * std::max(std::abs(total), 1e-300) && n < max_panels) {
    Panel p = heap.top();
    heap.pop();
    const double m = 0.5 * (p.a + p.b);
    auto left = gauss_kronrod_15(f, p.a, m);
    auto right = gauss_kronrod_15(f, m, p.b);
    total += left.value + right.value - p.value;
    total_err += left.error + right.error - p.error;
    heap.push({p.a, m, left.value, left.error});
    heap.push({m, p.b, right.value, right.error});
    ++n;
  }
  if (total_err > 10 * rel_tol * std::max(std::abs(total), 1e-300))
    throw AccuracyError("variance quadrature did not converge (" + std::to_string(n) +
                            " panels)",
                        total_err / std::max(std::abs(total), 1e-300), rel_tol);
  return {total, total_err};
}

// Seed breakpoints on [0, wmax]: resonance lobes near |w|~1 start at width
// 1/(4 Q0); panels never wider than ~2/5 of the delay-oscillation period.
inline std::vector<double> seed_edges(const ReducedParams& r, double wmax) {
  const double base[] = {0.0, 0.5, 0.8, 1.2, 2.0, 5.0};
  std::vector<double> pts;
  for (double p : base)
    if (p < wmax) pts.push_back(p);
  pts.push_back(wmax);
  const double osc = r.tau > 0 ? (two_pi / r.tau) / 2.5 : 1e300;
  std::vector<double> edges;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double a = pts[i], b = pts[i + 1];
    const bool lobe = a >= 0.8 - 1e-12 && b <= 1.2 + 1e-12;
    double width = lobe ? 1.0 / (4.0 * r.q0) : (b - a) / 8.0;
    width = std::min(width, osc);
    const auto n = static_cast<std::size_t>(std::ceil((b - a) / width));
    for (std::size_t k = 0; k < n; ++k) edges.push_back(a + (b - a) * double(k) / double(n));
  }
  edges.push_back(wmax);
  return edges;
}

// int_x0^inf cos(tau w)/w^n dw (kind=0) or sin (kind=1).
// Integration-by-parts series when tau*x0 is large, panel quadrature otherwise.
inline double oscillatory_tail(double tau, double x0, int n, int kind) {
  if (tau == 0.0) return kind == 0 ? 1.0 / ((n - 1) * std::pow(x0, n - 1)) : 0.0;
  if (tau * x0 >= 8.0) {
    const double s = std::sin(tau * x0), c = std::cos(tau * x0);
    // C_n = -sin(tau x0)/(tau x0^n) + (n/tau) S_{n+1}
    // S_n = +cos(tau x0)/(tau x0^n) - (n/tau) C_{n+1}
    double coef_c = 0.0, coef_s = 0.0;  // accumulated coefficients of c and s
    double factor = 1.0;
    int m = n;
    int k = kind;
    double prev_mag = 1e300;
    for (int depth = 0; depth < 80; ++depth) {
      const double term = factor / (tau * std::pow(x0, m));
      const double mag = std::abs(term);
      // asymptotic series: truncate at the smallest term
      if (mag < 1e-20 || mag >= prev_mag) break;
      prev_mag = mag;
      if (k == 0) {  // C_m contributes -s term, recurses into S_{m+1}
        coef_s -= term;
      } else {  // S_m contributes +c term, recurses into C_{m+1}
        coef_c += term;
      }
      factor *= (k == 0 ? m : -m) / tau;
      ++m;
      k ^= 1;
    }
    return coef_c * c + coef_s * s;
  }
  const double X = std::max(x0 * 60.0, 6000.0);
  const double per = two_pi / tau;
  const auto npan = static_cast<std::size_t>(
      std::ceil((X - x0) / std::min(per / 3.0, (X - x0) / 400.0)));
  std::vector<double> edges(npan + 1);
  for (std::size_t i = 0; i <= npan; ++i) edges[i] = x0 + (X - x0) * double(i) / double(npan);
  auto f = [&](double w) {
    return (kind == 0 ? std::cos(tau * w) : std::sin(tau * w)) / std::pow(w, n);
  };
  double v = 0.0;
  for (std::size_t i = 0; i < npan; ++i) v += gauss_kronrod_15(f, edges[i], edges[i + 1]).value;
  return v;
}

}  // namespace detail

struct VarianceResult {
  double sigma_q2;
  double sigma_v2;
  double err_q;  // self-reported relative error estimates
  double err_v;
};

inline bool delay_stability(const ReducedParams& r);

struct QuadratureOptions {
  double rel_tol = 1e-9;
  double wmax_q = 25.0;  // default per module notes: >= 20 + 10/Q0, capped below
  double wmax_v = 45.0;  // velocity integrand decays as 1/w^2; pushed further out
  std::size_t max_panels = 400000;
  bool check_stability = true;
};

/// Steady-state variances sigma_q^2 = (2/Q0) int dw/2pi |chi|^2 and
/// sigma_v^2 with an extra w^2 weight. Conjugate symmetry makes both
/// integrands even: integrate over w >= 0 and double. Beyond wmax an
/// analytic 1/w^4 tail (with the delay-oscillation terms) is added.
inline VarianceResult variance_quadrature(const ReducedParams& r,
                                          const QuadratureOptions& opt = {}) {
  model::check(r);
  if (opt.check_stability && !delay_stability(r))
    throw InstabilityError("variance_quadrature: no steady state at these parameters");

  const double a = r.g / r.q0;
  const double c2 = 2.0 - 1.0 / (r.q0 * r.q0);
  const double wmax_q = std::max(opt.wmax_q, 20.0 + 10.0 / r.q0);
  const double wmax_v = std::max(opt.wmax_v, wmax_q);

  auto integrand = [&](double w, int k) {
    const std::complex<double> chi = response(r, w);
    const double m = std::norm(chi);
    return k == 0 ? m : w * w * m;
  };

  double out[2], err[2];
  for (int k = 0; k < 2; ++k) {
    const double wmax = k == 0 ? wmax_q : wmax_v;
    auto edges = detail::seed_edges(r, wmax);
    auto body = detail::adaptive([&](double w) { return integrand(w, k); }, edges,
                                 opt.rel_tol, opt.max_panels);
    double tail;
    if (k == 0) {
      tail = 1.0 / (3.0 * std::pow(wmax, 3)) + c2 / (5.0 * std::pow(wmax, 5)) -
             2.0 * a * detail::oscillatory_tail(r.tau, wmax, 6, 0) -
             (2.0 * a / r.q0) * detail::oscillatory_tail(r.tau, wmax, 7, 1);
    } else {
      tail = 1.0 / wmax + c2 / (3.0 * std::pow(wmax, 3)) -
             2.0 * a * detail::oscillatory_tail(r.tau, wmax, 4, 0) -
             (2.0 * a / r.q0) * detail::oscillatory_tail(r.tau, wmax, 5, 1);
    }
    const double scale = 2.0 / (pi * r.q0);
    out[k] = scale * (body.value + tail);
    // tail truncation enters at O(wmax^-5) for k=1, O(wmax^-7) for k=0
    const double trunc = scale * 14.0 / std::pow(wmax, k == 1 ? 5 : 7);
    err[k] = (scale * body.error + trunc) / std::max(out[k], 1e-300);
  }
  return {out[0], out[1], err[0], err[1]};
}

/// Two-sided spectral density S_q(w) = (2/Q0)|chi(w)|^2 sampled on a uniform grid.
inline SpectrumGrid position_spectrum(const ReducedParams& r, double wmax, std::size_t n) {
  SpectrumGrid grid;
  grid.convention = "two-sided";
  grid.description = "analytic position spectral density";
  grid.frequencies.resize(n);
  grid.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = -wmax + 2 * wmax * double(i) / double(n - 1);
    grid.frequencies[i] = w;
    grid.values[i] = (2.0 / r.q0) * std::norm(response(r, w));
  }
  return grid;
}

namespace detail {

inline std::complex<double> char_fn(const ReducedParams& r, std::complex<double> s) {
  return s * s + s / r.q0 + 1.0 - (r.g / r.q0) * std::exp(-s * r.tau);
}

// Winding number of D along the closed right-half-plane contour:
// down the imaginary axis from +i Wc to -i Wc, back along the semicircle.
// Returns the zero count; throws if the contour cannot be resolved.
inline int rhp_zero_count(const ReducedParams& r, double contour_scale) {
  const double bound =
      0.5 * (1.0 / r.q0 + std::sqrt(1.0 / (r.q0 * r.q0) + 4.0 * (1.0 + r.g / r.q0)));
  const double wc = contour_scale * (1.5 * bound + 1.0);

  const auto n_axis = static_cast<std::size_t>(
      std::max(2001.0, std::min(8.0 * wc * r.tau / pi, 4.0e6))) | 1u;
  const std::size_t n_arc = 1001;

  auto point = [&](std::size_t idx) -> std::complex<double> {
    if (idx < n_axis) {
      const double w = wc - 2.0 * wc * double(idx) / double(n_axis - 1);
      return {0.0, w};
    }
    const double th = -pi / 2 + pi * double(idx - n_axis + 1) / double(n_arc);
    return std::polar(wc, th);
  };
  auto midpoint = [&](std::complex<double> p, std::complex<double> q) -> std::complex<double> {
    if (std::abs(p.real()) > 1e-12 * wc || std::abs(q.real()) > 1e-12 * wc)
      return std::polar(wc, 0.5 * (std::arg(p) + std::arg(q)));
    return 0.5 * (p + q);
  };

  double total = 0.0;
  std::complex<double> prev_s = point(0);
  std::complex<double> prev_d = char_fn(r, prev_s);
  const double dmin = 1e-11 * (1.0 + wc * wc);
  struct Seg {
    std::complex<double> a, da, b, db;
  };
  std::vector<Seg> stack;
  for (std::size_t i = 1; i < n_axis + n_arc; ++i) {
    const std::complex<double> s = point(i);
    const std::complex<double> ds = char_fn(r, s);
    stack.push_back({prev_s, prev_d, s, ds});
    while (!stack.empty()) {
      Seg seg = stack.back();
      stack.pop_back();
      if (std::abs(seg.da) < dmin || std::abs(seg.db) < dmin)
        throw IndeterminateStabilityError("stability contour passes too close to a zero");
      const double dphi = std::arg(seg.db / seg.da);
      if (std::abs(dphi) < pi / 2) {
        total += dphi;
        continue;
      }
      if (std::abs(seg.b - seg.a) < 1e-13 * std::max(1.0, std::abs(seg.a)))
        throw IndeterminateStabilityError("stability contour cannot be refined further");
      const std::complex<double> m = midpoint(seg.a, seg.b);
      const std::complex<double> dm = char_fn(r, m);
      stack.push_back({m, dm, seg.b, seg.db});
      stack.push_back({seg.a, seg.da, m, dm});
    }
    prev_s = s;
    prev_d = ds;
  }
  const double wind = total / two_pi;
  const auto n = static_cast<int>(std::lround(wind));
  if (std::abs(wind - n) > 0.05)
    throw IndeterminateStabilityError("non-integer winding count: " + std::to_string(wind));
  return n;
}

}  // namespace detail

/// True iff D(s) has no zeros with Re(s) >= 0. One retry with an enlarged
/// contour when the first pass lands too close to a zero.
inline bool delay_stability(const ReducedParams& r) {
  model::check(r);
  if (r.g == 0.0) return true;
  try {
    return detail::rhp_zero_count(r, 1.0) == 0;
  } catch (const IndeterminateStabilityError&) {
    return detail::rhp_zero_count(r, 1.37) == 0;
  }
}

}  // namespace delayfb::spectral
