#pragma once

// Trace-analysis estimators mirroring the experimental pipeline: moments and
// kurtosis, finite-difference velocity, zero-phase bandpass, Welch spectra,
// damping-rate extraction from the energy autocorrelation, delayed
// correlation, and feedback-gain fitting.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "delayfb/analytic.hpp"
#include "delayfb/errors.hpp"
#include "delayfb/fft.hpp"
#include "delayfb/model.hpp"
#include "delayfb/spectral.hpp"

namespace delayfb::analyze {

using model::ReducedParams;
using spectral::SpectrumGrid;

struct FitResult {
  double value = 0.0;
  double stderr_ = 0.0;
  double residual_norm = 0.0;
  std::size_t n_points = 0;
  std::string label;  // method notes: fit window, model selection
};

struct Moments {
  double variance;
  double kurtosis;
};

/// Population-normalized variance and kurtosis (divisor N, as printed):
/// kur = (1/N) sum (x - mean)^4 / [(1/N) sum (x - mean)^2]^2.
inline Moments moments(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 4) throw InvalidParameterError("moments: need at least 4 samples");
  double mean = 0;
  for (double x : series) mean += x;
  mean /= double(n);
  double m2 = 0, m4 = 0;
  for (double x : series) {
    const double d = x - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= double(n);
  m4 /= double(n);
  if (m2 == 0.0) throw ZeroVarianceError("moments: constant series has undefined kurtosis");
  return {m2, m4 / (m2 * m2)};
}

/// Central differences v_n = (q_{n+1} - q_{n-1})/(2 dt); endpoints dropped.
inline std::vector<double> finite_diff_velocity(std::span<const double> q, double dt) {
  if (q.size() < 3) throw InvalidParameterError("finite_diff_velocity: need >= 3 samples");
  std::vector<double> v(q.size() - 2);
  for (std::size_t i = 1; i + 1 < q.size(); ++i) v[i - 1] = (q[i + 1] - q[i - 1]) / (2 * dt);
  return v;
}

/// Variance attenuation of the central-difference stencil at frequency w.
inline double stencil_attenuation(double omega, double dt) {
  const double x = omega * dt;
  const double amp = x == 0 ? 1.0 : std::sin(x) / x;
  return amp * amp;
}

/// Zero-phase bandpass: frequency-domain mask keeping |omega| within
/// [center - bw/2, center + bw/2] (angular frequency, two-sided symmetric).
inline std::vector<double> bandpass(std::span<const double> series, double dt, double center,
                                    double bandwidth) {
  const std::size_t n = series.size();
  const double nyquist = pi / dt;
  if (!(center > 0) || !(bandwidth > 0) || center + bandwidth / 2 >= nyquist)
    throw InvalidParameterError("bandpass: band must lie inside (0, nyquist)");
  std::vector<fft::cplx> a(series.begin(), series.end());
  fft::transform(a, false);
  const double dw = two_pi / (double(n) * dt);
  std::size_t kept = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = k <= n / 2 ? dw * double(k) : dw * (double(k) - double(n));
    if (std::abs(std::abs(w) - center) <= bandwidth / 2) {
      ++kept;
    } else {
      a[k] = 0.0;
    }
  }
  if (kept == 0) throw DegenerateBandError("bandpass: no FFT bins inside the band");
  fft::transform(a, true);
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k].real();
  return out;
}

/// Hann-windowed averaged periodogram, two-sided, normalized so that
/// int S dw/2pi equals the series variance (the global mean is removed).
inline SpectrumGrid welch_psd(std::span<const double> series, double dt,
                              std::size_t segment_length, double overlap) {
  const std::size_t n = series.size();
  if (segment_length < 8 || segment_length > n)
    throw InvalidParameterError("welch_psd: segment_length out of range");
  if (!(overlap >= 0.0) || overlap >= 1.0)
    throw InvalidParameterError("welch_psd: overlap must be in [0,1)");
  const auto hop = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(double(segment_length) * (1.0 - overlap))));
  if (n < segment_length + hop)
    throw InsufficientDataError("welch_psd: fewer than two segments");

  double mean = 0;
  for (double x : series) mean += x;
  mean /= double(n);

  std::vector<double> window(segment_length);
  double wss = 0;
  for (std::size_t i = 0; i < segment_length; ++i) {
    window[i] = 0.5 * (1.0 - std::cos(two_pi * double(i) / double(segment_length - 1)));
    wss += window[i] * window[i];
  }

  std::vector<double> psd(segment_length, 0.0);
  std::size_t n_seg = 0;
  for (std::size_t start = 0; start + segment_length <= n; start += hop) {
    std::vector<fft::cplx> seg(segment_length);
    for (std::size_t i = 0; i < segment_length; ++i)
      seg[i] = (series[start + i] - mean) * window[i];
    fft::transform(seg, false);
    for (std::size_t k = 0; k < segment_length; ++k) psd[k] += std::norm(seg[k]);
    ++n_seg;
  }
  const double scale = dt / (wss * double(n_seg));

  SpectrumGrid grid;
  grid.convention = "two-sided";
  grid.description = "welch psd, hann window, " + std::to_string(n_seg) + " segments";
  grid.frequencies.resize(segment_length);
  grid.values.resize(segment_length);
  const double dw = two_pi / (double(segment_length) * dt);
  // fftshift so frequencies are strictly increasing
  const std::size_t shift = (segment_length + 1) / 2;
  for (std::size_t k = 0; k < segment_length; ++k) {
    const std::size_t src = (k + shift) % segment_length;
    const double signed_idx = src <= (segment_length - 1) / 2
                                  ? double(src)
                                  : double(src) - double(segment_length);
    grid.frequencies[k] = dw * signed_idx;
    grid.values[k] = psd[src] * scale;
  }
  return grid;
}

/// int S dw/2pi over the grid (trapezoid-free: uniform bins).
inline double spectrum_integral(const SpectrumGrid& grid) {
  if (grid.frequencies.size() < 2) return 0.0;
  const double dw = grid.frequencies[1] - grid.frequencies[0];
  double s = 0;
  for (double v : grid.values) s += v;
  return s * dw / two_pi;
}

/// Fraction of sigma_q^2 (weight=0) or sigma_v^2 (weight=1) inside
/// [center-bw/2, center+bw/2] (one side; doubled by symmetry), from the
/// analytic spectrum. Used to budget bandpass truncation.
inline double in_band_fraction(const ReducedParams& r, double center, double bandwidth,
                               int weight) {
  const double lo = center - bandwidth / 2, hi = center + bandwidth / 2;
  const auto n = std::max<std::size_t>(
      2001, static_cast<std::size_t>(r.tau > 0 ? std::ceil((hi - lo) / ((two_pi / r.tau) / 4))
                                               : 0));
  std::vector<double> edges(n + 1);
  for (std::size_t i = 0; i <= n; ++i) edges[i] = lo + (hi - lo) * double(i) / double(n);
  double body = 0;
  for (std::size_t i = 0; i < n; ++i)
    body += spectral::detail::gauss_kronrod_15(
                [&](double w) {
                  const double m = std::norm(spectral::response(r, w));
                  return weight ? w * w * m : m;
                },
                edges[i], edges[i + 1])
                .value;
  const auto full = spectral::variance_quadrature(r, {.check_stability = false});
  const double total = weight ? full.sigma_v2 : full.sigma_q2;
  return (2.0 / (pi * r.q0)) * body / total;
}

namespace detail {

// autocovariance of x at lags 0..max_lag via zero-padded FFT, unbiased counts
inline std::vector<double> autocovariance(std::span<const double> x, std::size_t max_lag) {
  const std::size_t n = x.size();
  double mean = 0;
  for (double v : x) mean += v;
  mean /= double(n);
  std::size_t m = 1;
  while (m < 2 * n) m <<= 1;
  std::vector<fft::cplx> a(m, fft::cplx(0));
  for (std::size_t i = 0; i < n; ++i) a[i] = x[i] - mean;
  fft::transform(a, false);
  for (auto& v : a) v = std::norm(v);
  fft::transform(a, true);
  std::vector<double> ac(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag && k < n; ++k) ac[k] = a[k].real() / double(n - k);
  return ac;
}

// golden-section minimum of f on [a, b]
template <typename F>
double golden_min(F&& f, double a, double b, double tol) {
  const double phi = 0.6180339887498949;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// Damping rate from the energy autocorrelation c_E(t) = exp(-Gamma t),
/// E_n = q_n^2 + v_n^2. Nonlinear least squares in linear space over the lag
/// window [0, 3/Gamma_init], Gamma_init from the first 1/e crossing.
inline FitResult energy_autocorr_gamma(std::span<const double> q, std::span<const double> v,
                                       double dt) {
  if (q.size() != v.size() || q.size() < 16)
    throw InvalidParameterError("energy_autocorr_gamma: bad series lengths");
  const std::size_t n = q.size();
  std::vector<double> energy(n);
  for (std::size_t i = 0; i < n; ++i) energy[i] = q[i] * q[i] + v[i] * v[i];

  const std::size_t max_lag = n / 4;
  auto ac = detail::autocovariance(energy, max_lag);
  const double var = ac[0];
  if (var <= 0) throw ZeroVarianceError("energy_autocorr_gamma: constant energy");
  for (auto& x : ac) x /= var;

  std::size_t cross = 0;
  for (std::size_t k = 1; k < ac.size(); ++k)
    if (ac[k] < std::exp(-1.0)) {
      cross = k;
      break;
    }
  if (cross == 0)
    throw FitWindowError("energy_autocorr_gamma: no 1/e crossing within the lag range");
  if (cross < 3)
    throw FitWindowError(
        "energy_autocorr_gamma: autocorrelation decays faster than the sampling resolution");
  const double gamma_init = 1.0 / (double(cross) * dt);
  if (double(n) * dt < 20.0 / gamma_init)
    throw FitWindowError("energy_autocorr_gamma: trace shorter than 20 decay times");

  const auto n_fit = std::min<std::size_t>(
      ac.size() - 1, static_cast<std::size_t>(std::ceil(3.0 / (gamma_init * dt))));
  auto sse = [&](double gamma) {
    double s = 0;
    for (std::size_t k = 0; k <= n_fit; ++k) {
      const double d = std::exp(-gamma * double(k) * dt) - ac[k];
      s += d * d;
    }
    return s;
  };
  const double gamma = detail::golden_min(sse, gamma_init / 10, gamma_init * 10,
                                          1e-8 * gamma_init);
  // curvature-based standard error: var = s^2 / sum (dmodel/dgamma)^2
  const double s2 = sse(gamma) / double(n_fit);
  double jtj = 0;
  for (std::size_t k = 0; k <= n_fit; ++k) {
    const double t = double(k) * dt;
    const double dm = -t * std::exp(-gamma * t);
    jtj += dm * dm;
  }
  FitResult fit;
  fit.value = gamma;
  fit.stderr_ = std::sqrt(s2 / jtj);
  fit.residual_norm = std::sqrt(sse(gamma));
  fit.n_points = n_fit + 1;
  fit.label = "exp fit on [0, 3/gamma_init], gamma_init=" + std::to_string(gamma_init);
  return fit;
}

/// Sample Pearson correlation of the pairs (q_{n - n_delay}, v_n).
inline double delayed_correlation(std::span<const double> q, std::span<const double> v,
                                  std::size_t n_delay) {
  if (q.size() != v.size())
    throw InvalidParameterError("delayed_correlation: length mismatch");
  if (q.size() < n_delay + 3)
    throw InvalidParameterError("delayed_correlation: series shorter than delay + 2");
  const std::size_t n = q.size() - n_delay;
  double mq = 0, mv = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mq += q[i];
    mv += v[i + n_delay];
  }
  mq /= double(n);
  mv /= double(n);
  double sqq = 0, svv = 0, sqv = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = q[i] - mq, b = v[i + n_delay] - mv;
    sqq += a * a;
    svv += b * b;
    sqv += a * b;
  }
  if (sqq == 0 || svv == 0)
    throw UndefinedCorrelationError("delayed_correlation: zero variance column");
  return sqv / std::sqrt(sqq * svv);
}

enum class VarianceModel { sigma_v2, sigma_q2 };

/// One-dimensional least squares for the gain g from a T_eff(tau) curve at
/// known Q0. Model selectable between sigma_v^2(tau; g) (default, the fitting
/// procedure used for the delay sweeps) and sigma_q^2(tau; g).
inline FitResult fit_gain(std::span<const double> tau, std::span<const double> teff_ratio,
                          double q0, VarianceModel mdl = VarianceModel::sigma_v2,
                          double g_max = 0.0) {
  if (tau.size() != teff_ratio.size())
    throw InvalidParameterError("fit_gain: length mismatch");
  if (g_max <= 0.0) g_max = 0.98 * std::sqrt(1.0 - 1.0 / (4.0 * q0 * q0));
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < tau.size(); ++i) pts.emplace_back(tau[i], teff_ratio[i]);
  if (pts.size() < 5) throw InvalidParameterError("fit_gain: need >= 5 stable curve points");

  auto model_at = [&](double tau_i, double g) {
    const ReducedParams r{g, q0, tau_i};
    if (mdl == VarianceModel::sigma_v2) return analytic::sigma_v2_closed(r, false);
    return spectral::variance_quadrature(r, {.check_stability = false}).sigma_q2;
  };
  auto sse = [&](double g) {
    double s = 0;
    for (auto& [t, y] : pts) {
      const double d = model_at(t, g) - y;
      s += d * d;
    }
    return s;
  };

  // coarse bracket of the global minimum, then golden section
  const int n_scan = 64;
  int best = 1;
  double best_val = 1e300;
  for (int i = 1; i < n_scan; ++i) {
    const double g = g_max * double(i) / double(n_scan);
    const double s = sse(g);
    if (s < best_val) {
      best_val = s;
      best = i;
    }
  }
  const double lo = g_max * double(std::max(best - 1, 0)) / double(n_scan);
  const double hi = g_max * double(std::min(best + 1, n_scan)) / double(n_scan);
  const double g_fit = detail::golden_min(sse, lo, hi, 1e-6);
  if (g_fit < 3e-6 || g_max - g_fit < 3e-6)
    throw NonIdentifiableError("fit_gain: minimizer at the bracket boundary");

  const double s2 = sse(g_fit) / double(pts.size() - 1);
  const double h = std::max(1e-5, 1e-4 * g_fit);
  double jtj = 0;
  for (auto& [t, y] : pts) {
    const double dm = (model_at(t, g_fit + h) - model_at(t, g_fit - h)) / (2 * h);
    jtj += dm * dm;
  }
  FitResult fit;
  fit.value = g_fit;
  fit.stderr_ = jtj > 0 ? std::sqrt(s2 / jtj) : 0.0;
  fit.residual_norm = std::sqrt(sse(g_fit));
  fit.n_points = pts.size();
  fit.label = mdl == VarianceModel::sigma_v2 ? "model=sigma_v2" : "model=sigma_q2";
  return fit;
}

/// The trace pipeline: bandpass around the mechanical frequency, central
/// differences, moments; normalized with an identically processed
/// feedback-off reference and the equilibrium out-of-band mass restored
/// (the filter discards a known thermal fraction; feedback reshapes the
/// spectrum only near resonance, so the out-of-band mass is the g = 0 one).
struct PipelineResult {
  double sigma_v2;          // corrected estimate
  double filtered_ratio;    // var_f(on)/var_f(off), the raw ratio
  double off_band_fraction; // equilibrium in-band fraction used
};

inline PipelineResult pipeline_sigma_v2(std::span<const double> q_on,
                                        std::span<const double> q_off, double dt, double q0,
                                        double center = 1.0, double bandwidth = 0.0) {
  if (bandwidth <= 0.0) bandwidth = 3.0 / q0;
  auto filtered_var = [&](std::span<const double> q) {
    auto f = bandpass(q, dt, center, bandwidth);
    auto v = finite_diff_velocity(f, dt);
    return moments(v).variance;
  };
  const double von = filtered_var(q_on);
  const double voff = filtered_var(q_off);
  if (voff <= 0) throw ZeroVarianceError("pipeline_sigma_v2: degenerate reference trace");
  const double f_off = in_band_fraction({0.0, q0, 0.0}, center, bandwidth, 1);
  const double ratio = von / voff;
  return {ratio * f_off + (1.0 - f_off), ratio, f_off};
}

}  // namespace delayfb::analyze
