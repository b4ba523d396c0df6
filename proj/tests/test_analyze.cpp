#include "delayfb/analyze.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "delayfb/simulate.hpp"

using namespace delayfb;
using model::ReducedParams;

namespace {

std::vector<double> gaussian_series(std::size_t n, std::uint64_t seed) {
  simulate::NormalStream noise(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = noise();
  return x;
}

TEST(Moments, TwoPointSeries) {
  const std::vector<double> s{-1.0, 1.0, -1.0, 1.0};
  const auto m = analyze::moments(s);
  EXPECT_DOUBLE_EQ(m.variance, 1.0);
  EXPECT_DOUBLE_EQ(m.kurtosis, 1.0);
}

TEST(Moments, GaussianKurtosisNearThree) {
  const auto x = gaussian_series(200000, 5);
  const auto m = analyze::moments(x);
  EXPECT_NEAR(m.variance, 1.0, 0.02);
  EXPECT_NEAR(m.kurtosis, 3.0, 3 * std::sqrt(24.0 / double(x.size())));
}

TEST(Moments, ConstantSeriesThrows) {
  const std::vector<double> s{2.0, 2.0, 2.0, 2.0, 2.0};
  EXPECT_THROW(analyze::moments(s), ZeroVarianceError);
}

TEST(Moments, PopulationNormalization) {
  // divisor N exactly as printed, not N-1
  const std::vector<double> s{0.0, 1.0, 2.0, 3.0};
  const auto m = analyze::moments(s);
  EXPECT_DOUBLE_EQ(m.variance, 1.25);
}

TEST(FiniteDiff, ExactOnLinearRamp) {
  const double dt = 0.01, a = 3.7;
  std::vector<double> q(50);
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = a * double(i) * dt;
  const auto v = analyze::finite_diff_velocity(q, dt);
  ASSERT_EQ(v.size(), q.size() - 2);
  for (double vi : v) EXPECT_NEAR(vi, a, 1e-12);
}

TEST(FiniteDiff, SinusoidAttenuationMatchesStencil) {
  // central difference of sin(w n dt) is exactly cos(w n dt) * sin(w dt)/dt
  const double dt = two_pi / 200.0, w = 1.0;
  std::vector<double> q(4000);
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = std::sin(w * double(i) * dt);
  const auto v = analyze::finite_diff_velocity(q, dt);
  const double factor = std::sin(w * dt) / (w * dt);
  EXPECT_NEAR(factor, 0.9998355147, 1e-9);  // stencil oracle at w dt = 2pi/200
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double expected = w * factor * std::cos(w * double(i + 1) * dt);
    ASSERT_NEAR(v[i], expected, 1e-10);
  }
}

TEST(FiniteDiff, EquilibriumVarianceWithStencilCorrection) {
  // var of the differenced equilibrium trace equals the sinc^2-weighted
  // velocity spectral integral
  const double q0 = 55.0;
  auto c = simulate::config_for({0.0, q0, 0.0}, 1000.0 * q0, 19);
  const auto tr = simulate::integrate(c);
  const auto vfd = analyze::finite_diff_velocity(tr.q, c.dt);
  const double measured = analyze::moments(vfd).variance;
  // predicted: (2/(pi Q0)) int_0^nyquist sinc^2(w dt) w^2 |chi|^2 dw
  const double nyq = pi / c.dt;
  double predicted = 0.0;
  const int npan = 4000;
  for (int i = 0; i < npan; ++i) {
    const double a = nyq * double(i) / npan, b = nyq * double(i + 1) / npan;
    predicted += spectral::detail::gauss_kronrod_15(
                     [&](double w) {
                       return analyze::stencil_attenuation(w, c.dt) * w * w *
                              std::norm(spectral::response({0.0, q0, 0.0}, w));
                     },
                     a, b)
                     .value;
  }
  predicted *= 2.0 / (pi * q0);
  // 8 independent traces for a standard error
  double se = 0.0;
  {
    std::vector<double> vals;
    for (int k = 0; k < 8; ++k) {
      auto ck = c;
      ck.seed = simulate::mix_seed(19, k);
      const auto t2 = simulate::integrate(ck);
      vals.push_back(analyze::moments(analyze::finite_diff_velocity(t2.q, c.dt)).variance);
    }
    double mean = 0;
    for (double v : vals) mean += v;
    mean /= vals.size();
    double var = 0;
    for (double v : vals) var += (v - mean) * (v - mean);
    se = std::sqrt(var / (vals.size() - 1) / vals.size());
    EXPECT_NEAR(mean, predicted, 3 * se);
  }
  EXPECT_NEAR(measured, predicted, 5 * se + 0.01);
}

TEST(Bandpass, Idempotent) {
  auto x = gaussian_series(4096, 2);
  const double dt = two_pi / 200.0;
  const auto once = analyze::bandpass(x, dt, 1.0, 3.0 / 55.0);
  const auto twice = analyze::bandpass(once, dt, 1.0, 3.0 / 55.0);
  for (std::size_t i = 0; i < once.size(); ++i) ASSERT_NEAR(twice[i], once[i], 1e-12);
}

TEST(Bandpass, OnBinToneUnchanged) {
  const std::size_t n = 4096;
  const double dt = two_pi / 200.0;
  // tone exactly on bin k = 20: w = 2 pi 20/(n dt) ~ 0.977, inside the band
  const double w = two_pi * 20.0 / (double(n) * dt);
  ASSERT_LT(std::abs(w - 1.0), 0.5 * 3.0 / 55.0);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(w * double(i) * dt);
  const auto f = analyze::bandpass(x, dt, 1.0, 3.0 / 55.0);
  for (std::size_t i = 0; i < n; ++i) ASSERT_NEAR(f[i], x[i], 1e-10);
}

TEST(Bandpass, EmptyBandThrows) {
  auto x = gaussian_series(1024, 3);
  // band narrower than one bin spacing, centered between bins
  const double dt = 0.01;
  const double dw = two_pi / (1024 * 0.01);
  EXPECT_THROW(analyze::bandpass(x, dt, 1.5 * dw, dw / 100), DegenerateBandError);
}

TEST(Bandpass, EquilibriumVarianceMatchesInBandFraction) {
  const double q0 = 55.0;
  auto c = simulate::config_for({0.0, q0, 0.0}, 0.0, 29);
  c.n_steps = 1 << 20;  // power of two keeps the transform fast
  const auto tr = simulate::integrate(c);
  const auto f = analyze::bandpass(tr.q, c.dt, 1.0, 3.0 / q0);
  const double filtered_var = analyze::moments(f).variance;
  const double predicted = analyze::in_band_fraction({0.0, q0, 0.0}, 1.0, 3.0 / q0, 0);
  EXPECT_NEAR(filtered_var, predicted, 0.05 * predicted);
}

TEST(Welch, WhiteNoiseFlatAndParseval) {
  const auto x = gaussian_series(1 << 16, 11);
  const double dt = 0.05;
  const auto grid = analyze::welch_psd(x, dt, 1024, 0.5);
  const double variance = analyze::moments(x).variance;
  EXPECT_NEAR(analyze::spectrum_integral(grid), variance, 0.01 * variance);
  // flat within segment-count fluctuation: no bin further than 60% from mean
  double mean = 0;
  for (double v : grid.values) mean += v;
  mean /= double(grid.values.size());
  for (double v : grid.values) {
    EXPECT_LT(v, mean * 1.6);
    EXPECT_GT(v, mean * 0.4);
  }
}

TEST(Welch, OscillatorPeakWithinOneBin) {
  const double q0 = 55.0;
  auto c = simulate::config_for({0.0, q0, 0.0}, 0.0, 31);
  c.n_steps = 1 << 19;
  const auto tr = simulate::integrate(c);
  const auto grid = analyze::welch_psd(tr.q, c.dt, 8192, 0.5);
  std::size_t peak = 0;
  for (std::size_t i = 1; i < grid.values.size(); ++i)
    if (grid.values[i] > grid.values[peak]) peak = i;
  const double dw = grid.frequencies[1] - grid.frequencies[0];
  EXPECT_NEAR(std::abs(grid.frequencies[peak]), 1.0, dw + 1e-12);
}

TEST(Welch, ParsevalOnOscillatorTrace) {
  // 75% overlap makes the summed squared Hann weights flat in the interior,
  // so the spectral integral tracks the plain variance of the same samples
  auto c = simulate::config_for({0.36, 55.0, 2.04 * pi}, 0.0, 37);
  c.n_steps = 1 << 19;
  const auto tr = simulate::integrate(c);
  const auto grid = analyze::welch_psd(tr.q, c.dt, 4096, 0.75);
  const double variance = analyze::moments(tr.q).variance;
  EXPECT_NEAR(analyze::spectrum_integral(grid), variance, 0.01 * variance);
}

TEST(Welch, TooFewSegmentsThrows) {
  const auto x = gaussian_series(1000, 13);
  EXPECT_THROW(analyze::welch_psd(x, 0.1, 1000, 0.0), InsufficientDataError);
}

TEST(EnergyAutocorr, RecoversDampingRate) {
  const double q0 = 55.0;
  auto c = simulate::config_for({0.0, q0, 0.0}, 2.0e5, 1);
  const auto tr = simulate::integrate(c);
  const auto fit = analyze::energy_autocorr_gamma(tr.q, tr.v, c.dt);
  EXPECT_NEAR(fit.value, 1.0 / q0, 0.05 / q0);
  EXPECT_GT(fit.n_points, 20u);
  EXPECT_FALSE(fit.label.empty());
}

TEST(EnergyAutocorr, ExperimentalAnchorQualityFactor) {
  // damping fit at Omega0/2pi = 404 kHz giving Gamma0/2pi = 7.37 kHz means
  // Q0 = 55 after rounding; the normalized fit target is 1/Q0
  EXPECT_EQ(std::lround(404.0 / 7.37), 55);
}

TEST(EnergyAutocorr, WhiteNoiseHasNoDecayStructure) {
  const auto q = gaussian_series(20000, 3);
  const auto v = gaussian_series(20000, 4);
  EXPECT_THROW(analyze::energy_autocorr_gamma(q, v, 0.03), FitWindowError);
}

TEST(DelayedCorrelation, SelfCorrelationAtZeroDelay) {
  const auto q = gaussian_series(500, 6);
  EXPECT_DOUBLE_EQ(analyze::delayed_correlation(q, q, 0), 1.0);
}

TEST(DelayedCorrelation, EquilibriumUncorrelated) {
  const double duration = 2000.0 * 55.0;
  auto c = simulate::config_for({0.0, 55.0, 0.0}, duration, 8);
  const auto tr = simulate::integrate(c);
  // estimator sd for correlated Gaussian series: sqrt(Q0/T)
  const double se = std::sqrt(55.0 / duration);
  for (std::size_t d : {0ul, 100ul, 1000ul})
    EXPECT_LT(std::abs(analyze::delayed_correlation(tr.q, tr.v, d)), 3 * se);
}

TEST(DelayedCorrelation, MatchesClosedFormOnTrace) {
  const ReducedParams r{0.36, 55.0, 2.04 * pi};
  auto c = simulate::config_for(r, 500.0 * r.q0, 23);
  const auto tr = simulate::integrate(c);
  const double c_est = analyze::delayed_correlation(tr.q, tr.v, c.n_delay());
  const auto m = analytic::moments_closed({r.g, r.q0, c.tau_realized()});
  EXPECT_NEAR(c_est, m.corr_delayed, 0.05);
}

TEST(DelayedCorrelation, ZeroVarianceThrows) {
  std::vector<double> q(100, 1.0), v(100, 0.5);
  EXPECT_THROW(analyze::delayed_correlation(q, v, 3), UndefinedCorrelationError);
}

// midpoint-averaged velocity samples centered on the position grid; the raw
// v_n of the integrator is a backward difference of q
std::vector<double> centered_velocity(const std::vector<double>& v) {
  std::vector<double> out(v.size() - 1);
  for (std::size_t i = 0; i + 1 < v.size(); ++i) out[i] = 0.5 * (v[i] + v[i + 1]);
  return out;
}

TEST(DelayedCorrelation, MatchesClosedFormOnTenPointGrid) {
  const double g = 0.36, q0 = 55.0, duration = 1000.0 * q0;
  for (int i = 0; i < 10; ++i) {
    const double tau = 0.5 * pi * std::pow(80.0, double(i) / 9.0);
    auto c = simulate::config_for({g, q0, tau}, duration, simulate::mix_seed(61, i),
                                  two_pi / 400.0);
    const auto tr = simulate::integrate(c);
    const auto vbar = centered_velocity(tr.v);
    const double est = analyze::delayed_correlation(
        std::span(tr.q).first(vbar.size()), vbar, c.n_delay());
    const auto m = analytic::moments_closed({g, q0, c.tau_realized()});
    const double se = std::sqrt(q0 / duration) *
                      std::max(1.0 - m.corr_delayed * m.corr_delayed, 0.05);
    EXPECT_NEAR(est, m.corr_delayed, 3 * se + 0.003) << "tau = " << tau;
  }
}

TEST(DelayedCorrelation, LongDelayPlateauOnTrace) {
  const double g = 0.36, q0 = 55.0, duration = 1000.0 * q0;
  auto c = simulate::config_for({g, q0, 300.0 * pi}, duration, 83);
  const auto tr = simulate::integrate(c);
  const double est = analyze::delayed_correlation(tr.q, tr.v, c.n_delay());
  const auto asym = analytic::asymptotic_long_delay({g, q0, 0.0});
  // plateau value ~0.186; 3 SE of the trace estimator
  EXPECT_NEAR(est, asym.corr_inf, 3 * std::sqrt(q0 / duration) + 0.005);
}

TEST(Estimators, ErrorShrinksWithTraceLength) {
  // ensemble standard errors contract like 1/sqrt(T) across three lengths
  const model::ReducedParams r{0.36, 55.0, 2.04 * pi};
  double prev_v = 0, prev_c = 0;
  int level = 0;
  for (double duration : {100.0 * r.q0, 400.0 * r.q0, 1600.0 * r.q0}) {
    auto c = simulate::config_for(r, duration, 29);
    const auto es = simulate::ensemble(c, 16);
    if (level > 0) {
      EXPECT_LT(es.se_sigma_v2, prev_v);
      EXPECT_LT(es.se_corr, prev_c);
      EXPECT_NEAR(es.se_sigma_v2 / prev_v, 0.5, 0.3);  // 1/sqrt(4) within slack
    }
    prev_v = es.se_sigma_v2;
    prev_c = es.se_corr;
    ++level;
  }
}

TEST(FitGain, ExactRecoveryFromNoiselessCurve) {
  const double g_true = 0.36, q0 = 55.0;
  std::vector<double> taus, teff;
  for (int i = 0; i < 25; ++i) {
    const double tau = 0.5 * pi + double(i) * (20 * pi - 0.5 * pi) / 24.0;
    taus.push_back(tau);
    teff.push_back(analytic::sigma_v2_closed({g_true, q0, tau}, false));
  }
  const auto fit = analyze::fit_gain(taus, teff, q0);
  EXPECT_NEAR(fit.value, g_true, 1e-6);
  EXPECT_EQ(fit.label, "model=sigma_v2");
}

TEST(FitGain, NoisyRecoveryWithinFivePercent) {
  const double g_true = 0.36, q0 = 55.0;
  simulate::NormalStream noise(77);
  std::vector<double> taus, teff;
  for (int i = 0; i < 25; ++i) {
    const double tau = 0.5 * pi + double(i) * (20 * pi - 0.5 * pi) / 24.0;
    taus.push_back(tau);
    const double y = analytic::sigma_v2_closed({g_true, q0, tau}, false);
    teff.push_back(y * (1.0 + 0.02 * noise()));
  }
  const auto fit = analyze::fit_gain(taus, teff, q0);
  EXPECT_NEAR(fit.value, g_true, 0.05 * g_true);
  EXPECT_GT(fit.stderr_, 0.0);
}

TEST(FitGain, SimulatedEnsembleCurve) {
  const double g_true = 0.36, q0 = 55.0;
  std::vector<double> taus, teff;
  for (int i = 0; i < 8; ++i) {
    const double tau = 0.5 * pi + double(i) * (12 * pi - 0.5 * pi) / 7.0;
    auto c = simulate::config_for({g_true, q0, tau}, 300.0 * q0, simulate::mix_seed(5, i));
    const auto es = simulate::ensemble(c, 8);
    taus.push_back(c.tau_realized());
    teff.push_back(es.mean_sigma_v2);
  }
  const auto fit = analyze::fit_gain(taus, teff, q0);
  EXPECT_NEAR(fit.value, g_true, 3 * fit.stderr_ + 0.01);
}

TEST(FitGain, SigmaQ2ModelSelectable) {
  const double g_true = 0.3, q0 = 20.0;
  std::vector<double> taus, teff;
  for (int i = 0; i < 10; ++i) {
    const double tau = 1.0 + 3.0 * double(i);
    taus.push_back(tau);
    teff.push_back(
        spectral::variance_quadrature({g_true, q0, tau}, {.check_stability = false}).sigma_q2);
  }
  const auto fit = analyze::fit_gain(taus, teff, q0, analyze::VarianceModel::sigma_q2);
  EXPECT_NEAR(fit.value, g_true, 1e-4);
  EXPECT_EQ(fit.label, "model=sigma_q2");
}

TEST(FitGain, NonIdentifiableAtBoundary) {
  // a curve far above anything the model can produce pushes g to the bracket
  std::vector<double> taus, teff;
  for (int i = 0; i < 8; ++i) {
    taus.push_back(1.0 + double(i));
    teff.push_back(50.0);
  }
  EXPECT_THROW(analyze::fit_gain(taus, teff, 55.0), NonIdentifiableError);
}

TEST(FitGain, TooFewPointsThrow) {
  std::vector<double> taus{1, 2, 3}, teff{1, 1, 1};
  EXPECT_THROW(analyze::fit_gain(taus, teff, 55.0), InvalidParameterError);
}

TEST(Pipeline, ReproducesVelocityVarianceWithinFivePercent) {
  // the 5% budget covers the systematic pipeline effects; the statistical
  // noise of the two variance estimates is suppressed by driving each on/off
  // trace pair with the same noise stream and averaging 10 pairs
  const double q0 = 55.0;
  const std::size_t n_pairs = 10;
  auto pipeline_mean = [&](double tau) {
    double sum = 0;
    double realized = 0;
    for (std::size_t k = 0; k < n_pairs; ++k) {
      const auto seed = simulate::mix_seed(7777 + std::uint64_t(tau * 100), k);
      auto con = simulate::config_for({0.36, q0, tau}, 0.0, seed);
      con.n_steps = 1 << 19;
      auto coff = simulate::config_for({0.0, q0, 0.0}, 0.0, seed);
      coff.n_steps = 1 << 19;
      const auto on = simulate::integrate(con);
      const auto off = simulate::integrate(coff);
      const auto res = analyze::pipeline_sigma_v2(on.q, off.q, con.dt, q0);
      sum += res.sigma_v2;
      realized = on.tau_realized;
    }
    return std::pair{sum / double(n_pairs), realized};
  };
  for (double tau : {0.5 * pi, 2.04 * pi, 5.48 * pi, 21.5 * pi}) {
    const auto [est, realized] = pipeline_mean(tau);
    const double theory = analytic::sigma_v2_closed({0.36, q0, realized}, false);
    EXPECT_NEAR(est, theory, 0.05 * theory) << "tau = " << tau;
  }
}

TEST(Pipeline, InBandFractionFrozen) {
  const double f = analyze::in_band_fraction({0.0, 55.0, 0.0}, 1.0, 3.0 / 55.0, 1);
  EXPECT_NEAR(f, 0.79514, 1e-3);  // equilibrium velocity fraction in a 3 Gamma0 band
}

}  // namespace
