#pragma once

// Figure commands: each writes self-sufficient CSV data plus an optional SVG
// rendered from the same arrays. Defaults are desk-scale (seconds for theory
// figures, the simulation overlays dominate when enabled).

#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "delayfb/analytic.hpp"
#include "delayfb/svg.hpp"
#include "delayfb/sweep.hpp"

namespace delayfb::cli {

struct FigureOptions {
  std::string out_dir = ".";
  bool emit_svg = false;
  double g = 0.36;
  double q0 = 55.0;
  std::uint64_t seed = 1;
  unsigned n_threads = 0;
  std::size_t points = 0;  // 0: per-figure default
};

inline std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

/// Entropy pumping / extracted work vs delay with the Markovian bounds and
/// the drift envelopes (g +- 2*6%, tau +- 2*2.5%).
inline std::vector<std::string> figure_fig3(const FigureOptions& opt) {
  const std::size_t n = opt.points ? opt.points : 400;
  const auto taus = logspace(0.5 * pi, 60 * pi, n);
  const ReducedParams base{opt.g, opt.q0, 0.0};
  const auto env_pump =
      analytic::drift_envelope(base, 0.06, 0.025, analytic::RateQuantity::pump, taus);
  const auto env_work =
      analytic::drift_envelope(base, 0.06, 0.025, analytic::RateQuantity::work, taus);

  csv::Table t;
  t.metadata["figure"] = "fig3";
  t.metadata["g"] = csv::format_double(opt.g);
  t.metadata["q0"] = csv::format_double(opt.q0);
  t.metadata["rel_g"] = "0.06";
  t.metadata["rel_tau"] = "0.025";
  t.metadata["points"] = std::to_string(n);
  t.metadata["tau_min"] = csv::format_double(taus.front());
  t.metadata["tau_max"] = csv::format_double(taus.back());
  t.columns = {"tau",       "s_pump",       "s_pump_lo", "s_pump_hi", "w_ext",
               "w_ext_lo",  "w_ext_hi",     "s_vfb",     "s_highq",   "eta_pump",
               "eta_vfb",   "eta_highq"};
  const double s_vfb = opt.g / opt.q0;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const ReducedParams r{opt.g, opt.q0, taus[i]};
    const double sv2 = analytic::sigma_v2_closed(r, false);
    const auto rates = analytic::thermo_rates(r, {sv2, sv2, 0.0});
    t.add_row({csv::format_double(taus[i]), csv::format_double(env_pump.central[i]),
               csv::format_double(env_pump.lower[i]), csv::format_double(env_pump.upper[i]),
               csv::format_double(env_work.central[i]), csv::format_double(env_work.lower[i]),
               csv::format_double(env_work.upper[i]), csv::format_double(s_vfb),
               csv::format_double(rates.s_highq), csv::format_field(rates.eta_pump),
               csv::format_field(rates.eta_vfb), csv::format_field(rates.eta_highq)});
  }
  std::vector<std::string> written;
  const auto csv_path = join_path(opt.out_dir, "fig3.csv");
  t.write(csv_path);
  written.push_back(csv_path);

  if (opt.emit_svg) {
    svg::Plot plot("entropy pumping and extracted work vs delay", "tau",
                   "rate (kB*Omega0 units)", true);
    plot.add(svg::Band{taus, env_pump.lower, env_pump.upper, "#2ca02c", 0.25});
    plot.add(svg::Band{taus, env_work.lower, env_work.upper, "#333333", 0.2});
    plot.add(svg::Series{taus, env_pump.central, "#2ca02c", "s_pump", 1.8, false});
    plot.add(svg::Series{taus, env_work.central, "#333333", "w_ext", 1.8, false});
    plot.add(svg::Series{taus, std::vector<double>(n, s_vfb), "#7f7f7f", "s_vfb", 1.2, true});
    std::vector<double> highq(n);
    for (std::size_t i = 0; i < n; ++i) highq[i] = s_vfb * std::sin(taus[i]);
    plot.add(svg::Series{taus, highq, "#9467bd", "s_highq", 1.2, true});
    const auto svg_path = join_path(opt.out_dir, "fig3.svg");
    plot.write(svg_path);
    written.push_back(svg_path);
  }
  return written;
}

/// Delayed-position/velocity correlation vs delay, plus joint densities at
/// selected delays.
inline std::vector<std::string> figure_fig4(const FigureOptions& opt,
                                            std::vector<double> density_taus = {}) {
  const std::size_t n = opt.points ? opt.points : 500;
  if (density_taus.empty()) density_taus = {2.04 * pi, 88 * pi};
  const auto taus = logspace(0.5 * pi, 100 * pi, n);
  std::vector<double> corr(n);
  std::vector<SweepRow> rows(n);
  parallel_for(
      n,
      [&](std::size_t i) {
        rows[i] = theory_row({opt.g, opt.q0, taus[i]}, Source::closed);
        corr[i] = rows[i].corr.value_or(0.0);
      },
      opt.n_threads);

  csv::Table t;
  t.metadata["figure"] = "fig4";
  t.metadata["g"] = csv::format_double(opt.g);
  t.metadata["q0"] = csv::format_double(opt.q0);
  t.columns = {"tau", "corr", "sigma_q2", "sigma_v2"};
  for (std::size_t i = 0; i < n; ++i)
    t.add_row({csv::format_double(taus[i]), csv::format_field(rows[i].corr),
               csv::format_field(rows[i].sigma_q2), csv::format_field(rows[i].sigma_v2)});
  std::vector<std::string> written;
  const auto csv_path = join_path(opt.out_dir, "fig4_correlation.csv");
  t.write(csv_path);
  written.push_back(csv_path);

  // joint densities on a +-4 sigma grid
  for (std::size_t d = 0; d < density_taus.size(); ++d) {
    const ReducedParams r{opt.g, opt.q0, density_taus[d]};
    const auto m = analytic::moments_closed(r);
    const auto density = analytic::joint_density(m);
    const std::size_t grid_n = 81;
    const double sq = 4 * std::sqrt(m.sigma_q2), sv = 4 * std::sqrt(m.sigma_v2);
    csv::Table dt;
    dt.metadata["figure"] = "fig4_density";
    dt.metadata["tau"] = csv::format_double(density_taus[d]);
    dt.metadata["sigma_q2"] = csv::format_double(m.sigma_q2);
    dt.metadata["sigma_v2"] = csv::format_double(m.sigma_v2);
    dt.metadata["corr"] = csv::format_double(m.corr_delayed);
    dt.columns = {"q_delayed", "v", "density"};
    for (std::size_t iy = 0; iy < grid_n; ++iy)
      for (std::size_t ix = 0; ix < grid_n; ++ix) {
        const double qd = -sq + 2 * sq * double(ix) / double(grid_n - 1);
        const double vv = -sv + 2 * sv * double(iy) / double(grid_n - 1);
        dt.add_row({csv::format_double(qd), csv::format_double(vv),
                    csv::format_double(density(qd, vv))});
      }
    const auto p = join_path(opt.out_dir, "fig4_density_" + std::to_string(d) + ".csv");
    dt.write(p);
    written.push_back(p);
  }

  if (opt.emit_svg) {
    svg::Plot plot("correlation of delayed position and velocity", "tau", "c(tau)", true);
    plot.add(svg::Series{taus, corr, "#d62728", "c(tau)", 1.8, false});
    const auto asym = analytic::asymptotic_long_delay({opt.g, opt.q0, 0.0});
    plot.add(svg::Series{taus, std::vector<double>(n, asym.corr_inf), "#7f7f7f",
                         "long-delay limit", 1.2, true});
    const auto svg_path = join_path(opt.out_dir, "fig4.svg");
    plot.write(svg_path);
    written.push_back(svg_path);
  }
  return written;
}

/// T_eff/T0 = sigma_q^2 map over (tau, Q0) with the cooling border and the
/// constant-Q0 cut.
inline std::vector<std::string> figure_fig5(const FigureOptions& opt) {
  const std::size_t ntau = opt.points ? opt.points : 160;
  const std::size_t nq = opt.points ? std::max<std::size_t>(opt.points / 2, 8) : 80;
  const auto taus = logspace(0.5 * pi, 1000.0, ntau);
  const auto q0s = logspace(1.0, 300.0, nq);

  std::vector<std::vector<double>> teff(nq, std::vector<double>(ntau));
  parallel_for(
      nq,
      [&](std::size_t iy) {
        for (std::size_t ix = 0; ix < ntau; ++ix) {
          const ReducedParams r{opt.g, q0s[iy], taus[ix]};
          try {
            teff[iy][ix] =
                spectral::variance_quadrature(r, {.check_stability = false}).sigma_q2;
          } catch (const Error&) {
            teff[iy][ix] = std::numeric_limits<double>::quiet_NaN();
          }
        }
      },
      opt.n_threads);

  csv::Table t;
  t.metadata["figure"] = "fig5_map";
  t.metadata["g"] = csv::format_double(opt.g);
  t.metadata["temperature"] = "teff_q (T0*sigma_q2)";
  t.columns = {"tau", "q0", "teff_q_ratio"};
  for (std::size_t iy = 0; iy < nq; ++iy)
    for (std::size_t ix = 0; ix < ntau; ++ix)
      t.add_row({csv::format_double(taus[ix]), csv::format_double(q0s[iy]),
                 csv::format_double(teff[iy][ix])});
  std::vector<std::string> written;
  const auto map_path = join_path(opt.out_dir, "fig5_map.csv");
  t.write(map_path);
  written.push_back(map_path);

  // cooling border tau*(Q0) on a decimated set of rows
  std::vector<double> border_q, border_tau;
  {
    const std::size_t rows = std::clamp<std::size_t>(ntau / 10, 4, 16);
    std::vector<double> qs = logspace(2.0, std::min(q0s.back(), 150.0), rows);
    std::vector<std::optional<double>> stars(rows);
    parallel_for(
        rows,
        [&](std::size_t i) {
          analytic::CoolingBoundaryOptions cb;
          cb.scan_step = two_pi / 40;  // map overlay resolution
          cb.bisect_tol = 1e-3;
          try {
            stars[i] = analytic::cooling_boundary(opt.g, qs[i], cb);
          } catch (const Error&) {
            stars[i] = std::nullopt;
          }
        },
        opt.n_threads);
    for (std::size_t i = 0; i < rows; ++i)
      if (stars[i]) {
        border_q.push_back(qs[i]);
        border_tau.push_back(*stars[i]);
      }
  }
  csv::Table bt;
  bt.metadata["figure"] = "fig5_border";
  bt.metadata["g"] = csv::format_double(opt.g);
  bt.columns = {"q0", "tau_star"};
  for (std::size_t i = 0; i < border_q.size(); ++i)
    bt.add_row({csv::format_double(border_q[i]), csv::format_double(border_tau[i])});
  const auto border_path = join_path(opt.out_dir, "fig5_border.csv");
  bt.write(border_path);
  written.push_back(border_path);

  // constant-Q0 cut
  const std::size_t ncut = 400;
  const auto cut_taus = logspace(0.5 * pi, 1000.0, ncut);
  std::vector<double> cut(ncut);
  parallel_for(
      ncut,
      [&](std::size_t i) {
        cut[i] = spectral::variance_quadrature({opt.g, opt.q0, cut_taus[i]},
                                               {.check_stability = false})
                     .sigma_q2;
      },
      opt.n_threads);
  csv::Table ct;
  ct.metadata["figure"] = "fig5_cut";
  ct.metadata["g"] = csv::format_double(opt.g);
  ct.metadata["q0"] = csv::format_double(opt.q0);
  const auto asym = analytic::asymptotic_long_delay({opt.g, opt.q0, 0.0});
  ct.metadata["plateau_leading_order"] = csv::format_double(asym.t_eff_ratio_inf);
  ct.metadata["plateau_exact"] = csv::format_double(asym.sigma_q2_inf);
  ct.columns = {"tau", "teff_q_ratio"};
  for (std::size_t i = 0; i < ncut; ++i)
    ct.add_row({csv::format_double(cut_taus[i]), csv::format_double(cut[i])});
  const auto cut_path = join_path(opt.out_dir, "fig5_cut.csv");
  ct.write(cut_path);
  written.push_back(cut_path);

  if (opt.emit_svg) {
    svg::Heatmap hm("T_eff/T0 map (teff_q)", "tau", "Q0");
    hm.set_data(taus, q0s, teff, 1.0);
    hm.add_overlay(svg::Series{border_tau, border_q, "#000000", "cooling border", 2.0, false});
    const auto hm_path = join_path(opt.out_dir, "fig5_map.svg");
    hm.write(hm_path);
    written.push_back(hm_path);

    svg::Plot plot("T_eff/T0 at fixed Q0", "tau", "teff_q_ratio", true);
    plot.add(svg::Series{cut_taus, cut, "#d62728", "quadrature", 1.8, false});
    plot.add(svg::Series{cut_taus, std::vector<double>(ncut, asym.t_eff_ratio_inf), "#7f7f7f",
                         "1 + g^2/2", 1.2, true});
    const auto cut_svg = join_path(opt.out_dir, "fig5_cut.svg");
    plot.write(cut_svg);
    written.push_back(cut_svg);
  }
  return written;
}

/// Q0 sweeps at fixed delays with gain proportional to Q0.
inline std::vector<std::string> figure_suppQ(const FigureOptions& opt) {
  const std::size_t n = opt.points ? opt.points : 40;
  const auto q0s = logspace(10.0, 140.0, n);
  std::vector<std::string> written;
  int idx = 0;
  for (double tau : {5 * pi / 4, 5 * pi / 4 + 18 * pi}) {
    auto rows = sweep_q(q0s, tau, 0.0, 0.0094, {Source::closed}, {}, opt.n_threads);
    auto t = rows_to_table(rows, {{"figure", "suppQ"},
                                  {"tau", csv::format_double(tau)},
                                  {"gain_rule", "g = 0.0094*q0"}});
    const auto p = join_path(opt.out_dir, "suppQ_" + std::to_string(idx) + ".csv");
    t.write(p);
    written.push_back(p);
    if (opt.emit_svg) {
      std::vector<double> x, sp, wx, hq;
      for (const auto& r : rows)
        if (r.status == "ok") {
          x.push_back(r.q0);
          sp.push_back(r.s_pump.value_or(0));
          wx.push_back(r.w_ext.value_or(0));
          hq.push_back(r.s_highq.value_or(0));
        }
      svg::Plot plot("second law vs quality factor (tau = " + csv::format_double(tau) + ")",
                     "Q0", "rate", true);
      plot.add(svg::Series{x, sp, "#2ca02c", "s_pump", 1.8, false});
      plot.add(svg::Series{x, wx, "#333333", "w_ext", 1.8, false});
      plot.add(svg::Series{x, hq, "#9467bd", "s_highq", 1.2, true});
      const auto sp_path = join_path(opt.out_dir, "suppQ_" + std::to_string(idx) + ".svg");
      plot.write(sp_path);
      written.push_back(sp_path);
    }
    ++idx;
  }
  return written;
}

/// Non-Markovian bound vs entropy pumping and extracted work.
inline std::vector<std::string> figure_suppBound(const FigureOptions& opt) {
  const std::size_t n = opt.points ? opt.points : 400;
  const auto taus = logspace(0.5 * pi, 60 * pi, n);
  auto rows = sweep_delay(opt.g, opt.q0, taus, {Source::closed}, {}, opt.n_threads);
  auto t = rows_to_table(rows, {{"figure", "suppBound"},
                                {"g", csv::format_double(opt.g)},
                                {"q0", csv::format_double(opt.q0)}});
  std::vector<std::string> written;
  const auto p = join_path(opt.out_dir, "suppBound.csv");
  t.write(p);
  written.push_back(p);
  if (opt.emit_svg) {
    std::vector<double> x, sp, wx, bn;
    for (const auto& r : rows)
      if (r.status == "ok") {
        x.push_back(r.tau_realized);
        sp.push_back(r.s_pump.value_or(0));
        wx.push_back(r.w_ext.value_or(0));
        bn.push_back(r.bound_nm.value_or(0));
      }
    svg::Plot plot("non-Markovian bound vs entropy pumping", "tau", "rate", true);
    plot.add(svg::Series{x, bn, "#1f77b4", "s_pump_y + i_flow", 1.4, false});
    plot.add(svg::Series{x, sp, "#2ca02c", "s_pump", 1.8, false});
    plot.add(svg::Series{x, wx, "#333333", "w_ext", 1.8, false});
    const auto sp_path = join_path(opt.out_dir, "suppBound.svg");
    plot.write(sp_path);
    written.push_back(sp_path);
  }
  return written;
}

}  // namespace delayfb::cli
