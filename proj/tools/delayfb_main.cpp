// delayfb command line: steady-state theory, stochastic simulation, sweeps,
// figure reproduction and cross-source comparison for the delayed-feedback
// oscillator.
//
// Exit codes: 0 success, 1 usage error, 2 numerical failure,
//             3 acceptance-comparison failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "delayfb/delayfb.hpp"

namespace {

using namespace delayfb;
using cli::Source;
using model::ReducedParams;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  bool emit_svg = false;
  unsigned n_threads = 0;
};

struct ParamArgs {
  double g = 0.36;
  double q0 = 55.0;
  double tau = 2.04 * pi;
  // physical-parameter route (overrides reduced values when all are given)
  double omega0 = 0, gamma0 = 0, gamma_fb = 0, t_fb = -1;
};

ReducedParams resolve_params(const ParamArgs& a, const config::KeyValues& kv) {
  ParamArgs p = a;
  p.g = kv.get_double("g", p.g);
  p.q0 = kv.get_double("q0", p.q0);
  p.tau = kv.get_double("tau", p.tau);
  p.omega0 = kv.get_double("omega0", p.omega0);
  p.gamma0 = kv.get_double("gamma0", p.gamma0);
  p.gamma_fb = kv.get_double("gamma_fb", p.gamma_fb);
  p.t_fb = kv.get_double("t_fb", p.t_fb);
  if (p.omega0 > 0 && p.gamma0 > 0) {
    model::PhysicalParams phys{1.0, p.omega0, p.gamma0, 1.0,
                               p.t_fb >= 0 ? p.t_fb : 0.0, p.gamma_fb};
    // mass/temp0 irrelevant for the reduction; placeholder values
    return model::reduce(phys);
  }
  return {p.g, p.q0, p.tau};
}

config::KeyValues load_config(const std::string& path) {
  if (path.empty()) return {};
  return config::KeyValues::from_file(path);
}

std::map<std::string, std::string> base_metadata(const CommonArgs& c, const ReducedParams& r) {
  return {{"g", csv::format_double(r.g)},
          {"q0", csv::format_double(r.q0)},
          {"seed", std::to_string(c.seed)}};
}

int cmd_analytic(const CommonArgs& common, const ReducedParams& r) {
  auto row_closed = cli::theory_row(r, Source::closed);
  auto row_quad = cli::theory_row(r, Source::quadrature);
  auto table = cli::rows_to_table({row_closed, row_quad}, base_metadata(common, r));
  table.metadata["tau"] = csv::format_double(r.tau);
  const auto path = cli::join_path(common.out_dir, "analytic_point.csv");
  table.write(path);
  std::cout << table.to_string();
  std::cout << "wrote " << path << "\n";
  if (row_closed.status != "ok" || row_quad.status != "ok") return 2;
  return 0;
}

int cmd_simulate(const CommonArgs& common, const ReducedParams& r, double duration, double dt,
                 std::uint64_t stride) {
  auto cfg = simulate::config_for(r, duration, common.seed, dt);
  cfg.record_stride = stride;
  auto traj = simulate::integrate(cfg);
  const auto path = cli::join_path(common.out_dir, "trajectory.csv");
  csv::write_trajectory(traj, path);
  std::cout << "wrote " << path << " (" << traj.t.size() << " samples, realized tau "
            << csv::format_double(traj.tau_realized) << ")\n";
  return 0;
}

std::vector<Source> parse_sources(const std::string& s) {
  std::vector<Source> out;
  std::string tok;
  std::istringstream in(s);
  while (std::getline(in, tok, ',')) {
    if (tok == "closed") out.push_back(Source::closed);
    else if (tok == "quadrature") out.push_back(Source::quadrature);
    else if (tok == "simulation") out.push_back(Source::simulation);
    else throw CLI::ValidationError("unknown source: " + tok);
  }
  if (out.empty()) throw CLI::ValidationError("no sources given");
  return out;
}

int report_rows(const std::vector<cli::SweepRow>& rows) {
  int bad = 0;
  for (const auto& r : rows)
    if (r.status != "ok" && r.status != "unstable") ++bad;
  return bad ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"thermodynamics of time-delayed feedback on an underdamped oscillator"};
  app.require_subcommand(1);
  app.fallthrough();

  CommonArgs common;
  ParamArgs params;
  app.add_option("--config", common.config_path, "flat key=value configuration file");
  app.add_option("--seed", common.seed, "base RNG seed");
  app.add_option("--out", common.out_dir, "output directory");
  app.add_flag("--svg", common.emit_svg, "also render SVG plots");
  app.add_option("--threads", common.n_threads, "worker threads (0 = hardware)");

  auto add_params = [&](CLI::App* sub) {
    sub->add_option("--g", params.g, "feedback gain");
    sub->add_option("--q0", params.q0, "quality factor");
    sub->add_option("--tau", params.tau, "dimensionless delay");
    sub->add_option("--omega0", params.omega0, "natural frequency, rad/s (with --gamma0)");
    sub->add_option("--gamma0", params.gamma0, "damping, rad/s");
    sub->add_option("--gamma-fb", params.gamma_fb, "feedback damping, rad/s");
    sub->add_option("--t-fb", params.t_fb, "delay, s");
  };

  auto* c_analytic = app.add_subcommand("analytic", "closed-form + quadrature at one point");
  add_params(c_analytic);

  auto* c_sim = app.add_subcommand("simulate", "integrate one trajectory, write CSV");
  add_params(c_sim);
  double sim_duration = 2000.0, sim_dt = two_pi / 200.0;
  std::uint64_t sim_stride = 1;
  c_sim->add_option("--duration", sim_duration, "recorded duration (1/Omega0 units)");
  c_sim->add_option("--dt", sim_dt, "time step");
  c_sim->add_option("--stride", sim_stride, "record every n-th step");

  auto* c_sweepd = app.add_subcommand("sweep-delay", "sweep tau at fixed (g, q0)");
  add_params(c_sweepd);
  double tau_min = 0.5 * pi, tau_max = 60 * pi;
  std::size_t n_points = 25;
  bool log_grid = true;
  std::string sources_arg = "closed,quadrature";
  cli::SimOverrides sweep_sim;
  c_sweepd->add_option("--tau-min", tau_min, "grid start");
  c_sweepd->add_option("--tau-max", tau_max, "grid end");
  c_sweepd->add_option("--points", n_points, "grid size");
  c_sweepd->add_flag("--log,!--linear", log_grid, "logarithmic grid (default)");
  c_sweepd->add_option("--sources", sources_arg, "closed,quadrature,simulation");
  c_sweepd->add_option("--n-traj", sweep_sim.n_traj, "trajectories per simulated point");
  c_sweepd->add_option("--duration", sweep_sim.duration, "per-trajectory duration (0: 500*q0)");
  c_sweepd->add_option("--dt", sweep_sim.dt, "simulation time step");

  auto* c_sweepq = app.add_subcommand("sweep-q", "sweep q0 at fixed tau");
  add_params(c_sweepq);
  double q_min = 10, q_max = 140, g_per_q = 0.0;
  std::size_t q_points = 40;
  std::string q_sources_arg = "closed";
  c_sweepq->add_option("--q0-min", q_min, "grid start");
  c_sweepq->add_option("--q0-max", q_max, "grid end");
  c_sweepq->add_option("--points", q_points, "grid size");
  c_sweepq->add_option("--g-per-q", g_per_q, "gain rule g = coeff*q0 (0: fixed --g)");
  c_sweepq->add_option("--sources", q_sources_arg, "closed,quadrature,simulation");
  c_sweepq->add_option("--n-traj", sweep_sim.n_traj, "trajectories per simulated point");

  auto* c_fit = app.add_subcommand("fit-gain", "recover g from a T_eff(tau) curve");
  add_params(c_fit);
  std::string fit_csv;
  std::string fit_model = "sigma_v2";
  bool fit_simulate = false;
  std::size_t fit_points = 12, fit_traj = 8;
  c_fit->add_option("--sweep-csv", fit_csv, "sweep CSV with simulation rows to fit");
  c_fit->add_option("--model", fit_model, "sigma_v2 (default) or sigma_q2");
  c_fit->add_flag("--simulate", fit_simulate, "generate the curve by simulation first");
  c_fit->add_option("--points", fit_points, "tau points when simulating");
  c_fit->add_option("--n-traj", fit_traj, "trajectories per point when simulating");

  auto* c_fig = app.add_subcommand("figure", "reproduce a figure (fig3|fig4|fig5|suppQ|suppBound)");
  add_params(c_fig);
  std::string which;
  std::size_t fig_points = 0;
  c_fig->add_option("name", which, "figure name")->required();
  c_fig->add_option("--points", fig_points, "override grid size");

  auto* c_cmp = app.add_subcommand("compare", "compare two sweep CSVs");
  std::string cmp_a, cmp_b;
  double cmp_join_tol = -1.0, cmp_rel_tol = 1e-6;
  c_cmp->add_option("--a", cmp_a, "first sweep CSV")->required();
  c_cmp->add_option("--b", cmp_b, "second sweep CSV")->required();
  c_cmp->add_option("--join-tol", cmp_join_tol, "tau_realized join tolerance (default dt/2)");
  c_cmp->add_option("--rel-tol", cmp_rel_tol, "theory/theory relative tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const auto kv = load_config(common.config_path);
    common.seed = static_cast<std::uint64_t>(kv.get_int("seed", (long long)common.seed));
    if (kv.has("out")) common.out_dir = kv.get_string("out");
    std::filesystem::create_directories(common.out_dir);
    const ReducedParams r = resolve_params(params, kv);

    if (*c_analytic) return cmd_analytic(common, r);

    if (*c_sim) {
      sim_duration = kv.get_double("duration", sim_duration);
      sim_dt = kv.get_double("dt", sim_dt);
      return cmd_simulate(common, r, sim_duration, sim_dt, sim_stride);
    }

    if (*c_sweepd) {
      auto taus = kv.get_list("tau_grid");
      if (!taus.empty()) {
        for (std::size_t i = 1; i < taus.size(); ++i)
          if (taus[i] <= taus[i - 1])
            throw InvalidParameterError("tau_grid must be strictly increasing");
      } else {
        taus = log_grid ? cli::logspace(tau_min, tau_max, n_points)
                        : cli::linspace(tau_min, tau_max, n_points);
      }
      sweep_sim.seed = common.seed;
      sweep_sim.n_threads = 1;
      auto rows = cli::sweep_delay(r.g, r.q0, taus, parse_sources(sources_arg), sweep_sim,
                                   common.n_threads);
      auto meta = base_metadata(common, r);
      meta["command"] = "sweep-delay";
      meta["dt"] = csv::format_double(sweep_sim.dt);
      meta["tau_min"] = csv::format_double(taus.front());
      meta["tau_max"] = csv::format_double(taus.back());
      meta["points"] = std::to_string(taus.size());
      meta["sources"] = sources_arg;
      meta["n_traj"] = std::to_string(sweep_sim.n_traj);
      meta["duration"] = csv::format_double(sweep_sim.duration);
      auto table = cli::rows_to_table(rows, meta);
      const auto path = cli::join_path(common.out_dir, "sweep_delay.csv");
      table.write(path);
      std::cout << "wrote " << path << " (" << rows.size() << " rows)\n";
      return report_rows(rows);
    }

    if (*c_sweepq) {
      const auto q0s = cli::logspace(q_min, q_max, q_points);
      sweep_sim.seed = common.seed;
      auto rows = cli::sweep_q(q0s, r.tau, r.g, g_per_q, parse_sources(q_sources_arg),
                               sweep_sim, common.n_threads);
      auto meta = base_metadata(common, r);
      meta["command"] = "sweep-q";
      meta["tau"] = csv::format_double(r.tau);
      meta["q0_min"] = csv::format_double(q_min);
      meta["q0_max"] = csv::format_double(q_max);
      meta["points"] = std::to_string(q_points);
      meta["sources"] = q_sources_arg;
      if (g_per_q > 0) meta["gain_rule"] = "g = " + csv::format_double(g_per_q) + "*q0";
      auto table = cli::rows_to_table(rows, meta);
      const auto path = cli::join_path(common.out_dir, "sweep_q.csv");
      table.write(path);
      std::cout << "wrote " << path << " (" << rows.size() << " rows)\n";
      return report_rows(rows);
    }

    if (*c_fit) {
      std::vector<double> taus, teff;
      std::vector<double> ses;
      if (!fit_csv.empty()) {
        auto table = csv::read(fit_csv);
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
          auto row = cli::row_from_fields(table, i);
          if (row.status != "ok" || !row.sigma_v2) continue;
          taus.push_back(row.tau_realized);
          teff.push_back(*row.sigma_v2);
          ses.push_back(row.se_sigma_v2.value_or(0.0));
        }
      } else if (fit_simulate) {
        const auto grid = cli::logspace(0.5 * pi, 20 * pi, fit_points);
        cli::SimOverrides sim;
        sim.seed = common.seed;
        sim.n_traj = fit_traj;
        auto rows = cli::sweep_delay(r.g, r.q0, grid, {Source::simulation}, sim,
                                     common.n_threads);
        for (const auto& row : rows) {
          if (row.status != "ok") continue;
          taus.push_back(row.tau_realized);
          teff.push_back(row.sigma_v2.value_or(0.0));
          ses.push_back(row.se_sigma_v2.value_or(0.0));
        }
      } else {
        std::cerr << "fit-gain: provide --sweep-csv or --simulate\n";
        return 1;
      }
      const auto mdl = fit_model == "sigma_q2" ? analyze::VarianceModel::sigma_q2
                                               : analyze::VarianceModel::sigma_v2;
      auto fit = analyze::fit_gain(taus, teff, r.q0, mdl);
      csv::Table out;
      out.metadata["command"] = "fit-gain";
      out.metadata["q0"] = csv::format_double(r.q0);
      out.metadata["model"] = fit.label;
      out.metadata["seed"] = std::to_string(common.seed);
      out.columns = {"g_fit", "stderr", "residual_norm", "n_points"};
      out.add_row({csv::format_double(fit.value), csv::format_double(fit.stderr_),
                   csv::format_double(fit.residual_norm), std::to_string(fit.n_points)});
      const auto path = cli::join_path(common.out_dir, "fit_gain.csv");
      out.write(path);
      std::cout << "g = " << csv::format_double(fit.value) << " +- "
                << csv::format_double(fit.stderr_) << " (" << fit.label << ", "
                << fit.n_points << " points)\nwrote " << path << "\n";
      return 0;
    }

    if (*c_fig) {
      cli::FigureOptions fo;
      fo.out_dir = common.out_dir;
      fo.emit_svg = common.emit_svg;
      fo.g = r.g;
      fo.q0 = r.q0;
      fo.seed = common.seed;
      fo.n_threads = common.n_threads;
      fo.points = fig_points;
      std::vector<std::string> written;
      if (which == "fig3") written = cli::figure_fig3(fo);
      else if (which == "fig4") written = cli::figure_fig4(fo);
      else if (which == "fig5") written = cli::figure_fig5(fo);
      else if (which == "suppQ") written = cli::figure_suppQ(fo);
      else if (which == "suppBound") written = cli::figure_suppBound(fo);
      else {
        std::cerr << "unknown figure: " << which
                  << " (expected fig3|fig4|fig5|suppQ|suppBound)\n";
        return 1;
      }
      for (const auto& p : written) std::cout << "wrote " << p << "\n";
      return 0;
    }

    if (*c_cmp) {
      auto ta = csv::read(cmp_a);
      auto tb = csv::read(cmp_b);
      std::vector<cli::SweepRow> ra, rb;
      for (std::size_t i = 0; i < ta.rows.size(); ++i) ra.push_back(cli::row_from_fields(ta, i));
      for (std::size_t i = 0; i < tb.rows.size(); ++i) rb.push_back(cli::row_from_fields(tb, i));
      double join_tol = cmp_join_tol;
      if (join_tol <= 0) {
        const auto it = ta.metadata.find("dt");
        join_tol = it != ta.metadata.end() ? std::stod(it->second) / 2 : two_pi / 400.0;
      }
      auto rep = cli::compare(ra, rb, join_tol, cmp_rel_tol);
      std::printf("%-14s %-10s %14s %14s %10s %8s\n", "tau_realized", "quantity", "a", "b",
                  "rel_delta", "z");
      for (const auto& p : rep.pairs)
        std::printf("%-14.6g %-10s %14.8g %14.8g %10.2e %8s\n", p.tau_realized,
                    p.quantity.c_str(), p.a, p.b, p.rel_delta,
                    p.z ? csv::format_double(*p.z).c_str() : "-");
      for (const auto& o : rep.orphans) std::cout << "orphan " << o << "\n";
      std::cout << "verdict: " << rep.verdict << "\n";
      csv::Table out;
      out.metadata["command"] = "compare";
      out.metadata["verdict"] = rep.pass ? "pass" : "fail";
      out.metadata["detail"] = rep.verdict;
      out.metadata["max_rel_delta_sigma_v2"] = csv::format_double(rep.max_rel_delta_sigma_v2);
      out.metadata["coverage_3se"] = csv::format_double(rep.coverage_3se);
      out.columns = {"tau_realized", "quantity", "a", "b", "rel_delta", "z"};
      for (const auto& p : rep.pairs)
        out.add_row({csv::format_double(p.tau_realized), p.quantity, csv::format_double(p.a),
                     csv::format_double(p.b), csv::format_double(p.rel_delta),
                     csv::format_field(p.z)});
      const auto path = cli::join_path(common.out_dir, "compare.csv");
      out.write(path);
      std::cout << "wrote " << path << "\n";
      return rep.pass ? 0 : 3;
    }
  } catch (const InvalidParameterError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
