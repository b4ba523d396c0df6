#pragma once

// Parameter sweeps, figure reproduction and cross-source comparison.
// A SweepRow is one (parameter point x source) record; columns map onto the
// CSV schema emitted by the CLI.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "delayfb/analytic.hpp"
#include "delayfb/csv.hpp"
#include "delayfb/errors.hpp"
#include "delayfb/model.hpp"
#include "delayfb/simulate.hpp"
#include "delayfb/spectral.hpp"
#include "delayfb/svg.hpp"
#include "delayfb/threading.hpp"

namespace delayfb::cli {

using model::ReducedParams;

enum class Source { closed, quadrature, simulation };

inline const char* to_string(Source s) {
  switch (s) {
    case Source::closed: return "closed";
    case Source::quadrature: return "quadrature";
    case Source::simulation: return "simulation";
  }
  return "?";
}

struct SweepRow {
  double g = 0, q0 = 0, tau_requested = 0, tau_realized = 0;
  std::optional<double> sigma_q2, sigma_v2, corr;
  std::optional<double> s_pump, w_ext, s_i, s_vfb, s_highq, bound_nm, eta_pump;
  Source source = Source::closed;
  std::optional<double> se_sigma_q2, se_sigma_v2, se_corr;
  std::string status = "ok";  // ok | unstable | error
};

inline const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> cols = {
      "g",      "q0",    "tau_requested", "tau_realized", "sigma_q2", "sigma_v2",
      "corr",   "s_pump", "w_ext",        "s_i",          "s_vfb",    "s_highq",
      "bound_nm", "eta_pump", "source",   "se_sigma_q2",  "se_sigma_v2", "se_corr",
      "status"};
  return cols;
}

inline std::vector<std::string> to_fields(const SweepRow& r) {
  using csv::format_double;
  using csv::format_field;
  return {format_double(r.g),
          format_double(r.q0),
          format_double(r.tau_requested),
          format_double(r.tau_realized),
          format_field(r.sigma_q2),
          format_field(r.sigma_v2),
          format_field(r.corr),
          format_field(r.s_pump),
          format_field(r.w_ext),
          format_field(r.s_i),
          format_field(r.s_vfb),
          format_field(r.s_highq),
          format_field(r.bound_nm),
          format_field(r.eta_pump),
          to_string(r.source),
          format_field(r.se_sigma_q2),
          format_field(r.se_sigma_v2),
          format_field(r.se_corr),
          r.status};
}

inline SweepRow row_from_fields(const csv::Table& t, std::size_t i) {
  SweepRow r;
  auto get = [&](const char* name) { return t.value(i, t.column_index(name)); };
  r.g = get("g").value();
  r.q0 = get("q0").value();
  r.tau_requested = get("tau_requested").value();
  r.tau_realized = get("tau_realized").value();
  r.sigma_q2 = get("sigma_q2");
  r.sigma_v2 = get("sigma_v2");
  r.corr = get("corr");
  r.s_pump = get("s_pump");
  r.w_ext = get("w_ext");
  r.s_i = get("s_i");
  r.s_vfb = get("s_vfb");
  r.s_highq = get("s_highq");
  r.bound_nm = get("bound_nm");
  r.eta_pump = get("eta_pump");
  const auto& src = t.rows[i][t.column_index("source")];
  r.source = src == "closed" ? Source::closed
                             : src == "quadrature" ? Source::quadrature : Source::simulation;
  r.se_sigma_q2 = get("se_sigma_q2");
  r.se_sigma_v2 = get("se_sigma_v2");
  r.se_corr = get("se_corr");
  r.status = t.rows[i][t.column_index("status")];
  return r;
}

struct SimOverrides {
  double dt = two_pi / 200.0;
  double duration = 0.0;  // 0: 500 * q0
  std::size_t n_traj = 8;
  std::uint64_t seed = 1;
  unsigned n_threads = 0;
};

inline void fill_rates(SweepRow& row, const ReducedParams& r,
                       const analytic::SteadyStateMoments& m) {
  const auto t = analytic::thermo_rates(r, m);
  row.s_pump = t.s_pump;
  row.w_ext = t.w_ext;
  row.s_i = t.s_i;
  row.s_vfb = t.s_vfb;
  row.s_highq = t.s_highq;
  row.bound_nm = t.bound_nm;
  row.eta_pump = t.eta_pump;
}

/// One theory row: sigma_v^2 from the closed form (source=closed) or the
/// quadrature (source=quadrature); sigma_q^2 always from the quadrature.
inline SweepRow theory_row(const ReducedParams& r, Source source) {
  SweepRow row;
  row.g = r.g;
  row.q0 = r.q0;
  row.tau_requested = r.tau;
  row.tau_realized = r.tau;
  row.source = source;
  try {
    if (!spectral::delay_stability(r)) {
      row.status = "unstable";
      return row;
    }
    const auto m = source == Source::closed ? analytic::moments_closed(r)
                                            : analytic::moments_quadrature(r);
    row.sigma_q2 = m.sigma_q2;
    row.sigma_v2 = m.sigma_v2;
    if (r.g > 0) row.corr = m.corr_delayed;
    fill_rates(row, r, m);
  } catch (const Error& e) {
    row.status = std::string("error: ") + e.what();
  }
  return row;
}

/// One simulation row: ensemble means with standard errors; thermodynamic
/// rates evaluated from the sample velocity variance at the realized delay.
inline SweepRow simulation_row(const ReducedParams& r, const SimOverrides& sim) {
  SweepRow row;
  row.g = r.g;
  row.q0 = r.q0;
  row.tau_requested = r.tau;
  row.source = Source::simulation;
  auto c = simulate::config_for(r, sim.duration > 0 ? sim.duration : 500.0 * r.q0, sim.seed,
                                sim.dt);
  row.tau_realized = c.tau_realized();
  try {
    const auto es = simulate::ensemble(c, sim.n_traj, sim.n_threads);
    row.sigma_q2 = es.mean_sigma_q2;
    row.sigma_v2 = es.mean_sigma_v2;
    if (r.g > 0) row.corr = es.mean_corr;
    row.se_sigma_q2 = es.se_sigma_q2;
    row.se_sigma_v2 = es.se_sigma_v2;
    row.se_corr = es.se_corr;
    const analytic::SteadyStateMoments m{es.mean_sigma_q2, es.mean_sigma_v2, es.mean_corr};
    const ReducedParams realized{r.g, r.q0, row.tau_realized};
    fill_rates(row, realized, m);
  } catch (const DivergenceError& e) {
    row.status = std::string("unstable: ") + e.what();
  } catch (const Error& e) {
    row.status = std::string("error: ") + e.what();
  }
  return row;
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = n == 1 ? a : a + (b - a) * double(i) / double(n - 1);
  return v;
}

inline std::vector<double> logspace(double a, double b, std::size_t n) {
  auto v = linspace(std::log(a), std::log(b), n);
  for (auto& x : v) x = std::exp(x);
  return v;
}

/// Delay sweep at fixed (g, q0) for the requested sources. Rows are ordered
/// by (grid index, source); evaluation is parallel, output deterministic.
inline std::vector<SweepRow> sweep_delay(double g, double q0, const std::vector<double>& taus,
                                         const std::vector<Source>& sources,
                                         const SimOverrides& sim = {}, unsigned n_threads = 0) {
  std::vector<SweepRow> rows(taus.size() * sources.size());
  parallel_for(
      taus.size(),
      [&](std::size_t i) {
        const ReducedParams r{g, q0, taus[i]};
        for (std::size_t s = 0; s < sources.size(); ++s) {
          SimOverrides si = sim;
          si.seed = simulate::mix_seed(sim.seed, i);  // per-point stream
          si.n_threads = 1;                            // outer loop owns the pool
          rows[i * sources.size() + s] = sources[s] == Source::simulation
                                             ? simulation_row(r, si)
                                             : theory_row(r, sources[s]);
        }
      },
      n_threads);
  return rows;
}

/// Quality-factor sweep at fixed delay; gain either fixed or g = coeff * q0.
inline std::vector<SweepRow> sweep_q(const std::vector<double>& q0s, double tau, double g_fixed,
                                     double g_per_q, const std::vector<Source>& sources,
                                     const SimOverrides& sim = {}, unsigned n_threads = 0) {
  std::vector<SweepRow> rows(q0s.size() * sources.size());
  parallel_for(
      q0s.size(),
      [&](std::size_t i) {
        const double g = g_per_q > 0 ? g_per_q * q0s[i] : g_fixed;
        const ReducedParams r{g, q0s[i], tau};
        for (std::size_t s = 0; s < sources.size(); ++s) {
          SimOverrides si = sim;
          si.seed = simulate::mix_seed(sim.seed, 7000 + i);
          si.n_threads = 1;
          rows[i * sources.size() + s] = sources[s] == Source::simulation
                                             ? simulation_row(r, si)
                                             : theory_row(r, sources[s]);
        }
      },
      n_threads);
  return rows;
}

inline csv::Table rows_to_table(const std::vector<SweepRow>& rows,
                                std::map<std::string, std::string> metadata) {
  csv::Table t;
  t.metadata = std::move(metadata);
  t.columns = sweep_columns();
  t.rows.reserve(rows.size());
  for (const auto& r : rows) t.add_row(to_fields(r));
  return t;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct ComparePair {
  double tau_realized;
  std::string quantity;
  double a, b;
  std::optional<double> z;  // |a-b|/SE when one side carries a standard error
  double rel_delta;
};

struct CompareReport {
  std::vector<ComparePair> pairs;
  double max_rel_delta_sigma_v2 = 0.0;  // closed vs quadrature style
  double coverage_3se = 1.0;            // fraction of SE-carrying pairs with z <= 3
  std::size_t n_se_pairs = 0;
  std::vector<std::string> orphans;
  bool pass = true;
  std::string verdict;
};

/// Join rows from two sources on tau_realized (within join_tol) and compare
/// the shared quantities. Pass criteria: max relative sigma_v2 delta <= 1e-6
/// for theory/theory joins; >= 95% of SE-carrying rows within 3 SE for
/// simulation/theory joins.
inline CompareReport compare(const std::vector<SweepRow>& a, const std::vector<SweepRow>& b,
                             double join_tol, double rel_tol = 1e-6) {
  CompareReport rep;
  std::vector<bool> used(b.size(), false);
  std::size_t within = 0;
  for (const auto& ra : a) {
    if (ra.status != "ok") continue;
    const SweepRow* match = nullptr;
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j] || b[j].status != "ok") continue;
      if (std::abs(b[j].tau_realized - ra.tau_realized) <= join_tol &&
          std::abs(b[j].g - ra.g) < 1e-12 && std::abs(b[j].q0 - ra.q0) < 1e-12) {
        match = &b[j];
        used[j] = true;
        break;
      }
    }
    if (!match) {
      rep.orphans.push_back("a: tau_realized=" + csv::format_double(ra.tau_realized));
      continue;
    }
    auto push = [&](const char* name, std::optional<double> va, std::optional<double> vb,
                    std::optional<double> se) {
      if (!va || !vb) return;
      ComparePair p{ra.tau_realized, name, *va, *vb, std::nullopt, 0.0};
      p.rel_delta = std::abs(*va - *vb) / std::max({std::abs(*va), std::abs(*vb), 1e-300});
      if (se && *se > 0) {
        p.z = std::abs(*va - *vb) / *se;
        ++rep.n_se_pairs;
        if (*p.z <= 3.0) ++within;
      }
      if (std::string(name) == "sigma_v2" && !se)
        rep.max_rel_delta_sigma_v2 = std::max(rep.max_rel_delta_sigma_v2, p.rel_delta);
      rep.pairs.push_back(std::move(p));
    };
    const bool a_sim = ra.source == Source::simulation;
    const auto& sim = a_sim ? ra : *match;
    const auto& th = a_sim ? *match : ra;
    const bool any_sim = a_sim || match->source == Source::simulation;
    push("sigma_q2", th.sigma_q2, sim.sigma_q2, any_sim ? sim.se_sigma_q2 : std::nullopt);
    push("sigma_v2", th.sigma_v2, sim.sigma_v2, any_sim ? sim.se_sigma_v2 : std::nullopt);
    push("corr", th.corr, sim.corr, any_sim ? sim.se_corr : std::nullopt);
  }
  for (std::size_t j = 0; j < b.size(); ++j)
    if (!used[j] && b[j].status == "ok")
      rep.orphans.push_back("b: tau_realized=" + csv::format_double(b[j].tau_realized));

  rep.coverage_3se = rep.n_se_pairs ? double(within) / double(rep.n_se_pairs) : 1.0;
  std::ostringstream verdict;
  if (!rep.orphans.empty()) {
    rep.pass = false;
    verdict << "join error: " << rep.orphans.size() << " orphan rows; ";
  }
  if (rep.n_se_pairs > 0) {
    if (rep.coverage_3se < 0.95) rep.pass = false;
    verdict << "3SE coverage " << rep.coverage_3se * 100 << "% ("
            << (rep.coverage_3se >= 0.95 ? "pass" : "FAIL") << ")";
  } else {
    if (rep.max_rel_delta_sigma_v2 > rel_tol) rep.pass = false;
    verdict << "max rel sigma_v2 delta " << rep.max_rel_delta_sigma_v2 << " ("
            << (rep.max_rel_delta_sigma_v2 <= rel_tol ? "pass" : "FAIL") << ")";
  }
  rep.verdict = verdict.str();
  return rep;
}

}  // namespace delayfb::cli
