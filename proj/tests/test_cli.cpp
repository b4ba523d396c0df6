#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "delayfb/config.hpp"
#include "delayfb/csv.hpp"
#include "delayfb/figures.hpp"
#include "delayfb/simulate.hpp"
#include "delayfb/sweep.hpp"

using namespace delayfb;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("delayfb_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Config, KeyValueGrammar) {
  const auto kv = config::KeyValues::from_string(
      "# a comment\n"
      "g = 0.36\n"
      "q0=55   # trailing comment\n"
      "tau_grid = 1.5\n"
      "tau_grid = 6.4\n"
      "label = fig three\n");
  EXPECT_DOUBLE_EQ(kv.get_double("g", 0), 0.36);
  EXPECT_DOUBLE_EQ(kv.get_double("q0", 0), 55.0);
  EXPECT_EQ(kv.get_string("label"), "fig three");
  const auto grid = kv.get_list("tau_grid");
  ASSERT_EQ(grid.size(), 2u);
  EXPECT_DOUBLE_EQ(grid[0], 1.5);
  EXPECT_DOUBLE_EQ(grid[1], 6.4);
  EXPECT_FALSE(kv.has("missing"));
  EXPECT_DOUBLE_EQ(kv.get_double("missing", 7.5), 7.5);
}

TEST(Config, RejectsMalformedLine) {
  EXPECT_THROW(config::KeyValues::from_string("not a pair\n"), InvalidParameterError);
  EXPECT_THROW(config::KeyValues::from_string("= 3\n"), InvalidParameterError);
}

TEST(Csv, ShortestRoundTripDoubles) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double x = u(rng) * std::pow(10.0, int(20 * u(rng)));
    const auto s = csv::format_double(x);
    EXPECT_EQ(std::stod(s), x) << s;
  }
}

TEST(Csv, TrajectoryRoundTrip) {
  auto c = simulate::config_for({0.36, 55.0, 2.04 * pi}, 20.0, 5);
  const auto tr = simulate::integrate(c);
  const auto dir = fresh_dir("traj");
  const auto path = (dir / "t.csv").string();
  csv::write_trajectory(tr, path);
  const auto back = csv::read_trajectory(path);
  ASSERT_EQ(back.q.size(), tr.q.size());
  for (std::size_t i = 0; i < tr.q.size(); ++i) {
    EXPECT_EQ(back.q[i], tr.q[i]);
    EXPECT_EQ(back.v[i], tr.v[i]);
  }
  EXPECT_EQ(back.metadata.at("generator"), tr.generator);
  EXPECT_EQ(std::stod(back.metadata.at("tau_realized")), tr.tau_realized);
}

TEST(Sweep, RowCsvRoundTrip) {
  auto rows = cli::sweep_delay(0.36, 55.0, {pi / 2, 6.4}, {cli::Source::closed}, {}, 1);
  auto table = cli::rows_to_table(rows, {{"k", "v"}});
  const auto dir = fresh_dir("rows");
  const auto path = (dir / "rows.csv").string();
  table.write(path);
  const auto back = csv::read(path);
  ASSERT_EQ(back.rows.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = cli::row_from_fields(back, i);
    EXPECT_EQ(r.sigma_v2.value(), rows[i].sigma_v2.value());
    EXPECT_EQ(r.status, rows[i].status);
  }
}

TEST(Sweep, UnstableRowFlaggedAndSweepContinues) {
  // middle point far into the unstable region
  auto rows = cli::sweep_q({10.0}, 3 * pi / 2, 30.0, 0.0, {cli::Source::closed});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].status, "unstable");
  EXPECT_FALSE(rows[0].sigma_v2.has_value());
}

TEST(Compare, ClosedVersusQuadraturePasses) {
  const auto taus = cli::logspace(0.5 * pi, 20 * pi, 10);
  auto a = cli::sweep_delay(0.36, 55.0, taus, {cli::Source::closed});
  auto b = cli::sweep_delay(0.36, 55.0, taus, {cli::Source::quadrature});
  const auto rep = cli::compare(a, b, 1e-9);
  EXPECT_TRUE(rep.pass);
  EXPECT_LE(rep.max_rel_delta_sigma_v2, 1e-6);
  EXPECT_TRUE(rep.orphans.empty());
}

TEST(Compare, CorruptedRowFailsNamingDelta) {
  const auto taus = cli::logspace(0.5 * pi, 20 * pi, 8);
  auto a = cli::sweep_delay(0.36, 55.0, taus, {cli::Source::closed});
  auto b = a;
  *b[3].sigma_v2 *= 1.01;  // negative control
  const auto rep = cli::compare(a, b, 1e-9);
  EXPECT_FALSE(rep.pass);
  EXPECT_GT(rep.max_rel_delta_sigma_v2, 1e-3);
}

TEST(Compare, GridMismatchListsOrphans) {
  auto a = cli::sweep_delay(0.36, 55.0, {1.0, 2.0, 3.0}, {cli::Source::closed});
  auto b = cli::sweep_delay(0.36, 55.0, {1.0, 2.0}, {cli::Source::quadrature});
  const auto rep = cli::compare(a, b, 1e-9);
  EXPECT_FALSE(rep.pass);
  ASSERT_EQ(rep.orphans.size(), 1u);
  EXPECT_NE(rep.orphans[0].find("tau_realized=3"), std::string::npos);
}

TEST(Compare, SimulationCoverageVerdict) {
  // 21 SE-carrying pairs so the 95% coverage verdict tolerates one excursion
  const auto taus = cli::logspace(2.0, 40.0, 7);
  cli::SimOverrides sim;
  sim.duration = 300.0 * 55.0;
  sim.n_traj = 10;
  sim.seed = 3;
  auto th = cli::sweep_delay(0.36, 55.0, taus, {cli::Source::closed});
  auto sm = cli::sweep_delay(0.36, 55.0, taus, {cli::Source::simulation}, sim);
  // join at realized delays: theory rows recomputed at the simulated grid
  std::vector<double> realized;
  for (auto& r : sm) realized.push_back(r.tau_realized);
  auto th_realized = cli::sweep_delay(0.36, 55.0, realized, {cli::Source::closed});
  const auto rep = cli::compare(th_realized, sm, 1e-9);
  EXPECT_GT(rep.n_se_pairs, 0u);
  EXPECT_TRUE(rep.pass) << rep.verdict;
}

TEST(Figures, Fig3DeterministicBytes) {
  cli::FigureOptions opt;
  opt.points = 60;
  opt.emit_svg = true;
  const auto d1 = fresh_dir("fig3a");
  const auto d2 = fresh_dir("fig3b");
  opt.out_dir = d1.string();
  cli::figure_fig3(opt);
  opt.out_dir = d2.string();
  cli::figure_fig3(opt);
  EXPECT_EQ(slurp((d1 / "fig3.csv").string()), slurp((d2 / "fig3.csv").string()));
  EXPECT_EQ(slurp((d1 / "fig3.svg").string()), slurp((d2 / "fig3.svg").string()));
  EXPECT_GT(slurp((d1 / "fig3.csv").string()).size(), 1000u);
}

TEST(Figures, Fig3EnvelopeColumnsContainCentral) {
  cli::FigureOptions opt;
  opt.points = 40;
  const auto dir = fresh_dir("fig3c");
  opt.out_dir = dir.string();
  cli::figure_fig3(opt);
  const auto t = csv::read((dir / "fig3.csv").string());
  const auto ic = t.column_index("s_pump");
  const auto ilo = t.column_index("s_pump_lo");
  const auto ihi = t.column_index("s_pump_hi");
  const auto ivfb = t.column_index("s_vfb");
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_LE(t.value(i, ilo).value(), t.value(i, ic).value() + 1e-15);
    EXPECT_GE(t.value(i, ihi).value(), t.value(i, ic).value() - 1e-15);
    EXPECT_DOUBLE_EQ(t.value(i, ivfb).value(), 0.36 / 55.0);
  }
}

TEST(Figures, Fig4CorrelationCurve) {
  cli::FigureOptions opt;
  opt.points = 50;
  const auto dir = fresh_dir("fig4");
  opt.out_dir = dir.string();
  const auto written = cli::figure_fig4(opt, {2.04 * pi});
  EXPECT_GE(written.size(), 2u);
  const auto t = csv::read((dir / "fig4_correlation.csv").string());
  EXPECT_EQ(t.rows.size(), 50u);
  // density metadata carries the moments used
  const auto d = csv::read((dir / "fig4_density_0.csv").string());
  EXPECT_GT(std::stod(d.metadata.at("sigma_q2")), 0.0);
  EXPECT_EQ(d.rows.size(), 81u * 81u);
}

TEST(Figures, SuppQSweepHasGainRule) {
  cli::FigureOptions opt;
  opt.points = 12;
  const auto dir = fresh_dir("suppq");
  opt.out_dir = dir.string();
  cli::figure_suppQ(opt);
  const auto t = csv::read((dir / "suppQ_0.csv").string());
  ASSERT_EQ(t.rows.size(), 12u);
  const auto ig = t.column_index("g");
  const auto iq = t.column_index("q0");
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    EXPECT_NEAR(t.value(i, ig).value(), 0.0094 * t.value(i, iq).value(), 1e-12);
}

TEST(Figures, SuppBoundInequalityInCsv) {
  cli::FigureOptions opt;
  opt.points = 40;
  const auto dir = fresh_dir("suppbound");
  opt.out_dir = dir.string();
  cli::figure_suppBound(opt);
  const auto t = csv::read((dir / "suppBound.csv").string());
  const auto isp = t.column_index("s_pump");
  const auto ib = t.column_index("bound_nm");
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    EXPECT_LE(t.value(i, isp).value(), t.value(i, ib).value() + 1e-12);
}

#ifdef DELAYFB_CLI_PATH
int run_cli(const std::string& args) {
  const std::string cmd = std::string(DELAYFB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

TEST(CliBinary, UsageErrorsExitOne) {
  EXPECT_EQ(run_cli("no-such-command"), 1);
  EXPECT_EQ(run_cli("figure nosuchfigure"), 1);
}

TEST(CliBinary, AnalyticSucceeds) {
  const auto dir = fresh_dir("cli_analytic");
  EXPECT_EQ(run_cli("analytic --g 0.36 --q0 55 --tau 1.5707963 --out " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "analytic_point.csv"));
}

TEST(CliBinary, NumericalFailureExitsTwo) {
  const auto dir = fresh_dir("cli_unstable");
  // far beyond the stability boundary: no steady state to report
  EXPECT_EQ(run_cli("analytic --g 20 --q0 10 --tau 4.712 --out " + dir.string()), 2);
}

TEST(CliBinary, SimulateWritesTrajectory) {
  const auto dir = fresh_dir("cli_sim");
  EXPECT_EQ(run_cli("simulate --g 0.36 --q0 55 --tau 6.4 --duration 50 --seed 9 --out " +
                    dir.string()),
            0);
  const auto d = csv::read_trajectory((dir / "trajectory.csv").string());
  EXPECT_GT(d.q.size(), 100u);
}

TEST(CliBinary, CompareExitCodeThreeOnFailure) {
  const auto dir = fresh_dir("cli_cmp");
  ASSERT_EQ(run_cli("sweep-delay --g 0.36 --q0 55 --points 6 --sources closed --out " +
                    (dir / "a").string()),
            0);
  ASSERT_EQ(run_cli("sweep-delay --g 0.36 --q0 55 --points 6 --sources quadrature --out " +
                    (dir / "b").string()),
            0);
  EXPECT_EQ(run_cli("compare --a " + (dir / "a" / "sweep_delay.csv").string() + " --b " +
                    (dir / "b" / "sweep_delay.csv").string() + " --out " + dir.string()),
            0);
  // corrupt one value
  auto t = csv::read((dir / "b" / "sweep_delay.csv").string());
  const auto col = t.column_index("sigma_v2");
  t.rows[2][col] = csv::format_double(t.value(2, col).value() * 1.02);
  t.write((dir / "b" / "sweep_delay.csv").string());
  EXPECT_EQ(run_cli("compare --a " + (dir / "a" / "sweep_delay.csv").string() + " --b " +
                    (dir / "b" / "sweep_delay.csv").string() + " --out " + dir.string()),
            3);
}

TEST(CliBinary, ConfigFileDrivesParameters) {
  const auto dir = fresh_dir("cli_cfg");
  std::ofstream cfg(dir / "run.cfg");
  cfg << "g = 0.2\nq0 = 30\ntau = 3.0\nseed = 77\n";
  cfg.close();
  ASSERT_EQ(run_cli("analytic --config " + (dir / "run.cfg").string() + " --out " +
                    dir.string()),
            0);
  const auto t = csv::read((dir / "analytic_point.csv").string());
  EXPECT_DOUBLE_EQ(std::stod(t.metadata.at("g")), 0.2);
  EXPECT_DOUBLE_EQ(std::stod(t.metadata.at("seed")), 77);
}
#endif

}  // namespace
