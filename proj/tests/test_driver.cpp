#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "gnsch/config.hpp"
#include "gnsch/driver.hpp"

using namespace gnsch;

namespace {

std::string bundled(const std::string& name) { return std::string(GNSCH_CONFIG_DIR) + "/" + name; }

RunConfig parse_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config_stream(in);
}

// Golden values from tests/oracle/one_step_1d.py, an independent NumPy
// transcription of one full step on 8 cells.
const std::vector<double> kRho{0.91919852217383202, 0.94625759512818075, 0.94606820518294488, 0.91904407647198638, 0.88100512457914981, 0.85394605162480097, 0.85372814806407349, 0.88075227677503187};
const std::vector<double> kMom{1.0487688012851433, 0.81271604686852017, 0.81237264384290253, 1.0485329506309924, 1.0053349725576912, 0.73353777922622077, 0.73307378525788525, 1.0047631274687545};
const std::vector<double> kVnext0{1.0485819264339225, 0.81256459572701856, 0.81274304250213336, 1.0490127350585667, 1.0053918263403572, 0.73346165149870179, 0.73328320472358677, 1.0049610177157127};
const std::vector<double> kVnext1{2.3462196696955502, 1.9468950174308179, 1.9480858317308363, 2.3817709522492647, 2.2458296176235675, 1.6392347834140368, 1.5920048809500462, 2.1642392469058795};
const std::vector<double> kMu{-0.27496974512888689, -0.17180855602786332, -0.0022047479396717965, 0.13136124333169596, 0.14590983957321155, 0.033411320226402308, -0.13551955053038175, -0.25976545188237432};
const std::vector<double> kC{0.59264308678065436, 0.5384786566098646, 0.46178231200264097, 0.40751940286337629, 0.40744841183120895, 0.46164778777261811, 0.53836088882074296, 0.59258745331889351};
const std::vector<double> kV{0.37490260271470871, 0.15421956017803112, -0.15316950895656473, -0.37422957908829829, -0.37452360992469691, -0.15371077932087521, 0.15374569114692166, 0.3746721623781028};
const std::vector<double> kVLiteral{0.37493186566576236, 0.15424538876670668, -0.1531473609980861, -0.37420945959244678, -0.3745034928392989, -0.15368863689682166, 0.15377151314643475, 0.37470142133314971};
constexpr double kA1 = 8.2431661585659946;
constexpr double kLambda = 0.99998807970899939;
constexpr double kR0 = 380.11211588762762;
constexpr double kR1 = 380.11209297185655;
constexpr double kXi = 1.000000008209271;

RunConfig oracle_config() {
  return parse_text(
      "[grid]\nnx = 8\n[physics]\nalpha1 = 1.2\nalpha2 = 0.5\nkappa1 = 0.5\nkappa2 = 2\n"
      "growth_rate = 3\n[solver]\nmethod = dense\n[time]\nT_final = 1e-4\n");
}

SimState oracle_state(const RunConfig& cfg) {
  const Physics phys(cfg.phys);
  const Grid g = cfg.grid.make();
  const double pi = std::acos(-1.0);
  SimState s;
  s.grid = g;
  s.c = Field(g);
  Field rho(g), m(g);
  for (int j = 0; j < 8; ++j) {
    const double x = g.x_center(j);
    s.c[j] = 0.5 + 0.1 * std::cos(2 * pi * x);
    rho[j] = 0.9 + 0.05 * std::sin(2 * pi * x);
    m[j] = rho[j] * (1.0 + 0.2 * std::cos(4 * pi * x));
  }
  s.U = {rho, m};
  s.v = Field(g);
  for (int j = 0; j < 8; ++j) s.v[j] = phys.transform().inverse(s.c[j]);
  s.mu = chemical_potential(s.v, s.c, rho, phys);
  s.V = flux_F(s.U, s.c, phys);
  const double e0 = phys.energy(rho, s.c);
  s.sav.C0 = 2.0 * cfg.phys.Cunder + std::abs(e0);
  s.sav.r = e0 + s.sav.C0;
  return s;
}

void expect_close(const Field& got, const std::vector<double>& want, double rel, const char* what) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i)
    EXPECT_NEAR(got[i], want[i], rel * std::max(1.0, std::abs(want[i]))) << what << "[" << i << "]";
}

}  // namespace

TEST(Driver, OneStepMatchesIndependentTranscription) {
  for (VUpdate mode : {VUpdate::Resync, VUpdate::Literal}) {
    RunConfig cfg = oracle_config();
    cfg.v_update = mode;
    const Physics phys(cfg.phys);
    SimState s = oracle_state(cfg);
    EXPECT_NEAR(s.sav.r, kR0, 1e-12 * kR0);
    EXPECT_NEAR(subchar_constants(s.U, s.c, phys).a, kA1, 1e-13 * kA1);
    StepOptions opt;
    opt.forced_dt = 1e-4;
    const DiagRecord d = step(s, cfg, phys, opt);
    expect_close(s.U[0], kRho, 1e-13, "rho");
    expect_close(s.U[1], kMom, 1e-13, "momentum");
    expect_close(s.V[0], kVnext0, 1e-13, "V0");
    expect_close(s.V[1], kVnext1, 1e-12, "V1");
    expect_close(s.mu, kMu, 1e-10, "mu");
    expect_close(s.c, kC, 1e-12, "c");
    expect_close(s.v, mode == VUpdate::Resync ? kV : kVLiteral, 1e-10, "v");
    EXPECT_NEAR(d.lambda, kLambda, 1e-13);
    EXPECT_NEAR(d.r, kR1, 1e-12 * kR1);
    EXPECT_NEAR(d.xi, kXi, 1e-13);
  }
}

TEST(Driver, InitTestcase1) {
  const RunConfig cfg = parse_config(bundled("testcase1.cfg"));
  const SimState s = init_state(cfg);
  const Physics phys(cfg.phys);
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    EXPECT_EQ(s.U[0][i], 0.9);
    EXPECT_EQ(s.U[1][i], 0.9);
    EXPECT_GT(s.c[i], 0.45);
    EXPECT_LE(s.c[i], 0.5);
    EXPECT_NEAR(phys.transform().T(s.v[i]), s.c[i], 1e-15);
  }
  EXPECT_EQ(s.sav.r, phys.energy(s.U[0], s.c) + s.sav.C0);
  EXPECT_EQ(s.sav.C0, 2.0 * 100.0 + std::abs(phys.energy(s.U[0], s.c)));
  const Components F = flux_F(s.U, s.c, phys);
  EXPECT_EQ(s.V[0], F[0]);
  EXPECT_EQ(s.V[1], F[1]);
}

TEST(Driver, InitTumorCentre) {
  RunConfig cfg = parse_config(bundled("tumor-symmetric.cfg"));
  cfg.grid.nx = cfg.grid.ny = 63;  // puts a cell centre at (0.5, 0.5)
  const SimState s = init_state(cfg);
  const std::size_t mid = s.grid.index(31, 31);
  EXPECT_DOUBLE_EQ(s.grid.x_center(31), 0.5);
  EXPECT_NEAR(s.c[mid], 0.608, 1e-15);
  EXPECT_NEAR(s.U[0][mid], 0.608 + 0.5 * (1 - 0.608), 1e-15);
  EXPECT_EQ(s.W.size(), 3u);
}

TEST(Driver, InitRejectsOutOfRangeFraction) {
  RunConfig cfg = parse_text("[grid]\nnx = 8\n[initial]\ntype = uniform\nc_mean = 1.2\n[time]\nT_final = 1\n");
  try {
    init_state(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
}

TEST(Driver, SeedDeterminesNoise) {
  RunConfig cfg = parse_config(bundled("testcase1.cfg"));
  const SimState a = init_state(cfg);
  const SimState b = init_state(cfg);
  EXPECT_EQ(a.c, b.c);
  cfg.run_case.seed += 1;
  EXPECT_NE(init_state(cfg).c, a.c);
}

TEST(Driver, RunsAreBitIdentical) {
  RunConfig cfg = parse_config(bundled("testcase1.cfg"));
  cfg.grid.nx = 32;
  cfg.time.T_final = 2e-4;
  const RunResult a = run(cfg);
  const RunResult b = run(cfg);
  ASSERT_EQ(a.diagnostics.size(), b.diagnostics.size());
  for (std::size_t i = 0; i < a.diagnostics.size(); ++i) {
    EXPECT_EQ(a.diagnostics[i].energy, b.diagnostics[i].energy);
    EXPECT_EQ(a.diagnostics[i].r, b.diagnostics[i].r);
    EXPECT_EQ(a.diagnostics[i].dissipation_quantity, b.diagnostics[i].dissipation_quantity);
  }
  EXPECT_EQ(a.final_state.c, b.final_state.c);
}

TEST(Driver, ComputeDtExamples) {
  const Grid g = Grid::line(128, 1.0);
  SimState s;
  s.grid = g;
  s.step_index = 5;
  TimeSpec ts;
  ts.T_final = 1.0;
  ts.dt_max = 1e-5;
  ts.cfl_safety = 1.0;
  const SubcharConstants k{7.3531, 0.0};
  EXPECT_NEAR(cfl_dt(g, k, 1.0), 2.881e-3, 1e-6);
  EXPECT_EQ(compute_dt(s, k, ts), 1e-5);
  ts.dt_max = 1e9;
  EXPECT_DOUBLE_EQ(compute_dt(s, k, ts), (1.0 / 128) / std::sqrt(7.3531));
  ts.cfl_safety = 0.9;
  EXPECT_DOUBLE_EQ(compute_dt(s, k, ts), 0.9 * (1.0 / 128) / std::sqrt(7.3531));
  EXPECT_DOUBLE_EQ(cfl_dt(Grid::line(64, 1.0), k, 1.0), 2.0 * cfl_dt(g, k, 1.0));

  ts.dt_init = 1e-7;
  s.step_index = 0;
  EXPECT_EQ(compute_dt(s, k, ts), 1e-7);
  s.step_index = 3;
  s.t = 1.0 - 1e-6;
  EXPECT_NEAR(compute_dt(s, k, ts), 1e-6, 1e-15);  // 1 - t carries roundoff of t
  EXPECT_THROW(cfl_dt(g, SubcharConstants{0.0, 0.0}, 1.0), Error);
}

TEST(Driver, TwoDCflCombinesDirections) {
  const Grid g = Grid::plane(64, 32, 1.0, 1.0);
  const SubcharConstants k{4.0, 9.0};
  EXPECT_DOUBLE_EQ(cfl_dt(g, k, 1.0), 1.0 / (2.0 * 64 + 3.0 * 32));
}

TEST(Driver, UniformStateIsUnchanged) {
  for (int dim : {1, 2}) {
    RunConfig cfg = parse_text("[grid]\ndim = " + std::to_string(dim) + "\nnx = 12\n" +
                               (dim == 2 ? "ny = 12\n" : "") +
                               "[initial]\ntype = uniform\nc_mean = 0.3\nvelocity_x = 0.4\nvelocity_y = 0.2\n"
                               "[time]\nT_final = 1\n");
    const Physics phys(cfg.phys);
    SimState s = init_state(cfg);
    const SimState s0 = s;
    for (int it = 0; it < 3; ++it) step(s, cfg, phys);
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
      for (std::size_t k = 0; k < s.U.size(); ++k) EXPECT_NEAR(s.U[k][i], s0.U[k][i], 1e-13);
      EXPECT_NEAR(s.c[i], s0.c[i], 1e-13);
      EXPECT_NEAR(s.v[i], s0.v[i], 1e-12);
    }
    EXPECT_NEAR(s.sav.xi, 1.0, 1e-13);
    EXPECT_NEAR(s.sav.r, s0.sav.r, 1e-12 * s0.sav.r);
  }
}

TEST(Driver, FirstStepConservesMass) {
  const RunConfig cfg = parse_config(bundled("testcase1.cfg"));
  const Physics phys(cfg.phys);
  SimState s = init_state(cfg);
  const double m0 = integrate(s.U[0]);
  const DiagRecord d = step(s, cfg, phys);
  EXPECT_NEAR(d.total_mass, m0, 1e-13 * m0);
  EXPECT_EQ(d.dt, cfg.time.dt_init);
}

TEST(Driver, ShortRunInvariants) {
  RunConfig cfg = parse_config(bundled("testcase1.cfg"));
  cfg.grid.nx = 64;
  cfg.time.T_final = 5e-3;
  double r_prev = init_state(cfg).sav.r;
  double m0 = 0.0;
  bool first = true;
  const RunResult res = run(cfg, {}, [&](const SimState& s, const DiagRecord& d) {
    if (first) m0 = d.total_mass;
    first = false;
    EXPECT_LE(s.sav.r, r_prev);
    r_prev = s.sav.r;
    EXPECT_GE(s.sav.r, 0.0);
    EXPECT_GT(d.xi, 0.0);
    EXPECT_LT(d.xi, 2.0);
    EXPECT_GT(d.c_min, 0.0);
    EXPECT_LT(d.c_max, 1.0);
    EXPECT_NEAR(d.total_mass, m0, 1e-12 * m0);
    EXPECT_LE(d.dissipation_quantity, 1e-10 * std::abs(d.energy));
  });
  EXPECT_EQ(res.steps, 501);  // one dt_init step, 499 full steps, one clipped step
  EXPECT_NEAR(res.final_state.t, 5e-3, 1e-15);
}

TEST(Driver, ZeroFinalTimeGivesSingleSnapshot) {
  RunConfig cfg = parse_config(bundled("testcase1.cfg"));
  cfg.time.T_final = 0.0;
  int snaps = 0;
  const RunResult res = run(cfg, [&](const SimState& s) {
    ++snaps;
    EXPECT_EQ(s.step_index, 0);
  });
  EXPECT_EQ(snaps, 1);
  EXPECT_EQ(res.steps, 0);
  EXPECT_TRUE(res.diagnostics.empty());
}

TEST(Driver, FitOrderSyntheticData) {
  std::vector<double> h, half, quarter;
  for (int k = 0; k < 5; ++k) {
    h.push_back(std::pow(0.5, k));
    half.push_back(3.0 * std::pow(0.5, k));
    quarter.push_back(3.0 * std::pow(0.25, k));
  }
  EXPECT_NEAR(fit_order(h, half), 1.0, 1e-12);
  EXPECT_NEAR(fit_order(h, quarter), 2.0, 1e-12);
  EXPECT_THROW(fit_order({0.1}, {0.2}), Error);
  EXPECT_THROW(fit_order({0.1, 0.1}, {0.2, 0.1}), Error);
}

TEST(Driver, ConvergenceNeedsTwoLevels) {
  RunConfig cfg = parse_config(bundled("conv-time.cfg"));
  cfg.convergence.time_levels = 1;
  EXPECT_THROW(convergence_time(cfg), Error);
  cfg.convergence.space_ladder = {64};
  EXPECT_THROW(convergence_space(cfg), Error);
}

TEST(Driver, ExtensionError) {
  const Grid gc = Grid::line(4, 1.0);
  const Grid gf = Grid::line(8, 1.0);
  const Field coarse(gc, {1.0, 2.0, 3.0, 4.0});
  const Field same(gf, {1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0});
  EXPECT_EQ(extension_error(coarse, same), 0.0);
  Field off = same;
  off[5] += 0.4;
  EXPECT_NEAR(extension_error(coarse, off), std::sqrt(0.16 / 8.0), 1e-15);
  EXPECT_THROW(extension_error(coarse, Field(Grid::line(6, 1.0))), Error);
}

TEST(Driver, TimeConvergenceOnSmallProblem) {
  RunConfig cfg = parse_text(
      "[grid]\nnx = 32\n[initial]\ntype = cosine\nc_mean = 0.5\nc_amplitude = 0.05\nwavenumber = 2\n"
      "velocity_x = 1\n[time]\nT_final = 2e-3\n[solver]\nmethod = direct\n"
      "[convergence]\ntime_base_dt = 2e-4\ntime_levels = 4\n");
  const ConvergenceTable t = convergence_time(cfg);
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_GT(t.order, 0.8);
  EXPECT_LT(t.order, 1.2);
}
