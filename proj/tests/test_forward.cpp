#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bsnse/forward/forward_solver.hpp"

using namespace bsnse;

namespace {

constexpr double kPi = std::numbers::pi;

double hnorm(const VelocityField& u) { return std::sqrt(norm_h2(u)); }

VelocityField taylor_green(const ModeSetPtr& ms) {
  VelocityField u(ms);
  const Complex q(0.0, 0.25);
  u.set({1, 1}, {-q, q});
  u.set({1, -1}, {-q, -q});
  return u;
}

SolverConfig deterministic_config(int L) {
  SolverConfig c;
  c.K = 3;
  c.M = 50;
  c.L = L;
  c.nu = 0.5;
  c.budget_draws = 0;
  return c;
}

ForcingModel saturated_model() {
  ForcingParams p;
  p.kind = ForcingKind::saturated;
  p.a0_amp = 1.0;
  p.a0_mode = {1, 1};
  p.c1 = 0.2;
  p.c2 = 0.3;
  return ForcingModel(p, 1.0);
}

TerminalCondition shear_terminal(const ModeSetPtr& ms) {
  TerminalCondition t;
  t.xi0 = shear_modes(ms, {{{1, 0}, 1.0}, {{0, 2}, 0.5}, {{1, 1}, 0.3}});
  return t;
}

}  // namespace

TEST(Forward, SingleModeDecaysExponentially) {
  const auto ms = ModeSet::box(2 * kPi, 3);
  const auto u0 = shear_modes(ms, {{{2, 1}, 1.0}});
  const double nu = 0.3;
  const auto run = forward_solve(u0, {}, nu, TimeGrid(1.0, 20), 4);
  for (int i = 0; i <= 20; ++i) {
    const VelocityField exact = std::exp(-nu * 5.0 * run.grid.t(i)) * u0;
    EXPECT_LT(hnorm(run.at(i) - exact), 1e-9 * hnorm(u0)) << "node " << i;
  }
}

TEST(Forward, TaylorGreenDecaysWithoutNonlinearCoupling) {
  const auto ms = ModeSet::box(2 * kPi, 3);
  const auto u0 = taylor_green(ms);
  const auto run = forward_solve(u0, {}, 1.0, TimeGrid(0.5, 10), 8);
  const VelocityField exact = std::exp(-2.0 * 0.5) * u0;
  EXPECT_LT(hnorm(run.at(10) - exact), 1e-10 * hnorm(u0));
}

TEST(Forward, UnforcedEnergyBalance) {
  const auto ms = ModeSet::box(2 * kPi, 4);
  std::mt19937_64 rng(21);
  const auto u0 = random_field(ms, rng, {.divergence_free = true, .decay = 2.0});
  const double nu = 0.2;
  const TimeGrid grid(1.0, 200);
  const auto run = forward_solve(u0, {}, nu, grid, 4);
  // |u(T)|^2 - |u0|^2 = -2 nu int |u|_V^2, since (B(u), u) = 0.
  double dissipated = 0.0;
  for (int i = 0; i < grid.L; ++i) {
    EXPECT_LE(norm_h2(run.at(i + 1)), norm_h2(run.at(i)) * (1 + 1e-12));
    dissipated += 0.5 * grid.dt() * (norm_v2(run.at(i)) + norm_v2(run.at(i + 1)));
  }
  const double lhs = norm_h2(run.at(grid.L)) - norm_h2(u0);
  EXPECT_NEAR(lhs, -2.0 * nu * dissipated, 1e-4 * norm_h2(u0));
}

TEST(Forward, RungeKuttaIsFourthOrder) {
  const auto ms = ModeSet::box(2 * kPi, 3);
  std::mt19937_64 rng(22);
  auto u0 = random_field(ms, rng, {.divergence_free = true, .decay = 1.0});
  u0 *= 2.0 / hnorm(u0);
  const TimeGrid grid(0.5, 1);
  const ForwardForcing f = [](double s, const VelocityField& u) { return std::cos(3 * s) * u; };
  const VelocityField ref = forward_solve(u0, f, 0.1, grid, 1024).at(1);
  std::vector<double> err;
  for (int n : {8, 16, 32}) err.push_back(hnorm(forward_solve(u0, f, 0.1, grid, n).at(1) - ref));
  for (std::size_t j = 1; j < err.size(); ++j) {
    const double order = std::log2(err[j - 1] / err[j]);
    EXPECT_NEAR(order, 4.0, 0.3) << "errors " << err[j - 1] << " " << err[j];
  }
}

TEST(Forward, BadInputs) {
  const auto ms = ModeSet::box(2 * kPi, 2);
  const auto u0 = shear_modes(ms, {{{1, 0}, 1.0}});
  EXPECT_THROW(forward_solve(u0, {}, 0.0, TimeGrid(1.0, 4)), ConfigError);
  EXPECT_THROW(forward_solve(u0, {}, 1.0, TimeGrid(1.0, 4), 0), ConfigError);
  VelocityField bad(ms);
  bad.set({1, 0}, {Complex(1.0, 0.0), Complex(0.0, 0.0)});
  EXPECT_THROW(forward_solve(bad, {}, 1.0, TimeGrid(1.0, 4)), PreconditionError);
  const ForwardForcing grow = [](double, const VelocityField& u) { return -100.0 * u; };
  EXPECT_THROW(forward_solve(u0, grow, 1.0, TimeGrid(1.0, 50)), NumericalFailure);
}

TEST(Reversal, ZeroDataGivesZeroResidual) {
  const auto cfg = deterministic_config(8);
  const auto ms = ModeSet::box(cfg.period, cfg.K);
  TerminalCondition t;
  t.xi0 = VelocityField(ms);
  const auto sol = solve_bsnse(cfg, ForcingModel::zero(), SigmaSchedule::constant(0.0, 0.0), t);
  EXPECT_EQ(reversal_residual(sol, reversed_run(sol)), 0.0);
}

TEST(Reversal, ResidualShrinksFirstOrder) {
  std::vector<double> res;
  for (int L : {32, 64, 128}) {
    const auto cfg = deterministic_config(L);
    const auto ms = ModeSet::box(cfg.period, cfg.K);
    const auto sol = solve_bsnse(cfg, saturated_model(), SigmaSchedule::constant(0.0, 0.0), shear_terminal(ms));
    res.push_back(reversal_residual(sol, reversed_run(sol, 4)));
  }
  EXPECT_LT(res[0], 0.1);
  for (std::size_t j = 1; j < res.size(); ++j) EXPECT_NEAR(res[j - 1] / res[j], 2.0, 0.3);
}

TEST(Reversal, GuardsRejectStochasticSetups) {
  const auto cfg = deterministic_config(8);
  const auto ms = ModeSet::box(cfg.period, cfg.K);
  const auto sol = solve_bsnse(cfg, saturated_model(), SigmaSchedule::constant(0.2, 0.0), shear_terminal(ms));
  EXPECT_THROW(reversal_residual(sol, reversed_run(sol)), PreconditionError);

  auto term = shear_terminal(ms);
  term.psi_kind = PsiKind::tanh;
  term.psi_amp = 0.5;
  const auto sol2 = solve_bsnse(cfg, saturated_model(), SigmaSchedule::constant(0.0, 0.0), term);
  EXPECT_THROW(reversal_residual(sol2, reversed_run(sol2)), PreconditionError);

  auto tcfg = cfg;
  tcfg.truncation = TruncationSpec{true, 100.0, 100.0, {}};
  const auto sol3 = solve_bsnse(tcfg, saturated_model(), SigmaSchedule::constant(0.0, 0.0), shear_terminal(ms));
  EXPECT_THROW(reversal_residual(sol3, reversed_run(sol3)), PreconditionError);
}

TEST(Reversal, GridMismatchIsRejected) {
  const auto cfg = deterministic_config(8);
  const auto ms = ModeSet::box(cfg.period, cfg.K);
  const auto sol = solve_bsnse(cfg, ForcingModel::zero(), SigmaSchedule::constant(0.0, 0.0), shear_terminal(ms));
  const auto other = forward_solve(-sol.terminal().xi0, {}, cfg.nu, TimeGrid(1.0, 16));
  EXPECT_THROW(reversal_residual(sol, other), ConfigError);
}
