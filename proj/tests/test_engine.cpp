#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "bsnse/engine/linear_oracle.hpp"
#include "bsnse/engine/mnorm.hpp"
#include "bsnse/engine/solver.hpp"

using namespace bsnse;

namespace {

constexpr double kPi = std::numbers::pi;

/// E[h(G)] for G standard normal, by adaptive quadrature on [-14, 14].
template <class F>
double normal_expectation(F h) {
  using boost::math::quadrature::gauss_kronrod;
  const double c = 1.0 / std::sqrt(2.0 * kPi);
  return gauss_kronrod<double, 61>::integrate([&](double x) { return h(x) * c * std::exp(-0.5 * x * x); }, -14.0,
                                               14.0, 15, 1e-15);
}

TerminalCondition terminal(const ModeSetPtr& ms, std::vector<ModeAmplitude> list, PsiKind psi) {
  TerminalCondition t;
  t.xi0 = shear_modes(ms, list);
  t.psi_kind = psi;
  return t;
}

SolverConfig small_config(int K, std::size_t M, int L) {
  SolverConfig c;
  c.K = K;
  c.M = M;
  c.L = L;
  c.nu = 0.5;
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

}  // namespace

TEST(Brownian, Deterministic) {
  const TimeGrid g(1.0, 8);
  const auto a = generate_brownian(42, 100, g), b = generate_brownian(42, 100, g), c = generate_brownian(43, 100, g);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
  for (std::size_t m = 0; m < 100; ++m) EXPECT_EQ(a.W(0, m), 0.0);
  for (std::size_t m = 0; m < 100; ++m) EXPECT_DOUBLE_EQ(a.W(8, m), a.W(7, m) + a.dW(7, m));
}

TEST(Brownian, WorkerCountDoesNotMatter) {
  const TimeGrid g(1.0, 16);
  set_worker_count(1);
  const auto a = generate_brownian(7, 999, g);
  set_worker_count(4);
  const auto b = generate_brownian(7, 999, g);
  set_worker_count(1);
  EXPECT_TRUE(a == b);
}

TEST(Brownian, Moments) {
  const double T = 2.0;
  const auto e = generate_brownian(3, 100000, TimeGrid(T, 1));
  double s = 0.0, s2 = 0.0;
  for (std::size_t m = 0; m < e.paths(); ++m) {
    s += e.dW(0, m);
    s2 += e.dW(0, m) * e.dW(0, m);
  }
  const double M = double(e.paths());
  const double mean = s / M, var = s2 / M - mean * mean;
  EXPECT_LT(std::abs(mean), 5.0 * std::sqrt(T / M));
  EXPECT_LT(std::abs(var / T - 1.0), 0.03);
}

TEST(Brownian, TooFewPaths) { EXPECT_THROW(generate_brownian(1, 1, TimeGrid(1.0, 4)), ConfigError); }

TEST(Regression, ConstantAndPolynomialAreExact) {
  const auto e = generate_brownian(5, 500, TimeGrid(1.0, 4));
  const auto W = e.W_at(4);
  std::vector<double> c(500, 3.25), sq(500);
  for (std::size_t m = 0; m < 500; ++m) sq[m] = W[m] * W[m] - 0.3 * W[m];
  const auto fc = regress_condexp(c, W, 4);
  const auto fs = regress_condexp(sq, W, 4, 1.0);
  for (std::size_t m = 0; m < 500; ++m) {
    EXPECT_NEAR(fc.fitted[m], 3.25, 1e-12);
    EXPECT_NEAR(fs.fitted[m], sq[m], 1e-10);
  }
  EXPECT_FALSE(fc.fit.rank_deficient);
}

TEST(Regression, IndicatorNearBestPolynomial) {
  // Best degree-4 L^2 approximation of 1{G > 0} under N(0,1) in the He basis:
  // a_0 = 1/2, a_j = He_{j-1}(0) phi(0) / j!.
  const std::size_t M = 10000;
  const auto e = generate_brownian(11, M, TimeGrid(1.0, 1));
  const auto W = e.W_at(1);
  std::vector<double> v(M);
  for (std::size_t m = 0; m < M; ++m) v[m] = W[m] > 0.0 ? 1.0 : 0.0;
  const double phi0 = 1.0 / std::sqrt(2.0 * kPi);
  const double he_at0[5] = {1.0, 0.0, -1.0, 0.0, 3.0};
  double a[5] = {0.5, 0, 0, 0, 0}, fact = 1.0;
  for (int j = 1; j <= 4; ++j) {
    fact *= j;
    a[j] = he_at0[j - 1] * phi0 / fact;
  }
  auto best = [&](double x) {
    double he[5];
    hermite_he(4, x, he);
    double s = 0.0;
    for (int j = 0; j <= 4; ++j) s += a[j] * he[j];
    return s;
  };
  const double best_err = normal_expectation([&](double x) { return std::pow((x > 0 ? 1.0 : 0.0) - best(x), 2); });
  std::vector<double> r2(M);
  double mean_r2 = 0.0;
  for (std::size_t m = 0; m < M; ++m) mean_r2 += (r2[m] = std::pow(v[m] - best(W[m]), 2)) / double(M);
  double var = 0.0;
  for (double x : r2) var += (x - mean_r2) * (x - mean_r2) / double(M - 1);
  const double se = std::sqrt(var / double(M));

  const auto fit = regress_condexp(v, W, 4);
  double fit_err = 0.0;
  for (std::size_t m = 0; m < M; ++m) fit_err += std::pow(v[m] - fit.fitted[m], 2) / double(M);
  EXPECT_LE(fit_err, best_err + 3.0 * se);
  EXPECT_GE(fit_err, best_err - 3.0 * se - 10.0 / double(M));
}

TEST(Regression, RankDeficientDesignDegrades) {
  std::vector<double> state(50, 0.0), v(50, 2.0);
  const auto f = regress_condexp(v, state, 4);
  EXPECT_TRUE(f.fit.rank_deficient);
  EXPECT_EQ(f.fit.degree, 0);
  EXPECT_NEAR(f.fitted[0], 2.0, 1e-14);
}

TEST(Regression, TooFewPaths) {
  std::vector<double> state(5, 0.1), v(5, 1.0);
  EXPECT_THROW(regress_condexp(v, state, 4), PreconditionError);
}

TEST(Regression, HermiteTransitionMatchesQuadrature) {
  // E[He_j((w + dW) / s1)] as a polynomial in He_k(w / s0).
  const double s0 = 0.7, s1 = 0.8, dt = 0.15;
  const Eigen::MatrixXd T = hermite_transition(4, s0, 4, s1, dt, false);
  const Eigen::MatrixXd D = hermite_transition(4, s0, 4, s1, dt, true);
  for (double w : {-1.3, 0.0, 0.4, 2.1}) {
    double he0[5];
    hermite_he(4, w / s0, he0);
    for (int j = 0; j <= 4; ++j) {
      auto hej = [&](double x) {
        double he[5];
        hermite_he(4, (w + std::sqrt(dt) * x) / s1, he);
        return he[j];
      };
      const double e = normal_expectation(hej);
      const double ez = normal_expectation([&](double x) { return hej(x) * x / std::sqrt(dt); });
      double t = 0.0, d = 0.0;
      for (int k = 0; k <= 4; ++k) {
        t += T(k, j) * he0[k];
        d += D(k, j) * he0[k];
      }
      EXPECT_NEAR(t, e, 1e-11 * std::max(1.0, std::abs(e)));
      EXPECT_NEAR(d, ez, 1e-10 * std::max(1.0, std::abs(ez)));
    }
  }
}

TEST(LinearOracle, ClosedForms) {
  LinearModeProblem p;
  p.nu = 0.5;
  p.lambda = 2.0;
  p.c = {0.3, -0.2};
  p.T = 1.5;
  const double t = 0.25, tau = p.T - t;
  const auto y1 = linear_mode_oracle(p, t);
  EXPECT_LT(std::abs(y1 - std::exp(-1.0 * tau) * p.c), 1e-15);

  p.f = [](double) { return std::complex<double>(0.7, 0.1); };
  const auto y2 = linear_mode_oracle(p, t);
  const std::complex<double> expect =
      std::exp(-1.0 * tau) * p.c + std::complex<double>(0.7, 0.1) * (1.0 - std::exp(-1.0 * tau)) / 1.0;
  EXPECT_LT(std::abs(y2 - expect), 1e-13);

  p.f = nullptr;
  p.psi = [](double w) { return 1.0 + 0.5 * std::tanh(w); };
  const double Epsi = normal_expectation([&](double x) { return 1.0 + 0.5 * std::tanh(std::sqrt(p.T) * x); });
  EXPECT_LT(std::abs(linear_mode_oracle(p, 0.0) - std::exp(-1.0 * p.T) * Epsi * p.c), 1e-12);
}

TEST(LinearOracle, TransportShiftsTheMean) {
  // psi(w) = w: E[(w + sqrt(tau) G) e^{i k sqrt(tau) G + k^2 tau / 2}] = w + i k tau.
  LinearModeProblem p;
  p.nu = 1.0;
  p.lambda = 0.0;
  p.kappa = 0.8;
  p.psi = [](double w) { return w; };
  const auto y = linear_mode_oracle(p, 0.4, 0.3);
  EXPECT_LT(std::abs(y - std::complex<double>(0.3, 0.8 * 0.6)), 1e-12);
}

TEST(Solver, HeatModeFollowsBackwardEulerRecursion) {
  auto cfg = small_config(2, 100, 32);
  const auto ms = ModeSet::box(cfg.period, cfg.K);
  const auto term = terminal(ms, {{{1, 1}, 1.0}}, PsiKind::one);
  const auto sol = solve_bsnse(cfg, ForcingModel::zero(), SigmaSchedule::constant(0.0, 0.0), term);
  const double lam = 2.0, step = 1.0 + cfg.nu * lam * sol.grid().dt();
  for (int i = 0; i < cfg.L; ++i) {
    const auto u = sol.u(i, 0.3);
    const double expect = std::pow(step, -(cfg.L - i));
    EXPECT_LT(std::sqrt(norm_h2(u - expect * term.xi0)), 1e-12 * std::sqrt(norm_h2(term.xi0)));
    EXPECT_LT(std::abs(expect - std::exp(-cfg.nu * lam * (1.0 - sol.grid().t(i)))), 0.5 * cfg.nu * lam * sol.grid().dt());
    EXPECT_LT(std::sqrt(norm_h2(sol.Z(i, -0.2))), 1e-10);
  }
}

TEST(Solver, SingleShellStepIsDampedConditionalExpectation) {
  auto cfg = small_config(2, 400, 8);
  const auto ms = ModeSet::box(cfg.period, cfg.K);
  const auto term = terminal(ms, {{{1, 0}, 1.0}, {{0, 1}, 0.5}}, PsiKind::tanh);
  const auto sol = solve_bsnse(cfg, ForcingModel::zero(), SigmaSchedule::constant(0.0, 0.0), term);
  for (int i = 0; i < cfg.L; ++i) {
    const auto v = sol.node_values(i, 0.4);
    EXPECT_LT(std::sqrt(norm_h2(v.u - (1.0 / (1.0 + cfg.nu * sol.grid().dt())) * v.C)), 1e-13);
  }
}

TEST(Solver, TerminalExactAndDivergenceFree) {
  auto cfg = small_config(3, 300, 8);
  const auto ms = ModeSet::box(cfg.period, cfg.K);
  const auto term = terminal(ms, {{{1, 0}, 1.0}, {{1, 2}, 0.6}}, PsiKind::tanh);
  const auto sol = solve_bsnse(cfg, saturated_model(), SigmaSchedule::constant(0.3, 0.1), term);
  const auto& e = sol.ensemble();
  for (std::size_t m = 0; m < 10; ++m) {
    EXPECT_EQ(norm_h2(sol.u_path(cfg.L, m) - term.at(e.W(cfg.L, m))), 0.0);
    for (int i = 0; i < cfg.L; ++i) {
      EXPECT_LT(sol.u_path(i, m).divergence_residual(), 1e-12);
      EXPECT_LT(sol.Z_path(i, m).divergence_residual(), 1e-12);
    }
  }
}

TEST(Solver, DeterministicDataGiveZeroZ) {
  auto cfg = small_config(3, 300, 16);
  const auto ms = ModeSet::box(cfg.period, cfg.K);
  const auto term = terminal(ms, {{{1, 0}, 1.0}, {{1, 2}, 0.6}}, PsiKind::one);
  const auto sol = solve_bsnse(cfg, saturated_model(), SigmaSchedule::constant(0.3, 0.1), term);
  double zmax = 0.0, umax = 0.0;
  for (int i = 0; i < cfg.L; ++i)
    for (double w : {-1.0, 0.0, 0.7}) {
      zmax = std::max(zmax, std::sqrt(norm_h2(sol.Z(i, w))));
      umax = std::max(umax, std::sqrt(norm_h2(sol.u(i, w))));
    }
  EXPECT_LE(zmax, 1e-10 * umax);
}

TEST(Solver, MartingaleIncrementsHaveMeanZero) {
  auto cfg = small_config(3, 2000, 16);
  const auto ms = ModeSet::box(cfg.period, cfg.K);
  const auto term = terminal(ms, {{{1, 0}, 1.0}, {{0, 2}, 0.8}, {{1, 1}, 0.5}}, PsiKind::tanh);
  const auto sol = solve_bsnse(cfg, saturated_model(), SigmaSchedule::constant(0.3, 0.1), term);
  const auto& st = sol.stats();
  const auto& e = sol.ensemble();
  std::vector<double> x(cfg.M, 0.0);
  for (std::size_t m = 0; m < cfg.M; ++m)
    for (int i = 0; i < cfg.L; ++i) x[m] += st.zu[st.at(i, m)] * e.dW(i, m);
  double mean = 0.0, var = 0.0;
  for (double v : x) mean += v / double(cfg.M);
  for (double v : x) var += (v - mean) * (v - mean) / double(cfg.M - 1);
  EXPECT_LT(std::abs(mean), 4.0 * std::sqrt(var / double(cfg.M)));
  EXPECT_GT(var, 0.0);
}

TEST(Solver, ReproducibleAcrossRunsAndWorkers) {
  auto cfg = small_config(3, 500, 8);
  const auto ms = ModeSet::box(cfg.period, cfg.K);
  const auto term = terminal(ms, {{{1, 0}, 1.0}, {{0, 2}, 0.8}}, PsiKind::tanh);
  set_worker_count(1);
  const auto a = solve_bsnse(cfg, saturated_model(), SigmaSchedule::constant(0.3, 0.1), term);
  set_worker_count(3);
  const auto b = solve_bsnse(cfg, saturated_model(), SigmaSchedule::constant(0.3, 0.1), term);
  set_worker_count(1);
  EXPECT_EQ(a.stats().u_h2, b.stats().u_h2);
  EXPECT_EQ(a.stats().z_h2, b.stats().z_h2);
  for (int i = 0; i < cfg.L; ++i) {
    EXPECT_EQ(a.diagnostics()[i].budget_z_h, b.diagnostics()[i].budget_z_h);
    EXPECT_GT(a.diagnostics()[i].budget_u_h, 0.0);
  }
}

TEST(Solver, RejectsBadInputs) {
  const auto ms = ModeSet::box(2 * kPi, 2);
  const auto term = terminal(ms, {{{1, 0}, 1.0}}, PsiKind::one);
  auto cfg = small_config(2, 100, 4);
  cfg.nu = 0.1;
  EXPECT_THROW(solve_bsnse(cfg, ForcingModel::zero(), SigmaSchedule::constant(1.0, 0.0), term), AdmissibilityError);
  cfg = small_config(2, 5, 4);
  EXPECT_THROW(solve_bsnse(cfg, ForcingModel::zero(), SigmaSchedule::constant(0.0, 0.0), term), ConfigError);
  cfg = small_config(2, 100, 4);
  cfg.truncation = {true, 1e-3, 10.0, {}};
  EXPECT_THROW(solve_bsnse(cfg, saturated_model(), SigmaSchedule::constant(0.0, 0.0), term), PreconditionError);
}

TEST(MNorm, ZeroConstantAndScaling) {
  PathStats s;
  s.resize(4, 3, 0.25);
  EXPECT_EQ(mnorm(s), 0.0);
  for (auto& v : s.u_h2) v = 2.0;
  for (auto& v : s.u_v2) v = 5.0;
  EXPECT_NEAR(mnorm(s), std::sqrt(2.0 + 1.0 * 5.0), 1e-15);
  for (std::size_t k = 0; k < s.z_h2.size(); ++k) s.z_h2[k] = 0.1 * double(k);
  EXPECT_NEAR(mnorm(s.scaled(-3.0)), 3.0 * mnorm(s), 1e-13);
}
