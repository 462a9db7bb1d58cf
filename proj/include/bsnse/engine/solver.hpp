#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <sstream>
#include <vector>

#include "bsnse/engine/brownian.hpp"
#include "bsnse/engine/regression.hpp"
#include "bsnse/engine/terminal.hpp"
#include "bsnse/estimates/constants.hpp"
#include "bsnse/forcing/truncation.hpp"

namespace bsnse {

struct SolverConfig {
  double period = 2.0 * std::numbers::pi;
  int K = 4;  ///< box half-width
  double nu = 1.0;
  double T = 1.0;
  int L = 64;
  std::size_t M = 1000;
  int basis_degree = 4;
  int picard_iters = 3;
  double picard_tol = 1e-10;
  double lambda_bar_sq = 2.0;
  std::uint64_t seed = 1;
  TruncationSpec truncation;
  /// Samples used to validate h_M when truncation is on.
  std::size_t h_M_samples = 1000;
  /// Perturbation draws behind the estimator-error budgets; 0 skips them.
  int budget_draws = 64;
};

struct PicardResult {
  VelocityField y;
  double increment = 0.0;  ///< H-norm of the last update
  int iterations = 0;
};

/// Solves y = C + dt D(t, y, Z) by Picard iteration preconditioned with the
/// viscous part: y <- P (I + dt nu A)^{-1} (C + dt (D(t,y,Z) + nu A y)).
/// The fixed point is the same as for plain Picard; the preconditioner removes
/// the stiff dt nu lam_max from the contraction factor.
inline PicardResult picard_solve(const Driver& drv, double t, double dt, const VelocityField& C, const VelocityField& Z,
                                 int iters, double tol) {
  PicardResult r{C, 0.0, 0};
  const double s = dt * drv.nu();
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k < iters; ++k) {
    VelocityField rhs = drv(t, r.y, Z);
    rhs.axpy(drv.nu(), stokes_apply(r.y));
    rhs *= dt;
    rhs += C;
    VelocityField next = leray_project(resolvent_apply(std::move(rhs), s));
    r.increment = std::sqrt(norm_h2(next - r.y));
    r.y = std::move(next);
    r.iterations = k + 1;
    if (r.increment < tol) break;
    if (k > 0 && r.increment > prev) {
      std::ostringstream os;
      os << "Picard iteration not contracting at t=" << t << ": increment ratio " << r.increment / prev
         << " (dt * local Lipschitz estimate) exceeds 1";
      throw NumericalFailure(os.str());
    }
    prev = r.increment;
  }
  return r;
}

struct NodeDiagnostics {
  int degree = 0;
  bool rank_deficient = false;
  double condition = 1.0;
  double picard_max_increment = 0.0;
  int picard_max_iterations = 0;
  std::size_t truncation_active = 0;
  /// Expected squared estimator error of u_i and Z_i in |.|_H^2 and |.|_V^2.
  /// Regression noise at each node is carried back through the earlier nodes
  /// to first order.
  double budget_u_h = 0.0;
  double budget_u_v = 0.0;
  double budget_z_h = 0.0;
};

/// Per-path scalar statistics, node-major. u-quantities on nodes 0..L, Z and
/// step quantities on nodes 0..L-1.
struct PathStats {
  int L = 0;
  std::size_t M = 0;
  double dt = 0.0;
  std::vector<double> u_h2, u_v2, u_a2;
  std::vector<double> z_h2, z_v2;
  std::vector<double> zu;    ///< <Z_i, u_i>
  std::vector<double> phiu;  ///< <Phi_i, u_i> with Phi_i = (u_i - C_i) / dt
  std::vector<double> ito;   ///< discrete energy-identity residual per step

  void resize(int steps, std::size_t paths, double step) {
    L = steps;
    M = paths;
    dt = step;
    const auto nu = static_cast<std::size_t>(L + 1) * M, ns = static_cast<std::size_t>(L) * M;
    u_h2.assign(nu, 0.0);
    u_v2.assign(nu, 0.0);
    u_a2.assign(nu, 0.0);
    z_h2.assign(ns, 0.0);
    z_v2.assign(ns, 0.0);
    zu.assign(ns, 0.0);
    phiu.assign(ns, 0.0);
    ito.assign(ns, 0.0);
  }
  std::size_t at(int i, std::size_t m) const { return static_cast<std::size_t>(i) * M + m; }

  /// Statistics of alpha * (u, Z).
  PathStats scaled(double alpha) const {
    PathStats s = *this;
    const double a2 = alpha * alpha;
    for (auto* v : {&s.u_h2, &s.u_v2, &s.u_a2, &s.z_h2, &s.z_v2, &s.zu, &s.phiu, &s.ito})
      for (double& x : *v) x *= a2;
    return s;
  }
};

struct NodeValues {
  VelocityField C;  ///< fitted E_i[u_{i+1}], projected
  VelocityField Z;
  VelocityField u;
  PicardResult picard;
};

/// Output of solve_bsnse. Per-path fields are not stored: u_i and Z_i on a path
/// are functions of W_{t_i} through the node fits, and `node_values`
/// reconstructs them bit for bit. Per-path scalar statistics are kept.
class BsdeSolution {
 public:
  const SolverConfig& config() const { return cfg_; }
  const ModeSetPtr& modes() const { return modes_; }
  const Driver& driver() const { return *driver_; }
  const TerminalCondition& terminal() const { return terminal_; }
  const BrownianEnsemble& ensemble() const { return ens_; }
  const TimeGrid& grid() const { return ens_.grid(); }
  const PathStats& stats() const { return stats_; }
  const std::vector<NodeDiagnostics>& diagnostics() const { return diag_; }
  const RegressionFit& fit_C(int i) const { return fit_c_[static_cast<std::size_t>(i)]; }
  const RegressionFit& fit_Z(int i) const { return fit_z_[static_cast<std::size_t>(i)]; }
  const ConstantBundle& constants() const { return constants_; }

  /// C_i, Z_i and u_i at Brownian state w (node i < L).
  NodeValues node_values(int i, double w) const {
    const std::size_t q = modes_->rep_count() * VelocityField::kRealsPerRep;
    std::vector<double> buf(q);
    const auto& fc = fit_c_[static_cast<std::size_t>(i)];
    const auto& fz = fit_z_[static_cast<std::size_t>(i)];
    fc.evaluate(w, buf);
    NodeValues v;
    v.C = leray_project(VelocityField::from_reals(modes_, buf));
    fz.evaluate(w, buf);
    v.Z = leray_project(VelocityField::from_reals(modes_, buf));
    v.picard = picard_solve(*driver_, grid().t(i), grid().dt(), v.C, v.Z, cfg_.picard_iters, cfg_.picard_tol);
    v.u = v.picard.y;
    return v;
  }

  VelocityField u(int i, double w) const { return i == grid().L ? terminal_.at(w) : node_values(i, w).u; }
  VelocityField Z(int i, double w) const {
    const std::size_t q = modes_->rep_count() * VelocityField::kRealsPerRep;
    std::vector<double> buf(q);
    fit_z_[static_cast<std::size_t>(i)].evaluate(w, buf);
    return leray_project(VelocityField::from_reals(modes_, buf));
  }
  VelocityField u_path(int i, std::size_t m) const { return u(i, ens_.W(i, m)); }
  VelocityField Z_path(int i, std::size_t m) const { return Z(i, ens_.W(i, m)); }

  /// Path average of u_0 (u_0 is the same on every path since W_0 = 0).
  VelocityField u0() const { return u(0, 0.0); }

 private:
  friend BsdeSolution solve_bsnse(const SolverConfig&, const ForcingModel&, const SigmaSchedule&,
                                  const TerminalCondition&);
  SolverConfig cfg_;
  ModeSetPtr modes_;
  std::shared_ptr<const Driver> driver_;
  TerminalCondition terminal_;
  BrownianEnsemble ens_;
  std::vector<RegressionFit> fit_c_, fit_z_;
  std::vector<NodeDiagnostics> diag_;
  PathStats stats_;
  ConstantBundle constants_;
};

namespace detail {

inline void check_config(const SolverConfig& cfg) {
  if (!(cfg.nu > 0.0)) throw ConfigError("solver.nu must be positive");
  if (!(cfg.T > 0.0)) throw ConfigError("solver.T must be positive");
  if (cfg.L < 1) throw ConfigError("solver.L must be >= 1");
  if (cfg.K < 1) throw ConfigError("grid.K must be >= 1");
  if (cfg.basis_degree < 0 || cfg.basis_degree > 15) throw ConfigError("solver.basis_degree must be in [0, 15]");
  if (cfg.M < static_cast<std::size_t>(cfg.basis_degree) + 2)
    throw ConfigError("solver.M must be at least basis_degree + 2");
  if (cfg.picard_iters < 1) throw ConfigError("solver.picard_iters must be >= 1");
  if (!(cfg.picard_tol > 0.0)) throw ConfigError("solver.picard_tol must be positive");
  if (!(cfg.lambda_bar_sq > 1.0)) throw ConfigError("solver.lambda_bar_sq must exceed 1");
}

/// Weighted sum of per-column values into |.|_H^2 (power 0) or |.|_V^2 (power 1).
inline double weighted_columns(const ModeSet& m, const Eigen::VectorXd& v, int power) {
  double acc = 0.0;
  for (std::size_t r = 0; r < m.rep_count(); ++r) {
    const double w = power == 0 ? 1.0 : m.rep_eigenvalue(r);
    for (std::size_t c = 0; c < VelocityField::kRealsPerRep; ++c)
      acc += w * v(static_cast<Eigen::Index>(r * VelocityField::kRealsPerRep + c));
  }
  return 2.0 * m.area() * acc;
}

/// Estimator-error budgets at node i. Regression noise of the C and Z fits is
/// drawn by a wild bootstrap over path groups (Rademacher signs per group, so
/// heteroscedasticity and cross-component correlation are kept), added to the
/// next node's draws carried through the conditional-expectation maps, and
/// pushed through the Picard step linearized at Gauss-Hermite states. `pert`
/// holds the He coefficients of delta u and is updated in place.
inline void propagate_budget(const BsdeSolution& sol, int i, const RowMatrix& U, const RowMatrix& Cm,
                             const RowMatrix& R, RowMatrix& Zf, std::size_t groups, int deg_next,
                             double scale_next, std::vector<Eigen::MatrixXd>& pert, NodeDiagnostics& dg) {
  const auto& cfg = sol.config();
  const auto& grid = sol.grid();
  const auto& modes = sol.modes();
  const auto& fc = sol.fit_C(i);
  const auto& fz = sol.fit_Z(i);
  const Driver& drv = sol.driver();
  const auto Wi = sol.ensemble().W_at(i);
  const auto M = static_cast<std::size_t>(U.rows());
  const auto q = U.cols();
  const int deg = fc.degree, p = deg + 1;
  const double ti = grid.t(i), dt = grid.dt();
  const double scale = fc.scale;
  const bool has_next = i + 1 < grid.L;

  parallel_for(static_cast<std::ptrdiff_t>(M), [&](std::ptrdiff_t m) {
    fz.evaluate(Wi[m], std::span<double>(Zf.row(m).data(), static_cast<std::size_t>(q)));
  });
  // Per-group sums of (X^T X)^{-1} x_m r_m^T for both fits.
  std::vector<Eigen::MatrixXd> gc(groups), gz(groups);
  parallel_for(static_cast<std::ptrdiff_t>(groups), [&](std::ptrdiff_t g) {
    auto& a = gc[static_cast<std::size_t>(g)];
    auto& b = gz[static_cast<std::size_t>(g)];
    a = Eigen::MatrixXd::Zero(p, q);
    b = Eigen::MatrixXd::Zero(p, q);
    double basis[16];
    for (std::size_t m = M * g / groups; m < M * (g + 1) / groups; ++m) {
      hermite_he(deg, Wi[m] / scale, std::span<double>(basis, p));
      const Eigen::VectorXd x = fc.gram_inverse * Eigen::Map<const Eigen::VectorXd>(basis, p);
      const auto mi = static_cast<Eigen::Index>(m);
      a.noalias() += x * (U.row(mi) - Cm.row(mi));
      b.noalias() += x * (R.row(mi) - Zf.row(mi));
    }
  });

  const int draws = static_cast<int>(pert.size());
  Eigen::MatrixXd signs(draws, static_cast<Eigen::Index>(groups));
  {
    std::seed_seq seq{cfg.seed, std::uint64_t{0xb0d6e7}, static_cast<std::uint64_t>(i)};
    std::mt19937_64 gen(seq);
    for (int r = 0; r < draws; ++r)
      for (std::size_t g = 0; g < groups; ++g) signs(r, static_cast<Eigen::Index>(g)) = (gen() >> 63) ? 1.0 : -1.0;
  }

  Eigen::MatrixXd Tc, Tz;
  if (has_next) {
    Tc = hermite_transition(deg, scale, deg_next, scale_next, dt, false);
    Tz = hermite_transition(deg, scale, deg_next, scale_next, dt, true);
  }
  // Linearization states at the He interpolation nodes of this node's basis.
  const GaussRule rule = gauss_hermite_normal(p);
  Eigen::MatrixXd V(p, p);
  std::vector<NodeValues> base(static_cast<std::size_t>(p));
  std::vector<VelocityField> phi0(static_cast<std::size_t>(p));
  double basis[16];
  for (int k = 0; k < p; ++k) {
    const double w = deg == 0 ? 0.0 : scale * rule.nodes[static_cast<std::size_t>(k)];
    hermite_he(deg, w / scale, std::span<double>(basis, p));
    for (int j = 0; j < p; ++j) V(k, j) = basis[j];
    base[static_cast<std::size_t>(k)] = sol.node_values(i, w);
    phi0[static_cast<std::size_t>(k)] = drv(ti, base[static_cast<std::size_t>(k)].u, base[static_cast<std::size_t>(k)].Z);
  }
  const Eigen::MatrixXd Vinv = V.fullPivLu().inverse();
  const Eigen::MatrixXd G = hermite_gram(deg, scale, ti);
  const double s = dt * cfg.nu;

  Eigen::MatrixXd eu = Eigen::MatrixXd::Zero(q, draws), ez = Eigen::MatrixXd::Zero(q, draws);
  parallel_for(static_cast<std::ptrdiff_t>(draws), [&](std::ptrdiff_t r) {
    const auto ru = static_cast<std::size_t>(r);
    Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(p, q), dz = Eigen::MatrixXd::Zero(p, q);
    for (std::size_t g = 0; g < groups; ++g) {
      const double sg = signs(r, static_cast<Eigen::Index>(g));
      dc += sg * gc[g];
      dz += sg * gz[g];
    }
    if (has_next) {
      dc += Tc * pert[ru];
      dz += Tz * pert[ru];
    }
    Eigen::MatrixXd du(p, q);
    std::vector<double> row(static_cast<std::size_t>(q));
    for (int k = 0; k < p; ++k) {
      const Eigen::RowVectorXd c_row = V.row(k) * dc, z_row = V.row(k) * dz;
      const VelocityField dC = leray_project(VelocityField::from_reals(modes, std::span<const double>(c_row.data(), row.size())));
      const VelocityField dZ = leray_project(VelocityField::from_reals(modes, std::span<const double>(z_row.data(), row.size())));
      const auto& b = base[static_cast<std::size_t>(k)];
      const double size = std::sqrt(norm_h2(dC) + norm_h2(dZ));
      VelocityField rhs = dC;
      if (size > 0.0) {
        const double h = 1e-7 * std::max(1.0, std::sqrt(norm_h2(b.u) + norm_h2(b.Z))) / size;
        VelocityField jac = drv(ti, b.u + h * dC, b.Z + h * dZ) - phi0[static_cast<std::size_t>(k)];
        jac *= 1.0 / h;
        jac.axpy(cfg.nu, stokes_apply(dC));
        rhs.axpy(dt, jac);
      }
      leray_project(resolvent_apply(std::move(rhs), s)).to_reals(row);
      for (Eigen::Index c = 0; c < q; ++c) du(k, c) = row[static_cast<std::size_t>(c)];
    }
    pert[ru] = Vinv * du;
    const Eigen::MatrixXd Gu = G * pert[ru], Gz = G * dz;
    for (Eigen::Index c = 0; c < q; ++c) {
      eu(c, r) = pert[ru].col(c).dot(Gu.col(c));
      ez(c, r) = dz.col(c).dot(Gz.col(c));
    }
  });
  const Eigen::VectorXd mu = eu.rowwise().mean(), mz = ez.rowwise().mean();
  dg.budget_u_h = weighted_columns(*modes, mu, 0);
  dg.budget_u_v = weighted_columns(*modes, mu, 1);
  dg.budget_z_h = weighted_columns(*modes, mz, 0);
}

}  // namespace detail

/// Backward Euler with regression: for i = L-1..0,
///   C_i = E_i[u_{i+1}],  Z_i = E_i[(u_{i+1} - C_i) dW_i] / dt,
///   u_i = C_i + dt D(t_i, u_i, Z_i)  (Picard),
/// with E_i realized by least squares on He_j(W_{t_i} / sqrt(t_i)).
inline BsdeSolution solve_bsnse(const SolverConfig& cfg, const ForcingModel& model, const SigmaSchedule& sigma,
                                const TerminalCondition& terminal) {
  detail::check_config(cfg);
  const double margin = superparabolicity_margin(cfg.nu, cfg.lambda_bar_sq, sigma);
  if (!(margin > 0.0)) {
    std::ostringstream os;
    os << "inadmissible configuration: super-parabolicity margin " << margin << " <= 0";
    throw AdmissibilityError(os.str(), margin);
  }
  BsdeSolution sol;
  sol.cfg_ = cfg;
  sol.modes_ = terminal.xi0.mode_set_ptr();
  if (!sol.modes_) throw ConfigError("terminal condition has no mode set");
  sol.terminal_ = terminal;
  sol.constants_ = assemble_constants(cfg.nu, cfg.lambda_bar_sq, sigma, model);

  if (cfg.truncation.enabled) {
    const double bound = std::sqrt(apriori_rhs_h(sol.constants_, terminal.sup_h2()));
    if (cfg.truncation.M < bound) {
      std::ostringstream os;
      os << "truncation radius M=" << cfg.truncation.M << " is below the a priori bound " << bound;
      throw PreconditionError(os.str());
    }
  }
  auto drv = std::make_shared<Driver>(sol.modes_, cfg.nu, sigma, model, cfg.truncation);
  if (cfg.truncation.enabled) {
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    drv->validate_h_M(cfg.h_M_samples, rng, cfg.T);
  }
  sol.driver_ = drv;

  const TimeGrid grid(cfg.T, cfg.L);
  sol.ens_ = BrownianEnsemble::generate(cfg.seed, cfg.M, grid);
  const auto& ens = sol.ens_;
  const std::size_t M = cfg.M;
  const auto& modes = *sol.modes_;
  const auto q = static_cast<Eigen::Index>(modes.rep_count() * VelocityField::kRealsPerRep);
  const int L = cfg.L;
  const double dt = grid.dt();

  sol.fit_c_.resize(static_cast<std::size_t>(L));
  sol.fit_z_.resize(static_cast<std::size_t>(L));
  sol.diag_.assign(static_cast<std::size_t>(L + 1), NodeDiagnostics{});
  auto& st = sol.stats_;
  st.resize(L, M, dt);

  RowMatrix U(static_cast<Eigen::Index>(M), q), Cm(static_cast<Eigen::Index>(M), q),
      R(static_cast<Eigen::Index>(M), q);
  parallel_for(static_cast<std::ptrdiff_t>(M), [&](std::ptrdiff_t m) {
    const VelocityField xi = terminal.at(ens.W(L, static_cast<std::size_t>(m)));
    xi.to_reals(std::span<double>(U.row(m).data(), static_cast<std::size_t>(q)));
    const auto k = st.at(L, static_cast<std::size_t>(m));
    st.u_h2[k] = norm_h2(xi);
    st.u_v2[k] = norm_v2(xi);
    st.u_a2[k] = norm_da2(xi);
  });

  // Linearized estimator-error draws: He coefficients of delta u at the next node.
  const int draws = cfg.budget_draws;
  const std::size_t groups = std::min<std::size_t>(256, M);
  std::vector<Eigen::MatrixXd> pert(static_cast<std::size_t>(draws));
  int deg_next = 0;
  double scale_next = 1.0;
  RowMatrix Zf(static_cast<Eigen::Index>(M), q);

  std::vector<std::size_t> trunc_hits(M), picard_iters(M);
  std::vector<double> picard_inc(M);
  for (int i = L - 1; i >= 0; --i) {
    const double ti = grid.t(i);
    const double scale = ti > 0.0 ? std::sqrt(ti) : 1.0;
    const auto Wi = ens.W_at(i);
    const auto dWi = ens.dW_at(i);
    auto& fc = sol.fit_c_[static_cast<std::size_t>(i)];
    auto& fz = sol.fit_z_[static_cast<std::size_t>(i)];
    auto& dg = sol.diag_[static_cast<std::size_t>(i)];

    fc = fit_regression(U, Wi, cfg.basis_degree, scale);
    parallel_for(static_cast<std::ptrdiff_t>(M), [&](std::ptrdiff_t m) {
      fc.evaluate(Wi[m], std::span<double>(Cm.row(m).data(), static_cast<std::size_t>(q)));
      const double f = dWi[m] / dt;
      for (Eigen::Index c = 0; c < q; ++c) R(m, c) = (U(m, c) - Cm(m, c)) * f;
    });
    fz = fit_regression(R, Wi, cfg.basis_degree, scale);
    dg.degree = fc.degree;
    dg.rank_deficient = fc.rank_deficient || fz.rank_deficient;
    dg.condition = std::max(fc.condition, fz.condition);
    if (draws > 0) {
      detail::propagate_budget(sol, i, U, Cm, R, Zf, groups, deg_next, scale_next, pert, dg);
      deg_next = fc.degree;
      scale_next = scale;
    }

    parallel_for(static_cast<std::ptrdiff_t>(M), [&](std::ptrdiff_t mi) {
      const auto m = static_cast<std::size_t>(mi);
      const NodeValues v = sol.node_values(i, Wi[m]);
      std::span<double> row(U.row(mi).data(), static_cast<std::size_t>(q));
      v.u.to_reals(row);

      const VelocityField phi = (1.0 / dt) * (v.u - v.C);
      const auto k = st.at(i, m);
      st.u_h2[k] = norm_h2(v.u);
      st.u_v2[k] = norm_v2(v.u);
      st.u_a2[k] = norm_da2(v.u);
      st.z_h2[k] = norm_h2(v.Z);
      st.z_v2[k] = norm_v2(v.Z);
      st.zu[k] = inner_h(v.Z, v.u);
      st.phiu[k] = inner_h(phi, v.u);
      st.ito[k] = st.u_h2[k] - st.u_h2[st.at(i + 1, m)] - 2.0 * st.phiu[k] * dt + st.z_h2[k] * dt +
                  2.0 * st.zu[k] * dWi[m];
      picard_inc[m] = v.picard.increment;
      picard_iters[m] = static_cast<std::size_t>(v.picard.iterations);
      trunc_hits[m] = sol.driver_->truncation_active(ti, v.u, v.Z) ? 1 : 0;
    });
    for (std::size_t m = 0; m < M; ++m) {
      dg.picard_max_increment = std::max(dg.picard_max_increment, picard_inc[m]);
      dg.picard_max_iterations = std::max(dg.picard_max_iterations, static_cast<int>(picard_iters[m]));
      dg.truncation_active += trunc_hits[m];
    }
  }
  return sol;
}

}  // namespace bsnse
