#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "bsnse/engine/solver.hpp"

namespace bsnse {

/// Forcing of the forward system as a function of (s, u). Empty means zero.
using ForwardForcing = std::function<VelocityField(double, const VelocityField&)>;

struct ForwardRun {
  VelocityField u0;
  double nu = 1.0;
  TimeGrid grid;
  int substeps = 1;
  std::vector<VelocityField> trajectory;  ///< one field per grid node

  const VelocityField& at(int i) const { return trajectory[static_cast<std::size_t>(i)]; }
};

/// du/ds = -nu A u - B(u) - P f(s, u), classical RK4 with `substeps` steps per
/// grid interval. Aborts when |u|_V exceeds 1e6 times its initial value.
inline ForwardRun forward_solve(const VelocityField& u0, const ForwardForcing& forcing, double nu, const TimeGrid& grid,
                                int substeps = 1) {
  if (!(nu > 0.0)) throw ConfigError("forward: nu must be positive");
  if (substeps < 1) throw ConfigError("forward: substeps must be >= 1");
  const double scale = std::sqrt(norm_h2(u0));
  if (u0.divergence_residual() > 1e-12 * std::max(1.0, scale))
    throw PreconditionError("forward: initial field is not divergence-free");
  const SpectralOps ops(u0.mode_set_ptr());
  auto rhs = [&](double s, const VelocityField& u) {
    VelocityField d = ops.nonlinear_B(u);
    d.axpy(nu, stokes_apply(u));
    if (forcing) d += leray_project(forcing(s, u));
    d *= -1.0;
    return d;
  };
  ForwardRun run{u0, nu, grid, substeps, {}};
  run.trajectory.reserve(static_cast<std::size_t>(grid.nodes()));
  run.trajectory.push_back(u0);
  const double limit = 1e6 * std::max(std::sqrt(norm_v2(u0)), 1e-300);
  const double h = grid.dt() / substeps;
  VelocityField u = u0;
  for (int i = 0; i < grid.L; ++i) {
    for (int j = 0; j < substeps; ++j) {
      const double s = grid.t(i) + j * h;
      const VelocityField k1 = rhs(s, u);
      const VelocityField k2 = rhs(s + 0.5 * h, u + (0.5 * h) * k1);
      const VelocityField k3 = rhs(s + 0.5 * h, u + (0.5 * h) * k2);
      const VelocityField k4 = rhs(s + h, u + h * k3);
      u.axpy(h / 6.0, k1).axpy(h / 3.0, k2).axpy(h / 3.0, k3).axpy(h / 6.0, k4);
    }
    u = leray_project(std::move(u));
    const double vn = std::sqrt(norm_v2(u));
    if (!std::isfinite(vn) || vn > limit) {
      std::ostringstream os;
      os << "forward: blow-up at s=" << grid.t(i + 1) << " (|u|_V = " << vn << ")";
      throw NumericalFailure(os.str());
    }
    run.trajectory.push_back(u);
  }
  return run;
}

/// Forcing of the reversed problem. With u~(s) = -u(T - s), the backward
/// equation -du = (-nu A u + B(u) + f(t, u, 0)) dt turns into
///   du~/ds = -nu A u~ - B(u~) - f(T - s, -u~, 0).
/// See docs/reversal.md.
inline ForwardForcing reversed_forcing(const ForcingModel& model, double T) {
  if (model.is_zero()) return {};
  return [model, T](double s, const VelocityField& u) {
    return model.eval(T - s, -u, VelocityField(u.mode_set_ptr()));
  };
}

/// Forward run matching a deterministic backward solve: u~(0) = -xi on the
/// backward grid.
inline ForwardRun reversed_run(const BsdeSolution& sol, int substeps = 1) {
  return forward_solve(-sol.terminal().xi0, reversed_forcing(sol.driver().model(), sol.grid().T), sol.config().nu,
                       sol.grid(), substeps);
}

/// max_i |u_b(t_i) + u_f(T - t_i)|_H / |xi|_H. A zero xi returns the
/// unnormalized maximum, which is 0 when the forcing vanishes too.
inline double reversal_residual(const BsdeSolution& sol, const ForwardRun& fwd) {
  if (!sol.terminal().deterministic() || !sol.driver().sigma().is_zero())
    throw PreconditionError("reversal: needs deterministic terminal data and sigma = 0");
  if (sol.driver().truncated()) throw PreconditionError("reversal: needs the untruncated driver");
  const int L = sol.grid().L;
  if (fwd.grid.L != L || fwd.grid.T != sol.grid().T) throw ConfigError("reversal: time grids differ");
  if (!fwd.u0.modes().same_as(*sol.modes())) throw ModeSetMismatch("reversal: mode sets differ");
  double worst = 0.0;
  for (int i = 0; i <= L; ++i) {
    const VelocityField sum = sol.u(i, 0.0) + fwd.at(L - i);
    worst = std::max(worst, std::sqrt(norm_h2(sum)));
  }
  const double xn = std::sqrt(norm_h2(sol.terminal().xi0));
  return xn > 0.0 ? worst / xn : worst;
}

}  // namespace bsnse
