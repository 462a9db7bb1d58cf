#pragma once

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "bsnse/engine/mnorm.hpp"
#include "bsnse/estimates/report.hpp"

namespace bsnse {

inline std::map<std::string, double> constants_map(const ConstantBundle& c) {
  return {{"nu", c.nu},       {"lambda", c.lambda},         {"lambda_bar_sq", c.lambda_bar_sq},
          {"sigma_sup2", c.sigma_sup2}, {"T", c.horizon},   {"beta", c.beta},
          {"rho", c.rho},     {"rho1", c.rho1},             {"g_l1", c.g_l1},
          {"eps", c.eps},     {"varrho_eps", c.varrho_eps}, {"C", c.C},
          {"c_z", c.c_z},     {"c_z_gap", c.c_z_gap},       {"K", c.K},
          {"C1", c.C1}};
}

/// t -> e^{alpha (T - t)} gT + int_t^T e^{alpha (s - t)} h(s) ds.
class GronwallEnvelope {
 public:
  GronwallEnvelope(double gT, double alpha, std::function<double(double)> h, double T)
      : gT_(gT), alpha_(alpha), h_(std::move(h)), T_(T) {}

  double operator()(double t) const {
    double v = std::exp(alpha_ * (T_ - t)) * gT_;
    if (h_ && t < T_) {
      v += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
          [&](double s) { return std::exp(alpha_ * (s - t)) * h_(s); }, t, T_, 15, 1e-13);
    }
    return v;
  }

  std::vector<double> on_grid(const TimeGrid& grid) const {
    std::vector<double> out(static_cast<std::size_t>(grid.nodes()));
    for (int i = 0; i <= grid.L; ++i) out[static_cast<std::size_t>(i)] = (*this)(grid.t(i));
    return out;
  }

 private:
  double gT_, alpha_;
  std::function<double(double)> h_;
  double T_;
};

inline GronwallEnvelope gronwall_envelope(double gT, double alpha, std::function<double(double)> h, double T) {
  return GronwallEnvelope(gT, alpha, std::move(h), T);
}

/// Y_t <= e^{alpha(T-t)} E_t[Y_T] + E_t[sum_{s >= t} e^{alpha(s-t)} X_s dt] on every node
/// and path, with E_t realized by regression on W_t. Y is node-major on nodes
/// 0..L, X on nodes 0..L-1. The slack is a simultaneous confidence band for the
/// fitted conditional expectation at the false-alarm level of a 4-sigma test,
/// plus rounding. At node L the check is pathwise.
inline EstimateReport stochastic_gronwall_check(std::span<const double> Y, std::span<const double> X, double alpha,
                                                const BrownianEnsemble& ens, int degree = 4) {
  EstimateReport rep;
  rep.name = "stochastic_gronwall";
  rep.seed = ens.seed();
  rep.constants["alpha"] = alpha;
  const auto& grid = ens.grid();
  const int L = grid.L;
  const std::size_t M = ens.paths();
  const double dt = grid.dt();
  double yscale = 0.0;
  for (double y : Y) yscale = std::max(yscale, std::abs(y));
  // Pathwise right side, accumulated backward.
  RowMatrix acc(static_cast<Eigen::Index>(M), 1);
  for (std::size_t m = 0; m < M; ++m) acc(static_cast<Eigen::Index>(m), 0) = Y[static_cast<std::size_t>(L) * M + m];
  for (int i = L; i >= 0; --i) {
    if (i < L) {
      for (std::size_t m = 0; m < M; ++m) {
        auto& a = acc(static_cast<Eigen::Index>(m), 0);
        a = std::exp(alpha * dt) * a + X[static_cast<std::size_t>(i) * M + m] * dt;
      }
    }
    if (i == L) {
      // E_T is the identity.
      for (std::size_t m = 0; m < M; ++m)
        rep.add(Y[static_cast<std::size_t>(L) * M + m], acc(static_cast<Eigen::Index>(m), 0), 1e-12 * std::max(1.0, yscale));
      continue;
    }
    const double ti = grid.t(i);
    const auto Wi = ens.W_at(i);
    const auto fit = fit_regression(acc, Wi, degree, ti > 0.0 ? std::sqrt(ti) : 1.0);
    const int p = fit.degree + 1;
    // Leverage-corrected (HC3) covariance of the coefficients,
    // (X^T X)^{-1} (sum r_m^2 / (1 - h_m)^2 x_m x_m^T) (X^T X)^{-1}.
    double basis[16];
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t m = 0; m < M; ++m) {
      hermite_he(fit.degree, Wi[m] / fit.scale, std::span<double>(basis, p));
      const Eigen::Map<const Eigen::VectorXd> x(basis, p);
      const double r = acc(static_cast<Eigen::Index>(m), 0) - fit.evaluate(Wi[m], Eigen::Index{0});
      const double h = std::min(x.dot(fit.gram_inverse * x), 0.99);
      meat.noalias() += (r * r / ((1.0 - h) * (1.0 - h))) * x * x.transpose();
    }
    const Eigen::MatrixXd cov = fit.gram_inverse * meat * fit.gram_inverse;
    // The fit error is one random polynomial seen at every path, so a pointwise
    // band has no multiplicity control. Scheffe: |da.x| <= |da|_{cov^-1} se(x), and
    // |da|^2_{cov^-1} ~ chi2_p. Pick the quantile with a single 4-sigma test's level.
    const double level = 2.0 * boost::math::cdf(boost::math::complement(boost::math::normal(), 4.0));
    const double band = std::sqrt(boost::math::quantile(boost::math::complement(boost::math::chi_squared(p), level)));
    for (std::size_t m = 0; m < M; ++m) {
      const double rhs = fit.evaluate(Wi[m], Eigen::Index{0});
      hermite_he(fit.degree, Wi[m] / fit.scale, std::span<double>(basis, p));
      const Eigen::Map<const Eigen::VectorXd> x(basis, p);
      const double se = std::sqrt(std::max(0.0, x.dot(cov * x)));
      rep.add(Y[static_cast<std::size_t>(i) * M + m], rhs, band * se + 1e-12 * std::max(1.0, yscale));
    }
  }
  return rep.finalize();
}

namespace detail {

template <class Rng>
VelocityField scaled_random(const ModeSetPtr& ms, Rng& rng, double lo, double hi, double decay) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  VelocityField f = random_field(ms, rng, {.divergence_free = true, .decay = decay});
  const double n = std::sqrt(norm_h2(f));
  return n == 0.0 ? f : (std::exp(u(rng)) / n) * f;
}

}  // namespace detail

/// Samples 2<Phi(t,phi,psi),phi> - |psi|^2 <= -lambda |phi|_V^2 - c_z |psi|^2 + 2 g(t) + C |phi|^2
/// with the constants from assemble_constants. Odd samples take psi along
/// -J phi, the direction that makes the transport term largest. Both sides are
/// divided by |phi|_V^2 + |psi|^2 + |phi|^2 so margins compare across scales.
/// The random stream does not depend on sigma.
template <class Rng>
EstimateReport coercivity_residual(const ForcingModel& model, double nu, const SigmaSchedule& sigma,
                                   double lambda_bar_sq, const ModeSetPtr& modes, std::size_t samples, Rng& rng) {
  const ConstantBundle c = assemble_constants(nu, lambda_bar_sq, sigma, model);
  if (!(c.lambda > 0.0)) throw AdmissibilityError("coercivity: inadmissible margin", c.lambda);
  EstimateReport rep;
  rep.name = "coercivity";
  rep.constants = constants_map(c);
  const Driver drv(modes, nu, sigma, model);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t s = 0; s < samples; ++s) {
    const double t = model.horizon() * unit(rng);
    const VelocityField phi = detail::scaled_random(modes, rng, 1e-2, 1e2, double(s % 3));
    VelocityField psi = detail::scaled_random(modes, rng, 1e-2, 1e2, double(s % 3));
    const double gain = (0.5 + unit(rng)) / (1.0 - c.c_z);
    if (s % 2 == 1) psi = -gain * apply_J(phi, sigma, t);
    const double lhs = 2.0 * inner_h(drv.untruncated(t, phi, psi), phi) - norm_h2(psi);
    const double rhs = -c.lambda * norm_v2(phi) - c.c_z * norm_h2(psi) + 2.0 * model.bundle().g(t) + c.C * norm_h2(phi);
    const double scale = norm_v2(phi) + norm_h2(psi) + norm_h2(phi);
    rep.add(lhs / scale, rhs / scale, 1e-11);
  }
  return rep.finalize();
}

/// Margin of |<B(u) - B(v), u - v>| <= lambda/4 |u-v|_V^2 + (2/lambda) |v|_V^2 |u-v|^2.
inline double b_difference_residual(const SpectralOps& ops, const VelocityField& u, const VelocityField& v,
                                    double lambda) {
  const VelocityField w = u - v;
  const double lhs = std::abs(inner_h(ops.nonlinear_B(u) - ops.nonlinear_B(v), w));
  const double rhs = lambda / 4.0 * norm_v2(w) + 2.0 / lambda * norm_v2(v) * norm_h2(w);
  return rhs - lhs;
}

template <class Rng>
EstimateReport b_difference_report(const ModeSetPtr& modes, double lambda, std::size_t samples, Rng& rng) {
  EstimateReport rep;
  rep.name = "b_difference";
  rep.constants["lambda"] = lambda;
  const SpectralOps ops(modes);
  for (std::size_t s = 0; s < samples; ++s) {
    const VelocityField u = detail::scaled_random(modes, rng, 1e-2, 1e2, double(s % 3));
    const VelocityField v = detail::scaled_random(modes, rng, 1e-2, 1e2, double((s + 1) % 3));
    const VelocityField w = u - v;
    const double lhs = std::abs(inner_h(ops.nonlinear_B(u) - ops.nonlinear_B(v), w));
    const double rhs = lambda / 4.0 * norm_v2(w) + 2.0 / lambda * norm_v2(v) * norm_h2(w);
    rep.add(lhs, rhs, 1e-12 * rhs);
  }
  return rep.finalize();
}

struct AprioriReport {
  EstimateReport report;  ///< lhs/rhs: [energy level, V level]
  double ratio_h = 0.0;
  double ratio_v = 0.0;
  double sup_u_h2 = 0.0;  ///< max over paths and nodes of |u|^2
  double int_u_v2 = 0.0;  ///< path mean of int_0^T |u|_V^2 (trapezoid)
  double int_z_h2 = 0.0;  ///< path mean of int_0^T |Z|^2 (left sum)
};

/// Empirical left sides of both a priori bounds: max over t of the path-max of
/// the state term plus the ensemble mean of the remaining integral.
inline AprioriReport apriori_report(const BsdeSolution& sol) {
  const auto& s = sol.stats();
  const auto& c = sol.constants();
  const int L = s.L;
  const std::size_t M = s.M;
  AprioriReport out;
  out.report.name = "apriori";
  out.report.seed = sol.config().seed;
  out.report.constants = constants_map(c);
  // Tail integrals of the path means, trapezoid in u and left sum in Z.
  std::vector<double> mean_v(L + 1, 0.0), mean_a(L + 1, 0.0), mean_zh(L, 0.0), mean_zv(L, 0.0);
  std::vector<double> max_h(L + 1, 0.0), max_v(L + 1, 0.0);
  for (int i = 0; i <= L; ++i) {
    for (std::size_t m = 0; m < M; ++m) {
      const auto k = s.at(i, m);
      mean_v[i] += s.u_v2[k];
      mean_a[i] += s.u_a2[k];
      max_h[i] = std::max(max_h[i], s.u_h2[k]);
      max_v[i] = std::max(max_v[i], s.u_v2[k]);
      if (i < L) {
        mean_zh[i] += s.z_h2[k];
        mean_zv[i] += s.z_v2[k];
      }
    }
    mean_v[i] /= double(M);
    mean_a[i] /= double(M);
    if (i < L) {
      mean_zh[i] /= double(M);
      mean_zv[i] /= double(M);
    }
  }
  double lhs_h = 0.0, lhs_v = 0.0, tail_h = 0.0, tail_v = 0.0;
  for (int i = L; i >= 0; --i) {
    if (i < L) {
      tail_h += 0.5 * (mean_v[i] + mean_v[i + 1]) * s.dt + mean_zh[i] * s.dt;
      tail_v += 0.5 * (mean_a[i] + mean_a[i + 1]) * s.dt + mean_zv[i] * s.dt;
    }
    lhs_h = std::max(lhs_h, max_h[i] + tail_h);
    lhs_v = std::max(lhs_v, max_v[i] + tail_v);
    out.sup_u_h2 = std::max(out.sup_u_h2, max_h[i]);
  }
  const auto parts = mnorm_parts(s);
  out.int_u_v2 = parts.int_u_v2;
  out.int_z_h2 = parts.int_z_h2;
  const double rhs_h = apriori_rhs_h(c, sol.terminal().sup_h2());
  const double rhs_v = apriori_rhs_v(c, sol.terminal().sup_h2(), sol.terminal().sup_v2());
  out.report.add(lhs_h, rhs_h);
  out.report.add(lhs_v, rhs_v);
  out.report.finalize();
  out.ratio_h = rhs_h > 0.0 ? lhs_h / rhs_h : 0.0;
  out.ratio_v = rhs_v > 0.0 ? lhs_v / rhs_v : 0.0;
  return out;
}

struct ItoResidual {
  std::vector<double> abs_mean;  ///< per step, path mean of |r_i|
  std::vector<double> mean;      ///< per step, signed path mean
  std::vector<double> se;        ///< per step, standard error of the signed mean
  double total_abs = 0.0;        ///< sum over steps of abs_mean
};

/// r_i = |u_i|^2 - |u_{i+1}|^2 - 2 <Phi_i, u_i> dt + |Z_i|^2 dt + 2 <Z_i, u_i> dW_i per path.
inline ItoResidual ito_energy_residual(const PathStats& s) {
  ItoResidual out;
  out.abs_mean.assign(static_cast<std::size_t>(s.L), 0.0);
  out.mean.assign(static_cast<std::size_t>(s.L), 0.0);
  out.se.assign(static_cast<std::size_t>(s.L), 0.0);
  for (int i = 0; i < s.L; ++i) {
    double a = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t m = 0; m < s.M; ++m) {
      const double r = s.ito[s.at(i, m)];
      a += std::abs(r);
      m1 += r;
      m2 += r * r;
    }
    const double n = double(s.M);
    out.abs_mean[i] = a / n;
    out.mean[i] = m1 / n;
    const double var = std::max(0.0, (m2 - m1 * m1 / n) / (n - 1.0));
    out.se[i] = std::sqrt(var / n);
    out.total_abs += out.abs_mean[i];
  }
  return out;
}
inline ItoResidual ito_energy_residual(const BsdeSolution& sol) { return ito_energy_residual(sol.stats()); }

struct UniquenessReport {
  EstimateReport report;
  double gap = 0.0;
  double budget = 0.0;  ///< pooled estimator variance in the same weighted norm
  double standard_error() const { return std::sqrt(budget); }
  /// sqrt(gap) in units of the pooled standard error.
  double ratio() const { return budget > 0.0 ? std::sqrt(gap / budget) : (gap == 0.0 ? 0.0 : INFINITY); }
};

/// Weighted gap between two solutions of the same problem, evaluated on the
/// paths of `ens` (both solutions reconstructed at the same states):
///   mean over paths of |dU_0|^2 + sum_i e^{R_i} (c |dZ_i|^2 + lambda |dU_i|_V^2) dt,
///   R_i = sum_{j<i} (K + (4/lambda) |v_j|_V^2 + K rho^2) dt, v = solution b.
/// The budget combines both solutions' estimator variances with the same weights.
inline UniquenessReport uniqueness_gap(const BsdeSolution& a, const BsdeSolution& b, const BrownianEnsemble& ens) {
  const auto& ca = a.config();
  const auto& cb = b.config();
  if (!a.modes()->same_as(*b.modes()) || ca.nu != cb.nu || ca.T != cb.T || ca.L != cb.L ||
      ca.lambda_bar_sq != cb.lambda_bar_sq || ca.basis_degree != cb.basis_degree ||
      a.driver().model().kind() != b.driver().model().kind() ||
      a.driver().sigma().sup_norm2() != b.driver().sigma().sup_norm2() ||
      a.terminal().psi_kind != b.terminal().psi_kind || !(a.terminal().xi0 == b.terminal().xi0))
    throw ConfigError("uniqueness_gap: solutions come from different configurations");
  if (ens.grid().L != ca.L || ens.grid().T != ca.T) throw ConfigError("uniqueness_gap: ensemble grid differs");
  const auto& c = a.constants();
  const int L = ca.L;
  const double dt = a.grid().dt();
  const std::size_t M = ens.paths();
  const double rho2 = c.rho * c.rho;

  std::vector<double> contrib(M, 0.0), weight_sum(static_cast<std::size_t>(L), 0.0);
  std::vector<double> weights(static_cast<std::size_t>(L) * M);
  parallel_for(static_cast<std::ptrdiff_t>(M), [&](std::ptrdiff_t mi) {
    const auto m = static_cast<std::size_t>(mi);
    double R = 0.0, acc = 0.0;
    for (int i = 0; i < L; ++i) {
      const double w = ens.W(i, m);
      const NodeValues va = a.node_values(i, w), vb = b.node_values(i, w);
      const VelocityField du = va.u - vb.u, dz = va.Z - vb.Z;
      if (i == 0) acc += norm_h2(du);
      const double e = std::exp(R);
      weights[static_cast<std::size_t>(i) * M + m] = e;
      acc += e * (c.c_z_gap * norm_h2(dz) + c.lambda * norm_v2(du)) * dt;
      R += (c.K + 4.0 / c.lambda * norm_v2(vb.u) + c.K * rho2) * dt;
    }
    contrib[m] = acc;
  });
  UniquenessReport out;
  for (double v : contrib) out.gap += v;
  out.gap /= double(M);
  for (int i = 0; i < L; ++i) {
    double sw = 0.0;
    for (std::size_t m = 0; m < M; ++m) sw += weights[static_cast<std::size_t>(i) * M + m];
    weight_sum[i] = sw / double(M);
  }
  for (const BsdeSolution* s : {&a, &b}) {
    const auto& d = s->diagnostics();
    out.budget += d[0].budget_u_h;
    for (int i = 0; i < L; ++i)
      out.budget += weight_sum[i] * (c.c_z_gap * d[i].budget_z_h + c.lambda * d[i].budget_u_v) * dt;
  }
  out.report.name = "uniqueness_gap";
  out.report.seed = ens.seed();
  out.report.constants = constants_map(c);
  out.report.constants["budget"] = out.budget;
  out.report.add(std::sqrt(out.gap), 3.0 * out.standard_error());
  out.report.finalize();
  return out;
}

}  // namespace bsnse
