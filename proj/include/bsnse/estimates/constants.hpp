#pragma once

#include <algorithm>
#include <cmath>

#include "bsnse/forcing/forcing_model.hpp"

namespace bsnse {

/// Every constant the energy and difference estimates use, assembled from the
/// Young-inequality chains in docs/constants.md.
struct ConstantBundle {
  double nu = 0.0;
  double lambda = 0.0;         ///< super-parabolicity margin
  double lambda_bar_sq = 2.0;  ///< lambda_bar^2 > 1
  double sigma_sup2 = 0.0;     ///< sup_t |sigma(t)|^2
  double horizon = 1.0;
  double beta = 0.0;
  double rho = 0.0;
  double rho1 = 0.0;
  double g_l1 = 0.0;
  double eps = 0.0;         ///< Young parameter in the coercivity chain
  double varrho_eps = 0.0;  ///< varrho(eps)
  double C = 0.0;           ///< coercivity constant 2 varrho(eps) + beta^2/lambda
  double c_z = 0.0;         ///< (lambda_bar^2 - 1) / (4 lambda_bar^2)
  double c_z_gap = 0.0;     ///< (lambda_bar^2 - 1) / (2 lambda_bar^2), used in the uniqueness gap
  double K = 0.0;           ///< difference-estimate constant 1 + 2/lambda + 2 lambda_bar^2/(lambda_bar^2 - 1)
  double C1 = 0.0;          ///< energy-level a priori constant
};

inline ConstantBundle assemble_constants(double nu, double lambda_bar_sq, const SigmaSchedule& sigma,
                                         const ForcingModel& model) {
  if (!(lambda_bar_sq > 1.0)) throw ConfigError("constants: lambda_bar^2 must exceed 1");
  ConstantBundle c;
  c.nu = nu;
  c.lambda_bar_sq = lambda_bar_sq;
  c.sigma_sup2 = sigma.sup_norm2();
  c.lambda = superparabolicity_margin(nu, lambda_bar_sq, sigma);
  c.horizon = model.horizon();
  const auto& b = model.bundle();
  c.beta = b.beta;
  c.rho = b.rho_const;
  c.rho1 = b.rho1_const;
  c.g_l1 = b.g_l1;
  const double lb = lambda_bar_sq;
  c.c_z = (lb - 1.0) / (4.0 * lb);
  c.c_z_gap = (lb - 1.0) / (2.0 * lb);
  if (c.lambda <= 0.0) return c;  // inadmissible: the rest is meaningless
  c.eps = std::min(1.0, 3.0 * (lb - 1.0) / (8.0 * lb));
  c.varrho_eps = b.varrho(c.eps);
  c.C = 2.0 * c.varrho_eps + c.beta * c.beta / c.lambda;
  c.K = 1.0 + 2.0 / c.lambda + 2.0 * lb / (lb - 1.0);
  const double CT = c.C * c.horizon;
  c.C1 = 2.0 * (1.0 + std::max(1.0 / c.lambda, 1.0 / c.c_z) * (1.0 + CT)) * std::exp(CT);
  return c;
}

/// Right side of the energy-level bound: C1 (|g|_{L1} + sup |xi|_H^2).
inline double apriori_rhs_h(const ConstantBundle& c, double sup_xi_h2) { return c.C1 * (c.g_l1 + sup_xi_h2); }

/// Right side of the V-level bound:
///   (1 + max(1/lambda, 1/c')) (sup |xi|_V^2 + (rho1/lambda)(|g|_{L1} + beta * rhs_h)),
/// with c' = (lambda_bar^2 - 1) / (2 lambda_bar^2).
inline double apriori_rhs_v(const ConstantBundle& c, double sup_xi_h2, double sup_xi_v2) {
  const double cp = c.c_z_gap;
  return (1.0 + std::max(1.0 / c.lambda, 1.0 / cp)) *
         (sup_xi_v2 + (c.rho1 / c.lambda) * (c.g_l1 + c.beta * apriori_rhs_h(c, sup_xi_h2)));
}

}  // namespace bsnse
