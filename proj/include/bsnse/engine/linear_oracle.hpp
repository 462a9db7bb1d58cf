#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <complex>
#include <functional>

#include "bsnse/engine/hermite.hpp"

namespace bsnse {

/// Scalar linear backward equation for one Fourier component:
///   -dy = (-(nu lam - a1) y + (i kappa + a2) z + f(t)) dt - z dW,   y_T = psi(W_T) c.
struct LinearModeProblem {
  double nu = 1.0;
  double lambda = 1.0;  ///< Stokes eigenvalue of the mode
  double kappa = 0.0;   ///< (2pi/a) sigma.k
  double a1 = 0.0;
  double a2 = 0.0;
  std::complex<double> c{1.0, 0.0};
  std::function<std::complex<double>(double)> f;  ///< empty means zero
  std::function<double(double)> psi;              ///< empty means 1
  double T = 1.0;
};

/// y at (t, W_t = w) by a Girsanov shift: with mu = nu lam - a1, gamma = i kappa + a2,
/// tau = T - t and G standard normal,
///   y = e^{-mu tau} c E[psi(w + sqrt(tau) G) exp(gamma sqrt(tau) G - gamma^2 tau / 2)]
///     + int_t^T e^{-mu (s - t)} f(s) ds.
/// The expectation uses `nodes`-point Gauss-Hermite quadrature, the time
/// integral adaptive Gauss-Kronrod. See docs/linear_oracle.md.
inline std::complex<double> linear_mode_oracle(const LinearModeProblem& p, double t, double w = 0.0, int nodes = 64) {
  using C = std::complex<double>;
  const double mu = p.nu * p.lambda - p.a1;
  const double tau = p.T - t;
  const C gamma(p.a2, p.kappa);
  C expect = 0.0;
  if (tau == 0.0) {
    expect = p.psi ? p.psi(w) : 1.0;
  } else if (!p.psi && gamma == C(0.0)) {
    expect = 1.0;
  } else {
    const auto rule = gauss_hermite_normal(nodes);
    const double st = std::sqrt(tau);
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double g = rule.nodes[j];
      const double ps = p.psi ? p.psi(w + st * g) : 1.0;
      expect += rule.weights[j] * ps * std::exp(gamma * st * g - gamma * gamma * tau / 2.0);
    }
  }
  C y = std::exp(-mu * tau) * p.c * expect;
  if (p.f && tau > 0.0) {
    using boost::math::quadrature::gauss_kronrod;
    auto part = [&](bool imag) {
      return gauss_kronrod<double, 61>::integrate(
          [&](double s) {
            const C v = std::exp(-mu * (s - t)) * p.f(s);
            return imag ? v.imag() : v.real();
          },
          t, p.T, 15, 1e-14);
    };
    y += C(part(false), part(true));
  }
  return y;
}

}  // namespace bsnse
