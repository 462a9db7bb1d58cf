#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <vector>

namespace bsnse {

/// Probabilists' Hermite polynomials He_0..He_deg at x.
inline void hermite_he(int deg, double x, std::span<double> out) {
  out[0] = 1.0;
  if (deg >= 1) out[1] = x;
  for (int j = 1; j < deg; ++j) out[j + 1] = x * out[j] - j * out[j - 1];
}

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;  ///< sum to 1
};

/// n-point Gauss rule for the standard normal law (Golub-Welsch on the
/// He-recurrence Jacobi matrix). E[h(G)] ~ sum_j w_j h(x_j).
inline GaussRule gauss_hermite_normal(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int j = 1; j < n; ++j) J(j, j - 1) = J(j - 1, j) = std::sqrt(double(j));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  GaussRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int j = 0; j < n; ++j) {
    r.nodes[j] = es.eigenvalues()(j);
    const double v = es.eigenvectors()(0, j);
    r.weights[j] = v * v;
  }
  return r;
}

}  // namespace bsnse
