#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "bsnse/engine/hermite.hpp"
#include "bsnse/errors.hpp"

namespace bsnse {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Least-squares fit of each response column on He_j(state / scale), j <= degree.
struct RegressionFit {
  int requested_degree = 0;
  int degree = 0;
  bool rank_deficient = false;
  double scale = 1.0;
  double condition = 1.0;  ///< |R_00| / |R_pp| of the pivoted QR
  Eigen::MatrixXd coef;    ///< (degree+1) x columns
  Eigen::MatrixXd gram_inverse;  ///< (X^T X)^{-1} of the design

  std::size_t columns() const { return static_cast<std::size_t>(coef.cols()); }

  /// Fitted row at one state value. Solvers and reconstruction both go through
  /// here so that fitted values are reproduced bit for bit.
  void evaluate(double state, std::span<double> out) const {
    double basis[16];
    hermite_he(degree, state / scale, std::span<double>(basis, degree + 1));
    const auto q = coef.cols();
    for (Eigen::Index c = 0; c < q; ++c) {
      double acc = 0.0;
      for (int j = 0; j <= degree; ++j) acc += basis[j] * coef(j, c);
      out[static_cast<std::size_t>(c)] = acc;
    }
  }
  double evaluate(double state, Eigen::Index column) const {
    double basis[16];
    hermite_he(degree, state / scale, std::span<double>(basis, degree + 1));
    double acc = 0.0;
    for (int j = 0; j <= degree; ++j) acc += basis[j] * coef(j, column);
    return acc;
  }
};

/// Fits `Y` (one row per path) on the polynomial basis of `state`. When the
/// design is rank deficient the degree is lowered until it is not, and the fit
/// is flagged.
inline RegressionFit fit_regression(const RowMatrix& Y, std::span<const double> state, int degree, double scale = 1.0) {
  const auto M = static_cast<Eigen::Index>(state.size());
  if (degree < 0 || degree > 15) throw PreconditionError("regression: degree must be in [0, 15]");
  if (M < degree + 2) throw PreconditionError("regression: need more paths than basis_degree + 1");
  if (Y.rows() != M) throw PreconditionError("regression: response and state sizes differ");
  RegressionFit fit;
  fit.requested_degree = degree;
  fit.scale = scale;
  for (int d = degree; d >= 0; --d) {
    Eigen::MatrixXd X(M, d + 1);
    double basis[16];
    for (Eigen::Index m = 0; m < M; ++m) {
      hermite_he(d, state[m] / scale, std::span<double>(basis, d + 1));
      for (int j = 0; j <= d; ++j) X(m, j) = basis[j];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < d + 1) {
      fit.rank_deficient = true;
      continue;
    }
    fit.degree = d;
    const auto& R = qr.matrixR();
    fit.condition = std::abs(R(0, 0)) / std::abs(R(d, d));
    fit.coef = qr.solve(Eigen::MatrixXd(Y));
    const Eigen::MatrixXd gram = X.transpose() * X;
    fit.gram_inverse = gram.ldlt().solve(Eigen::MatrixXd::Identity(d + 1, d + 1));
    return fit;
  }
  throw NumericalFailure("regression: design matrix has rank zero");
}

/// Per-column residual sums of squares of a fit.
inline Eigen::VectorXd residual_sums(const RegressionFit& fit, const RowMatrix& Y, std::span<const double> state) {
  Eigen::VectorXd rss = Eigen::VectorXd::Zero(Y.cols());
  std::vector<double> row(Y.cols());
  for (Eigen::Index m = 0; m < Y.rows(); ++m) {
    fit.evaluate(state[m], row);
    for (Eigen::Index c = 0; c < Y.cols(); ++c) {
      const double r = Y(m, c) - row[c];
      rss(c) += r * r;
    }
  }
  return rss;
}

/// Matrix T with E[h(w + dW) phi_from(w + dW)] = T^T phi_to(w) coefficientwise,
/// where phi are the He-bases of the two nodes, dW ~ N(0, dt), and h is 1 or
/// dW / dt (`times_increment`). Exact whenever the image has degree <= deg_to.
inline Eigen::MatrixXd hermite_transition(int deg_to, double scale_to, int deg_from, double scale_from, double dt,
                                          bool times_increment) {
  const GaussRule at = gauss_hermite_normal(deg_to + 1);
  const GaussRule q = gauss_hermite_normal(deg_from + 2);
  Eigen::MatrixXd V(deg_to + 1, deg_to + 1), E = Eigen::MatrixXd::Zero(deg_to + 1, deg_from + 1);
  double basis[17];
  const double sd = std::sqrt(dt);
  for (int k = 0; k <= deg_to; ++k) {
    const double w = deg_to == 0 ? 0.0 : scale_to * at.nodes[static_cast<std::size_t>(k)];
    hermite_he(deg_to, w / scale_to, std::span<double>(basis, deg_to + 1));
    for (int j = 0; j <= deg_to; ++j) V(k, j) = basis[j];
    for (std::size_t g = 0; g < q.nodes.size(); ++g) {
      const double dw = sd * q.nodes[g];
      const double h = times_increment ? dw / dt : 1.0;
      hermite_he(deg_from, (w + dw) / scale_from, std::span<double>(basis, deg_from + 1));
      for (int j = 0; j <= deg_from; ++j) E(k, j) += q.weights[g] * h * basis[j];
    }
  }
  return V.fullPivLu().solve(E);
}

/// E[phi(W) phi(W)^T] for W ~ N(0, t) in the He-basis of the given scale.
inline Eigen::MatrixXd hermite_gram(int degree, double scale, double t) {
  const GaussRule q = gauss_hermite_normal(degree + 1);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(degree + 1, degree + 1);
  double basis[16];
  for (std::size_t g = 0; g < q.nodes.size(); ++g) {
    hermite_he(degree, std::sqrt(t) * q.nodes[g] / scale, std::span<double>(basis, degree + 1));
    for (int a = 0; a <= degree; ++a)
      for (int b = 0; b <= degree; ++b) G(a, b) += q.weights[g] * basis[a] * basis[b];
  }
  return G;
}

struct CondExpEstimate {
  RegressionFit fit;
  std::vector<double> fitted;
};

/// Discrete conditional expectation of `values` given `state`.
inline CondExpEstimate regress_condexp(std::span<const double> values, std::span<const double> state, int degree,
                                       double scale = 1.0) {
  RowMatrix Y(static_cast<Eigen::Index>(values.size()), 1);
  for (std::size_t m = 0; m < values.size(); ++m) Y(static_cast<Eigen::Index>(m), 0) = values[m];
  CondExpEstimate out{fit_regression(Y, state, degree, scale), {}};
  out.fitted.resize(values.size());
  for (std::size_t m = 0; m < values.size(); ++m) out.fitted[m] = out.fit.evaluate(state[m], Eigen::Index{0});
  return out;
}

}  // namespace bsnse
