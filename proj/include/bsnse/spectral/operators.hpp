#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "bsnse/spectral/physical_grid.hpp"
#include "bsnse/spectral/sigma.hpp"

namespace bsnse {

enum class NormKind { H, V, DA, L4 };

/// (I - k k^T/|k|^2) c_k on every mode: the Leray projection onto H.
inline VelocityField leray_project(VelocityField u) {
  for (std::size_t r = 0; r < u.rep_count(); ++r) {
    const auto k = u.modes().rep(r);
    const double kx = k.kx, ky = k.ky;
    const double k2 = kx * kx + ky * ky;
    const Complex dot = (kx * u[r][0] + ky * u[r][1]) / k2;
    u[r][0] -= kx * dot;
    u[r][1] -= ky * dot;
  }
  return u;
}

/// A u: multiplication by lambda_k = (2pi/a)^2 |k|^2.
inline VelocityField stokes_apply(VelocityField u) {
  for (std::size_t r = 0; r < u.rep_count(); ++r) {
    const double lam = u.modes().rep_eigenvalue(r);
    u[r][0] *= lam;
    u[r][1] *= lam;
  }
  return u;
}

/// (I + s A)^{-1} u, used to precondition the implicit step.
inline VelocityField resolvent_apply(VelocityField u, double s) {
  for (std::size_t r = 0; r < u.rep_count(); ++r) {
    const double f = 1.0 / (1.0 + s * u.modes().rep_eigenvalue(r));
    u[r][0] *= f;
    u[r][1] *= f;
  }
  return u;
}

/// Norms that need no quadrature (H, V, D(A)); L4 needs a grid.
inline double spectral_norm(const VelocityField& u, NormKind kind) {
  switch (kind) {
    case NormKind::H: return std::sqrt(norm_h2(u));
    case NormKind::V: return std::sqrt(norm_v2(u));
    case NormKind::DA: return std::sqrt(norm_da2(u));
    case NormKind::L4: break;
  }
  throw std::invalid_argument("spectral_norm: L4 requires quadrature");
}

/// Grids and scratch shared by the nonlinear operators on one mode set.
/// Construction is cheap; hot loops keep one instance around.
class SpectralOps {
 public:
  explicit SpectralOps(ModeSetPtr modes)
      : modes_(modes),
        product_(modes, PhysicalGrid::product_size(*modes)),
        quartic_(modes, PhysicalGrid::quartic_size(*modes)) {}

  const ModeSetPtr& mode_set() const { return modes_; }
  const PhysicalGrid& product_grid() const { return product_; }
  const PhysicalGrid& quartic_grid() const { return quartic_; }

  double norm(const VelocityField& u, NormKind kind) const {
    if (kind != NormKind::L4) return spectral_norm(u, kind);
    const auto n = quartic_.point_count();
    std::vector<double> ux(n), uy(n), q(n);
    quartic_.component(u, 0, -1, ux);
    quartic_.component(u, 1, -1, uy);
    for (std::size_t j = 0; j < n; ++j) {
      const double m2 = ux[j] * ux[j] + uy[j] * uy[j];
      q[j] = m2 * m2;
    }
    return std::pow(quartic_.integrate(q), 0.25);
  }

  /// Grid quadrature of |u|^2 (Parseval cross-check).
  double quadrature_h2(const VelocityField& u) const {
    const auto n = product_.point_count();
    std::vector<double> ux(n), uy(n), q(n);
    product_.component(u, 0, -1, ux);
    product_.component(u, 1, -1, uy);
    for (std::size_t j = 0; j < n; ++j) q[j] = ux[j] * ux[j] + uy[j] * uy[j];
    return product_.integrate(q);
  }

  /// b(u,v,w) = sum_{i,j} int u_i d_i v_j w_j dx, exact on the product grid.
  double trilinear_b(const VelocityField& u, const VelocityField& v, const VelocityField& w) const {
    require_same_modes(*modes_, u.modes(), "trilinear_b");
    require_same_modes(*modes_, v.modes(), "trilinear_b");
    require_same_modes(*modes_, w.modes(), "trilinear_b");
    const auto n = product_.point_count();
    std::vector<double> ui[2], dv[2][2], wj[2];
    for (int i = 0; i < 2; ++i) {
      ui[i].resize(n);
      wj[i].resize(n);
      product_.component(u, i, -1, ui[i]);
      product_.component(w, i, -1, wj[i]);
      for (int j = 0; j < 2; ++j) {
        dv[i][j].resize(n);
        product_.component(v, j, i, dv[i][j]);  // d_i v_j
      }
    }
    std::vector<double> q(n);
    for (std::size_t p = 0; p < n; ++p) {
      double acc = 0.0;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) acc += ui[i][p] * dv[i][j][p] * wj[j][p];
      q[p] = acc;
    }
    return product_.integrate(q);
  }

  /// Galerkin-truncated Pi(u, v) = P_N P((u.grad) v).
  VelocityField convection(const VelocityField& u, const VelocityField& v) const {
    require_same_modes(*modes_, u.modes(), "convection");
    require_same_modes(*modes_, v.modes(), "convection");
    const auto n = product_.point_count();
    std::vector<double> ux(n), uy(n), d(n), out[2];
    product_.component(u, 0, -1, ux);
    product_.component(u, 1, -1, uy);
    for (int j = 0; j < 2; ++j) {
      out[j].assign(n, 0.0);
      product_.component(v, j, 0, d);
      for (std::size_t p = 0; p < n; ++p) out[j][p] += ux[p] * d[p];
      product_.component(v, j, 1, d);
      for (std::size_t p = 0; p < n; ++p) out[j][p] += uy[p] * d[p];
    }
    return analyze_vector(out[0], out[1]);
  }

  /// B(u) = P_N P((u.grad) u), evaluated through the rotational form
  /// (u.grad)u = grad(|u|^2/2) + omega (-u_y, u_x); the gradient is removed by
  /// the projection, so only three inverse and two forward transforms are needed.
  VelocityField nonlinear_B(const VelocityField& u) const {
    require_same_modes(*modes_, u.modes(), "nonlinear_B");
    const auto n = product_.point_count();
    auto& buf = scratch(3 * n + 2 * n);
    std::span<double> ux(buf.data(), n), uy(buf.data() + n, n), om(buf.data() + 2 * n, n);
    std::span<double> fx(buf.data() + 3 * n, n), fy(buf.data() + 4 * n, n);
    product_.component(u, 0, -1, ux);
    product_.component(u, 1, -1, uy);
    vorticity_physical(u, om);
    for (std::size_t p = 0; p < n; ++p) {
      fx[p] = -om[p] * uy[p];
      fy[p] = om[p] * ux[p];
    }
    return analyze_vector(fx, fy);
  }

 private:
  void vorticity_physical(const VelocityField& u, std::span<double> out) const {
    auto& c = coeff_scratch();
    const double s = modes_->wavenumber_scale();
    for (std::size_t r = 0; r < u.rep_count(); ++r) {
      const auto k = modes_->rep(r);
      // omega_k = i s (kx c_y - ky c_x)
      c[r] = Complex(0.0, s) * (double(k.kx) * u[r][1] - double(k.ky) * u[r][0]);
    }
    product_.synthesize(c, out);
  }

  VelocityField analyze_vector(std::span<const double> fx, std::span<const double> fy) const {
    auto& c = coeff_scratch();
    VelocityField out(modes_);
    product_.analyze(fx, c);
    for (std::size_t r = 0; r < out.rep_count(); ++r) out[r][0] = c[r];
    product_.analyze(fy, c);
    for (std::size_t r = 0; r < out.rep_count(); ++r) out[r][1] = c[r];
    return leray_project(std::move(out));
  }

  std::vector<double>& scratch(std::size_t n) const {
    thread_local std::vector<double> buf;
    buf.resize(n);
    return buf;
  }
  std::vector<Complex>& coeff_scratch() const {
    thread_local std::vector<Complex> buf;
    buf.resize(modes_->rep_count());
    return buf;
  }

  ModeSetPtr modes_;
  PhysicalGrid product_;
  PhysicalGrid quartic_;
};

inline double norm(const VelocityField& u, NormKind kind) {
  if (kind == NormKind::L4) return SpectralOps(u.mode_set_ptr()).norm(u, kind);
  return spectral_norm(u, kind);
}

inline double trilinear_b(const VelocityField& u, const VelocityField& v, const VelocityField& w) {
  return SpectralOps(u.mode_set_ptr()).trilinear_b(u, v, w);
}

inline VelocityField nonlinear_B(const VelocityField& u) { return SpectralOps(u.mode_set_ptr()).nonlinear_B(u); }

/// J Z = P((sigma(t).grad) Z): multiplication by i (2pi/a) sigma.k, then projection.
inline VelocityField apply_J(VelocityField z, const SigmaSchedule& sigma, double t) {
  const auto sv = sigma(t);
  const double s = z.modes().wavenumber_scale();
  for (std::size_t r = 0; r < z.rep_count(); ++r) {
    const auto k = z.modes().rep(r);
    const Complex m(0.0, s * (sv[0] * k.kx + sv[1] * k.ky));
    z[r][0] *= m;
    z[r][1] *= m;
  }
  return leray_project(std::move(z));
}

/// Options for random test fields.
struct RandomFieldOptions {
  bool divergence_free = true;
  /// Coefficient standard deviation decays like (1+|k|^2)^(-decay/2).
  double decay = 1.0;
};

/// Random field with Gaussian coefficients, projected onto H unless asked otherwise.
template <class Rng>
VelocityField random_field(const ModeSetPtr& modes, Rng& rng, const RandomFieldOptions& opt = {}) {
  std::normal_distribution<double> g(0.0, 1.0);
  VelocityField u(modes);
  for (std::size_t r = 0; r < u.rep_count(); ++r) {
    const double w = std::pow(1.0 + modes->rep(r).norm2(), -0.5 * opt.decay);
    u[r][0] = w * Complex(g(rng), g(rng));
    u[r][1] = w * Complex(g(rng), g(rng));
  }
  return opt.divergence_free ? leray_project(std::move(u)) : u;
}

}  // namespace bsnse
