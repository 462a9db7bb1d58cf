#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "bsnse/forcing/forcing_model.hpp"

namespace bsnse {

/// Smooth cutoff: 1 on [0, M], 0 on [M+1, inf), and 1 - (6 s^5 - 15 s^4 + 10 s^3)
/// in between with s = x - M. C^2, with Lipschitz constant 15/8.
inline double truncate_R_M(double M, double x) {
  if (x <= M) return 1.0;
  if (x >= M + 1.0) return 0.0;
  const double s = x - M;
  return 1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

struct TruncationSpec {
  bool enabled = false;
  double M = 1.0;  ///< state radius (H-norm)
  double n = 1.0;  ///< Z radius (H-norm)
  /// Dominator h_M(t). Empty means the explicit default bound.
  std::function<double(double)> h_M;
};

/// The driver Phi(t, y, z) = -nu A y + B(y) + J z + f(t, y, z) on one mode set,
/// optionally in its truncated form
///   R_M(|y|) * n / max(h_M(t), n) * Phi(t, y, phi_n(z)).
class Driver {
 public:
  Driver(ModeSetPtr modes, double nu, SigmaSchedule sigma, ForcingModel model, TruncationSpec trunc = {})
      : ops_(std::make_shared<SpectralOps>(modes)),
        nu_(nu),
        sigma_(sigma),
        model_(std::move(model)),
        trunc_(std::move(trunc)) {
    if (trunc_.enabled && (!(trunc_.M > 0.0) || !(trunc_.n > 0.0)))
      throw ConfigError("truncation: M and n must be positive");
  }

  const ModeSetPtr& modes() const { return ops_->mode_set(); }
  const SpectralOps& ops() const { return *ops_; }
  double nu() const { return nu_; }
  const SigmaSchedule& sigma() const { return sigma_; }
  const ForcingModel& model() const { return model_; }
  const TruncationSpec& truncation() const { return trunc_; }
  bool truncated() const { return trunc_.enabled; }

  /// P_N Phi(t, y, z).
  VelocityField untruncated(double t, const VelocityField& y, const VelocityField& z) const {
    VelocityField out = ops_->nonlinear_B(y);
    out.axpy(-nu_, stokes_apply(y));
    if (!sigma_.is_zero()) out += apply_J(z, sigma_, t);
    if (!model_.is_zero()) out += model_.eval(t, y, z);
    return out;
  }

  /// Scalar prefactor R_M(|y|) n / max(h_M(t), n); 1 when truncation is off.
  double truncation_factor(double t, const VelocityField& y) const {
    if (!trunc_.enabled) return 1.0;
    const double r = truncate_R_M(trunc_.M, std::sqrt(norm_h2(y)));
    if (r == 0.0) return 0.0;
    return r * (trunc_.n / std::max(h_M(t), trunc_.n));
  }

  /// Whether truncation changes the driver at (t, y, z).
  bool truncation_active(double t, const VelocityField& y, const VelocityField& z) const {
    return trunc_.enabled && (truncation_factor(t, y) != 1.0 || std::sqrt(norm_h2(z)) > trunc_.n);
  }

  VelocityField operator()(double t, const VelocityField& y, const VelocityField& z) const {
    if (!trunc_.enabled) return untruncated(t, y, z);
    const double s = truncation_factor(t, y);
    if (s == 0.0) return VelocityField(y.mode_set_ptr());
    VelocityField out = untruncated(t, y, retract_phi_n(trunc_.n, z));
    if (s != 1.0) out *= s;
    return out;
  }

  /// Upper bound of |P_N Phi(t, w, phi_n(z))| over |w| <= M+1:
  ///   nu lam_max (M+1) + c_b lam_max^(1/2) (M+1)^2 + |sigma|_sup (2pi/a) |k|_max n
  ///   + sqrt((g(t) + beta (lam_max (M+1)^2 + n^2)) rho1),
  /// where c_b = sqrt(#modes / |G|) bounds |w|_inf / |w|.
  double default_h_M(double t) const {
    const auto& m = *modes();
    const double R = trunc_.M + 1.0;
    const double lmax = m.max_eigenvalue();
    const double cb = std::sqrt(double(m.size()) / m.area());
    const auto& b = model_.bundle();
    const double viscous = nu_ * lmax * R;
    const double convect = cb * std::sqrt(lmax) * R * R;
    const double transport = std::sqrt(sigma_.sup_norm2()) * m.wavenumber_scale() * m.max_wavenumber() * trunc_.n;
    const double forcing = std::sqrt((b.g(t) + b.beta * (lmax * R * R + trunc_.n * trunc_.n)) * b.rho1_const);
    return viscous + convect + transport + forcing;
  }

  double h_M(double t) const { return trunc_.h_M ? trunc_.h_M(t) : default_h_M(t); }

  /// Largest observed |P_N Phi(t, w, phi_n(z))| / h_M(t) over random samples with
  /// |w| <= M+1 (a quarter of them on the sphere |w| = M+1).
  template <class Rng>
  double sampled_domination_ratio(std::size_t samples, Rng& rng, double horizon) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    const double R = trunc_.M + 1.0;
    for (std::size_t s = 0; s < samples; ++s) {
      const double t = horizon * unit(rng);
      VelocityField w = random_field(modes(), rng);
      const double radius = (s % 4 == 0) ? R : R * unit(rng);
      w *= radius / std::sqrt(norm_h2(w));
      VelocityField z = random_field(modes(), rng);
      z *= 3.0 * trunc_.n * unit(rng) / std::sqrt(norm_h2(z));
      const double lhs = std::sqrt(norm_h2(untruncated(t, w, retract_phi_n(trunc_.n, z))));
      worst = std::max(worst, lhs / h_M(t));
    }
    return worst;
  }

  /// Throws PreconditionError when the sampled esssup exceeds h_M.
  template <class Rng>
  void validate_h_M(std::size_t samples, Rng& rng, double horizon) const {
    const double ratio = sampled_domination_ratio(samples, rng, horizon);
    if (ratio > 1.0)
      throw PreconditionError("truncation: h_M is not a dominator (sampled |Phi|/h_M = " + std::to_string(ratio) + ")");
  }

 private:
  std::shared_ptr<SpectralOps> ops_;
  double nu_;
  SigmaSchedule sigma_;
  ForcingModel model_;
  TruncationSpec trunc_;
};

/// Builds the truncated driver after checking h_M by sampling.
template <class Rng>
Driver assemble_truncated_driver(ModeSetPtr modes, TruncationSpec spec, const ForcingModel& model, double nu,
                                 const SigmaSchedule& sigma, Rng& rng, std::size_t samples = 1000) {
  spec.enabled = true;
  Driver d(std::move(modes), nu, sigma, model, std::move(spec));
  d.validate_h_M(samples, rng, model.horizon());
  return d;
}

/// Estimate of the one-sided constant C in
///   <D(t,X,Z) - D(t,Y,Z), X - Y> <= C |X - Y|^2
/// from random triples drawn inside the radius-(M+2) ball.
template <class Rng>
double sampled_monotonicity_constant(const Driver& d, std::size_t samples, Rng& rng, double horizon) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double R = d.truncation().enabled ? d.truncation().M + 2.0 : 2.0;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < samples; ++s) {
    const double t = horizon * unit(rng);
    auto draw = [&](double radius) {
      VelocityField f = random_field(d.modes(), rng);
      f *= radius * unit(rng) / std::sqrt(norm_h2(f));
      return f;
    };
    const VelocityField x = draw(R), y = draw(R), z = draw(2.0 * d.truncation().n);
    const VelocityField w = x - y;
    const double w2 = norm_h2(w);
    if (w2 == 0.0) continue;
    worst = std::max(worst, inner_h(d(t, x, z) - d(t, y, z), w) / w2);
  }
  return worst;
}

}  // namespace bsnse
