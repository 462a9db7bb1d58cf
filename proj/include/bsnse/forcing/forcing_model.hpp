#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "bsnse/spectral/operators.hpp"

namespace bsnse {

enum class ForcingKind { zero, linear, saturated };

inline const char* to_string(ForcingKind k) {
  switch (k) {
    case ForcingKind::zero: return "zero";
    case ForcingKind::linear: return "linear";
    case ForcingKind::saturated: return "saturated";
  }
  return "?";
}

/// Structural constants of f, in the form
///   <f(t,v,phi), v>  <= g(t) + eps |phi|^2 + varrho(eps) |v|^2 + beta |v|_V |v|
///   |f(t,v,phi)|^2   <= (g(t) + beta (|v|_V^2 + |phi|^2)) rho1(v)
///   <f(t,v1,p1) - f(t,v2,p2), v1-v2> <= rho(v2) (|w|^2 + |w| (|p1-p2| + |w|_V))
/// The shipped models have constant rho and rho1; the handles keep the general form.
struct ForcingBounds {
  std::function<double(double)> g;
  double g_l1 = 0.0;   ///< int_0^T g(t) dt
  double g_sup = 0.0;  ///< sup_t g(t)
  double beta = 0.0;
  std::function<double(const VelocityField&)> rho;
  std::function<double(const VelocityField&)> rho1;
  std::function<double(double)> varrho;
  double rho_const = 0.0;
  double rho1_const = 0.0;
};

struct ForcingParams {
  ForcingKind kind = ForcingKind::zero;
  /// a0(t) = amp cos(omega t) e_k with e_k the divergence-free unit pair at `a0_mode`.
  double a0_amp = 0.0;
  WaveVector a0_mode{1, 0};
  double a0_omega = 0.0;
  double a1 = 0.0;  // linear: coefficient of u
  double a2 = 0.0;  // linear: coefficient of Z
  double c1 = 0.0;  // saturated: damping
  double c2 = 0.0;  // saturated: gain on the retracted Z
  double n0 = 1.0;  // saturated: retraction radius
};

/// phi_n(z) = z n / max(|z|_H, n).
inline VelocityField retract_phi_n(double n, VelocityField z) {
  const double zn = std::sqrt(norm_h2(z));
  if (zn <= n) return z;
  z *= n / zn;
  return z;
}

/// A concrete forcing f(t, u, Z) together with its structural constants.
/// Immutable after construction.
class ForcingModel {
 public:
  ForcingModel() : ForcingModel(ForcingParams{}, 1.0) {}

  /// `horizon` is T; `period` is the torus side a, which fixes |G| in g(t) and
  /// the Poincare constant lambda_1 = (2 pi / a)^2 used in the growth bound.
  ForcingModel(const ForcingParams& p, double horizon, double period = 2.0 * std::numbers::pi)
      : p_(p), horizon_(horizon), period_(period) {
    if (!(horizon > 0.0)) throw ConfigError("forcing: horizon must be positive");
    if (!(period > 0.0)) throw ConfigError("forcing: period must be positive");
    if (p_.kind == ForcingKind::saturated && (p_.c1 < 0.0 || p_.c2 < 0.0 || !(p_.n0 > 0.0)))
      throw ConfigError("forcing: saturated model needs c1, c2 >= 0 and n0 > 0");
    if (p_.a0_amp != 0.0 && p_.a0_mode.is_zero()) throw ConfigError("forcing: a0 mode must be nonzero");
    build_bundle();
  }

  static ForcingModel zero(double horizon = 1.0) { return ForcingModel(ForcingParams{}, horizon); }

  const ForcingParams& params() const { return p_; }
  ForcingKind kind() const { return p_.kind; }
  double horizon() const { return horizon_; }
  const ForcingBounds& bundle() const { return bundle_; }
  bool is_zero() const { return p_.kind == ForcingKind::zero; }
  /// Lipschitz constant of f in Z (H to H).
  double z_lipschitz() const {
    switch (p_.kind) {
      case ForcingKind::linear: return std::abs(p_.a2);
      case ForcingKind::saturated: return p_.c2;
      default: return 0.0;
    }
  }
  /// True when f does not depend on Z.
  bool z_free() const { return z_lipschitz() == 0.0; }

  /// a0(t) restricted to `modes` (zero when the forcing mode is absent).
  VelocityField a0(const ModeSetPtr& modes, double t) const {
    VelocityField out(modes);
    if (p_.kind == ForcingKind::zero || p_.a0_amp == 0.0) return out;
    const auto& k = p_.a0_mode;
    if (!modes->contains(k)) return out;
    const double kn = std::sqrt(double(k.norm2()));
    const double s = p_.a0_amp * std::cos(p_.a0_omega * t) * 0.5 / kn;
    out.set(k, {Complex(-k.ky * s, 0.0), Complex(k.kx * s, 0.0)});
    return out;
  }

  double period() const { return period_; }

  VelocityField eval(double t, const VelocityField& u, const VelocityField& z) const {
    require_same_modes(u.modes(), z.modes(), "forcing_eval");
    switch (p_.kind) {
      case ForcingKind::zero: return VelocityField(u.mode_set_ptr());
      case ForcingKind::linear: {
        VelocityField f = a0(u.mode_set_ptr(), t);
        if (p_.a1 != 0.0) f.axpy(p_.a1, u);
        if (p_.a2 != 0.0) f.axpy(p_.a2, z);
        return leray_project(std::move(f));
      }
      case ForcingKind::saturated: {
        VelocityField f = a0(u.mode_set_ptr(), t);
        if (p_.c1 != 0.0) f.axpy(-p_.c1, u);
        if (p_.c2 != 0.0) f.axpy(p_.c2, retract_phi_n(p_.n0, z));
        return leray_project(std::move(f));
      }
    }
    return VelocityField(u.mode_set_ptr());
  }

 private:
  void build_bundle() {
    const double lambda1 = std::pow(2.0 * std::numbers::pi / period_, 2);
    // <a0, v> <= |a0|^2/2 + |v|^2/2 puts g = |a0|^2/2 and adds 1/2 to varrho.
    const bool forced = p_.kind != ForcingKind::zero && p_.a0_amp != 0.0;
    const double h = forced ? 0.5 : 0.0;
    double beta = 0.0, rho = 0.0, rho1 = 1.0;
    std::function<double(double)> varrho = [](double) { return 0.0; };
    switch (p_.kind) {
      case ForcingKind::zero: break;
      case ForcingKind::linear: {
        const double a1 = p_.a1, a2 = p_.a2;
        beta = std::max(a1 * a1 / lambda1, a2 * a2);
        rho = std::max(std::abs(a1), std::abs(a2));
        rho1 = 6.0;
        varrho = [=](double eps) { return std::max(0.0, h + a1) + a2 * a2 / (4.0 * eps); };
        break;
      }
      case ForcingKind::saturated: {
        const double c2 = p_.c2;
        beta = std::max(p_.c1 * p_.c1 / lambda1, c2 * c2);
        rho = c2;
        rho1 = 6.0;
        varrho = [=](double eps) { return h + c2 * c2 / (4.0 * eps); };
        break;
      }
    }
    bundle_.beta = beta;
    bundle_.rho_const = rho;
    bundle_.rho1_const = rho1;
    bundle_.rho = [rho](const VelocityField&) { return rho; };
    bundle_.rho1 = [rho1](const VelocityField&) { return rho1; };
    bundle_.varrho = varrho;

    // |a0(t)|^2 = amp^2 cos^2(w t) |G| / 2, so g(t) = scale cos^2(w t).
    const double amp = forced ? p_.a0_amp : 0.0;
    const double w = p_.a0_omega, T = horizon_;
    const double scale = amp * amp * period_ * period_ / 4.0;
    bundle_.g = [scale, w](double t) {
      const double c = std::cos(w * t);
      return scale * c * c;
    };
    const double cos2_int = (w == 0.0) ? T : T / 2.0 + std::sin(2.0 * w * T) / (4.0 * w);
    bundle_.g_l1 = scale * cos2_int;
    bundle_.g_sup = scale;
  }

  ForcingParams p_;
  double horizon_;
  double period_;
  ForcingBounds bundle_;
};

inline VelocityField forcing_eval(const ForcingModel& model, double t, const VelocityField& u, const VelocityField& z) {
  return model.eval(t, u, z);
}

/// lambda = inf_t (nu - lambda_bar^2 |sigma(t)|^2 / 2). Admissible iff positive.
inline double superparabolicity_margin(double nu, double lambda_bar_sq, const SigmaSchedule& sigma) {
  return nu - lambda_bar_sq * sigma.sup_norm2() / 2.0;
}

}  // namespace bsnse
