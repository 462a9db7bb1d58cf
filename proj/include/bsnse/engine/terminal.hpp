#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "bsnse/spectral/operators.hpp"

namespace bsnse {

enum class PsiKind { one, tanh };

/// xi = psi(W_T) xi0 with psi(w) = 1 or 1 + amp tanh(w).
struct TerminalCondition {
  VelocityField xi0;
  PsiKind psi_kind = PsiKind::one;
  double psi_amp = 0.5;

  double psi(double w) const { return psi_kind == PsiKind::one ? 1.0 : 1.0 + psi_amp * std::tanh(w); }
  double psi_sup() const { return psi_kind == PsiKind::one ? 1.0 : 1.0 + std::abs(psi_amp); }
  bool deterministic() const { return psi_kind == PsiKind::one || psi_amp == 0.0; }

  VelocityField at(double w_T) const {
    const double s = psi(w_T);
    return s == 1.0 ? xi0 : s * xi0;
  }
  double sup_h2() const { return psi_sup() * psi_sup() * norm_h2(xi0); }
  double sup_v2() const { return psi_sup() * psi_sup() * norm_v2(xi0); }
};

/// One entry of a terminal (or forcing) mode list: amplitude `amp` on the
/// divergence-free pair at k, i.e. amp cos((2pi/a) k.x) k_perp/|k| in physical space.
struct ModeAmplitude {
  WaveVector k;
  double amp = 0.0;
};

inline VelocityField shear_modes(const ModeSetPtr& modes, const std::vector<ModeAmplitude>& list) {
  VelocityField out(modes);
  for (const auto& e : list) {
    if (e.k.is_zero()) throw ConfigError("terminal: the zero mode is excluded");
    if (!modes->contains(e.k)) throw ConfigError("terminal: mode (" + std::to_string(e.k.kx) + "," +
                                                 std::to_string(e.k.ky) + ") is outside the mode set");
    const double s = 0.5 * e.amp / std::sqrt(double(e.k.norm2()));
    Vec2c c = out.at(e.k);
    c[0] += Complex(-e.k.ky * s, 0.0);
    c[1] += Complex(e.k.kx * s, 0.0);
    out.set(e.k, c);
  }
  return out;
}

}  // namespace bsnse
