#pragma once

#include <algorithm>
#include <cmath>

#include "bsnse/engine/solver.hpp"

namespace bsnse {

/// Components of the empirical solution-space norm: path averages of the grid
/// max of |u|^2, the trapezoid integral of |u|_V^2 and the left sum of |Z|^2.
struct MNormParts {
  double sup_u_h2 = 0.0;
  double int_u_v2 = 0.0;
  double int_z_h2 = 0.0;
  double value() const { return std::sqrt(sup_u_h2 + int_u_v2 + int_z_h2); }
};

inline MNormParts mnorm_parts(const PathStats& s) {
  MNormParts p;
  for (std::size_t m = 0; m < s.M; ++m) {
    double sup = 0.0, iv = 0.0, iz = 0.0;
    for (int i = 0; i <= s.L; ++i) {
      sup = std::max(sup, s.u_h2[s.at(i, m)]);
      const double w = (i == 0 || i == s.L) ? 0.5 : 1.0;
      iv += w * s.u_v2[s.at(i, m)];
      if (i < s.L) iz += s.z_h2[s.at(i, m)];
    }
    p.sup_u_h2 += sup;
    p.int_u_v2 += iv * s.dt;
    p.int_z_h2 += iz * s.dt;
  }
  const double inv = 1.0 / double(s.M);
  p.sup_u_h2 *= inv;
  p.int_u_v2 *= inv;
  p.int_z_h2 *= inv;
  return p;
}

inline double mnorm(const PathStats& s) { return mnorm_parts(s).value(); }
inline double mnorm(const BsdeSolution& sol) { return mnorm(sol.stats()); }

/// Statistics of the difference of two solutions on the paths of `ens`, with
/// both reconstructed at the same Brownian states and the coarser one embedded
/// in the finer mode set. The solutions must share T and L.
inline PathStats difference_stats(const BsdeSolution& a, const BsdeSolution& b, const BrownianEnsemble& ens) {
  if (a.grid().L != b.grid().L || a.grid().T != b.grid().T || ens.grid().L != a.grid().L ||
      ens.grid().T != a.grid().T)
    throw ConfigError("solution distance: time grids differ");
  ModeSetPtr fine;
  if (a.modes()->subset_of(*b.modes())) fine = b.modes();
  else if (b.modes()->subset_of(*a.modes())) fine = a.modes();
  else throw ModeSetMismatch("solution distance: mode sets are not nested");
  PathStats d;
  const int L = a.grid().L;
  d.resize(L, ens.paths(), a.grid().dt());
  parallel_for(static_cast<std::ptrdiff_t>(ens.paths()), [&](std::ptrdiff_t mi) {
    const auto m = static_cast<std::size_t>(mi);
    for (int i = 0; i <= L; ++i) {
      const double w = ens.W(i, m);
      const auto k = d.at(i, m);
      if (i == L) {
        const VelocityField du = a.u(i, w).embedded_in(fine) - b.u(i, w).embedded_in(fine);
        d.u_h2[k] = norm_h2(du);
        d.u_v2[k] = norm_v2(du);
        d.u_a2[k] = norm_da2(du);
        continue;
      }
      const NodeValues va = a.node_values(i, w), vb = b.node_values(i, w);
      const VelocityField du = va.u.embedded_in(fine) - vb.u.embedded_in(fine);
      const VelocityField dz = va.Z.embedded_in(fine) - vb.Z.embedded_in(fine);
      d.u_h2[k] = norm_h2(du);
      d.u_v2[k] = norm_v2(du);
      d.u_a2[k] = norm_da2(du);
      d.z_h2[k] = norm_h2(dz);
      d.z_v2[k] = norm_v2(dz);
    }
  });
  return d;
}

inline double mnorm_distance(const BsdeSolution& a, const BsdeSolution& b, const BrownianEnsemble& ens) {
  return mnorm(difference_stats(a, b, ens));
}

}  // namespace bsnse
