#pragma once

#include <stdexcept>

#include "bsnse/errors.hpp"

namespace bsnse {

/// Uniform grid t_i = i T / L, i = 0..L.
struct TimeGrid {
  double T = 1.0;
  int L = 1;

  TimeGrid() = default;
  TimeGrid(double horizon, int steps) : T(horizon), L(steps) {
    if (!(T > 0.0)) throw ConfigError("time grid: T must be positive");
    if (L < 1) throw ConfigError("time grid: L must be >= 1");
  }

  double dt() const { return T / L; }
  double t(int i) const { return i == L ? T : T * i / L; }
  int nodes() const { return L + 1; }
};

}  // namespace bsnse
