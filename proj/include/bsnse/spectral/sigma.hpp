#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace bsnse {

using Vec2 = std::array<double, 2>;

/// Deterministic, spatially constant sigma(t) = base + oscillation * sin(2 pi t / T).
struct SigmaSchedule {
  Vec2 base{0.0, 0.0};
  Vec2 oscillation{0.0, 0.0};
  double horizon = 1.0;

  static SigmaSchedule constant(double sx, double sy) { return {{sx, sy}, {0.0, 0.0}, 1.0}; }

  Vec2 operator()(double t) const {
    const double s = std::sin(2.0 * std::numbers::pi * t / horizon);
    return {base[0] + oscillation[0] * s, base[1] + oscillation[1] * s};
  }

  /// Lambda: bound on |sigma^j(t)| over [0, T].
  double component_bound() const {
    return std::max(std::abs(base[0]) + std::abs(oscillation[0]), std::abs(base[1]) + std::abs(oscillation[1]));
  }

  /// sup_t |sigma(t)|^2. |base + s*osc|^2 is convex in s in [-1, 1] and sin
  /// attains +/-1 on [0, T], so the sup sits at an endpoint.
  double sup_norm2() const {
    auto n2 = [&](double s) {
      const double x = base[0] + s * oscillation[0], y = base[1] + s * oscillation[1];
      return x * x + y * y;
    };
    return std::max(n2(1.0), n2(-1.0));
  }

  bool is_zero() const {
    return base[0] == 0.0 && base[1] == 0.0 && oscillation[0] == 0.0 && oscillation[1] == 0.0;
  }
};

}  // namespace bsnse
