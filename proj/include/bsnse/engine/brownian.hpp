#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "bsnse/engine/time_grid.hpp"
#include "bsnse/parallel.hpp"

namespace bsnse {

/// M sample paths of a scalar Brownian motion on a uniform grid. Path m draws
/// from its own mt19937_64 seeded by (seed, m), so the ensemble does not depend
/// on the worker count. Storage is node-major.
class BrownianEnsemble {
 public:
  BrownianEnsemble() = default;

  static BrownianEnsemble generate(std::uint64_t seed, std::size_t paths, const TimeGrid& grid) {
    if (paths < 2) throw ConfigError("brownian: need at least 2 paths");
    BrownianEnsemble e;
    e.seed_ = seed;
    e.M_ = paths;
    e.grid_ = grid;
    const std::size_t L = static_cast<std::size_t>(grid.L);
    e.W_.assign((L + 1) * paths, 0.0);
    e.dW_.assign(L * paths, 0.0);
    const double sd = std::sqrt(grid.dt());
    parallel_for(static_cast<std::ptrdiff_t>(paths), [&](std::ptrdiff_t mi) {
      const auto m = static_cast<std::size_t>(mi);
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(m), static_cast<std::uint32_t>(std::uint64_t(m) >> 32)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> g(0.0, 1.0);
      double w = 0.0;
      for (std::size_t i = 0; i < L; ++i) {
        const double d = sd * g(rng);
        e.dW_[i * paths + m] = d;
        w += d;
        e.W_[(i + 1) * paths + m] = w;
      }
    });
    return e;
  }

  std::uint64_t seed() const { return seed_; }
  std::size_t paths() const { return M_; }
  const TimeGrid& grid() const { return grid_; }

  double W(int i, std::size_t m) const { return W_[static_cast<std::size_t>(i) * M_ + m]; }
  double dW(int i, std::size_t m) const { return dW_[static_cast<std::size_t>(i) * M_ + m]; }
  std::span<const double> W_at(int i) const { return {W_.data() + static_cast<std::size_t>(i) * M_, M_}; }
  std::span<const double> dW_at(int i) const { return {dW_.data() + static_cast<std::size_t>(i) * M_, M_}; }

  friend bool operator==(const BrownianEnsemble& a, const BrownianEnsemble& b) {
    return a.M_ == b.M_ && a.grid_.L == b.grid_.L && a.grid_.T == b.grid_.T && a.dW_ == b.dW_;
  }

 private:
  std::uint64_t seed_ = 0;
  std::size_t M_ = 0;
  TimeGrid grid_;
  std::vector<double> W_;
  std::vector<double> dW_;
};

inline BrownianEnsemble generate_brownian(std::uint64_t seed, std::size_t paths, const TimeGrid& grid) {
  return BrownianEnsemble::generate(seed, paths, grid);
}

}  // namespace bsnse
