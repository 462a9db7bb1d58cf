#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "bsnse/errors.hpp"

namespace bsnse {

/// Nondimensional Fourier index. The physical wavenumber is (2*pi/a) * k.
struct WaveVector {
  int kx = 0;
  int ky = 0;

  constexpr int norm2() const { return kx * kx + ky * ky; }
  constexpr WaveVector operator-() const { return {-kx, -ky}; }
  constexpr bool is_zero() const { return kx == 0 && ky == 0; }
  /// One member of every +/-k pair is stored; this picks it.
  constexpr bool is_representative() const { return kx > 0 || (kx == 0 && ky > 0); }

  friend constexpr bool operator==(const WaveVector&, const WaveVector&) = default;
  friend constexpr auto operator<=>(const WaveVector&, const WaveVector&) = default;
};

/// Ordering of the Stokes eigenbasis: nondecreasing |k|^2, ties broken
/// lexicographically by (kx, ky).
constexpr bool eigen_order_less(const WaveVector& a, const WaveVector& b) {
  if (a.norm2() != b.norm2()) return a.norm2() < b.norm2();
  return a < b;
}

class ModeSet;
using ModeSetPtr = std::shared_ptr<const ModeSet>;

/// A finite, negation-closed set of nonzero wave vectors spanning H_N,
/// together with the Stokes eigenvalues (2*pi/a)^2 |k|^2.
class ModeSet {
 public:
  /// Square box {k : max(|kx|,|ky|) <= K, k != 0}.
  static ModeSetPtr box(double period, int max_index) {
    if (max_index < 1) throw std::invalid_argument("ModeSet::box: K must be >= 1");
    std::vector<WaveVector> modes;
    for (int kx = -max_index; kx <= max_index; ++kx)
      for (int ky = -max_index; ky <= max_index; ++ky)
        if (kx != 0 || ky != 0) modes.push_back({kx, ky});
    return from_modes(period, std::move(modes));
  }

  /// The first `count` modes in eigenvalue order, completed to the end of the
  /// last (degenerate) shell so the set stays closed under negation.
  static ModeSetPtr lowest(double period, std::size_t count) {
    if (count == 0) throw std::invalid_argument("ModeSet::lowest: count must be positive");
    int radius = 1;
    std::vector<WaveVector> pool;
    // Grow the candidate disc until it holds enough modes in full shells.
    for (;;) {
      pool.clear();
      for (int kx = -radius; kx <= radius; ++kx)
        for (int ky = -radius; ky <= radius; ++ky)
          if ((kx != 0 || ky != 0) && kx * kx + ky * ky <= radius * radius) pool.push_back({kx, ky});
      if (pool.size() >= count) break;
      ++radius;
    }
    std::sort(pool.begin(), pool.end(), eigen_order_less);
    const int shell = pool[count - 1].norm2();
    std::vector<WaveVector> modes;
    for (const auto& k : pool)
      if (k.norm2() <= shell) modes.push_back(k);
    return from_modes(period, std::move(modes));
  }

  static ModeSetPtr from_modes(double period, std::vector<WaveVector> modes) {
    return std::shared_ptr<const ModeSet>(new ModeSet(period, std::move(modes)));
  }

  double period() const { return period_; }
  /// 2*pi/a.
  double wavenumber_scale() const { return 2.0 * std::numbers::pi / period_; }
  /// |G| = a^2, the Parseval weight.
  double area() const { return period_ * period_; }

  /// All modes (both members of each pair), eigenvalue-ordered.
  std::span<const WaveVector> modes() const { return modes_; }
  std::span<const double> eigenvalues() const { return eigenvalues_; }
  /// Number of modes N; P_N projects onto their span.
  std::size_t size() const { return modes_.size(); }

  std::span<const WaveVector> representatives() const { return reps_; }
  std::size_t rep_count() const { return reps_.size(); }
  const WaveVector& rep(std::size_t r) const { return reps_[r]; }
  double rep_eigenvalue(std::size_t r) const { return rep_eigenvalues_[r]; }
  double max_eigenvalue() const { return eigenvalues_.empty() ? 0.0 : eigenvalues_.back(); }
  double min_eigenvalue() const { return eigenvalues_.empty() ? 0.0 : eigenvalues_.front(); }
  /// Largest |kx| or |ky| present.
  int max_index() const { return max_index_; }
  /// Largest |k| present (nondimensional).
  double max_wavenumber() const {
    return modes_.empty() ? 0.0 : std::sqrt(static_cast<double>(modes_.back().norm2()));
  }

  struct Slot {
    std::size_t rep;
    bool conjugate;  // true when k is the negation of the stored representative
  };

  std::optional<Slot> find(const WaveVector& k) const {
    if (std::abs(k.kx) > max_index_ || std::abs(k.ky) > max_index_) return std::nullopt;
    const int idx = lookup_[index_of(k)];
    if (idx < 0) return std::nullopt;
    return Slot{static_cast<std::size_t>(idx), !k.is_representative()};
  }
  bool contains(const WaveVector& k) const { return find(k).has_value(); }

  /// Same period and same modes (pointer identity not required).
  bool same_as(const ModeSet& other) const {
    return this == &other || (period_ == other.period_ && modes_ == other.modes_);
  }
  /// Every mode of this set is present in `other` and periods agree.
  bool subset_of(const ModeSet& other) const {
    if (period_ != other.period_) return false;
    return std::all_of(modes_.begin(), modes_.end(), [&](const WaveVector& k) { return other.contains(k); });
  }

 private:
  ModeSet(double period, std::vector<WaveVector> modes) : period_(period), modes_(std::move(modes)) {
    if (!(period_ > 0.0)) throw std::invalid_argument("ModeSet: period must be positive");
    if (modes_.empty()) throw std::invalid_argument("ModeSet: empty mode list");
    std::sort(modes_.begin(), modes_.end(), eigen_order_less);
    if (std::adjacent_find(modes_.begin(), modes_.end()) != modes_.end())
      throw std::invalid_argument("ModeSet: duplicate wave vector");
    max_index_ = 0;
    for (const auto& k : modes_) {
      if (k.is_zero()) throw std::invalid_argument("ModeSet: the zero mode is excluded (zero-mean fields)");
      max_index_ = std::max({max_index_, std::abs(k.kx), std::abs(k.ky)});
    }
    const int width = 2 * max_index_ + 1;
    lookup_.assign(static_cast<std::size_t>(width * width), -1);
    const double s2 = wavenumber_scale() * wavenumber_scale();
    for (const auto& k : modes_) {
      eigenvalues_.push_back(s2 * k.norm2());
      if (k.is_representative()) {
        lookup_[index_of(k)] = static_cast<int>(reps_.size());
        reps_.push_back(k);
        rep_eigenvalues_.push_back(s2 * k.norm2());
      }
    }
    for (const auto& k : modes_) {
      if (k.is_representative()) continue;
      const int partner = lookup_[index_of(-k)];
      if (partner < 0) throw std::invalid_argument("ModeSet: mode list is not closed under negation");
      lookup_[index_of(k)] = partner;
    }
  }

  std::size_t index_of(const WaveVector& k) const {
    const int width = 2 * max_index_ + 1;
    return static_cast<std::size_t>((k.kx + max_index_) * width + (k.ky + max_index_));
  }

  double period_;
  std::vector<WaveVector> modes_;
  std::vector<double> eigenvalues_;
  std::vector<WaveVector> reps_;
  std::vector<double> rep_eigenvalues_;
  std::vector<int> lookup_;
  int max_index_ = 0;
};

inline void require_same_modes(const ModeSet& a, const ModeSet& b, const char* op) {
  if (!a.same_as(b)) throw ModeSetMismatch(std::string(op) + ": fields live on different mode sets");
}

}  // namespace bsnse
