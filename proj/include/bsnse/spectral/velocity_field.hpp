#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "bsnse/spectral/mode_set.hpp"

namespace bsnse {

using Complex = std::complex<double>;
/// Fourier coefficient c_k of a 2D vector field.
using Vec2c = std::array<Complex, 2>;

/// Truncated Fourier series of a real, zero-mean vector field on the torus.
/// Only one representative of each +/-k pair is stored; c_{-k} = conj(c_k)
/// is implied, so the reality invariant holds by construction.
class VelocityField {
 public:
  /// Real components per stored representative: re/im of the x and y coefficients.
  static constexpr std::size_t kRealsPerRep = 4;

  VelocityField() = default;
  explicit VelocityField(ModeSetPtr modes) : modes_(std::move(modes)), coeffs_(modes_->rep_count()) {}

  const ModeSetPtr& mode_set_ptr() const { return modes_; }
  const ModeSet& modes() const { return *modes_; }
  bool empty() const { return !modes_; }
  std::size_t rep_count() const { return coeffs_.size(); }
  std::size_t real_size() const { return coeffs_.size() * kRealsPerRep; }

  Vec2c& operator[](std::size_t r) { return coeffs_[r]; }
  const Vec2c& operator[](std::size_t r) const { return coeffs_[r]; }
  std::span<Vec2c> coefficients() { return coeffs_; }
  std::span<const Vec2c> coefficients() const { return coeffs_; }

  /// c_k for any k in the set (conjugated when k is not the representative); zero otherwise.
  Vec2c at(const WaveVector& k) const {
    const auto slot = modes_->find(k);
    if (!slot) return {};
    const Vec2c& c = coeffs_[slot->rep];
    return slot->conjugate ? Vec2c{std::conj(c[0]), std::conj(c[1])} : c;
  }

  /// Sets c_k (and thereby c_{-k}). Throws if k is not in the set.
  void set(const WaveVector& k, const Vec2c& c) {
    const auto slot = modes_->find(k);
    if (!slot) throw std::out_of_range("VelocityField::set: wave vector not in mode set");
    coeffs_[slot->rep] = slot->conjugate ? Vec2c{std::conj(c[0]), std::conj(c[1])} : c;
  }

  void to_reals(std::span<double> out) const {
    for (std::size_t r = 0; r < coeffs_.size(); ++r) {
      out[4 * r + 0] = coeffs_[r][0].real();
      out[4 * r + 1] = coeffs_[r][0].imag();
      out[4 * r + 2] = coeffs_[r][1].real();
      out[4 * r + 3] = coeffs_[r][1].imag();
    }
  }
  void assign_reals(std::span<const double> in) {
    for (std::size_t r = 0; r < coeffs_.size(); ++r) {
      coeffs_[r][0] = {in[4 * r + 0], in[4 * r + 1]};
      coeffs_[r][1] = {in[4 * r + 2], in[4 * r + 3]};
    }
  }
  static VelocityField from_reals(ModeSetPtr modes, std::span<const double> in) {
    VelocityField f(std::move(modes));
    f.assign_reals(in);
    return f;
  }

  /// Zero-padded copy on a mode set containing this one.
  VelocityField embedded_in(const ModeSetPtr& target) const {
    if (target->same_as(*modes_)) return *this;
    if (!modes_->subset_of(*target)) throw ModeSetMismatch("VelocityField::embedded_in: target does not contain the source modes");
    VelocityField out(target);
    for (std::size_t r = 0; r < coeffs_.size(); ++r) out.set(modes_->rep(r), coeffs_[r]);
    return out;
  }

  /// max_k |k.c_k| / |k||c_k|, zero for the zero field.
  double divergence_residual() const {
    double worst = 0.0;
    for (std::size_t r = 0; r < coeffs_.size(); ++r) {
      const auto& k = modes_->rep(r);
      const double cn = std::sqrt(std::norm(coeffs_[r][0]) + std::norm(coeffs_[r][1]));
      if (cn == 0.0) continue;
      const Complex dot = double(k.kx) * coeffs_[r][0] + double(k.ky) * coeffs_[r][1];
      worst = std::max(worst, std::abs(dot) / (std::sqrt(double(k.norm2())) * cn));
    }
    return worst;
  }

  VelocityField& operator+=(const VelocityField& o) {
    require_same_modes(*modes_, *o.modes_, "operator+=");
    for (std::size_t r = 0; r < coeffs_.size(); ++r) {
      coeffs_[r][0] += o.coeffs_[r][0];
      coeffs_[r][1] += o.coeffs_[r][1];
    }
    return *this;
  }
  VelocityField& operator-=(const VelocityField& o) {
    require_same_modes(*modes_, *o.modes_, "operator-=");
    for (std::size_t r = 0; r < coeffs_.size(); ++r) {
      coeffs_[r][0] -= o.coeffs_[r][0];
      coeffs_[r][1] -= o.coeffs_[r][1];
    }
    return *this;
  }
  VelocityField& operator*=(double s) {
    for (auto& c : coeffs_) {
      c[0] *= s;
      c[1] *= s;
    }
    return *this;
  }
  /// this += s * o
  VelocityField& axpy(double s, const VelocityField& o) {
    require_same_modes(*modes_, *o.modes_, "axpy");
    for (std::size_t r = 0; r < coeffs_.size(); ++r) {
      coeffs_[r][0] += s * o.coeffs_[r][0];
      coeffs_[r][1] += s * o.coeffs_[r][1];
    }
    return *this;
  }

  friend VelocityField operator+(VelocityField a, const VelocityField& b) { return a += b; }
  friend VelocityField operator-(VelocityField a, const VelocityField& b) { return a -= b; }
  friend VelocityField operator*(double s, VelocityField a) { return a *= s; }
  friend VelocityField operator*(VelocityField a, double s) { return a *= s; }
  friend VelocityField operator-(VelocityField a) { return a *= -1.0; }

  friend bool operator==(const VelocityField& a, const VelocityField& b) {
    return a.modes_->same_as(*b.modes_) && a.coeffs_ == b.coeffs_;
  }

 private:
  ModeSetPtr modes_;
  std::vector<Vec2c> coeffs_;
};

/// <u, v>_H = |G| sum over all k of Re(c_k . conj(d_k)); each stored pair counts twice.
inline double inner_h(const VelocityField& u, const VelocityField& v) {
  require_same_modes(u.modes(), v.modes(), "inner_h");
  double acc = 0.0;
  for (std::size_t r = 0; r < u.rep_count(); ++r)
    acc += (u[r][0] * std::conj(v[r][0]) + u[r][1] * std::conj(v[r][1])).real();
  return 2.0 * u.modes().area() * acc;
}

/// <u, v>_V = <A^{1/2}u, A^{1/2}v>_H.
inline double inner_v(const VelocityField& u, const VelocityField& v) {
  require_same_modes(u.modes(), v.modes(), "inner_v");
  double acc = 0.0;
  for (std::size_t r = 0; r < u.rep_count(); ++r)
    acc += u.modes().rep_eigenvalue(r) * (u[r][0] * std::conj(v[r][0]) + u[r][1] * std::conj(v[r][1])).real();
  return 2.0 * u.modes().area() * acc;
}

namespace detail {
/// |G| * 2 * sum_r lambda_r^power |c_r|^2
inline double weighted_energy(const VelocityField& u, int power) {
  double acc = 0.0;
  for (std::size_t r = 0; r < u.rep_count(); ++r) {
    const double w = power == 0 ? 1.0 : std::pow(u.modes().rep_eigenvalue(r), power);
    acc += w * (std::norm(u[r][0]) + std::norm(u[r][1]));
  }
  return 2.0 * u.modes().area() * acc;
}
}  // namespace detail

inline double norm_h2(const VelocityField& u) { return detail::weighted_energy(u, 0); }
inline double norm_v2(const VelocityField& u) { return detail::weighted_energy(u, 1); }
inline double norm_da2(const VelocityField& u) { return detail::weighted_energy(u, 2); }

}  // namespace bsnse
