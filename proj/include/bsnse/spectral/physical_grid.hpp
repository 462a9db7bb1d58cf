#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <numeric>
#include <span>
#include <vector>

#include "bsnse/spectral/velocity_field.hpp"

namespace bsnse {

namespace detail {

struct FftPlans {
  fftw_plan to_physical = nullptr;  // c2r
  fftw_plan to_spectral = nullptr;  // r2c
};

/// Plans are created once per grid size under a lock (the FFTW planner is not
/// thread-safe) and executed concurrently through the new-array interface.
/// FFTW_UNALIGNED keeps the chosen codelets independent of buffer alignment,
/// which keeps results bit-identical across calls.
inline const FftPlans& fft_plans(int n) {
  static std::mutex lock;
  static std::map<int, FftPlans> cache;
  std::lock_guard<std::mutex> guard(lock);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  const int half = n / 2 + 1;
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(n * half));
  std::vector<double> real(static_cast<std::size_t>(n * n));
  FftPlans p;
  auto* cbuf = reinterpret_cast<fftw_complex*>(spec.data());
  p.to_physical = fftw_plan_dft_c2r_2d(n, n, cbuf, real.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.to_spectral = fftw_plan_dft_r2c_2d(n, n, real.data(), cbuf, FFTW_ESTIMATE | FFTW_UNALIGNED);
  return cache.emplace(n, p).first->second;
}

inline bool is_smooth_size(int n) {
  for (int p : {2, 3, 5})
    while (n % p == 0) n /= p;
  return n == 1;
}

}  // namespace detail

/// Uniform n x n collocation grid on [0,a)^2 with transforms between stored
/// representative coefficients and physical values. Point j = (jx, jy) sits at
/// x = a*(jx, jy)/n; arrays are row-major in jx.
///
/// Products of trigonometric polynomials whose total degree per axis is < n are
/// integrated exactly by the grid rule, and aliasing in a Galerkin-truncated
/// product vanishes when n > 3K.
class PhysicalGrid {
 public:
  PhysicalGrid(ModeSetPtr modes, int n) : modes_(std::move(modes)), n_(n) {
    if (n_ < 2 * modes_->max_index() + 1) throw std::invalid_argument("PhysicalGrid: grid too coarse for the mode set");
    plans_ = &detail::fft_plans(n_);
    // Precompute where each representative lands in the half-spectrum array.
    const int half = n_ / 2 + 1;
    for (std::size_t r = 0; r < modes_->rep_count(); ++r) {
      const auto k = modes_->rep(r);
      Placement pl{};
      if (k.ky > 0) {
        pl.primary = wrap(k.kx) * half + k.ky;
        pl.primary_conj = false;
        pl.mirror = -1;
      } else if (k.ky == 0) {
        pl.primary = wrap(k.kx) * half;
        pl.primary_conj = false;
        pl.mirror = wrap(-k.kx) * half;
      } else {
        pl.primary = wrap(-k.kx) * half + (-k.ky);
        pl.primary_conj = true;
        pl.mirror = -1;
      }
      placement_.push_back(pl);
    }
  }

  /// Smallest 2^a 3^b 5^c >= 3K+1: exact quadrature of triple products and
  /// alias-free Galerkin products.
  static int product_size(const ModeSet& m) { return smooth_at_least(3 * m.max_index() + 1); }
  /// Smallest smooth size >= 4K+1: exact quadrature of quartic integrands.
  static int quartic_size(const ModeSet& m) { return smooth_at_least(4 * m.max_index() + 1); }
  static int smooth_at_least(int n) {
    while (!detail::is_smooth_size(n)) ++n;
    return n;
  }

  int size() const { return n_; }
  std::size_t point_count() const { return static_cast<std::size_t>(n_) * n_; }
  const ModeSet& modes() const { return *modes_; }
  double cell_area() const { return modes_->area() / (double(n_) * n_); }

  /// Physical values of the scalar series sum_k c_k e^{i(2pi/a)k.x}, with
  /// coefficients given per representative (conjugates implied).
  void synthesize(std::span<const Complex> rep_coeffs, std::span<double> out) const {
    auto& spec = scratch_spectrum();
    std::fill(spec.begin(), spec.end(), Complex{});
    for (std::size_t r = 0; r < placement_.size(); ++r) {
      const auto& pl = placement_[r];
      const Complex c = rep_coeffs[r];
      spec[pl.primary] = pl.primary_conj ? std::conj(c) : c;
      if (pl.mirror >= 0) spec[pl.mirror] = std::conj(c);
    }
    fftw_execute_dft_c2r(plans_->to_physical, reinterpret_cast<fftw_complex*>(spec.data()), out.data());
  }

  /// Galerkin coefficients (per representative) of a real grid function:
  /// the exact Fourier coefficients when its content fits the grid.
  void analyze(std::span<const double> values, std::span<Complex> rep_coeffs) const {
    auto& spec = scratch_spectrum();
    auto& real = scratch_real();
    std::copy(values.begin(), values.end(), real.begin());
    fftw_execute_dft_r2c(plans_->to_spectral, real.data(), reinterpret_cast<fftw_complex*>(spec.data()));
    const double inv = 1.0 / (double(n_) * n_);
    for (std::size_t r = 0; r < placement_.size(); ++r) {
      const auto& pl = placement_[r];
      const Complex c = spec[pl.primary] * inv;
      rep_coeffs[r] = pl.primary_conj ? std::conj(c) : c;
    }
  }

  /// Grid quadrature of a function over G.
  double integrate(std::span<const double> values) const {
    return cell_area() * std::accumulate(values.begin(), values.end(), 0.0);
  }

  /// Physical values of one component of a field (component 0 = x, 1 = y),
  /// optionally differentiated along axis `deriv` (-1 for none).
  void component(const VelocityField& u, int comp, int deriv, std::span<double> out) const {
    auto& c = scratch_coeffs();
    const double s = modes_->wavenumber_scale();
    for (std::size_t r = 0; r < u.rep_count(); ++r) {
      Complex v = u[r][comp];
      if (deriv >= 0) {
        const auto k = modes_->rep(r);
        v *= Complex(0.0, s * (deriv == 0 ? k.kx : k.ky));
      }
      c[r] = v;
    }
    synthesize(c, out);
  }

 private:
  struct Placement {
    std::ptrdiff_t primary;
    bool primary_conj;
    std::ptrdiff_t mirror;
  };

  std::ptrdiff_t wrap(int k) const { return static_cast<std::ptrdiff_t>(((k % n_) + n_) % n_); }

  std::vector<Complex>& scratch_spectrum() const {
    thread_local std::vector<Complex> buf;
    buf.resize(static_cast<std::size_t>(n_) * (n_ / 2 + 1));
    return buf;
  }
  std::vector<double>& scratch_real() const {
    thread_local std::vector<double> buf;
    buf.resize(point_count());
    return buf;
  }
  std::vector<Complex>& scratch_coeffs() const {
    thread_local std::vector<Complex> buf;
    buf.resize(modes_->rep_count());
    return buf;
  }

  ModeSetPtr modes_;
  int n_;
  const detail::FftPlans* plans_ = nullptr;
  std::vector<Placement> placement_;
};

}  // namespace bsnse
