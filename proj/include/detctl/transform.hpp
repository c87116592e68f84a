#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <utility>

#include "detctl/grid.hpp"

namespace detctl {

namespace detail {

// FFTW planning (and plan destruction) is not thread-safe; execution is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : data(fftw_alloc_real(n)), size(n) {}
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  double* data;
  std::size_t size;
};

struct FftwComplexBuffer {
  explicit FftwComplexBuffer(std::size_t n) : data(fftw_alloc_complex(n)), size(n) {}
  ~FftwComplexBuffer() { fftw_free(data); }
  FftwComplexBuffer(const FftwComplexBuffer&) = delete;
  FftwComplexBuffer& operator=(const FftwComplexBuffer&) = delete;
  fftw_complex* data;
  std::size_t size;
};

class Plan {
 public:
  Plan() = default;
  explicit Plan(fftw_plan p) : plan_(p) {}
  ~Plan() { reset(); }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  Plan(Plan&& o) noexcept : plan_(std::exchange(o.plan_, nullptr)) {}
  Plan& operator=(Plan&& o) noexcept {
    if (this != &o) {
      reset();
      plan_ = std::exchange(o.plan_, nullptr);
    }
    return *this;
  }
  void execute() const { fftw_execute(plan_); }

 private:
  void reset() {
    if (plan_ != nullptr) {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan_);
      plan_ = nullptr;
    }
  }
  fftw_plan plan_ = nullptr;
};

}  // namespace detail

/// Modal transforms for one grid size.
///
/// Neumann convention: f(x) = sum_{k=0}^{M-1} a_k cos(k pi x / L), sampled at
/// cell midpoints. Periodic convention: f(x_j) = sum_k c_k exp(2 pi i k x_j / L)
/// with the half spectrum c_0 .. c_{M/2} stored (c_k = X_k / M).
///
/// Instances own scratch buffers and are not safe to share between threads;
/// use transform_for(), which hands out a per-thread instance.
class SpectralTransform {
 public:
  explicit SpectralTransform(const Grid1D& grid)
      : m_(grid.size()), bc_(grid.boundary()), real_in_(m_), real_out_(m_), spec_(m_ / 2 + 1) {
    std::lock_guard lock(detail::fftw_planner_mutex());
    const int n = m_;
    if (bc_ == Boundary::Neumann) {
      dct2_ = detail::Plan(fftw_plan_r2r_1d(n, real_in_.data, real_out_.data, FFTW_REDFT10, FFTW_ESTIMATE));
      dct3_ = detail::Plan(fftw_plan_r2r_1d(n, real_in_.data, real_out_.data, FFTW_REDFT01, FFTW_ESTIMATE));
      dst3_ = detail::Plan(fftw_plan_r2r_1d(n, real_in_.data, real_out_.data, FFTW_RODFT01, FFTW_ESTIMATE));
    } else {
      r2c_ = detail::Plan(fftw_plan_dft_r2c_1d(n, real_in_.data, spec_.data, FFTW_ESTIMATE));
      c2r_ = detail::Plan(fftw_plan_dft_c2r_1d(n, spec_.data, real_out_.data, FFTW_ESTIMATE));
    }
  }

  int size() const { return m_; }
  Boundary boundary() const { return bc_; }

  /// Samples -> cosine amplitudes a_0..a_{M-1}.
  void cosine_forward(std::span<const double> samples, std::span<double> coeffs) {
    std::copy(samples.begin(), samples.end(), real_in_.data);
    dct2_.execute();
    const double inv = 1.0 / m_;
    coeffs[0] = 0.5 * real_out_.data[0] * inv;
    for (int k = 1; k < m_; ++k) coeffs[k] = real_out_.data[k] * inv;
  }

  /// Cosine amplitudes -> samples at cell midpoints.
  void cosine_inverse(std::span<const double> coeffs, std::span<double> samples) {
    real_in_.data[0] = coeffs[0];
    for (int k = 1; k < m_; ++k) real_in_.data[k] = 0.5 * coeffs[k];
    dct3_.execute();
    std::copy(real_out_.data, real_out_.data + m_, samples.begin());
  }

  /// Sine amplitudes b_1..b_{M-1} (b[0] ignored) -> samples of sum b_m sin(m pi x / L).
  void sine_inverse(std::span<const double> coeffs, std::span<double> samples) {
    for (int m = 1; m < m_; ++m) real_in_.data[m - 1] = 0.5 * coeffs[m];
    real_in_.data[m_ - 1] = 0.0;
    dst3_.execute();
    std::copy(real_out_.data, real_out_.data + m_, samples.begin());
  }

  void fourier_forward(std::span<const double> samples, std::span<std::complex<double>> coeffs) {
    std::copy(samples.begin(), samples.end(), real_in_.data);
    r2c_.execute();
    const double inv = 1.0 / m_;
    for (int k = 0; k <= m_ / 2; ++k) coeffs[k] = {spec_.data[k][0] * inv, spec_.data[k][1] * inv};
  }

  void fourier_inverse(std::span<const std::complex<double>> coeffs, std::span<double> samples) {
    for (int k = 0; k <= m_ / 2; ++k) {
      spec_.data[k][0] = coeffs[k].real();
      spec_.data[k][1] = coeffs[k].imag();
    }
    // The imaginary parts of the mean and Nyquist entries carry no signal for real data.
    spec_.data[0][1] = 0.0;
    spec_.data[m_ / 2][1] = 0.0;
    c2r_.execute();
    std::copy(real_out_.data, real_out_.data + m_, samples.begin());
  }

 private:
  int m_;
  Boundary bc_;
  detail::FftwBuffer real_in_;
  detail::FftwBuffer real_out_;
  detail::FftwComplexBuffer spec_;
  detail::Plan dct2_, dct3_, dst3_, r2c_, c2r_;
};

/// Per-thread cached transform for the grid's size and boundary kind.
inline SpectralTransform& transform_for(const Grid1D& grid) {
  thread_local std::map<std::pair<int, Boundary>, std::unique_ptr<SpectralTransform>> cache;
  auto& slot = cache[{grid.size(), grid.boundary()}];
  if (!slot) slot = std::make_unique<SpectralTransform>(grid);
  return *slot;
}

}  // namespace detctl
