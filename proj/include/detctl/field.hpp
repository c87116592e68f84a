#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "detctl/errors.hpp"
#include "detctl/grid.hpp"
#include "detctl/transform.hpp"

namespace detctl {

/// Samples of a real function on a Grid1D. All samples are finite.
class Field {
 public:
  explicit Field(const Grid1D& grid) : grid_(grid), samples_(grid.size(), 0.0) {}

  Field(const Grid1D& grid, std::vector<double> samples) : grid_(grid), samples_(std::move(samples)) {
    require(static_cast<int>(samples_.size()) == grid_.size(), "Field: sample count must equal grid size");
    require(std::all_of(samples_.begin(), samples_.end(), [](double v) { return std::isfinite(v); }),
            "Field: samples must be finite");
  }

  template <class Fn>
  static Field from_function(const Grid1D& grid, Fn&& fn) {
    std::vector<double> s(grid.size());
    for (int j = 0; j < grid.size(); ++j) s[j] = fn(grid.point(j));
    return Field(grid, std::move(s));
  }

  const Grid1D& grid() const { return grid_; }
  std::span<const double> samples() const { return samples_; }
  double operator[](int j) const { return samples_[j]; }
  int size() const { return grid_.size(); }

  double max_abs() const {
    double m = 0.0;
    for (double v : samples_) m = std::max(m, std::abs(v));
    return m;
  }

  friend Field operator-(const Field& a, const Field& b) {
    require(a.grid_ == b.grid_, "Field: grid mismatch");
    std::vector<double> s(a.samples_.size());
    for (std::size_t j = 0; j < s.size(); ++j) s[j] = a.samples_[j] - b.samples_[j];
    return Field(a.grid_, std::move(s));
  }

  friend Field operator+(const Field& a, const Field& b) {
    require(a.grid_ == b.grid_, "Field: grid mismatch");
    std::vector<double> s(a.samples_.size());
    for (std::size_t j = 0; j < s.size(); ++j) s[j] = a.samples_[j] + b.samples_[j];
    return Field(a.grid_, std::move(s));
  }

  friend Field operator*(double c, const Field& a) {
    std::vector<double> s(a.samples_);
    for (double& v : s) v *= c;
    return Field(a.grid_, std::move(s));
  }

 private:
  Grid1D grid_;
  std::vector<double> samples_;
};

/// Modal coefficients of a Field.
///
/// Neumann grids fill `cosine` (a_0..a_{M-1}, f = sum a_k cos(k pi x / L));
/// periodic grids fill `fourier` (c_0..c_{M/2}, half spectrum of a real signal).
struct Spectrum {
  Grid1D grid;
  std::vector<double> cosine;
  std::vector<std::complex<double>> fourier;
};

/// Angular wavenumber of mode k in the grid's basis.
inline double wavenumber(const Grid1D& grid, int k) {
  const double base = grid.boundary() == Boundary::Neumann ? std::numbers::pi : 2.0 * std::numbers::pi;
  return base * k / grid.length();
}

inline Spectrum to_spectral(const Field& f) {
  const Grid1D& g = f.grid();
  Spectrum s{g, {}, {}};
  auto& tr = transform_for(g);
  if (g.boundary() == Boundary::Neumann) {
    s.cosine.resize(g.size());
    tr.cosine_forward(f.samples(), s.cosine);
  } else {
    s.fourier.resize(g.size() / 2 + 1);
    tr.fourier_forward(f.samples(), s.fourier);
  }
  return s;
}

inline Field from_spectral(const Spectrum& s) {
  std::vector<double> samples(s.grid.size());
  auto& tr = transform_for(s.grid);
  if (s.grid.boundary() == Boundary::Neumann) {
    require(static_cast<int>(s.cosine.size()) == s.grid.size(), "from_spectral: cosine coefficient count");
    tr.cosine_inverse(s.cosine, samples);
  } else {
    require(static_cast<int>(s.fourier.size()) == s.grid.size() / 2 + 1, "from_spectral: fourier coefficient count");
    tr.fourier_inverse(s.fourier, samples);
  }
  return Field(s.grid, std::move(samples));
}

/// ||f||^2 from the coefficients (Parseval for the grid's basis).
inline double l2_norm_sq(const Spectrum& s) {
  const double L = s.grid.length();
  double acc = 0.0;
  if (s.grid.boundary() == Boundary::Neumann) {
    acc = s.cosine[0] * s.cosine[0];
    double tail = 0.0;
    for (std::size_t k = 1; k < s.cosine.size(); ++k) tail += s.cosine[k] * s.cosine[k];
    return L * (acc + 0.5 * tail);
  }
  const int half = s.grid.size() / 2;
  acc = std::norm(s.fourier[0]) + std::norm(s.fourier[half]);
  for (int k = 1; k < half; ++k) acc += 2.0 * std::norm(s.fourier[k]);
  return L * acc;
}

/// ||f_x||^2 from the coefficients. The periodic Nyquist mode has no real
/// derivative on the grid and is excluded, consistently with derivative().
inline double derivative_norm_sq(const Spectrum& s) {
  const double L = s.grid.length();
  double acc = 0.0;
  if (s.grid.boundary() == Boundary::Neumann) {
    for (std::size_t k = 1; k < s.cosine.size(); ++k) {
      const double q = wavenumber(s.grid, static_cast<int>(k));
      acc += q * q * s.cosine[k] * s.cosine[k];
    }
    return 0.5 * L * acc;
  }
  const int half = s.grid.size() / 2;
  for (int k = 1; k < half; ++k) {
    const double q = wavenumber(s.grid, k);
    acc += 2.0 * q * q * std::norm(s.fourier[k]);
  }
  return L * acc;
}

/// Spectral derivative.
inline Field derivative(const Field& f) {
  const Grid1D& g = f.grid();
  Spectrum s = to_spectral(f);
  std::vector<double> out(g.size());
  auto& tr = transform_for(g);
  if (g.boundary() == Boundary::Neumann) {
    // d/dx a_k cos(q x) = -a_k q sin(q x)
    std::vector<double> b(g.size(), 0.0);
    for (int k = 1; k < g.size(); ++k) b[k] = -wavenumber(g, k) * s.cosine[k];
    tr.sine_inverse(b, out);
  } else {
    const int half = g.size() / 2;
    for (int k = 0; k < half; ++k) s.fourier[k] *= std::complex<double>(0.0, wavenumber(g, k));
    s.fourier[half] = 0.0;
    tr.fourier_inverse(s.fourier, out);
  }
  return Field(g, std::move(out));
}

inline double l2_norm(const Field& f) { return std::sqrt(l2_norm_sq(to_spectral(f))); }

/// ||f||_{H^1}^2 = ||f||^2 / L^2 + ||f_x||^2.
inline double h1_norm(const Field& f) {
  const Spectrum s = to_spectral(f);
  const double L = f.grid().length();
  return std::sqrt(l2_norm_sq(s) / (L * L) + derivative_norm_sq(s));
}

/// Samples of the band-limited interpolant of `s` on a grid `factor` times finer.
inline std::vector<double> refined_samples(const Spectrum& s, int factor) {
  const Grid1D fine = s.grid.refined(factor);
  std::vector<double> out(fine.size());
  auto& tr = transform_for(fine);
  if (s.grid.boundary() == Boundary::Neumann) {
    std::vector<double> padded(fine.size(), 0.0);
    std::copy(s.cosine.begin(), s.cosine.end(), padded.begin());
    tr.cosine_inverse(padded, out);
  } else {
    const int half = s.grid.size() / 2;
    std::vector<std::complex<double>> padded(fine.size() / 2 + 1, 0.0);
    std::copy(s.fourier.begin(), s.fourier.begin() + half, padded.begin());
    // A coarse Nyquist entry is a real cosine; on the fine grid it is an interior pair.
    padded[half] = 0.5 * s.fourier[half].real();
    tr.fourier_inverse(padded, out);
  }
  return out;
}

/// int u^4 dx, evaluated on a 2x refined grid. Exact for band-limited fields:
/// the quartic has modes below the refined grid's aliasing threshold.
inline double l4_pow4(const Spectrum& s) {
  const std::vector<double> fine = refined_samples(s, 2);
  const double dx = s.grid.spacing() / 2.0;
  double acc = 0.0;
  for (double v : fine) acc += v * v * v * v;
  return acc * dx;
}

inline double l4_pow4(const Field& f) { return l4_pow4(to_spectral(f)); }

/// Evaluate the band-limited interpolant at an arbitrary point.
inline double evaluate(const Spectrum& s, double x) {
  if (s.grid.boundary() == Boundary::Neumann) {
    double acc = 0.0;
    for (std::size_t k = 0; k < s.cosine.size(); ++k)
      acc += s.cosine[k] * std::cos(wavenumber(s.grid, static_cast<int>(k)) * x);
    return acc;
  }
  const int half = s.grid.size() / 2;
  double acc = s.fourier[0].real() + s.fourier[half].real() * std::cos(wavenumber(s.grid, half) * x);
  for (int k = 1; k < half; ++k) {
    const double q = wavenumber(s.grid, k) * x;
    acc += 2.0 * (s.fourier[k].real() * std::cos(q) - s.fourier[k].imag() * std::sin(q));
  }
  return acc;
}

inline double evaluate(const Field& f, double x) { return evaluate(to_spectral(f), x); }

/// Discrete L^2 inner product dx * sum f_j g_j (equal to the modal inner product).
inline double inner(std::span<const double> a, std::span<const double> b, double dx) {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) acc += a[j] * b[j];
  return acc * dx;
}

inline double inner(const Field& a, const Field& b) {
  require(a.grid() == b.grid(), "inner: grid mismatch");
  return inner(a.samples(), b.samples(), a.grid().spacing());
}

}  // namespace detctl
