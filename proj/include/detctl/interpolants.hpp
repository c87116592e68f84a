#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "detctl/field.hpp"

namespace detctl {

enum class InterpolantKind { VolumeAverages, NodalIndicator, FourierProjection, DeltaNodal };

inline std::string_view to_string(InterpolantKind k) {
  switch (k) {
    case InterpolantKind::VolumeAverages: return "volume";
    case InterpolantKind::NodalIndicator: return "nodal";
    case InterpolantKind::FourierProjection: return "fourier";
    case InterpolantKind::DeltaNodal: return "delta";
  }
  return "?";
}

inline bool is_cell_based(InterpolantKind k) { return k != InterpolantKind::FourierProjection; }

/// A finite-rank observation/actuation family on [0, L] with rank N and
/// cells J_k = [(k-1)h, kh], h = L/N.
///
/// obs_points are the measurement points (NodalIndicator, DeltaNodal);
/// act_points are where DeltaNodal injects its point sources. An empty
/// point list means cell midpoints. include_mean only affects
/// FourierProjection: when set, the k = 0 mode is observed and fed back
/// alongside k = 1..N.
struct InterpolantSpec {
  InterpolantKind kind = InterpolantKind::VolumeAverages;
  int rank = 1;
  double length = 1.0;
  std::vector<double> obs_points;
  std::vector<double> act_points;
  bool include_mean = true;

  double h() const { return length / rank; }
  double cell_lo(int k) const { return k * h(); }  // zero-based cell index
  double cell_hi(int k) const { return (k + 1) * h(); }

  /// Number of observed values: N, or N + 1 for FourierProjection with the mean.
  int observation_count() const {
    return kind == InterpolantKind::FourierProjection && include_mean ? rank + 1 : rank;
  }

  std::vector<double> measurement_points() const {
    return obs_points.empty() ? midpoints() : obs_points;
  }
  std::vector<double> actuation_points() const {
    return act_points.empty() ? midpoints() : act_points;
  }
  std::vector<double> midpoints() const {
    std::vector<double> p(rank);
    for (int k = 0; k < rank; ++k) p[k] = (k + 0.5) * h();
    return p;
  }

  static InterpolantSpec volume(double L, int N) { return {InterpolantKind::VolumeAverages, N, L, {}, {}, true}; }
  static InterpolantSpec nodal(double L, int N, std::vector<double> points = {}) {
    return {InterpolantKind::NodalIndicator, N, L, std::move(points), {}, true};
  }
  static InterpolantSpec fourier(double L, int N, bool include_mean = true) {
    return {InterpolantKind::FourierProjection, N, L, {}, {}, include_mean};
  }
  static InterpolantSpec delta(double L, int N, std::vector<double> obs = {}, std::vector<double> act = {}) {
    return {InterpolantKind::DeltaNodal, N, L, std::move(obs), std::move(act), true};
  }
};

/// Certified approximation constant c in ||phi - I_h phi|| <= c h ||phi||_{H^1}.
/// Empty for families without an L^2 interpolant bound (DeltaNodal, or the
/// Fourier projection without its mean term, which cannot reproduce constants).
inline std::optional<double> certified_constant(const InterpolantSpec& spec) {
  switch (spec.kind) {
    case InterpolantKind::VolumeAverages:
    case InterpolantKind::NodalIndicator: return 1.0;
    case InterpolantKind::FourierProjection:
      if (spec.include_mean) return 1.0 / std::numbers::pi;
      return std::nullopt;
    case InterpolantKind::DeltaNodal: return std::nullopt;
  }
  return std::nullopt;
}

inline void validate(const InterpolantSpec& spec) {
  require(spec.rank >= 1, "InterpolantSpec: N must be >= 1");
  require(std::isfinite(spec.length) && spec.length > 0.0, "InterpolantSpec: L must be > 0");
  auto check_points = [&](const std::vector<double>& pts, const char* what) {
    if (pts.empty()) return;
    require(static_cast<int>(pts.size()) == spec.rank,
            std::string("InterpolantSpec: ") + what + " must have exactly N entries");
    const double tol = 1e-12 * spec.length;
    for (int k = 0; k < spec.rank; ++k) {
      require(pts[k] >= spec.cell_lo(k) - tol && pts[k] <= spec.cell_hi(k) + tol,
              std::string("InterpolantSpec: ") + what + "[" + std::to_string(k) + "] lies outside its cell");
    }
  };
  check_points(spec.obs_points, "obs_points");
  check_points(spec.act_points, "act_points");
}

/// Checks that `spec` is resolved by `grid`: rank <= M/4 for every kind; for
/// cell-based kinds M must also be a multiple of 4N so cell edges fall on
/// grid-cell edges.
inline void check_compatible(const InterpolantSpec& spec, const Grid1D& grid) {
  validate(spec);
  require(std::abs(spec.length - grid.length()) <= 1e-12 * grid.length(),
          "interpolant: spec L differs from grid L");
  require(spec.rank <= grid.size() / 4, "interpolant: N must be <= M/4");
  if (is_cell_based(spec.kind)) {
    require(grid.size() % spec.rank == 0, "interpolant: M must be a multiple of N");
    require(grid.size() % (4 * spec.rank) == 0, "interpolant: M must be a multiple of 4N");
  }
  if (spec.kind == InterpolantKind::FourierProjection)
    require(grid.boundary() == Boundary::Neumann, "interpolant: FourierProjection needs a Neumann grid");
}

struct Observations {
  std::vector<double> values;
};

/// Observation and synthesis maps of one InterpolantSpec bound to one grid.
/// Point evaluations are precomputed as rows of the spectral interpolation
/// operator, so nodal observations are exact for band-limited fields.
class Interpolant {
 public:
  Interpolant(InterpolantSpec spec, const Grid1D& grid) : spec_(std::move(spec)), grid_(grid) {
    check_compatible(spec_, grid_);
    cell_width_ = is_cell_based(spec_.kind) ? grid_.size() / spec_.rank : 0;
    if (spec_.kind == InterpolantKind::NodalIndicator || spec_.kind == InterpolantKind::DeltaNodal) {
      for (double x : spec_.measurement_points()) weights_.push_back(evaluation_row(x));
    }
    if (spec_.kind == InterpolantKind::DeltaNodal) {
      require(grid_.boundary() == Boundary::Periodic, "interpolant: DeltaNodal needs a periodic grid");
      for (double x : spec_.actuation_points()) {
        int j = static_cast<int>(std::lround(x / grid_.spacing())) % grid_.size();
        for (int prev : act_cells_)
          require(prev != j, "actuate_delta: two actuation points share one grid cell");
        act_cells_.push_back(j);
      }
    }
  }

  const InterpolantSpec& spec() const { return spec_; }
  const Grid1D& grid() const { return grid_; }

  void observe(std::span<const double> samples, std::span<double> values) const {
    switch (spec_.kind) {
      case InterpolantKind::VolumeAverages:
        for (int k = 0; k < spec_.rank; ++k) {
          double acc = 0.0;
          for (int j = k * cell_width_; j < (k + 1) * cell_width_; ++j) acc += samples[j];
          values[k] = acc / cell_width_;
        }
        break;
      case InterpolantKind::NodalIndicator:
      case InterpolantKind::DeltaNodal:
        for (int k = 0; k < spec_.rank; ++k) {
          double acc = 0.0;
          for (int j = 0; j < grid_.size(); ++j) acc += weights_[k][j] * samples[j];
          values[k] = acc;
        }
        break;
      case InterpolantKind::FourierProjection: {
        std::vector<double> a(grid_.size());
        transform_for(grid_).cosine_forward(samples, a);
        const int first = spec_.include_mean ? 0 : 1;
        for (int k = first; k <= spec_.rank; ++k) values[k - first] = a[k];
        break;
      }
    }
  }

  Observations observe(const Field& f) const {
    require(f.grid() == grid_, "observe: field grid differs from interpolant grid");
    Observations o{std::vector<double>(spec_.observation_count())};
    observe(f.samples(), o.values);
    return o;
  }

  /// I_h as a grid field (cell-based kinds except DeltaNodal, and Fourier).
  void interpolate(std::span<const double> values, std::span<double> out) const {
    switch (spec_.kind) {
      case InterpolantKind::VolumeAverages:
      case InterpolantKind::NodalIndicator:
        for (int k = 0; k < spec_.rank; ++k)
          for (int j = k * cell_width_; j < (k + 1) * cell_width_; ++j) out[j] = values[k];
        break;
      case InterpolantKind::FourierProjection: {
        std::vector<double> a(grid_.size(), 0.0);
        const int first = spec_.include_mean ? 0 : 1;
        for (int k = first; k <= spec_.rank; ++k) a[k] = values[k - first];
        transform_for(grid_).cosine_inverse(a, out);
        break;
      }
      case InterpolantKind::DeltaNodal:
        throw ValidationError("interpolate: DeltaNodal has no L^2 interpolant; use actuate_delta");
    }
  }

  /// Grid realization of h * sum_k v_k delta(x - x_k): value v_k h / dx on the
  /// grid cell holding x_k, zero elsewhere.
  void actuate(std::span<const double> values, std::span<double> out) const {
    require(spec_.kind == InterpolantKind::DeltaNodal, "actuate_delta: spec kind must be DeltaNodal");
    std::fill(out.begin(), out.end(), 0.0);
    const double scale = spec_.h() / grid_.spacing();
    for (int k = 0; k < spec_.rank; ++k) out[act_cells_[k]] += values[k] * scale;
  }

  /// The feedback field the closed loop subtracts (before the gain mu).
  void feedback(std::span<const double> values, std::span<double> out) const {
    if (spec_.kind == InterpolantKind::DeltaNodal)
      actuate(values, out);
    else
      interpolate(values, out);
  }

 private:
  std::vector<double> evaluation_row(double x) const {
    const int M = grid_.size();
    std::vector<double> w(M);
    if (grid_.boundary() == Boundary::Neumann) {
      std::vector<double> basis(M);
      for (int k = 0; k < M; ++k) basis[k] = std::cos(wavenumber(grid_, k) * x);
      for (int j = 0; j < M; ++j) {
        double acc = 1.0;
        for (int k = 1; k < M; ++k) acc += 2.0 * basis[k] * std::cos(std::numbers::pi * k * (j + 0.5) / M);
        w[j] = acc / M;
      }
    } else {
      const int half = M / 2;
      const double xi = x / grid_.length();
      for (int j = 0; j < M; ++j) {
        double acc = 1.0;
        const double phase = xi - static_cast<double>(j) / M;
        for (int k = 1; k < half; ++k) acc += 2.0 * std::cos(2.0 * std::numbers::pi * k * phase);
        acc += std::cos(std::numbers::pi * M * xi) * ((j % 2 == 0) ? 1.0 : -1.0);
        w[j] = acc / M;
      }
    }
    return w;
  }

  InterpolantSpec spec_;
  Grid1D grid_;
  int cell_width_ = 0;
  std::vector<std::vector<double>> weights_;
  std::vector<int> act_cells_;
};

inline Observations observe(const Field& f, const InterpolantSpec& spec) {
  return Interpolant(spec, f.grid()).observe(f);
}

inline Field interpolate(const Observations& obs, const InterpolantSpec& spec, const Grid1D& grid) {
  require(spec.kind != InterpolantKind::DeltaNodal,
          "interpolate: DeltaNodal has no L^2 interpolant; use actuate_delta");
  Interpolant op(spec, grid);
  require(static_cast<int>(obs.values.size()) == spec.observation_count(), "interpolate: observation count");
  std::vector<double> out(grid.size());
  op.interpolate(obs.values, out);
  return Field(grid, std::move(out));
}

inline Field actuate_delta(const Observations& obs, const InterpolantSpec& spec, const Grid1D& grid) {
  require(spec.kind == InterpolantKind::DeltaNodal, "actuate_delta: spec kind must be DeltaNodal");
  require(grid.boundary() == Boundary::Periodic, "actuate_delta: grid must be periodic");
  Interpolant op(spec, grid);
  require(static_cast<int>(obs.values.size()) == spec.rank, "actuate_delta: observation count");
  std::vector<double> out(grid.size());
  op.actuate(obs.values, out);
  return Field(grid, std::move(out));
}

inline double gamma_sq(const Observations& obs) {
  double acc = 0.0;
  for (double v : obs.values) acc += v * v;
  return acc;
}

/// ||f - I_h(f)||_{L^2}.
inline double defect(const Field& f, const InterpolantSpec& spec) {
  require(spec.kind != InterpolantKind::DeltaNodal, "defect: DeltaNodal has no L^2 interpolant");
  const Interpolant op(spec, f.grid());
  const Observations o = op.observe(f);
  std::vector<double> ih(f.size());
  op.interpolate(o.values, ih);
  return l2_norm(f - Field(f.grid(), std::move(ih)));
}

}  // namespace detctl
