#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "detctl/errors.hpp"

namespace detctl {

enum class Boundary { Neumann, Periodic };

inline std::string_view to_string(Boundary bc) {
  return bc == Boundary::Neumann ? "neumann" : "periodic";
}

/// Uniform discretization of [0, L].
///
/// Neumann grids sample at cell midpoints x_j = (j + 1/2) dx, which is the
/// natural node set of the type-II cosine transform. Periodic grids sample at
/// x_j = j dx. In both cases dx = L / M.
class Grid1D {
 public:
  Grid1D(double length, int resolution, Boundary bc)
      : length_(length), resolution_(resolution), bc_(bc) {
    require(std::isfinite(length) && length > 0.0, "Grid1D: L must be finite and > 0");
    require(resolution >= 8, "Grid1D: M must be >= 8");
    require(bc != Boundary::Periodic || resolution % 2 == 0,
            "Grid1D: periodic grids need an even M");
  }

  double length() const { return length_; }
  int size() const { return resolution_; }
  Boundary boundary() const { return bc_; }
  double spacing() const { return length_ / resolution_; }

  double point(int j) const {
    const double offset = bc_ == Boundary::Neumann ? 0.5 : 0.0;
    return (j + offset) * spacing();
  }

  std::vector<double> points() const {
    std::vector<double> x(resolution_);
    for (int j = 0; j < resolution_; ++j) x[j] = point(j);
    return x;
  }

  /// Same domain and boundary treatment, `factor` times as many samples.
  Grid1D refined(int factor) const { return Grid1D(length_, resolution_ * factor, bc_); }

  bool operator==(const Grid1D&) const = default;

 private:
  double length_;
  int resolution_;
  Boundary bc_;
};

}  // namespace detctl
