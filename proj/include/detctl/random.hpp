#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "detctl/field.hpp"

namespace detctl {

/// Seeded source of uniform doubles. The mapping from engine output to
/// [0, 1) is spelled out so streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

/// Random cosine sum sum_{k=0}^{kmax} c_k cos(k pi x / L), c_k ~ U[-1,1]/(k+1).
/// On a periodic grid the basis is {cos, sin}(2 pi k x / L) with the same law.
inline Field random_band_field(const Grid1D& grid, int kmax, Rng& rng) {
  require(kmax >= 0, "random_band_field: kmax must be >= 0");
  require(kmax <= grid.size() / 8, "random_band_field: kmax must be <= M/8");
  std::vector<double> s(grid.size(), 0.0);
  std::vector<double> ca(kmax + 1), sa(kmax + 1, 0.0);
  for (int k = 0; k <= kmax; ++k) {
    ca[k] = rng.uniform(-1.0, 1.0) / (k + 1);
    if (grid.boundary() == Boundary::Periodic && k > 0) sa[k] = rng.uniform(-1.0, 1.0) / (k + 1);
  }
  for (int j = 0; j < grid.size(); ++j) {
    const double x = grid.point(j);
    double acc = 0.0;
    for (int k = 0; k <= kmax; ++k) {
      const double q = wavenumber(grid, k) * x;
      acc += ca[k] * std::cos(q) + sa[k] * std::sin(q);
    }
    s[j] = acc;
  }
  return Field(grid, std::move(s));
}

}  // namespace detctl
