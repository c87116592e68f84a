#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "detctl/dynamics.hpp"
#include "detctl/interpolants.hpp"
#include "detctl/random.hpp"

namespace detctl {

/// Exact solution A exp((alpha - nu (pi k / L)^2) t) cos(k pi x / L) of the
/// linearization about zero (open loop).
inline Field analytic_linear_mode(int k, double amplitude, double t, const ClosedLoopParams& p, const Grid1D& grid) {
  require(k >= 0, "analytic_linear_mode: k must be >= 0");
  require(grid.boundary() == Boundary::Neumann, "analytic_linear_mode: Neumann grid expected");
  const double q = std::numbers::pi * k / p.length;
  const double a = amplitude * std::exp((p.alpha - p.nu * q * q) * t);
  return Field::from_function(grid, [&](double x) { return a * std::cos(q * x); });
}

/// Exact solution of u' = alpha u - u^3 from u(0) = c0 (spatially constant open loop).
inline double logistic_constant_state(double c0, double t, const ClosedLoopParams& p) {
  const double a = p.alpha;
  const double decay = std::exp(-2.0 * a * t);
  return std::sqrt(a) * c0 / std::sqrt(a * decay + c0 * c0 * (1.0 - decay));
}

enum class AmplitudeLaw { InverseWavenumber };  // c_k ~ U[-1, 1] / (k + 1)

struct TrialEnsemble {
  std::uint64_t seed = 1;
  int n_trials = 200;
  int kmax = 20;
  AmplitudeLaw law = AmplitudeLaw::InverseWavenumber;
};

inline std::vector<Field> draw_trials(const TrialEnsemble& ens, const Grid1D& grid) {
  require(ens.n_trials >= 1, "TrialEnsemble: n_trials must be >= 1");
  require(ens.kmax <= grid.size() / 8, "TrialEnsemble: kmax must be <= M/8");
  Rng rng(ens.seed);
  std::vector<Field> out;
  out.reserve(ens.n_trials);
  for (int i = 0; i < ens.n_trials; ++i) out.push_back(random_band_field(grid, ens.kmax, rng));
  return out;
}

/// Empirical lower bound on the approximation constant of an interpolant.
struct BhEstimate {
  double ratio = 0.0;            // max defect / (h ||phi_x||) after refinement
  double sampled_ratio = 0.0;    // max over the raw trials only
  int counted = 0;               // trials with nonzero ||phi_x||
  double excluded_defect = 0.0;  // largest defect among excluded (constant) trials
};

namespace detail {

inline double bh_ratio(const std::vector<double>& coeffs, const Interpolant& op, const Grid1D& grid) {
  Spectrum s{grid, std::vector<double>(grid.size(), 0.0), {}};
  std::copy(coeffs.begin(), coeffs.end(), s.cosine.begin());
  const double dx_norm = std::sqrt(derivative_norm_sq(s));
  if (!(dx_norm > 0.0)) return 0.0;
  const Field f = from_spectral(s);
  std::vector<double> obs(op.spec().observation_count()), ih(grid.size());
  op.observe(f.samples(), obs);
  op.interpolate(obs, ih);
  return l2_norm(f - Field(grid, std::move(ih))) / (op.spec().h() * dx_norm);
}

}  // namespace detail

/// max over trials of defect(phi) / (h ||phi_x||), sharpened by coordinate
/// ascent on the maximizer's cosine coefficients (up to 100 sweeps, step
/// halved whenever a sweep makes no progress).
inline BhEstimate empirical_bh_constant(const InterpolantSpec& spec, std::span<const Field> trials, int kmax) {
  require(spec.kind != InterpolantKind::DeltaNodal, "empirical_bh_constant: DeltaNodal has no L^2 interpolant");
  require(!trials.empty(), "empirical_bh_constant: no trials");
  const Grid1D grid = trials.front().grid();
  const Interpolant op(spec, grid);
  BhEstimate est;
  std::vector<double> best_coeffs;
  for (const Field& f : trials) {
    const Spectrum s = to_spectral(f);
    const double dx_norm = std::sqrt(derivative_norm_sq(s));
    if (!(dx_norm > 1e-14 * std::sqrt(l2_norm_sq(s)))) {
      est.excluded_defect = std::max(est.excluded_defect, defect(f, spec));
      continue;
    }
    ++est.counted;
    const double r = defect(f, spec) / (spec.h() * dx_norm);
    if (r > est.sampled_ratio) {
      est.sampled_ratio = r;
      best_coeffs.assign(s.cosine.begin(), s.cosine.begin() + std::min<int>(kmax + 1, grid.size()));
    }
  }
  est.ratio = est.sampled_ratio;
  if (best_coeffs.empty()) return est;

  double scale = 0.0;
  for (double c : best_coeffs) scale = std::max(scale, std::abs(c));
  double stepsize = 0.25 * scale;
  double current = detail::bh_ratio(best_coeffs, op, grid);
  for (int iter = 0; iter < 100; ++iter) {
    bool improved = false;
    for (std::size_t k = 0; k < best_coeffs.size(); ++k) {
      for (double sign : {1.0, -1.0}) {
        const double saved = best_coeffs[k];
        best_coeffs[k] = saved + sign * stepsize;
        const double r = detail::bh_ratio(best_coeffs, op, grid);
        if (r > current) {
          current = r;
          improved = true;
          break;
        }
        best_coeffs[k] = saved;
      }
    }
    if (!improved) stepsize *= 0.5;
  }
  est.ratio = std::max(est.ratio, current);
  return est;
}

inline BhEstimate empirical_bh_constant(const InterpolantSpec& spec, const Grid1D& grid, const TrialEnsemble& ens) {
  require(grid.boundary() == Boundary::Neumann, "empirical_bh_constant: Neumann grid expected");
  require(ens.kmax >= 1, "empirical_bh_constant: degenerate ensemble (kmax = 0 draws only constants)");
  const std::vector<Field> trials = draw_trials(ens, grid);
  return empirical_bh_constant(spec, trials, ens.kmax);
}

}  // namespace detctl
