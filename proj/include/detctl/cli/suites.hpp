#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "detctl/analysis.hpp"
#include "detctl/dynamics.hpp"
#include "detctl/oracle.hpp"

namespace detctl::cli {

/// One checked property. worst_ratio is the largest observed lhs/rhs (or
/// error/tolerance); a property passes when it stays <= 1. Informational
/// entries are reported but never fail a suite.
struct PropertyResult {
  std::string name;
  bool pass = true;
  double worst_ratio = 0.0;
  int trials = 0;
  bool informational = false;
  std::string note;
};

struct SuiteReport {
  std::string suite;
  std::uint64_t seed = 0;
  std::vector<PropertyResult> properties;

  bool pass() const {
    return std::all_of(properties.begin(), properties.end(),
                       [](const PropertyResult& p) { return p.informational || p.pass; });
  }
};

namespace detail {

inline void observe_ratio(PropertyResult& p, double ratio) {
  p.worst_ratio = std::max(p.worst_ratio, ratio);
  ++p.trials;
}

inline void close(PropertyResult& p) { p.pass = p.worst_ratio <= 1.0; }

inline std::vector<double> random_cell_points(const InterpolantSpec& spec, Rng& rng) {
  std::vector<double> pts(spec.rank);
  for (int k = 0; k < spec.rank; ++k) pts[k] = rng.uniform(spec.cell_lo(k), spec.cell_hi(k));
  return pts;
}

}  // namespace detail

struct InterpolationSuiteOptions {
  int n_trials = 200;
  int kmax = 20;
  int resolution = 256;
  std::vector<int> ranks{2, 4, 8, 16};
};

/// Interpolation inequalities over seeded random band-limited functions.
inline SuiteReport run_interpolation_suite(std::uint64_t seed, const InterpolationSuiteOptions& opt = {}) {
  const double L = 1.0;
  const double pi = std::numbers::pi;
  const Grid1D neumann(L, opt.resolution, Boundary::Neumann);
  const Grid1D periodic(L, opt.resolution, Boundary::Periodic);

  PropertyResult vol{"volume_defect_le_h_dx"}, nod{"nodal_defect_le_h_dx"}, fou{"fourier_defect_le_h_over_pi_dx"};
  PropertyResult idem{"projection_idempotence"}, split{"volume_l2_le_h_gamma2_plus_poincare"};
  PropertyResult pairs{"delta_point_pairs_le_h_dx2"}, samples{"delta_l2_le_2_h_samples_plus_h2_dx2"};
  PropertyResult sharp{"volume_defect_over_sharp_poincare", true, 0.0, 0, true,
                       "defect / ((h/pi) ||phi_x||); the Poincare constant h/pi is sharp"};
  PropertyResult split_2pi{"volume_l2_le_h_gamma2_plus_h_over_2pi_sq", true, 0.0, 0, true,
                           "same split with Poincare constant (h/2pi)^2"};
  PropertyResult printed{"volume_l2_le_h_over_2pi_sq_gamma2_plus_dx2", true, 0.0, 0, true,
                         "||phi||^2 <= (h/2pi)^2 (gamma^2 + ||phi_x||^2)"};

  Rng fn_rng(seed), pt_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (int t = 0; t < opt.n_trials; ++t) {
    const Field phi = random_band_field(neumann, opt.kmax, fn_rng);
    const Spectrum s = to_spectral(phi);
    const double dx = std::sqrt(derivative_norm_sq(s));
    const double l2sq = l2_norm_sq(s);
    for (int N : opt.ranks) {
      const double h = L / N;
      const auto vspec = InterpolantSpec::volume(L, N);
      const Interpolant vop(vspec, neumann);
      const Observations vobs = vop.observe(phi);
      const Field vih = interpolate(vobs, vspec, neumann);
      const double vdef = l2_norm(phi - vih);
      if (dx > 0.0) {
        detail::observe_ratio(vol, vdef / (h * dx));
        detail::observe_ratio(sharp, vdef / (h / pi * dx));
      } else {
        detail::observe_ratio(vol, vdef > 1e-12 ? std::numeric_limits<double>::infinity() : 0.0);
      }
      const double g2 = gamma_sq(vobs);
      const double poinc = std::pow(h / pi, 2) * dx * dx;
      detail::observe_ratio(split, l2sq / ((h * g2 + poinc) * (1.0 + 1e-12) + 1e-300));
      detail::observe_ratio(split_2pi, l2sq / (h * g2 + poinc / 4.0 + 1e-300));
      detail::observe_ratio(printed, l2sq / (std::pow(h / (2.0 * pi), 2) * (g2 + dx * dx) + 1e-300));

      const auto nspec = InterpolantSpec::nodal(L, N, detail::random_cell_points(InterpolantSpec::nodal(L, N), pt_rng));
      const double ndef = defect(phi, nspec);
      detail::observe_ratio(nod, dx > 0.0 ? ndef / (h * dx) : (ndef > 1e-12 ? 1e300 : 0.0));

      if (4 * N <= opt.resolution) {
        const auto fspec = InterpolantSpec::fourier(L, N, true);
        const double fdef = defect(phi, fspec);
        detail::observe_ratio(fou, dx > 0.0 ? fdef / (h / pi * dx) : (fdef > 1e-12 ? 1e300 : 0.0));
        const Field fih = interpolate(observe(phi, fspec), fspec, neumann);
        const Field fih2 = interpolate(observe(fih, fspec), fspec, neumann);
        detail::observe_ratio(idem, (fih2 - fih).max_abs() / (1e-12 * std::max(1.0, fih.max_abs())));
      }
      const Field vih2 = interpolate(vop.observe(vih), vspec, neumann);
      detail::observe_ratio(idem, (vih2 - vih).max_abs() / (1e-12 * std::max(1.0, vih.max_abs())));
    }

    const Field psi = random_band_field(periodic, opt.kmax, fn_rng);
    const Spectrum ps = to_spectral(psi);
    const double pdx2 = derivative_norm_sq(ps);
    const double pl2sq = l2_norm_sq(ps);
    for (int N : opt.ranks) {
      const double h = L / N;
      const auto base = InterpolantSpec::delta(L, N);
      const auto xk = detail::random_cell_points(base, pt_rng);
      const auto xbar = detail::random_cell_points(base, pt_rng);
      double pair_sum = 0.0, sample_sum = 0.0;
      for (int k = 0; k < N; ++k) {
        const double a = evaluate(ps, xk[k]);
        const double b = evaluate(ps, xbar[k]);
        pair_sum += (a - b) * (a - b);
        sample_sum += a * a;
      }
      detail::observe_ratio(pairs, pdx2 > 0.0 ? pair_sum / (h * pdx2) : (pair_sum > 1e-24 ? 1e300 : 0.0));
      const double rhs = 2.0 * (h * sample_sum + h * h * pdx2);
      detail::observe_ratio(samples, rhs > 0.0 ? pl2sq / rhs : (pl2sq > 0.0 ? 1e300 : 0.0));
    }
  }

  SuiteReport rep{"interpolation", seed, {}};
  for (PropertyResult* p : {&vol, &nod, &fou, &pairs, &samples, &idem, &split}) {
    detail::close(*p);
    rep.properties.push_back(*p);
  }
  for (PropertyResult* p : {&sharp, &split_2pi, &printed}) {
    p->pass = p->worst_ratio <= 1.0;
    rep.properties.push_back(*p);
  }
  return rep;
}

/// max_t energy residual relative to its allowed size on one run.
inline PropertyResult energy_property(const std::string& name, const SimConfig& cfg, const ClosedLoopParams& p,
                                      double tol = 1e-3) {
  PropertyResult out{name};
  const TrajectoryRecord r = simulate(cfg, p);
  double worst = 0.0, scale = 1.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    worst = std::max(worst, r.energy_residual[i]);
    scale = std::max(scale, r.h1[i] * r.h1[i]);
  }
  out.worst_ratio = worst / (tol * scale);
  out.trials = static_cast<int>(r.size());
  detail::close(out);
  return out;
}

struct NamedRun {
  std::string name;
  SimConfig sim;
  ClosedLoopParams params;
};

inline SuiteReport run_energy_suite(const std::vector<NamedRun>& runs) {
  SuiteReport rep{"energy", 0, {}};
  for (const NamedRun& r : runs) rep.properties.push_back(energy_property("energy_identity_" + r.name, r.sim, r.params));
  return rep;
}

/// Run length for a linear mode: 1, cut to about five e-folds for fast modes so
/// the decaying mode stays far above round-off amplified by unstable ones.
inline double linear_horizon(double exponent) {
  if (std::abs(exponent) <= 5.0) return 1.0;
  return std::round(5.0 / std::abs(exponent) * 1e3) / 1e3;
}

/// Measured exponent nu (pi k / L)^2 - alpha of one linear single-mode run.
inline double measured_linear_exponent(int k, const ClosedLoopParams& p, double dt, double T, int M = 64,
                                       Scheme scheme = Scheme::Etd1) {
  const SimConfig cfg{Grid1D(p.length, M, Boundary::Neumann), dt, T, 10, SingleMode{k, 1e-6}, scheme};
  const TrajectoryRecord r = simulate(cfg, ClosedLoopParams{p.nu, p.alpha, p.length, 0.0, {}});
  return 0.5 * fit_decay_rate(r, 0.0).rate;
}

inline SuiteReport run_oracle_suite(std::uint64_t seed) {
  SuiteReport rep{"oracle", seed, {}};
  const double pi = std::numbers::pi;

  {
    const ClosedLoopParams p{1.0, 4.0, pi, 0.0, {}};
    PropertyResult rates{"linear_mode_exponents", true, 0.0, 0, false,
                         "k = 0..6, nu = 1, alpha = 4, L = pi, dt = 1e-4; relative 1e-3 (absolute when marginal)"};
    for (int k = 0; k <= 6; ++k) {
      const double expect = linear_growth_rate(k, p);
      const double got = measured_linear_exponent(k, p, 1e-4, linear_horizon(expect));
      const double err = std::abs(got - expect);
      detail::observe_ratio(rates, expect == 0.0 ? err / 1e-3 : err / (1e-3 * std::abs(expect)));
    }
    detail::close(rates);
    rep.properties.push_back(rates);
    PropertyResult count{"unstable_mode_count", unstable_mode_count(p) == 2, unstable_mode_count(p) == 2 ? 0.0 : 2.0,
                         1};
    rep.properties.push_back(count);
  }

  {
    PropertyResult lin{"linear_mode_vs_analytic", true, 0.0, 0, false,
                       "relative 1e-4 on [0, 1] plus a 1e-12 A round-off floor, etd-rk2"};
    const ClosedLoopParams p{1.0, 4.0, pi, 0.0, {}};
    const Grid1D g(pi, 64, Boundary::Neumann);
    for (int k = 0; k <= 6; ++k) {
      const SimConfig cfg{g, 1e-4, 1.0, 100, SingleMode{k, 1e-6}, Scheme::EtdRk2};
      const TrajectoryRecord r = simulate(cfg, p);
      const double norm = k == 0 ? std::sqrt(p.length) : std::sqrt(p.length / 2.0);
      for (std::size_t i = 0; i < r.size(); ++i) {
        const double amp = 1e-6 * std::exp(-linear_growth_rate(k, p) * r.times[i]);
        detail::observe_ratio(lin, std::abs(r.l2[i] - amp * norm) / ((1e-4 * amp + 1e-12 * 1e-6) * norm));
      }
      const Field exact = analytic_linear_mode(k, 1e-6, 1.0, p, g);
      detail::observe_ratio(lin, (r.final_state - exact).max_abs() / (1e-4 * exact.max_abs() + 1e-12 * 1e-6));
    }
    detail::close(lin);
    rep.properties.push_back(lin);
  }

  {
    PropertyResult logi{"constant_state_vs_logistic", true, 0.0, 0, false, "relative 1e-6 at T = 10, etd-rk2"};
    for (double alpha : {0.5, 1.0, 4.0}) {
      for (double c0 : {0.1, 0.5, 2.0}) {
        const ClosedLoopParams p{1.0, alpha, 1.0, 0.0, {}};
        const SimConfig cfg{Grid1D(1.0, 32, Boundary::Neumann), 1e-4, 10.0, 1000, ConstantState{c0}, Scheme::EtdRk2};
        const TrajectoryRecord r = simulate(cfg, p);
        for (std::size_t i = 0; i < r.size(); ++i) {
          const double u = logistic_constant_state(c0, r.times[i], p);
          detail::observe_ratio(logi, std::abs(r.l2[i] - std::abs(u)) / (1e-6 * std::abs(u)));
        }
      }
    }
    detail::close(logi);
    rep.properties.push_back(logi);
  }

  {
    const Grid1D g(1.0, 256, Boundary::Neumann);
    struct Kind {
      const char* name;
      InterpolantSpec spec;
    };
    const Kind kinds[] = {{"volume", InterpolantSpec::volume(1.0, 4)},
                          {"nodal", InterpolantSpec::nodal(1.0, 4)},
                          {"fourier", InterpolantSpec::fourier(1.0, 4, true)}};
    for (const Kind& k : kinds) {
      PropertyResult bh{std::string("empirical_constant_") + k.name, true, 0.0, 0, false,
                        "max over 50 seeds of the refined ratio / (certified c + 1e-6)"};
      const double c = *certified_constant(k.spec);
      for (int s = 0; s < 50; ++s) {
        const TrialEnsemble ens{seed + static_cast<std::uint64_t>(s), 200, 20};
        const BhEstimate est = empirical_bh_constant(k.spec, g, ens);
        bh.worst_ratio = std::max(bh.worst_ratio, est.ratio / (c + 1e-6));
        bh.trials += est.counted;
      }
      detail::close(bh);
      rep.properties.push_back(bh);
    }
  }
  return rep;
}

}  // namespace detctl::cli
