#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "detctl/dynamics.hpp"

namespace detctl {

/// Decay exponent nu (pi k / L)^2 - alpha of the linearized mode cos(k pi x / L).
/// Negative means the mode grows.
inline double linear_growth_rate(int k, const ClosedLoopParams& p) {
  require(k >= 0, "linear_growth_rate: k must be >= 0");
  const double q = std::numbers::pi * k / p.length;
  return p.nu * q * q - p.alpha;
}

/// Number of k >= 0 whose linearized mode grows about u = 0.
inline int unstable_mode_count(const ClosedLoopParams& p) {
  int count = 0;
  while (linear_growth_rate(count, p) < 0.0) ++count;
  return count;
}

/// Log-linear fit ||u(t)||^2 ~ C exp(-rate t) on [t0, t1].
struct DecayFit {
  double rate = 0.0;
  double t0 = 0.0;
  double t1 = 0.0;
  double residual = 0.0;  // RMS of the log residuals
  std::size_t samples = 0;
};

inline constexpr double kUnderflowFloor = 1e-280;

inline DecayFit fit_decay_rate(std::span<const double> times, std::span<const double> l2, double t0) {
  std::vector<double> t, y;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t0) continue;
    const double e = l2[i] * l2[i];
    if (!(e > kUnderflowFloor)) break;  // fit stops at the floor
    t.push_back(times[i]);
    y.push_back(std::log(e));
  }
  if (t.size() < 10) throw NoFitError("fit_decay_rate: fewer than 10 samples above the floor past t0");
  const double n = static_cast<double>(t.size());
  double tm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    tm += t[i];
    ym += y[i];
  }
  tm /= n;
  ym /= n;
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    stt += (t[i] - tm) * (t[i] - tm);
    sty += (t[i] - tm) * (y[i] - ym);
  }
  if (!(stt > 0.0)) throw NoFitError("fit_decay_rate: degenerate time window");
  const double slope = sty / stt;
  double ss = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = y[i] - (ym + slope * (t[i] - tm));
    ss += r * r;
  }
  return DecayFit{-slope, t.front(), t.back(), std::sqrt(ss / n), t.size()};
}

inline DecayFit fit_decay_rate(const TrajectoryRecord& traj, double t0) {
  return fit_decay_rate(traj.times, traj.l2, t0);
}

/// True iff ||u(t_i)||^2 <= (1 + slack) exp(-r t_i) ||u(0)||^2 at every record.
/// Compared in log form so that tiny states do not underflow the bound.
inline bool verify_decay_bound(std::span<const double> times, std::span<const double> l2, double r, double slack) {
  require(std::isfinite(r), "verify_decay_bound: r must be finite");
  if (l2.empty()) return true;
  const double e0 = l2[0] * l2[0];
  for (std::size_t i = 0; i < l2.size(); ++i) {
    const double e = l2[i] * l2[i];
    if (e == 0.0) continue;
    if (e0 == 0.0) return false;
    if (std::log(e) > std::log1p(slack) - r * times[i] + std::log(e0)) return false;
  }
  return true;
}

inline bool verify_decay_bound(const TrajectoryRecord& traj, double r, double slack) {
  return verify_decay_bound(traj.times, traj.l2, r, slack);
}

struct AbsorbingBounds {
  double R0_sq = 0.0;
  double R1_sq = 0.0;
};

/// R0^2 = (alpha + nu/L^2)^2 L^3 / nu and
/// R1^2 = (1/nu) [(alpha + nu/L^2) L + R0^2] [1 + 2(alpha + mu^2 c^2 h^2 / (2 nu))].
inline AbsorbingBounds absorbing_bounds(const ClosedLoopParams& p) {
  const double L = p.length;
  const double a = p.alpha + p.nu / (L * L);
  const double R0_sq = a * a * L * L * L / p.nu;
  double ch = 0.0;
  if (p.control) {
    if (auto c = certified_constant(*p.control)) ch = *c * p.control->h();
  }
  const double R1_sq = (a * L + R0_sq) * (1.0 + 2.0 * (p.alpha + p.mu * p.mu * ch * ch / (2.0 * p.nu))) / p.nu;
  return {R0_sq, R1_sq};
}

/// Largest ||u||^2 and ||u_x||^2 seen on the second half of a run.
struct AbsorbingMonitor {
  double t_half = 0.0;
  double sup_l2_sq = 0.0;
  double sup_h1x_sq = 0.0;
};

inline AbsorbingMonitor absorbing_monitor(const TrajectoryRecord& traj) {
  AbsorbingMonitor m;
  if (traj.size() == 0) return m;
  m.t_half = 0.5 * traj.times.back();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj.times[i] < m.t_half) continue;
    m.sup_l2_sq = std::max(m.sup_l2_sq, traj.l2[i] * traj.l2[i]);
    m.sup_h1x_sq = std::max(m.sup_h1x_sq, traj.h1x[i] * traj.h1x[i]);
  }
  return m;
}

/// ||u_x(T)|| <= factor * ||u_x(0)|| at the final record.
inline bool verify_h1_decay(const TrajectoryRecord& traj, double factor = 1e-3) {
  if (traj.size() == 0) return true;
  return traj.h1x.back() <= factor * traj.h1x.front();
}

/// max_t residual <= tol * max(max_t ||u||_{H^1}^2, 1).
inline bool verify_energy_identity(const TrajectoryRecord& traj, double tol = 1e-3) {
  double worst = 0.0, scale = 1.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    worst = std::max(worst, traj.energy_residual[i]);
    scale = std::max(scale, traj.h1[i] * traj.h1[i]);
  }
  return worst <= tol * scale;
}

// ---------------------------------------------------------------------------
// Minimal controller rank sweeps

using GainRule = std::function<double(double alpha, int N)>;

/// Stabilized iff ||u(T)|| <= ratio ||u(0)|| at T = horizon_factor / alpha.
struct StabilizationCriterion {
  double ratio = 1e-4;
  double horizon_factor = 20.0;
};

struct SweepSetup {
  int base_resolution = 128;
  double dt = 1e-4;
  RandomBand ic{7, 8, 1.0};
  Scheme scheme = Scheme::Etd1;
  int jobs = 1;
};

struct SweepCell {
  double alpha = 0.0;
  int N = 0;
  int M = 0;
  double mu = 0.0;
  double terminal_ratio = std::numeric_limits<double>::infinity();
  bool stabilized = false;
  std::optional<std::string> failure;
};

struct MinimalNResult {
  std::optional<int> minimal_N;
  std::vector<SweepCell> cells;  // ordered as N_range
};

/// Smallest grid resolution >= base that is a multiple of 4N.
inline int resolution_for_rank(int base, int N) {
  const int unit = 4 * N;
  return ((base + unit - 1) / unit) * unit;
}

/// One closed-loop run of a sweep: controller of `base.control`'s kind with
/// rank N and gain mu, integrated to horizon_factor / alpha.
inline SweepCell run_sweep_cell(const ClosedLoopParams& base, double alpha, int N, double mu,
                                const StabilizationCriterion& crit, const SweepSetup& setup) {
  require(base.control.has_value(), "sweep: base params need a control kind");
  SweepCell cell;
  cell.alpha = alpha;
  cell.N = N;
  cell.mu = mu;
  cell.M = resolution_for_rank(setup.base_resolution, N);
  const Boundary bc = base.control->kind == InterpolantKind::DeltaNodal ? Boundary::Periodic : Boundary::Neumann;

  ClosedLoopParams p = base;
  p.alpha = alpha;
  p.mu = mu;
  InterpolantSpec spec = *base.control;
  spec.rank = N;
  spec.obs_points.clear();
  spec.act_points.clear();
  p.control = spec;

  const double T = crit.horizon_factor / alpha;
  const long long steps = std::max<long long>(2, static_cast<long long>(std::ceil(T / setup.dt - 1e-9)));
  SimConfig cfg{Grid1D(base.length, cell.M, bc), T / static_cast<double>(steps), T, static_cast<int>(steps),
                setup.ic, setup.scheme};
  try {
    const TrajectoryRecord r = simulate(cfg, p);
    const double u0 = r.l2.front();
    cell.terminal_ratio = u0 > 0.0 ? r.l2.back() / u0 : 0.0;
    cell.stabilized = cell.terminal_ratio <= crit.ratio;
  } catch (const IntegrationError& e) {
    cell.failure = e.what();
  }
  return cell;
}

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

/// Scans every N in N_range (each run independent) and returns the smallest
/// stabilizing rank together with all per-N terminal ratios.
inline MinimalNResult minimal_stabilizing_N(const ClosedLoopParams& base, const GainRule& mu_rule,
                                            std::span<const int> N_range, const StabilizationCriterion& crit,
                                            const SweepSetup& setup) {
  require(!N_range.empty(), "minimal_stabilizing_N: N_range must be nonempty");
  require(std::is_sorted(N_range.begin(), N_range.end()) &&
              std::adjacent_find(N_range.begin(), N_range.end()) == N_range.end(),
          "minimal_stabilizing_N: N_range must be strictly increasing");
  require(N_range.front() >= 1, "minimal_stabilizing_N: N must be >= 1");
  MinimalNResult out;
  out.cells.resize(N_range.size());
  parallel_for(N_range.size(), setup.jobs, [&](std::size_t i) {
    const int N = N_range[i];
    out.cells[i] = run_sweep_cell(base, base.alpha, N, mu_rule(base.alpha, N), crit, setup);
  });
  for (const SweepCell& c : out.cells) {
    if (c.stabilized) {
      out.minimal_N = c.N;
      break;
    }
  }
  return out;
}

}  // namespace detctl
