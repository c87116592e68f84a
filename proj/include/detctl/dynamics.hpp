#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "detctl/field.hpp"
#include "detctl/interpolants.hpp"
#include "detctl/random.hpp"

namespace detctl {

/// Coefficients of u_t - nu u_xx - alpha u + u^3 = -mu * (feedback).
/// An absent control means the open loop.
struct ClosedLoopParams {
  double nu = 1.0;
  double alpha = 1.0;
  double length = 1.0;
  double mu = 0.0;
  std::optional<InterpolantSpec> control;

  bool open_loop() const { return !control.has_value() || mu == 0.0; }
};

inline void validate(const ClosedLoopParams& p) {
  require(std::isfinite(p.nu) && p.nu > 0.0, "params.nu must be > 0");
  require(std::isfinite(p.alpha) && p.alpha > 0.0, "params.alpha must be > 0");
  require(std::isfinite(p.length) && p.length > 0.0, "params.L must be > 0");
  require(std::isfinite(p.mu) && p.mu >= 0.0, "params.mu must be >= 0");
  if (p.control) {
    validate(*p.control);
    require(std::abs(p.control->length - p.length) <= 1e-12 * p.length, "control L must equal params L");
  }
}

enum class Scheme { Etd1, EtdRk2 };

struct SingleMode {
  int k = 1;
  double amplitude = 1.0;
};

/// Seeded random cosine sum, rescaled so that ||u(0)||_{L^2} = amplitude.
struct RandomBand {
  std::uint64_t seed = 1;
  int kmax = 4;
  double amplitude = 1.0;
};

struct ConstantState {
  double value = 0.0;
};

using InitialCondition = std::variant<SingleMode, RandomBand, ConstantState>;

inline Field make_initial_field(const InitialCondition& ic, const Grid1D& grid) {
  return std::visit(
      [&](const auto& c) -> Field {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SingleMode>) {
          require(c.k >= 0 && c.k <= grid.size() / 8, "ic.k must be in [0, M/8]");
          const double q = wavenumber(grid, c.k);
          return Field::from_function(grid, [&](double x) { return c.amplitude * std::cos(q * x); });
        } else if constexpr (std::is_same_v<T, RandomBand>) {
          require(std::isfinite(c.amplitude) && c.amplitude >= 0.0, "ic.amplitude must be >= 0");
          Rng rng(c.seed);
          Field f = random_band_field(grid, c.kmax, rng);
          const double n = l2_norm(f);
          if (n == 0.0 || c.amplitude == 0.0) return Field(grid);
          return (c.amplitude / n) * f;
        } else {
          require(std::isfinite(c.value), "ic.value must be finite");
          return Field::from_function(grid, [&](double) { return c.value; });
        }
      },
      ic);
}

struct SimConfig {
  Grid1D grid{1.0, 64, Boundary::Neumann};
  double dt = 1e-4;
  double T = 1.0;
  int record_every = 1;
  InitialCondition ic = RandomBand{};
  Scheme scheme = Scheme::Etd1;
};

/// Recorded series of one run. control_pairing is <F(u), u> where F is the
/// feedback field (I_h(u), or the delta realization); it is kept so the
/// energy identity can be re-evaluated offline.
struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> l2;
  std::vector<double> h1x;
  std::vector<double> h1;
  std::vector<double> l4p4;
  std::vector<double> gamma2;
  std::vector<double> ih_l2;
  std::vector<double> energy_residual;
  std::vector<double> control_pairing;
  Field final_state{Grid1D(1.0, 8, Boundary::Neumann)};

  std::size_t size() const { return times.size(); }
};

enum class IntegrationFailure { NonFinite, StabilityLimit };

/// Integration stopped early. Carries the time of failure and the trajectory
/// recorded up to that point.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(IntegrationFailure kind, double time, TrajectoryRecord partial, const std::string& what)
      : std::runtime_error(what), kind_(kind), time_(time), partial_(std::move(partial)) {}
  IntegrationFailure kind() const { return kind_; }
  double time() const { return time_; }
  const TrajectoryRecord& partial() const { return partial_; }

 private:
  IntegrationFailure kind_;
  double time_;
  TrajectoryRecord partial_;
};

/// Largest step the explicit reaction/control update tolerates.
inline double stability_limit(double alpha, double mu, double max_abs_u) {
  return 0.5 / (alpha + 3.0 * max_abs_u * max_abs_u + mu);
}

namespace detail {

inline double phi1(double z) {
  if (std::abs(z) < 1e-5) return 1.0 + z / 2.0 + z * z / 6.0;
  return std::expm1(z) / z;
}

inline double phi2(double z) {
  if (std::abs(z) < 1e-3) return 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0;
  return (std::expm1(z) - z) / (z * z);
}

inline void check_bc(const ClosedLoopParams& p, const Grid1D& grid) {
  require(std::abs(p.length - grid.length()) <= 1e-12 * grid.length(), "params L must equal grid L");
  if (!p.control) {
    return;
  }
  if (p.control->kind == InterpolantKind::DeltaNodal)
    require(grid.boundary() == Boundary::Periodic, "DeltaNodal control requires a periodic grid");
  else
    require(grid.boundary() == Boundary::Neumann, "interpolant control requires a Neumann grid");
}

}  // namespace detail

/// Exponential-integrator stepper for the closed loop.
///
/// Diffusion is integrated exactly per mode (factor exp(-nu q_k^2 dt)); the
/// reaction alpha u - u^3 and the feedback are explicit. On periodic grids the
/// Nyquist mode is projected out after every step.
class ClosedLoopStepper {
 public:
  ClosedLoopStepper(const Grid1D& grid, ClosedLoopParams params, double dt, Scheme scheme = Scheme::Etd1)
      : grid_(grid), params_(std::move(params)), dt_(dt), scheme_(scheme) {
    validate(params_);
    detail::check_bc(params_, grid_);
    require(std::isfinite(dt) && dt > 0.0, "dt must be > 0");
    if (params_.control) {
      op_.emplace(*params_.control, grid_);
      obs_.resize(params_.control->observation_count());
    }
    const int modes = mode_count();
    decay_.resize(modes);
    p1_.resize(modes);
    p2_.resize(modes);
    for (int k = 0; k < modes; ++k) {
      const double q = wavenumber(grid_, k);
      const double z = -params_.nu * q * q * dt_;
      decay_[k] = std::exp(z);
      p1_[k] = dt_ * detail::phi1(z);
      p2_[k] = dt_ * detail::phi2(z);
    }
    if (grid_.boundary() == Boundary::Periodic) {
      decay_[modes - 1] = p1_[modes - 1] = p2_[modes - 1] = 0.0;
    }
    const auto M = static_cast<std::size_t>(grid_.size());
    work_.resize(M);
    feedback_.resize(M);
    stage_.resize(M);
    u_hat_.resize(modes);
    n_hat_.resize(modes);
    a_hat_.resize(modes);
    tmp_.resize(M);
  }

  const Grid1D& grid() const { return grid_; }
  const ClosedLoopParams& params() const { return params_; }
  double dt() const { return dt_; }
  bool has_control() const { return op_.has_value(); }
  const Interpolant& interpolant() const { return *op_; }

  /// alpha u - u^3 - mu F(u), written to `out`.
  void explicit_terms(std::span<const double> u, std::span<double> out) {
    const double a = params_.alpha;
    for (std::size_t j = 0; j < u.size(); ++j) out[j] = a * u[j] - u[j] * u[j] * u[j];
    if (op_ && params_.mu != 0.0) {
      op_->observe(u, obs_);
      op_->feedback(obs_, feedback_);
      for (std::size_t j = 0; j < u.size(); ++j) out[j] -= params_.mu * feedback_[j];
    }
  }

  /// Full right-hand side nu u_xx + alpha u - u^3 - mu F(u).
  std::vector<double> rhs(std::span<const double> u) {
    std::vector<double> out(u.size());
    explicit_terms(u, out);
    to_modal(u, u_hat_);
    for (int k = 0; k < mode_count(); ++k) {
      const double q = wavenumber(grid_, k);
      a_hat_[k] = -params_.nu * q * q * u_hat_[k];
    }
    if (grid_.boundary() == Boundary::Periodic) a_hat_.back() = 0.0;
    from_modal(a_hat_, tmp_);
    for (std::size_t j = 0; j < u.size(); ++j) out[j] += tmp_[j];
    return out;
  }

  /// Advance `u` by one step in place.
  void advance(std::span<double> u) {
    explicit_terms(u, work_);
    to_modal(u, u_hat_);
    to_modal(work_, n_hat_);
    const int modes = mode_count();
    for (int k = 0; k < modes; ++k) a_hat_[k] = decay_[k] * u_hat_[k] + p1_[k] * n_hat_[k];
    if (scheme_ == Scheme::EtdRk2) {
      from_modal(a_hat_, stage_);
      explicit_terms(stage_, work_);
      to_modal(work_, u_hat_);  // u_hat_ now holds N(a)
      for (int k = 0; k < modes; ++k) a_hat_[k] += p2_[k] * (u_hat_[k] - n_hat_[k]);
    }
    from_modal(a_hat_, u);
  }

 private:
  int mode_count() const {
    return grid_.boundary() == Boundary::Neumann ? grid_.size() : grid_.size() / 2 + 1;
  }

  void to_modal(std::span<const double> x, std::vector<std::complex<double>>& c) {
    auto& tr = transform_for(grid_);
    if (grid_.boundary() == Boundary::Neumann) {
      tr.cosine_forward(x, tmp_);
      for (std::size_t k = 0; k < c.size(); ++k) c[k] = tmp_[k];
    } else {
      tr.fourier_forward(x, c);
    }
  }

  void from_modal(const std::vector<std::complex<double>>& c, std::span<double> x) {
    auto& tr = transform_for(grid_);
    if (grid_.boundary() == Boundary::Neumann) {
      for (std::size_t k = 0; k < c.size(); ++k) tmp_[k] = c[k].real();
      tr.cosine_inverse(tmp_, x);
    } else {
      tr.fourier_inverse(c, x);
    }
  }

  Grid1D grid_;
  ClosedLoopParams params_;
  double dt_;
  Scheme scheme_;
  std::optional<Interpolant> op_;
  std::vector<double> obs_;
  std::vector<double> decay_, p1_, p2_;
  std::vector<double> work_, feedback_, stage_, tmp_;
  std::vector<std::complex<double>> u_hat_, n_hat_, a_hat_;
};

/// nu u_xx + alpha u - u^3 - mu (interpolate o observe)(u), or the delta
/// realization for DeltaNodal.
inline Field rhs(const Field& u, const ClosedLoopParams& p) {
  ClosedLoopStepper stepper(u.grid(), p, 1.0);
  return Field(u.grid(), stepper.rhs(u.samples()));
}

/// One ETD step. Throws IntegrationError if the state leaves the finite range
/// or dt exceeds the explicit stability limit.
inline Field step(const Field& u, const ClosedLoopParams& p, double dt, Scheme scheme = Scheme::Etd1) {
  ClosedLoopStepper stepper(u.grid(), p, dt, scheme);
  const double limit = stability_limit(p.alpha, p.mu, u.max_abs());
  if (dt > limit)
    throw IntegrationError(IntegrationFailure::StabilityLimit, 0.0, {},
                           "dt exceeds stability limit " + std::to_string(limit));
  std::vector<double> s(u.samples().begin(), u.samples().end());
  stepper.advance(s);
  for (double v : s)
    if (!std::isfinite(v)) throw IntegrationError(IntegrationFailure::NonFinite, dt, {}, "non-finite state after step");
  return Field(u.grid(), std::move(s));
}

namespace detail {

/// d/dt of a sampled series: three-point centered differences in the
/// interior, three-point one-sided differences at the ends (nonuniform-safe).
inline std::vector<double> time_derivative(const std::vector<double>& t, const std::vector<double>& f) {
  const std::size_t n = t.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  if (n == 2) {
    d[0] = d[1] = (f[1] - f[0]) / (t[1] - t[0]);
    return d;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double hm = t[i] - t[i - 1];
    const double hp = t[i + 1] - t[i];
    d[i] = (hm * hm * f[i + 1] - hp * hp * f[i - 1] - (hm * hm - hp * hp) * f[i]) / (hp * hm * (hp + hm));
  }
  {
    const double h1 = t[1] - t[0], h2 = t[2] - t[1];
    d[0] = -(2 * h1 + h2) / (h1 * (h1 + h2)) * f[0] + (h1 + h2) / (h1 * h2) * f[1] - h1 / (h2 * (h1 + h2)) * f[2];
  }
  {
    const double h1 = t[n - 1] - t[n - 2], h2 = t[n - 2] - t[n - 3];
    d[n - 1] = (2 * h1 + h2) / (h1 * (h1 + h2)) * f[n - 1] - (h1 + h2) / (h1 * h2) * f[n - 2] +
               h1 / (h2 * (h1 + h2)) * f[n - 3];
  }
  return d;
}

}  // namespace detail

/// |1/2 d/dt ||u||^2 + nu ||u_x||^2 - alpha ||u||^2 + ||u||_4^4 + mu <F(u), u>| per record.
inline std::vector<double> energy_residual(const TrajectoryRecord& r, const ClosedLoopParams& p) {
  std::vector<double> e(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) e[i] = r.l2[i] * r.l2[i];
  const std::vector<double> de = detail::time_derivative(r.times, e);
  std::vector<double> out(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    out[i] = std::abs(0.5 * de[i] + p.nu * r.h1x[i] * r.h1x[i] - p.alpha * e[i] + r.l4p4[i] +
                      p.mu * r.control_pairing[i]);
  }
  return out;
}

namespace detail {

inline void record_state(TrajectoryRecord& r, double t, std::span<const double> u, const Grid1D& grid,
                         ClosedLoopStepper& stepper) {
  const Field f(grid, std::vector<double>(u.begin(), u.end()));
  const Spectrum s = to_spectral(f);
  const double L = grid.length();
  const double l2sq = l2_norm_sq(s);
  const double h1xsq = derivative_norm_sq(s);
  r.times.push_back(t);
  r.l2.push_back(std::sqrt(l2sq));
  r.h1x.push_back(std::sqrt(h1xsq));
  r.h1.push_back(std::sqrt(l2sq / (L * L) + h1xsq));
  r.l4p4.push_back(l4_pow4(s));
  if (!stepper.has_control()) {
    r.gamma2.push_back(0.0);
    r.ih_l2.push_back(0.0);
    r.control_pairing.push_back(0.0);
    return;
  }
  const Interpolant& op = stepper.interpolant();
  const Observations o = op.observe(f);
  const double g2 = gamma_sq(o);
  std::vector<double> fb(grid.size());
  op.feedback(o.values, fb);
  r.gamma2.push_back(g2);
  if (op.spec().kind == InterpolantKind::DeltaNodal) {
    // Nodal-indicator interpolant of the measurements: sum u(xbar_k) chi_{J_k}.
    r.ih_l2.push_back(std::sqrt(op.spec().h() * g2));
  } else {
    r.ih_l2.push_back(l2_norm(Field(grid, fb)));
  }
  r.control_pairing.push_back(inner(fb, u, grid.spacing()));
}

}  // namespace detail

inline void validate(const SimConfig& cfg) {
  require(std::isfinite(cfg.dt) && cfg.dt > 0.0, "sim.dt must be > 0");
  require(std::isfinite(cfg.T) && cfg.T > cfg.dt, "sim.T must be > dt");
  require(cfg.record_every >= 1, "sim.record_every must be >= 1");
  const double steps = cfg.T / cfg.dt;
  require(std::abs(steps - std::round(steps)) <= 1e-6 * steps, "sim.T must be an integer multiple of sim.dt");
}

/// Integrates the closed loop from cfg.ic and records norms every
/// cfg.record_every steps (and at the final step).
inline TrajectoryRecord simulate(const SimConfig& cfg, const ClosedLoopParams& p) {
  validate(cfg);
  ClosedLoopStepper stepper(cfg.grid, p, cfg.dt, cfg.scheme);
  const Field u0 = make_initial_field(cfg.ic, cfg.grid);
  std::vector<double> u(u0.samples().begin(), u0.samples().end());
  const long long steps = std::llround(cfg.T / cfg.dt);

  TrajectoryRecord rec;
  auto finish = [&](TrajectoryRecord& r) {
    r.energy_residual = energy_residual(r, p);
  };

  detail::record_state(rec, 0.0, u, cfg.grid, stepper);
  for (long long n = 0; n < steps; ++n) {
    const double t = static_cast<double>(n) * cfg.dt;
    double umax = 0.0;
    for (double v : u) umax = std::max(umax, std::abs(v));
    const double limit = stability_limit(p.alpha, p.mu, umax);
    if (cfg.dt > limit) {
      finish(rec);
      rec.final_state = Field(cfg.grid, u);
      throw IntegrationError(IntegrationFailure::StabilityLimit, t, std::move(rec),
                             "dt exceeds stability limit " + std::to_string(limit) + " at t=" + std::to_string(t));
    }
    stepper.advance(u);
    const double t_next = static_cast<double>(n + 1) * cfg.dt;
    for (double v : u) {
      if (!std::isfinite(v)) {
        finish(rec);
        throw IntegrationError(IntegrationFailure::NonFinite, t_next, std::move(rec),
                               "non-finite state at t=" + std::to_string(t_next));
      }
    }
    if ((n + 1) % cfg.record_every == 0 || n + 1 == steps) detail::record_state(rec, t_next, u, cfg.grid, stepper);
  }
  finish(rec);
  rec.final_state = Field(cfg.grid, std::move(u));
  return rec;
}

/// Whether one theorem's hypotheses hold for a parameter set, and the decay
/// exponent it predicts.
struct TheoremCheck {
  bool applicable = false;
  bool holds = false;
  std::optional<double> exponent;
  std::string detail;
};

struct ConditionReport {
  bool open_loop = true;
  std::optional<double> c;      // certified approximation constant
  std::optional<double> h;      // L / N
  std::optional<double> mu_c2h2;
  TheoremCheck existence;       // nu >= mu c^2 h^2 (absorbing bounds)
  TheoremCheck interpolant;     // r = mu - (2 alpha + nu / L^2) > 0 plus the above
  TheoremCheck volume;          // mu h >= nu and nu > alpha h^2 / (4 pi^2)
  bool volume_printed_hypothesis = false;  // mu >= nu > (h / 2pi)^2 max{alpha, mu}
  TheoremCheck delta;           // mu > 4 alpha and nu >= 2 mu h^2
};

inline ConditionReport check_conditions(const ClosedLoopParams& p) {
  ConditionReport rep;
  rep.open_loop = p.open_loop();
  if (!p.control) return rep;
  const InterpolantSpec& spec = *p.control;
  const double h = spec.h();
  const double pi = std::numbers::pi;
  rep.h = h;
  rep.c = certified_constant(spec);
  const bool active = !rep.open_loop;

  if (spec.kind != InterpolantKind::DeltaNodal) {
    rep.existence.applicable = true;
    if (rep.c) {
      rep.mu_c2h2 = p.mu * *rep.c * *rep.c * h * h;
      rep.existence.holds = active && p.nu >= *rep.mu_c2h2;
      rep.existence.detail = "nu >= mu c^2 h^2";
    } else {
      rep.existence.detail = "no certified constant for this interpolant";
    }
    rep.interpolant.applicable = true;
    const double r = p.mu - (2.0 * p.alpha + p.nu / (p.length * p.length));
    rep.interpolant.exponent = r;
    rep.interpolant.holds = rep.existence.holds && r > 0.0;
    rep.interpolant.detail = "r = mu - (2 alpha + nu/L^2) > 0 and nu >= mu c^2 h^2";
  }
  if (spec.kind == InterpolantKind::VolumeAverages) {
    rep.volume.applicable = true;
    const double N = spec.rank;
    rep.volume.exponent = p.nu * std::pow(2.0 * pi * N / p.length, 2) - p.alpha;
    rep.volume.holds = active && p.mu * h >= p.nu && p.nu > p.alpha * h * h / (4.0 * pi * pi);
    rep.volume.detail = "mu h >= nu and nu > alpha h^2 / (4 pi^2)";
    const double scale = std::pow(h / (2.0 * pi), 2);
    rep.volume_printed_hypothesis = active && p.mu >= p.nu && p.nu > scale * std::max(p.alpha, p.mu);
  }
  if (spec.kind == InterpolantKind::DeltaNodal) {
    rep.delta.applicable = true;
    rep.delta.exponent = 2.0 * (p.mu / 4.0 - p.alpha);
    rep.delta.holds = active && p.mu > 4.0 * p.alpha && p.nu >= 2.0 * p.mu * h * h;
    rep.delta.detail = "mu > 4 alpha and nu >= 2 mu h^2";
  }
  return rep;
}

}  // namespace detctl
