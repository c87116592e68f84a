#include <cmath>
#include <numbers>

#include "catch_amalgamated.hpp"
#include "detctl/analysis.hpp"

using namespace detctl;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
constexpr double pi = std::numbers::pi;

// Records with ||u||^2 = f(t) on a uniform time grid.
TrajectoryRecord synthetic(double T, int n, double (*f)(double)) {
  TrajectoryRecord r;
  for (int i = 0; i <= n; ++i) {
    const double t = T * i / n;
    r.times.push_back(t);
    r.l2.push_back(std::sqrt(f(t)));
  }
  return r;
}
}  // namespace

TEST_CASE("linear growth rate examples") {
  CHECK(linear_growth_rate(0, ClosedLoopParams{1.0, 2.5, 1.0, 0.0, {}}) == -2.5);
  const ClosedLoopParams p{1.0, 4.0, pi, 0.0, {}};
  CHECK_THAT(linear_growth_rate(2, p), WithinAbs(0.0, 1e-14));
  CHECK_THAT(linear_growth_rate(3, p), WithinAbs(5.0, 1e-14));
  CHECK_THROWS_AS(linear_growth_rate(-1, p), ValidationError);
}

TEST_CASE("unstable mode count examples") {
  CHECK(unstable_mode_count(ClosedLoopParams{1.0, 4.0, pi, 0.0, {}}) == 2);
  CHECK(unstable_mode_count(ClosedLoopParams{1.0, 1e-9, pi, 0.0, {}}) == 1);
  CHECK(unstable_mode_count(ClosedLoopParams{1.0, 100.0, pi, 0.0, {}}) == 10);
}

TEST_CASE("unstable mode count agrees with enumeration", "[property]") {
  Rng rng(77);
  for (int t = 0; t < 300; ++t) {
    const ClosedLoopParams p{rng.uniform(0.01, 5.0), rng.uniform(0.01, 500.0), rng.uniform(0.1, 10.0), 0.0, {}};
    int brute = 0;
    for (int k = 0; k <= 1000; ++k) brute += linear_growth_rate(k, p) < 0.0 ? 1 : 0;
    CHECK(unstable_mode_count(p) == brute);
  }
}

TEST_CASE("decay fit on exact exponentials") {
  const DecayFit a = fit_decay_rate(synthetic(5.0, 100, [](double t) { return std::exp(-2 * t); }), 0.0);
  CHECK_THAT(a.rate, WithinAbs(2.0, 1e-10));
  const DecayFit b = fit_decay_rate(synthetic(20.0, 400, [](double t) { return 5 * std::exp(-0.5 * t); }), 1.0);
  CHECK_THAT(b.rate, WithinAbs(0.5, 1e-10));
  CHECK(b.residual < 1e-12);
  CHECK_THAT(b.t0, WithinAbs(1.0, 1e-12));
  CHECK(b.t1 > b.t0);
}

TEST_CASE("decay fit recovers random exponents", "[property]") {
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const double rate = rng.uniform(-3.0, 50.0), c = rng.uniform(0.1, 10.0);
    TrajectoryRecord r;
    for (int i = 0; i <= 200; ++i) {
      const double ti = 0.01 * i;
      r.times.push_back(ti);
      r.l2.push_back(std::sqrt(c * std::exp(-rate * ti)));
    }
    CHECK_THAT(fit_decay_rate(r, 0.0).rate, WithinAbs(rate, 1e-10 * std::max(1.0, std::abs(rate))));
  }
}

TEST_CASE("decay fit stops at the underflow floor") {
  // ||u||^2 = exp(-700 t) crosses 1e-280 near t = 0.92.
  const TrajectoryRecord r = synthetic(2.0, 200, [](double t) { return std::exp(-700 * t); });
  const DecayFit f = fit_decay_rate(r, 0.0);
  CHECK_THAT(f.rate, WithinRel(700.0, 1e-10));
  CHECK(f.t1 < 0.93);
  CHECK_THROWS_AS(fit_decay_rate(r, 0.95), NoFitError);
  CHECK_THROWS_AS(fit_decay_rate(synthetic(1.0, 5, [](double t) { return std::exp(-t); }), 0.0), NoFitError);
  CHECK_THROWS_AS(fit_decay_rate(synthetic(1.0, 50, [](double) { return 0.0; }), 0.0), NoFitError);
}

TEST_CASE("decay bound verification") {
  CHECK(verify_decay_bound(synthetic(1.0, 10, [](double) { return 0.0; }), 100.0, 0.0));
  const TrajectoryRecord r = synthetic(3.0, 300, [](double t) { return std::exp(-2 * t); });
  CHECK_FALSE(verify_decay_bound(r, 3.0, 0.05));
  CHECK(verify_decay_bound(r, 2.0, 1e-12));
  CHECK(verify_decay_bound(r, 1.0, 0.0));
  // Deep tails are compared in log form and do not underflow.
  const TrajectoryRecord tiny = synthetic(1.0, 100, [](double t) { return 1e-300 * std::exp(-10 * t); });
  CHECK(verify_decay_bound(tiny, 9.0, 0.0));
  CHECK_FALSE(verify_decay_bound(tiny, 11.0, 0.0));
  CHECK_THROWS_AS(verify_decay_bound(r, INFINITY, 0.0), ValidationError);
}

TEST_CASE("absorbing bounds") {
  const AbsorbingBounds a = absorbing_bounds(ClosedLoopParams{1.0, 1.0, 1.0, 0.0, {}});
  CHECK_THAT(a.R0_sq, WithinRel(4.0, 1e-15));
  // mu = 0: R1^2 = (1/nu)[(alpha + nu/L^2) L + R0^2](1 + 2 alpha)
  CHECK_THAT(a.R1_sq, WithinRel((2.0 + 4.0) * 3.0, 1e-15));

  const double nu = 1e6;
  const AbsorbingBounds big = absorbing_bounds(ClosedLoopParams{nu, 1.0, 1.0, 0.0, {}});
  CHECK_THAT(big.R0_sq / nu, WithinRel(1.0, 1e-5));

  const ClosedLoopParams p{2.0, 3.0, 1.5, 4.0, InterpolantSpec::volume(1.5, 3)};
  const double s = 3.0 + 2.0 / 2.25, h = 0.5;
  const double R0 = s * s * std::pow(1.5, 3) / 2.0;
  const AbsorbingBounds c = absorbing_bounds(p);
  CHECK_THAT(c.R0_sq, WithinRel(R0, 1e-14));
  CHECK_THAT(c.R1_sq, WithinRel((s * 1.5 + R0) * (1 + 2 * (3.0 + 16.0 * h * h / 4.0)) / 2.0, 1e-14));
}

TEST_CASE("absorbing monitor and trajectory checks") {
  TrajectoryRecord r;
  for (int i = 0; i <= 10; ++i) {
    r.times.push_back(i);
    r.l2.push_back(10.0 - i);
    r.h1x.push_back(20.0 - i);
    r.h1.push_back(1.0);
    r.energy_residual.push_back(i == 3 ? 2e-3 : 0.0);
  }
  const AbsorbingMonitor m = absorbing_monitor(r);
  CHECK(m.t_half == 5.0);
  CHECK(m.sup_l2_sq == 25.0);
  CHECK(m.sup_h1x_sq == 225.0);
  CHECK_FALSE(verify_h1_decay(r));
  CHECK(verify_h1_decay(r, 0.5));
  CHECK_FALSE(verify_energy_identity(r));
  r.h1[4] = 2.0;  // scale becomes 4
  CHECK(verify_energy_identity(r));
}

TEST_CASE("resolution for rank") {
  CHECK(resolution_for_rank(128, 1) == 128);
  CHECK(resolution_for_rank(128, 3) == 132);
  CHECK(resolution_for_rank(128, 5) == 140);
  CHECK(resolution_for_rank(128, 32) == 128);
}

TEST_CASE("minimal stabilizing rank") {
  SweepSetup setup;
  setup.base_resolution = 64;
  setup.ic = RandomBand{7, 4, 1.0};
  setup.dt = 2e-4;
  const StabilizationCriterion crit;
  const std::vector<int> ranks{1, 2, 3};

  // alpha below nu (pi/L)^2: only the mean is unstable and one average controls it.
  const ClosedLoopParams low{1.0, 5.0, 1.0, 0.0, InterpolantSpec::volume(1.0, 1)};
  const MinimalNResult a = minimal_stabilizing_N(low, [](double al, int) { return 5 * al; }, ranks, crit, setup);
  REQUIRE(a.minimal_N.has_value());
  CHECK(*a.minimal_N == 1);
  CHECK(a.cells.size() == 3);

  const MinimalNResult none = minimal_stabilizing_N(low, [](double, int) { return 0.0; }, ranks, crit, setup);
  CHECK_FALSE(none.minimal_N.has_value());
  for (const SweepCell& c : none.cells) {
    CHECK_FALSE(c.stabilized);
    CHECK(c.terminal_ratio > crit.ratio);
  }

  const std::vector<int> bad{2, 1};
  CHECK_THROWS_AS(minimal_stabilizing_N(low, [](double, int) { return 1.0; }, bad, crit, setup), ValidationError);
  CHECK_THROWS_AS(minimal_stabilizing_N(low, [](double, int) { return 1.0; }, std::vector<int>{}, crit, setup),
                  ValidationError);
}

TEST_CASE("sweep results do not depend on the job count") {
  SweepSetup setup;
  setup.base_resolution = 64;
  setup.ic = RandomBand{3, 4, 1.0};
  setup.dt = 2e-4;
  const ClosedLoopParams base{1.0, 16.0, 1.0, 0.0, InterpolantSpec::volume(1.0, 1)};
  const std::vector<int> ranks{1, 2, 3, 4};
  auto rule = [](double al, int) { return 5 * al; };
  const MinimalNResult serial = minimal_stabilizing_N(base, rule, ranks, {}, setup);
  setup.jobs = 3;
  const MinimalNResult par = minimal_stabilizing_N(base, rule, ranks, {}, setup);
  CHECK(serial.minimal_N == par.minimal_N);
  for (std::size_t i = 0; i < ranks.size(); ++i) CHECK(serial.cells[i].terminal_ratio == par.cells[i].terminal_ratio);
}
