#include <cmath>
#include <numbers>

#include "catch_amalgamated.hpp"
#include "detctl/cli/suites.hpp"
#include "detctl/interpolants.hpp"

using namespace detctl;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(validate(InterpolantSpec::volume(1.0, 0)), ValidationError);
  CHECK_THROWS_AS(validate(InterpolantSpec::nodal(1.0, 2, {0.1, 0.2})), ValidationError);  // 0.2 not in J_2
  CHECK_THROWS_AS(validate(InterpolantSpec::nodal(1.0, 2, {0.1})), ValidationError);
  CHECK_NOTHROW(validate(InterpolantSpec::nodal(1.0, 2, {0.0, 1.0})));
  CHECK(InterpolantSpec::volume(3.0, 4).h() == 0.75);
}

TEST_CASE("grid compatibility") {
  const Grid1D g(1.0, 64, Boundary::Neumann);
  CHECK_THROWS_AS(Interpolant(InterpolantSpec::volume(1.0, 17), g), ValidationError);  // N > M/4
  CHECK_THROWS_AS(Interpolant(InterpolantSpec::volume(1.0, 3), g), ValidationError);   // 4N does not divide M
  CHECK_THROWS_AS(Interpolant(InterpolantSpec::fourier(1.0, 17), g), ValidationError);
  CHECK_NOTHROW(Interpolant(InterpolantSpec::fourier(1.0, 3), g));
  CHECK_THROWS_AS(Interpolant(InterpolantSpec::delta(1.0, 4), g), ValidationError);  // needs periodic
  CHECK_THROWS_AS(Interpolant(InterpolantSpec::volume(2.0, 4), g), ValidationError);  // L mismatch
}

TEST_CASE("certified constants") {
  CHECK(certified_constant(InterpolantSpec::volume(1.0, 2)) == 1.0);
  CHECK(certified_constant(InterpolantSpec::nodal(1.0, 2)) == 1.0);
  CHECK_THAT(*certified_constant(InterpolantSpec::fourier(1.0, 2, true)), WithinRel(1.0 / pi, 1e-15));
  CHECK_FALSE(certified_constant(InterpolantSpec::fourier(1.0, 2, false)).has_value());
  CHECK_FALSE(certified_constant(InterpolantSpec::delta(1.0, 2)).has_value());
}

TEST_CASE("observe examples") {
  const double L = 2.0;
  const Grid1D g(L, 64, Boundary::Neumann);
  const Field c = Field::from_function(g, [](double) { return 1.5; });
  for (int N : {1, 2, 4, 8, 16})
    for (double v : observe(c, InterpolantSpec::volume(L, N)).values) CHECK_THAT(v, WithinAbs(1.5, 1e-14));

  const Field lin = Field::from_function(g, [](double x) { return x; });
  const Observations o = observe(lin, InterpolantSpec::volume(L, 2));
  REQUIRE(o.values.size() == 2);
  CHECK_THAT(o.values[0], WithinAbs(L / 4, 1e-14));
  CHECK_THAT(o.values[1], WithinAbs(3 * L / 4, 1e-14));

  const Field m2 = Field::from_function(g, [&](double x) { return std::cos(2 * pi * x / L); });
  const Observations f = observe(m2, InterpolantSpec::fourier(L, 5, true));
  REQUIRE(f.values.size() == 6);  // mean plus k = 1..5
  for (int k = 0; k <= 5; ++k) CHECK_THAT(f.values[k], WithinAbs(k == 2 ? 1.0 : 0.0, 1e-10));
  const Observations nomean = observe(m2, InterpolantSpec::fourier(L, 5, false));
  REQUIRE(nomean.values.size() == 5);
  CHECK_THAT(nomean.values[1], WithinAbs(1.0, 1e-10));
}

TEST_CASE("nodal observation is exact point evaluation") {
  const Grid1D g(1.0, 64, Boundary::Neumann);
  const auto f = [](double x) { return std::cos(3 * pi * x) - 0.25 * std::cos(7 * pi * x); };
  const Field field = Field::from_function(g, f);
  const std::vector<double> pts{0.01, 0.3333, 0.74, 1.0};
  const Observations o = observe(field, InterpolantSpec::nodal(1.0, 4, pts));
  for (int k = 0; k < 4; ++k) CHECK_THAT(o.values[k], WithinAbs(f(pts[k]), 1e-12));

  const Grid1D p(1.0, 64, Boundary::Periodic);
  const auto q = [](double x) { return std::sin(2 * pi * 5 * x) + 0.3; };
  const Observations d = observe(Field::from_function(p, q), InterpolantSpec::delta(1.0, 4, {0.2, 0.3, 0.55, 0.99}));
  const std::vector<double> dp{0.2, 0.3, 0.55, 0.99};
  for (int k = 0; k < 4; ++k) CHECK_THAT(d.values[k], WithinAbs(q(dp[k]), 1e-12));
}

TEST_CASE("interpolate examples") {
  const Grid1D g(1.0, 512, Boundary::Neumann);
  const auto spec = InterpolantSpec::volume(1.0, 4);
  const Field c = interpolate(Observations{{2.0, 2.0, 2.0, 2.0}}, spec, g);
  CHECK((c - Field::from_function(g, [](double) { return 2.0; })).max_abs() == 0.0);

  const Field m3 = Field::from_function(g, [](double x) { return std::cos(3 * pi * x); });
  CHECK(defect(m3, InterpolantSpec::fourier(1.0, 5, true)) < 1e-10);

  const Field m1 = Field::from_function(g, [](double x) { return std::cos(pi * x); });
  const Field ih = interpolate(observe(m1, spec), spec, g);
  // Exact cell average (4/pi)(sin(k pi/4) - sin((k-1) pi/4)); the grid uses midpoint sums.
  for (int k = 1; k <= 4; ++k) {
    const double exact = 4 / pi * (std::sin(k * pi / 4) - std::sin((k - 1) * pi / 4));
    CHECK_THAT(ih.samples()[(k - 1) * 128 + 5], WithinAbs(exact, 1e-5));
  }
  CHECK_THAT(ih.samples()[0], WithinAbs(4 * std::sin(pi / 4) / pi, 1e-5));
  CHECK_THAT(4 * std::sin(pi / 4) / pi, WithinAbs(0.9003, 5e-5));

  CHECK_THROWS_AS(interpolate(Observations{{1.0}}, InterpolantSpec::delta(1.0, 1), Grid1D(1.0, 64, Boundary::Periodic)),
                  ValidationError);
  CHECK_THROWS_AS(interpolate(Observations{{1.0, 2.0}}, spec, g), ValidationError);
}

TEST_CASE("defect examples") {
  const Grid1D g(1.0, 512, Boundary::Neumann);
  CHECK(defect(Field::from_function(g, [](double) { return 3.0; }), InterpolantSpec::volume(1.0, 8)) < 1e-12);
  for (int N : {3, 4, 7})
    CHECK(defect(Field::from_function(g, [](double x) { return std::cos(3 * pi * x); }), InterpolantSpec::fourier(1.0, N))
          < 1e-10);

  // cos(pi x), four cells: ||phi||^2 - h sum avg_k^2 with exact averages.
  double sum = 0.0;
  for (int k = 1; k <= 4; ++k) sum += std::pow(4 / pi * (std::sin(k * pi / 4) - std::sin((k - 1) * pi / 4)), 2);
  const double exact = std::sqrt(0.5 - 0.25 * sum);
  const double d = defect(Field::from_function(g, [](double x) { return std::cos(pi * x); }), InterpolantSpec::volume(1.0, 4));
  CHECK_THAT(d, WithinRel(exact, 1e-4));
  CHECK(d <= 0.25 * pi / std::sqrt(2.0));
  CHECK_THROWS_AS(defect(Field(Grid1D(1.0, 64, Boundary::Periodic)), InterpolantSpec::delta(1.0, 2)), ValidationError);
}

TEST_CASE("gamma squared") {
  CHECK(gamma_sq(Observations{{0.0, 0.0, 0.0}}) == 0.0);
  CHECK_THAT(gamma_sq(Observations{std::vector<double>(5, 1.5)}), WithinRel(5 * 2.25, 1e-15));
  const Grid1D g(1.0, 64, Boundary::Neumann);
  CHECK_THAT(gamma_sq(observe(Field::from_function(g, [](double x) { return x; }), InterpolantSpec::volume(1.0, 2))),
             WithinRel(0.625, 1e-13));
}

TEST_CASE("delta actuation") {
  const Grid1D g(1.0, 64, Boundary::Periodic);
  const auto one = InterpolantSpec::delta(1.0, 1);  // midpoint 0.5 is grid point 32
  CHECK(actuate_delta(Observations{{0.0}}, one, g).max_abs() == 0.0);
  const Field a = actuate_delta(Observations{{1.0}}, one, g);
  for (int j = 0; j < 64; ++j) CHECK(a.samples()[j] == (j == 32 ? 64.0 : 0.0));
  double mass = 0.0;
  for (double v : a.samples()) mass += v * g.spacing();
  CHECK_THAT(mass, WithinAbs(1.0, 1e-14));

  // Pairing with a smooth field approximates h sum obs_k phi(x_k) to O(dx).
  const auto spec = InterpolantSpec::delta(1.0, 4, {}, {0.11, 0.3, 0.61, 0.8});
  const Field phi = Field::from_function(g, [](double x) { return std::cos(2 * pi * x) + 0.5 * std::sin(4 * pi * x); });
  const Observations obs{{1.0, -2.0, 0.5, 3.0}};
  const double pairing = inner(actuate_delta(obs, spec, g), phi);
  double exact = 0.0;
  for (int k = 0; k < 4; ++k) exact += spec.h() * obs.values[k] * evaluate(phi, spec.act_points[k]);
  double total = 0.0;
  for (double v : obs.values) total += spec.h() * std::abs(v);
  CHECK(std::abs(pairing - exact) <= total * 0.5 * g.spacing() * l2_norm(derivative(phi)) * 4);

  const auto crowded = InterpolantSpec::delta(1.0, 16, {}, [] {
    std::vector<double> p;
    for (int k = 0; k < 16; ++k) p.push_back((k + 0.5) / 16);
    p[0] = 1.0 / 16 - 1e-4;
    p[1] = 1.0 / 16 + 1e-4;
    return p;
  }());
  CHECK_THROWS_AS(actuate_delta(Observations{std::vector<double>(16, 1.0)}, crowded, g), ValidationError);
  CHECK_THROWS_AS(actuate_delta(Observations{{1.0}}, InterpolantSpec::volume(1.0, 1), g), ValidationError);
}

TEST_CASE("interpolation inequalities on a reduced trial set", "[property]") {
  cli::InterpolationSuiteOptions opt;
  opt.n_trials = 40;
  const cli::SuiteReport rep = cli::run_interpolation_suite(1234, opt);
  for (const auto& p : rep.properties) {
    INFO(p.name << " worst " << p.worst_ratio);
    if (!p.informational) CHECK(p.pass);
    CHECK(p.trials > 0);
  }
}

TEST_CASE("projection idempotence") {
  const Grid1D g(1.0, 128, Boundary::Neumann);
  Rng rng(8);
  for (const auto& spec : {InterpolantSpec::volume(1.0, 8), InterpolantSpec::fourier(1.0, 8, true),
                           InterpolantSpec::fourier(1.0, 8, false)}) {
    const Field f = random_band_field(g, 16, rng);
    const Field once = interpolate(observe(f, spec), spec, g);
    const Field twice = interpolate(observe(once, spec), spec, g);
    CHECK((twice - once).max_abs() <= 1e-12 * (1 + once.max_abs()));
  }
}

TEST_CASE("the volume split needs the sharp Poincare constant") {
  // cos(N pi x / L) has zero average on every cell J_k, so gamma^2 = 0 while
  // ||phi||^2 = L/2. (h/pi)^2 ||phi_x||^2 = L/2 is attained; (h/2pi)^2 gives L/8.
  const double L = 1.0;
  const int N = 4;
  const double h = L / N;
  const Grid1D g(L, 64, Boundary::Neumann);
  const Field phi = Field::from_function(g, [&](double x) { return std::cos(N * pi * x / L); });
  const auto spec = InterpolantSpec::volume(L, N);
  const double g2 = gamma_sq(observe(phi, spec));
  const double l2sq = std::pow(l2_norm(phi), 2);
  const double dx2 = derivative_norm_sq(to_spectral(phi));
  CHECK(g2 < 1e-28);
  CHECK_THAT(l2sq, WithinRel(h * g2 + std::pow(h / pi, 2) * dx2, 1e-12));
  CHECK(l2sq > h * g2 + std::pow(h / (2 * pi), 2) * dx2);
  CHECK_THAT(defect(phi, spec), WithinRel(h / pi * std::sqrt(dx2), 1e-12));
}
