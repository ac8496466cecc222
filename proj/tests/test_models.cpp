#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "weaksde/errors.hpp"
#include "weaksde/models.hpp"
#include "weaksde/schemes.hpp"

using namespace weaksde;

TEST_SUITE("models") {

TEST_CASE("builtin SDE shapes and initial values") {
  const auto a = builtin_sde(BuiltinSde::LinearMultiplicative2DNoise);
  const auto b = builtin_sde(BuiltinSde::LinearAdditive);
  const auto c = builtin_sde(BuiltinSde::TanhSech);
  CHECK(a.dim_noise == 2);
  CHECK(a.x0 == std::vector<double>{0.1});
  CHECK(b.x0 == std::vector<double>{-1.0});
  CHECK(c.x0 == std::vector<double>{-1.0});
  CHECK(a.analytic_second_moment.has_value());
  CHECK(b.analytic_second_moment.has_value());
  CHECK_FALSE(c.analytic_second_moment.has_value());

  std::vector<double> B(2);
  const double x = 0.7;
  a.diffusion(std::span<const double>(&x, 1), B);
  CHECK(B[0] == doctest::Approx(0.07));
  CHECK(B[1] == doctest::Approx(0.07));
}

TEST_CASE("analytic oracles against independent ODE / quadrature") {
  const auto a = builtin_sde(BuiltinSde::LinearMultiplicative2DNoise);
  const auto b = builtin_sde(BuiltinSde::LinearAdditive);
  const auto c = builtin_sde(BuiltinSde::TanhSech);
  CHECK((*a.analytic_mean)(1.0)[0] == doctest::Approx(0.4481689).epsilon(1e-7));
  CHECK((*b.analytic_mean)(1.0)[0] == doctest::Approx(0.7182818).epsilon(1e-7));
  for (double t : {0.0, 0.25, 0.5, 1.0, 2.0}) {
    const auto ma = oracle::linear_multiplicative_ode(t);
    const auto mb = oracle::linear_additive_ode(t);
    CHECK((*a.analytic_mean)(t)[0] == doctest::Approx(ma.mean).epsilon(1e-10));
    CHECK((*a.analytic_second_moment)(t)[0] == doctest::Approx(ma.second).epsilon(1e-10));
    CHECK((*b.analytic_mean)(t)[0] == doctest::Approx(mb.mean).epsilon(1e-10));
    CHECK((*b.analytic_second_moment)(t)[0] == doctest::Approx(mb.second).epsilon(1e-10));
  }
  for (double t : {0.1, 0.5, 1.0, 3.0}) CHECK((*c.analytic_mean)(t)[0] == doctest::Approx(oracle::tanh_sech_mean(t)).epsilon(1e-9));
  CHECK((*c.analytic_mean)(0.0)[0] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("fine-step EM reproduces the analytic means") {
  for (auto id : {BuiltinSde::LinearMultiplicative2DNoise, BuiltinSde::LinearAdditive, BuiltinSde::TanhSech}) {
    const auto model = builtin_sde(id);
    SimulationPlan plan{model, Scheme(SchemeKind::EM), 1.0 / 1024, 1.0, 100000, 2024};
    const auto s = simulate_terminal(plan, [](std::span<const double> x) { return x[0]; });
    const double exact = (*model.analytic_mean)(1.0)[0];
    INFO(model.name << ": " << s.mean << " vs " << exact << " se " << s.std_error);
    CHECK(std::abs(s.mean - exact) < 4.0 * s.std_error);
  }
}

TEST_CASE("target gradients") {
  const auto g = std_gaussian_target();
  CHECK(g.grad_at(0.7) == -0.7);
  const auto q = bimodal_quartic_target();
  // (x-3)(x-1)(x+1)(x+2) = x^4 - x^3 - 7x^2 + x + 6, derivative 1 at 0
  CHECK(q.grad_at(0.0) == doctest::Approx(-0.1).epsilon(1e-14));
  const double h = 1e-5;
  for (double x : {-3.0, -1.3, 0.0, 0.4, 2.2, 4.5}) {
    const double fd = -(oracle::quartic(x + h) - oracle::quartic(x - h)) / (2 * h) / 10;
    CHECK(q.grad_at(x) == doctest::Approx(fd).epsilon(1e-7));
  }
  const auto gu = gumbel_target();
  CHECK(gu.grad_at(0.0) == 0.0);
  for (double x : {-2.0, 0.5, 3.0}) CHECK(gu.grad_at(x) == doctest::Approx(-1.0 + std::exp(-x)).epsilon(1e-14));
  CHECK_THROWS_AS(gumbel_target({0.0, 0.0}), SpecError);
}

TEST_CASE("every target passes the finite-difference check") {
  const TargetDensity targets[] = {std_gaussian_target(), std_gaussian_target(3), gumbel_target(),
                                   gumbel_target({1.5, 2.0}), bimodal_quartic_target(),
                                   polynomial_target({0.0, 1.0, -0.5, 0.0, -0.01}, {-10, 10})};
  for (const auto& t : targets) {
    INFO(t.name);
    CHECK(max_gradient_fd_error(t, 20) < 1e-5);
  }
}

TEST_CASE("quartic loss is the bimodal target") {
  const auto a = quartic_loss();
  const auto b = bimodal_quartic_target();
  for (double x = -4.0; x <= 4.0; x += 0.01) CHECK(std::abs(a.log_density_at(x) - b.log_density_at(x)) < 1e-12);
  CHECK(a.log_density_at(1.0) == 0.0);  // root of the quartic
  CHECK(quartic_loss_value(0.0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(a.log_density_at(0.0) == doctest::Approx(-0.6).epsilon(1e-15));
  for (double x : {-2.5, 0.3, 3.7}) CHECK(quartic_loss_value(x) == doctest::Approx(oracle::quartic(x) / 10).epsilon(1e-13));
}

TEST_CASE("bimodal support hint holds all but 1e-10 of the mass") {
  auto p = [](double x) { return std::exp(-oracle::quartic(x) / 10); };
  const double inside = oracle::simpson(p, -4, 5);
  const double outside = oracle::simpson(p, -12, -4) + oracle::simpson(p, 5, 12);
  CHECK(outside / (inside + outside) < 1e-10);
}

TEST_CASE("stochastic gradient moments") {
  SUBCASE("m1 = 0.5, m2 = 2.25") {
    const NoisyGradientModel m(std_gaussian_target(), {0.5}, {2.25});
    Stream st(5, 0);
    const double theta = 0.8;
    const int n = 1000000;
    double s1 = 0, s2 = 0, s4 = 0;
    for (int i = 0; i < n; ++i) {
      const double d = stochastic_gradient(m, std::span<const double>(&theta, 1), st)[0] + theta;
      s1 += d, s2 += d * d, s4 += d * d * d * d;
    }
    const double mean = s1 / n, second = s2 / n;
    CHECK(std::abs(mean - 0.5) < 5 * std::sqrt((second - mean * mean) / n));
    CHECK(std::abs(second - 2.25) < 5 * std::sqrt((s4 / n - second * second) / n));
  }
  SUBCASE("zero variance gives the exact gradient") {
    const NoisyGradientModel m(std_gaussian_target(), {0.0}, {0.0});
    Stream st(6, 0);
    const double theta = 1.3;
    for (int i = 0; i < 100; ++i)
      CHECK(std::abs(stochastic_gradient(m, std::span<const double>(&theta, 1), st)[0] + 1.3) < 1e-5);
  }
  SUBCASE("mean at the mode equals m1") {
    const NoisyGradientModel m(std_gaussian_target(), {1.0}, {3.0});
    Stream st(7, 0);
    const double theta = 0.0;
    double s = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) s += stochastic_gradient(m, std::span<const double>(&theta, 1), st)[0];
    CHECK(std::abs(s / n - 1.0) < 5 * std::sqrt(2.0 / n));
  }
  SUBCASE("invalid gradient noise") {
    CHECK_THROWS_AS(NoisyGradientModel(std_gaussian_target(), {1.0}, {0.5}), SpecError);
    CHECK_THROWS_AS(NoisyGradientModel(std_gaussian_target(), {0.0}, {1.0}, NoiseSpec::two_point_symmetric(2.0)),
                    SpecError);
    CHECK_THROWS_AS(NoisyGradientModel(std_gaussian_target(), {0.0, 0.0}, {1.0}), SpecError);
  }
}

TEST_CASE("polynomial models") {
  const auto m = polynomial_sde({2.0, 1.0}, {3.0}, -1.0);
  std::vector<double> a(1), b(1);
  const double y = 0.5;
  m.drift(std::span<const double>(&y, 1), a);
  m.diffusion(std::span<const double>(&y, 1), b);
  CHECK(a[0] == 2.5);
  CHECK(b[0] == 3.0);
  CHECK_FALSE(m.analytic_mean.has_value());
  CHECK_THROWS_AS(polynomial_sde({}, {1.0}, 0.0), SpecError);
  CHECK_THROWS_AS(polynomial_target({1.0}, {1.0, 1.0}), SpecError);
  const Polynomial p{{1, 2, 3}};
  CHECK(p(2.0) == 17.0);
  CHECK(p.derivative()(2.0) == 14.0);
}

}
