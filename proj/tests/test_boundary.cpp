#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "lpde/boundary.hpp"

#include <cmath>

using namespace lpde;

namespace {

double
exp1(double t)
{
  return t >= 0.0 ? std::exp(-t) : 0.0;
}

template<class F>
double
midpoint(F f, double a, double b, int n)
{
  double step = (b - a) / n, s = 0.0;
  for (int i = 0; i < n; ++i)
    s += f(a + (i + 0.5) * step);
  return s * step;
}

} // namespace

TEST_CASE("interior values")
{
  for (auto k : { Kernel::uniform_half(), Kernel::uniform_unit(), Kernel::epanechnikov(), Kernel::biweight() }) {
    CAPTURE(k.name());
    for (double p : { k.support_radius(), 1.0, 3.0 }) {
      auto m = boundary_moments(k, p);
      CHECK(m.a[0] == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(std::abs(m.a[1]) < 1e-12);
      CHECK(m.a[2] == doctest::Approx(k.variance()).epsilon(1e-12));
      CHECK(m.b == doctest::Approx(k.roughness()).epsilon(1e-12));
      CHECK(m.Q == doctest::Approx(k.variance()).epsilon(1e-12));
    }
  }
  CHECK_THROWS(boundary_moments(Kernel::gaussian(), 0.0));
}

TEST_CASE("uniform kernel at the boundary")
{
  auto m = boundary_moments(Kernel::uniform_unit(), 0.0);
  CHECK(std::abs(m.a[0] - 0.5) < 1e-12);
  CHECK(std::abs(m.a[1] + 0.25) < 1e-12);
  CHECK(std::abs(m.a[2] - 1.0 / 6.0) < 1e-12);
  CHECK(std::abs(m.a[3] + 0.125) < 1e-12);
  CHECK(std::abs(m.b - 0.25) < 1e-12);
  CHECK(std::abs(m.Q + 1.0 / 6.0) < 1e-10);

  auto half = boundary_moments(Kernel::uniform_unit(), 0.5);
  CHECK(half.a[0] == doctest::Approx(0.75));
  CHECK(half.a[1] == doctest::Approx(-0.1875));
  CHECK(half.a[2] == doctest::Approx(0.1875));
  CHECK(half.a[3] == doctest::Approx(-0.1171875));
  CHECK(half.Q == doctest::Approx(0.125));
}

TEST_CASE("Epanechnikov functionals against a Riemann sum")
{
  auto k = Kernel::epanechnikov();
  auto m = boundary_moments(k, 0.25);
  for (int l = 0; l < 4; ++l) {
    double r = midpoint([&](double u) { return std::pow(u, l) * k(u); }, -0.5, 0.25, 1000000);
    CHECK(std::abs(m.a[l] - r) < 1e-8);
  }
  double rb = midpoint([&](double u) { return k(u) * k(u); }, -0.5, 0.25, 1000000);
  CHECK(std::abs(m.b - rb) < 1e-8);
}

TEST_CASE("a0 increases and Q is continuous")
{
  for (auto k : { Kernel::uniform_unit(), Kernel::epanechnikov(), Kernel::biweight() }) {
    CAPTURE(k.name());
    double S = k.support_radius();
    double prev_a0 = 0.0, prev_Q = boundary_moments(k, 0.0).Q;
    for (int i = 0; i <= 200; ++i) {
      double p = 1.5 * S * i / 200.0;
      auto m = boundary_moments(k, p);
      CHECK(m.a[0] > 0.0);
      CHECK(m.a[0] <= 1.0 + 1e-12);
      if (p < S) {
        CHECK(m.a[0] > prev_a0);
      }
      CHECK(std::abs(m.Q - prev_Q) < 0.05 * S * S);
      if (p >= S) {
        CHECK(m.Q == doctest::Approx(k.variance()).epsilon(1e-12));
      }
      prev_a0 = m.a[0];
      prev_Q = m.Q;
    }
  }
}

TEST_CASE("boundary kernel")
{
  auto u = Kernel::uniform_unit();
  CHECK(boundary_kernel(u, 0.0)(-0.5) == doctest::Approx(1.0));
  CHECK(boundary_kernel(u, 0.0)(0.2) == 0.0);
  for (auto k : { Kernel::uniform_half(), Kernel::uniform_unit(), Kernel::biweight() }) {
    auto bk = boundary_kernel(k, 0.3);
    double S = k.support_radius();
    double hi = std::min(0.3, S);
    CHECK(std::abs(integrate(bk, -S, hi, 64, 4) - 1.0) < 1e-9);
    CHECK(std::abs(integrate([&](double z) { return z * bk(z); }, -S, hi, 64, 4)) < 1e-9);
    auto interior = boundary_kernel(k, 2.0);
    for (double z : { -0.4, 0.0, 0.3 })
      CHECK(interior(z) == doctest::Approx(k(z)).epsilon(1e-14));
  }
}

TEST_CASE("two-parameter variance factor is the boundary-kernel roughness")
{
  for (auto k : { Kernel::uniform_unit(), Kernel::epanechnikov(), Kernel::biweight() })
    for (double rel : { 0.0, 0.3, 0.8 }) {
      double p = rel * k.support_radius();
      auto bk = boundary_kernel(k, p);
      double S = k.support_radius();
      double rough = midpoint([&](double z) { return bk(z) * bk(z); }, -S, p, 200000);
      CHECK(boundary_variance_factor(k, p) == doctest::Approx(rough).epsilon(1e-9));
    }
}

TEST_CASE("population boundary bias rates")
{
  auto k = Kernel::uniform_unit();
  std::vector<double> hs{ 0.1, 0.05, 0.025, 0.0125 };

  auto p1 = family_polyexp(1);
  auto one = boundary_bias_diag(*p1, weights_make(WeightKind::score, *p1), k, hs, exp1, 0.5);
  CHECK(one.ok);
  CHECK(std::abs(one.slope - 1.0) < 0.15);
  // E f^ = f - (a1/a0) h (f - f0)' with f0' = 0 for the constant family
  auto m = boundary_moments(k, 0.5);
  CHECK(one.coefficient == doctest::Approx(-(m.a[1] / m.a[0]) * -1.0).epsilon(0.1));

  auto lin = family_linear();
  auto two = boundary_bias_diag(*lin, weights_make(WeightKind::powers, *lin), k, hs, exp1, 0.5);
  CHECK(two.ok);
  CHECK(std::abs(two.slope - 2.0) < 0.15);
  CHECK(two.coefficient == doctest::Approx(0.5 * m.Q * 1.0).epsilon(0.1));

  // Exp(1) is itself log-linear, so the log-linear fit is exact
  auto p2 = family_polyexp(2);
  auto exact = boundary_bias_diag(*p2, weights_make(WeightKind::score, *p2), k, hs, exp1, 0.5);
  for (double b : exact.bias)
    CHECK(std::abs(b) < 1e-10);
}
