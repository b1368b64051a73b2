#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "lpde/analysis.hpp"
#include "lpde/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace lpde;

namespace {

template<class F>
double
simpson(F f, double a, double b, int n = 20000)
{
  double step = (b - a) / n, s = f(a) + f(b);
  for (int i = 1; i < n; ++i)
    s += f(a + i * step) * (i % 2 ? 4.0 : 2.0);
  return s * step / 3.0;
}

double
phi(double z)
{
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

Vec
normal_sample(int n, unsigned seed)
{
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Vec x(n);
  for (int i = 0; i < n; ++i)
    x(i) = nd(gen);
  return x;
}

// Mixture 0.5 N(0,1) + 0.5 N(3,1) and its derivatives.
double
mix(double t, int k)
{
  auto he = [](double z, int k) {
    switch (k) {
      case 0: return 1.0;
      case 1: return -z;
      default: return z * z - 1.0;
    }
  };
  return 0.5 * he(t, k) * phi(t) + 0.5 * he(t - 3.0, k) * phi(t - 3.0);
}

} // namespace

TEST_CASE("amise")
{
  auto g = Kernel::gaussian();
  auto r = amise(0.3, 400, g, 0.2115711);
  CHECK(r.amise == doctest::Approx(0.0027792).epsilon(1e-4));
  CHECK(r.amise == r.squared_bias_term + r.variance_term);
  CHECK(amise(0.6, 400, g, 0.2115711).variance_term == doctest::Approx(0.5 * r.variance_term));
  CHECK_THROWS(amise(0.0, 400, g, 1.0));
  CHECK_THROWS(amise(0.3, 400, g, -1.0));

  // grid-search oracle for the minimizer
  double best_h = 0.0, best = 1e300;
  for (int i = 1; i <= 20000; ++i) {
    double h = i * 1e-4;
    double a = amise(h, 400, g, 0.2115711).amise;
    if (a < best)
      best = a, best_h = h;
  }
  CHECK(std::abs(best_h - optimal_h(400, g, 0.2115711)) < 2e-4);
}

TEST_CASE("optimal bandwidth")
{
  auto g = Kernel::gaussian();
  double r = simpson([](double z) {
    double d2 = (z * z - 1.0) * phi(z);
    return d2 * d2;
  }, -12, 12);
  CHECK(r == doctest::Approx(3.0 / (8.0 * std::sqrt(std::numbers::pi))).epsilon(1e-10));
  for (double n : { 100.0, 1000.0, 12345.0 })
    CHECK(optimal_h(n, g, r) * std::pow(n, 0.2) == doctest::Approx(1.059224).epsilon(1e-6));
  CHECK(optimal_h(32 * 500, g, r) == doctest::Approx(optimal_h(500, g, r) / 2).epsilon(1e-14));
  double rt = 0.21, rn = 0.09;
  CHECK(optimal_h(500, g, rn) / optimal_h(500, g, rt) ==
        doctest::Approx(std::pow(rt / rn, 0.2)).epsilon(1e-14));

  for (auto k : { g, Kernel::epanechnikov(), Kernel::biweight() })
    for (double n : { 50.0, 800.0 })
      for (double R : { 0.05, 0.2115711, 3.0 }) {
        double h0 = optimal_h(n, k, R);
        CHECK(std::abs(amise(h0, n, k, R).amise - optimal_amise(n, k, R)) <
              1e-10 * optimal_amise(n, k, R));
      }
}

TEST_CASE("roughness functional")
{
  CHECK(roughness_functional([](double) { return 0.0; }, -1, 1) == 0.0);
  double r = roughness_functional([](double z) { return (z * z - 1.0) * phi(z); }, -12, 12);
  CHECK(r == doctest::Approx(0.2115711).epsilon(1e-7));
  CHECK_THROWS(roughness_functional([](double z) { return std::log(z); }, -1, 1));
  CHECK_THROWS(roughness_functional([](double) { return 1.0; }, 1, -1));

  // log-linear local model: b = f'' - f'^2 / f against f''
  double r_trad = roughness_functional([](double t) { return mix(t, 2); }, -8, 11);
  double r_new = roughness_functional([](double t) {
    return mix(t, 2) - mix(t, 1) * mix(t, 1) / mix(t, 0);
  }, -8, 11);
  double oracle_trad = simpson([](double t) { return mix(t, 2) * mix(t, 2); }, -8, 11);
  double oracle_new = simpson([](double t) {
    double b = mix(t, 2) - mix(t, 1) * mix(t, 1) / mix(t, 0);
    return b * b;
  }, -8, 11);
  CHECK(r_trad == doctest::Approx(oracle_trad).epsilon(1e-9));
  CHECK(r_new == doctest::Approx(oracle_new).epsilon(1e-9));
  // for this well-separated mixture the log-linear bias is the rougher one
  CHECK(r_trad == doctest::Approx(0.0918484).epsilon(1e-5));
  CHECK(r_new == doctest::Approx(0.110057).epsilon(1e-5));
}

TEST_CASE("cross-validation score on three points")
{
  Vec data(3);
  data << -0.4, 0.1, 0.9;
  auto g = Kernel::gaussian();
  double h = 0.5;
  for (int p : { 1, 2 }) {
    auto fam = family_polyexp(p);
    auto scheme = weights_make(WeightKind::score, *fam);
    auto s = lscv_score(*fam, scheme, g, data, h);
    REQUIRE(s.ok);
    CHECK(s.dropped == 0);
    CHECK(s.score == s.integral_term - s.cross_term);

    // brute force: cold fits everywhere
    Vec grid = Vec::LinSpaced(512, -0.4 - 4 * h, 0.9 + 4 * h);
    double step = grid(1) - grid(0), integral = 0.0;
    for (Eigen::Index j = 0; j < grid.size(); ++j) {
      double f = fit_at(*fam, scheme, g, h, data, grid(j)).f_hat;
      integral += (j == 0 || j == grid.size() - 1 ? 0.5 : 1.0) * f * f * step;
    }
    double cross = 0.0;
    for (int i = 0; i < 3; ++i) {
      Vec rest(2);
      for (int a = 0, b = 0; a < 3; ++a)
        if (a != i)
          rest(b++) = data(a);
      cross += fit_at(*fam, scheme, g, h, rest, data(i)).f_hat;
    }
    double brute = integral - 2.0 * cross / 3.0;
    CHECK(std::abs(s.score - brute) < 1e-10);
  }
  CHECK_THROWS(lscv_score(*family_polyexp(1), WeightScheme{}, g, data.head(1), h));
}

TEST_CASE("local-constant cross-validation is the classic score")
{
  Vec data = normal_sample(200, 21);
  auto g = Kernel::gaussian();
  auto fam = family_polyexp(1);
  auto scheme = weights_make(WeightKind::score, *fam);
  const int n = 200;
  for (double h : { 0.25, 0.5 }) {
    auto s = lscv_score(*fam, scheme, g, data, h);
    // int f~^2 = n^-2 sum_ij phi_{sqrt2 h}(x_i - x_j)
    double integral = 0.0, cross = 0.0;
    double s2 = std::sqrt(2.0) * h;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        integral += phi((data(i) - data(j)) / s2) / s2;
        if (i != j)
          cross += phi((data(i) - data(j)) / h) / h;
      }
    double classic = integral / (n * n) - 2.0 * cross / (n * (n - 1.0));
    CHECK(std::abs(s.score - classic) < 1e-6);

    Vec shuffled = data.reverse();
    std::swap(shuffled(3), shuffled(77));
    CHECK(lscv_score(*fam, scheme, g, shuffled, h).score == doctest::Approx(s.score).epsilon(1e-12));
  }
}

TEST_CASE("bandwidth selection by cross-validation")
{
  Rng rng(1);
  Vec data = TrueDensity::normal().sample(rng, 500);
  auto g = Kernel::gaussian();
  auto fam = family_polyexp(1);
  auto scheme = weights_make(WeightKind::score, *fam);
  auto sel = select_h_lscv(*fam, scheme, g, data, {}, {}, 4);
  REQUIRE(sel.ok);
  double ref = 1.059 * std::pow(500.0, -0.2);
  CHECK(sel.h_selected / ref == doctest::Approx(0.503515).epsilon(1e-4));
  REQUIRE(sel.score_curve.size() == 30);
  CHECK(sel.h_selected != sel.score_curve.front().first);
  CHECK(sel.h_selected != sel.score_curve.back().first);
  for (const auto& d : sel.details)
    if (d.ok && d.h != sel.h_selected)
      CHECK(d.score > std::min_element(sel.details.begin(), sel.details.end(),
                                       [](const auto& a, const auto& b) { return a.score < b.score; })
                        ->score);

  Vec twice(4);
  twice << 0.2, 0.3, 0.3, 0.2;
  auto dup = select_h_lscv(*fam, scheme, g, data, twice);
  CHECK(dup.score_curve[0].second == dup.score_curve[3].second);
  CHECK(dup.score_curve[1].second == dup.score_curve[2].second);
  auto threaded = select_h_lscv(*fam, scheme, g, data, twice, {}, 3);
  for (int j = 0; j < 4; ++j)
    CHECK(threaded.score_curve[j].second == dup.score_curve[j].second);
  CHECK_THROWS(select_h_lscv(*fam, scheme, g, data, Vec::Constant(2, -1.0)));
}

TEST_CASE("plug-in ratio adjustment")
{
  Vec data = normal_sample(2000, 13);
  auto g = Kernel::gaussian();
  auto p1 = family_polyexp(1);
  auto flat = plugin_ratio(*p1, weights_make(WeightKind::score, *p1), g, data);
  CHECK(flat.ratio == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(flat.h_selected == doctest::Approx(normal_reference_h(data)).epsilon(1e-12));

  // log-linear on N(0,1): b = f (log f)'' = -f, R_new = R(phi) = 1/(2 sqrt(pi))
  auto p2 = family_polyexp(2);
  auto pr = plugin_ratio(*p2, weights_make(WeightKind::score, *p2), g, data);
  double target = std::pow((3.0 / (8.0 * std::sqrt(std::numbers::pi))) /
                             (1.0 / (2.0 * std::sqrt(std::numbers::pi))),
                           0.2);
  CHECK(pr.ratio == doctest::Approx(target).epsilon(0.05));
  CHECK(pr.h_selected == doctest::Approx(pr.h_classic * pr.ratio));
}
