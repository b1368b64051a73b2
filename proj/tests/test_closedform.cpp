#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "lpde/closedform.hpp"
#include "lpde/solver.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace lpde;

namespace {

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

SmootherStats
stats_of(double f, double d1, double d2 = 0.0)
{
  SmootherStats s;
  s.f_tilde = f;
  s.f_tilde_d1 = d1;
  s.f_tilde_d2 = d2;
  return s;
}

double
max_rel(const Vec& a, const Vec& b)
{
  return ((a - b).array().abs() / b.array().abs()).maxCoeff();
}

} // namespace

TEST_CASE("log-linear closed form")
{
  CHECK(cf_loglinear(stats_of(0.2, 0.1), 0.5).f_hat == doctest::Approx(0.1938467).epsilon(1e-7));
  CHECK(cf_loglinear(stats_of(0.2, 0.0), 0.5).f_hat == 0.2);
  CHECK_FALSE(cf_loglinear(stats_of(0.0, 0.0), 0.5).valid);

  Vec data = normal_sample(100, 1);
  auto g = Kernel::gaussian();
  auto fam = family_polyexp(2);
  Vec grid = Vec::LinSpaced(50, -2.0, 2.0);
  auto est = fit_grid(*fam, weights_make(WeightKind::score, *fam), g, 0.4, data, grid);
  Vec cf(grid.size());
  for (Eigen::Index j = 0; j < grid.size(); ++j)
    cf(j) = cf_loglinear(classic_estimate(g, 0.4, data, grid(j)), 0.4).f_hat;
  CHECK((est.f_hat - cf).lpNorm<Eigen::Infinity>() < 1e-8);
  CHECK(max_rel(est.f_hat, cf) < 1e-6);
}

TEST_CASE("log-quadratic closed form")
{
  Vec two(2);
  two << -1.0, 1.0;
  auto g = Kernel::gaussian();
  auto s = classic_estimate(g, 1.0, two, 0.0);
  auto r = cf_logquad(s, 1.0);
  CHECK(r.valid);
  CHECK(r.aux["D"] == doctest::Approx(0.0));
  CHECK(r.aux["R"] == doctest::Approx(1.0));
  CHECK(r.f_hat == doctest::Approx(0.2419707).epsilon(1e-7));

  CHECK(cf_logquad(stats_of(0.3, 0.12, 0.048), 0.7).f_hat ==
        cf_loglinear(stats_of(0.3, 0.12, 0.048), 0.7).f_hat);
  CHECK_FALSE(cf_logquad(stats_of(0.3, 0.0, -1.0), 1.0).valid);

  Vec data = normal_sample(200, 2);
  auto fam = family_polyexp(3);
  Vec grid = Vec::LinSpaced(50, -2.0, 2.0);
  auto est = fit_grid(*fam, weights_make(WeightKind::score, *fam), g, 0.5, data, grid);
  Vec cf(grid.size());
  for (Eigen::Index j = 0; j < grid.size(); ++j)
    cf(j) = cf_logquad(classic_estimate(g, 0.5, data, grid(j)), 0.5).f_hat;
  CHECK(est.count(FitStatus::converged) == 50);
  CHECK(max_rel(est.f_hat, cf) < 1e-6);
  // fitted curvature matches c = D/(1 + h^2 D)
  for (Eigen::Index j = 0; j < grid.size(); j += 7) {
    auto c = cf_logquad(classic_estimate(g, 0.5, data, grid(j)), 0.5);
    CHECK(2.0 * est.theta_trace[j].values(2) == doctest::Approx(c.aux["c"]).epsilon(1e-6));
    CHECK(est.theta_trace[j].values(1) == doctest::Approx(c.aux["b"]).epsilon(1e-6));
  }
}

TEST_CASE("multiplicative constant correction")
{
  auto g = Kernel::gaussian();
  Vec data = normal_sample(100, 3);
  auto flat = cf_mult_const([](double) { return 0.7; }, g, 0.4, data, 0.3);
  CHECK(flat.f_hat == doctest::Approx(classic_estimate(g, 0.4, data, 0.3).f_tilde).epsilon(1e-12));
  auto r = cf_mult_const(phi, g, 1.0, data, 0.0);
  CHECK(r.aux["convolution"] == doctest::Approx(0.2820948).epsilon(1e-7));

  NormalDensity start = NormalDensity::fit(data);
  auto fam = family_mult_correction(start, 1, 0.0, "normal");
  Vec grid = Vec::LinSpaced(50, -2.0, 2.0);
  auto est = fit_grid(*fam, weights_make(WeightKind::score, *fam), g, 0.5, data, grid);
  Vec cf(grid.size());
  for (Eigen::Index j = 0; j < grid.size(); ++j)
    cf(j) = cf_mult_const(start, g, 0.5, data, grid(j)).f_hat;
  CHECK((est.f_hat - cf).lpNorm<Eigen::Infinity>() < 1e-8);
  CHECK(max_rel(est.f_hat, cf) < 1e-6);
}

TEST_CASE("log-linear correction of a normal start")
{
  // 0.2 * sqrt(1.25) * exp(-0.5 * 0.25 * 1.25 * 0.25)
  CHECK(cf_mult_loglinear_normal(stats_of(0.2, 0.1), 0.5, 1.0).f_hat ==
        doctest::Approx(0.2150406).epsilon(1e-7));
  CHECK(cf_mult_loglinear_normal(stats_of(0.2, 0.0), 0.5, 2.0).f_hat ==
        doctest::Approx(0.2 * std::sqrt(1.0 + 0.25 / 4.0)));
  CHECK_FALSE(cf_mult_loglinear_normal(stats_of(0.0, 0.0), 0.5, 1.0).valid);

  auto g = Kernel::gaussian();
  Vec data = normal_sample(100, 4);
  NormalDensity start = NormalDensity::fit(data);
  auto fam = family_mult_correction(start, 2, 0.0, "normal");
  Vec grid = Vec::LinSpaced(50, -2.0, 2.0);
  auto est = fit_grid(*fam, weights_make(WeightKind::score, *fam), g, 0.5, data, grid);
  Vec cf(grid.size());
  for (Eigen::Index j = 0; j < grid.size(); ++j)
    cf(j) = cf_mult_loglinear_normal(classic_estimate(g, 0.5, data, grid(j)), 0.5, start.sigma).f_hat;
  CHECK(max_rel(est.f_hat, cf) < 1e-6);

  // a shifted start gives the same answer
  NormalDensity shifted{ start.mu + 0.8, start.sigma };
  auto fam2 = family_mult_correction(shifted, 2, 0.0, "shifted");
  auto est2 = fit_grid(*fam2, weights_make(WeightKind::score, *fam2), g, 0.5, data, grid);
  CHECK(max_rel(est2.f_hat, cf) < 1e-6);
}

TEST_CASE("running normal closed form")
{
  auto g = Kernel::gaussian();
  Vec sym(4);
  sym << -1.5, -0.5, 0.5, 1.5;
  auto r0 = cf_running_normal(sym, 0.6, 0.0);
  CHECK(r0.valid);
  CHECK(std::abs(r0.aux["mu"]) < 1e-12);

  Vec data = normal_sample(500, 5);
  double h = 0.5, x = 0.7;
  auto r = cf_running_normal(data, h, x);
  REQUIRE(r.valid);

  // independent oracle: nested grid search on the two matching residuals
  auto s = classic_estimate(g, h, data, x);
  auto resid = [&](double mu, double sigma) {
    double sv = sigma * sigma + h * h;
    double m = std::exp(-0.5 * (x - mu) * (x - mu) / sv) / std::sqrt(2 * std::numbers::pi * sv);
    double r1 = m - s.f_tilde;
    double r2 = m * (mu - x) / sv - s.f_tilde_d1;
    return r1 * r1 + r2 * r2;
  };
  double cm = 0.0, cs = 1.0, span = 1.0;
  for (int level = 0; level < 12; ++level) {
    double bm = cm, bs = cs, best = resid(cm, cs);
    for (int i = -20; i <= 20; ++i)
      for (int j = -20; j <= 20; ++j) {
        double mu = cm + span * i / 20.0, sg = cs + span * j / 20.0;
        if (sg <= 0.0)
          continue;
        double v = resid(mu, sg);
        if (v < best)
          best = v, bm = mu, bs = sg;
      }
    cm = bm, cs = bs, span *= 0.25;
  }
  CHECK(r.aux["mu"] == doctest::Approx(cm).epsilon(1e-6));
  CHECK(r.aux["sigma"] == doctest::Approx(cs).epsilon(1e-6));

  // generic solver: normal family with weights (1, t - x)
  auto fam = family_normal();
  auto fit = fit_at(*fam, weights_make(WeightKind::powers, *fam), g, h, data, x);
  REQUIRE(fit.status == FitStatus::converged);
  CHECK(fit.f_hat == doctest::Approx(r.f_hat).epsilon(1e-8));
  CHECK(fit.theta_hat.decoded()(0) == doctest::Approx(r.aux["mu"]).epsilon(1e-8));

  // one observation at x: phi(h q) = phi(0) = h f~, so no solution
  Vec one(1);
  one << 0.0;
  CHECK_FALSE(cf_running_normal(one, 1.0, 0.0).valid);
  CHECK_FALSE(cf_running_normal(data, h, x, Kernel::uniform_half()).valid);
}

TEST_CASE("parametric-start estimator")
{
  auto g = Kernel::gaussian();
  Vec data = normal_sample(80, 6);
  auto c = cf_hjort_glad([](double) { return 0.4; }, g, 0.5, data, 0.2);
  CHECK(c.f_hat == doctest::Approx(classic_estimate(g, 0.5, data, 0.2).f_tilde).epsilon(1e-12));
  Vec one(1);
  one << 0.0;
  CHECK(cf_hjort_glad(phi, g, 1.0, one, 0.0).f_hat == doctest::Approx(0.3989423).epsilon(1e-7));
  auto bad = cf_hjort_glad([](double t) { return t; }, Kernel::uniform_half(), 1.0, data, 0.0);
  CHECK_FALSE(bad.valid);
}
