#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "lpde/models.hpp"

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
vec(std::initializer_list<double> v)
{
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v)
    out(i++) = x;
  return out;
}

Vec
fd_score(const LocalFamily& fam, double t, const Vec& theta)
{
  Vec g(theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    double e = 1e-5 * (1.0 + std::abs(theta(j)));
    Vec tp = theta, tm = theta;
    tp(j) += e;
    tm(j) -= e;
    g(j) = (fam.log_density(t, tp) - fam.log_density(t, tm)) / (2.0 * e);
  }
  return g;
}

Mat
fd_jacobian(const std::function<Vec(const Vec&)>& fn, const Vec& theta)
{
  Vec f0 = fn(theta);
  Mat J(f0.size(), theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    double e = 1e-5 * (1.0 + std::abs(theta(j)));
    Vec tp = theta, tm = theta;
    tp(j) += e;
    tm(j) -= e;
    J.col(j) = (fn(tp) - fn(tm)) / (2.0 * e);
  }
  return J;
}

struct Probe
{
  FamilyPtr family;
  std::function<Vec(std::mt19937_64&)> theta;
  double t_lo, t_hi;
};

std::vector<Probe>
probes()
{
  auto unif = [](std::mt19937_64& g, double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(g);
  };
  std::vector<Probe> out;
  for (int p = 1; p <= 4; ++p)
    out.push_back({ family_polyexp(p, 0.3),
                    [p, unif](std::mt19937_64& g) {
                      Vec th(p);
                      for (int j = 0; j < p; ++j)
                        th(j) = unif(g, -0.5, 0.5);
                      return th;
                    },
                    -1.2, 1.8 });
  out.push_back({ family_normal(),
                  [unif](std::mt19937_64& g) { return vec({ unif(g, -1, 1), unif(g, -0.5, 0.5) }); },
                  -2.0, 2.0 });
  out.push_back({ family_linear(0.0),
                  [unif](std::mt19937_64& g) { return vec({ unif(g, 0.5, 1.0), unif(g, -0.2, 0.2) }); },
                  -1.0, 1.0 });
  out.push_back({ family_mult_correction(phi, 1, 0.2, "phi"),
                  [unif](std::mt19937_64& g) { return vec({ unif(g, -1, 1) }); }, -2.0, 2.0 });
  out.push_back({ family_mult_correction(phi, 2, 0.2, "phi"),
                  [unif](std::mt19937_64& g) { return vec({ unif(g, -1, 1), unif(g, -0.5, 0.5) }); },
                  -2.0, 2.0 });
  return out;
}

} // namespace

TEST_CASE("score matches finite differences at seeded probes")
{
  std::mt19937_64 gen(20240611);
  for (const auto& pr : probes()) {
    CAPTURE(pr.family->name());
    for (int k = 0; k < 20; ++k) {
      Vec th = pr.theta(gen);
      double t = std::uniform_real_distribution<double>(pr.t_lo, pr.t_hi)(gen);
      Vec fd = fd_score(*pr.family, t, th);
      CHECK((pr.family->score(t, th) - fd).lpNorm<Eigen::Infinity>() < 1e-6);
      CHECK(std::abs(pr.family->density(t, th) - std::exp(pr.family->log_density(t, th))) < 1e-12);
      CHECK(pr.family->density(t, th) > 0.0);
    }
  }
}

TEST_CASE("log-hessian and density gradient/hessian are consistent")
{
  std::mt19937_64 gen(7);
  for (const auto& pr : probes()) {
    CAPTURE(pr.family->name());
    for (int k = 0; k < 10; ++k) {
      Vec th = pr.theta(gen);
      double t = std::uniform_real_distribution<double>(pr.t_lo, pr.t_hi)(gen);
      const LocalFamily& fam = *pr.family;
      Mat H = fd_jacobian([&](const Vec& v) { return fam.score(t, v); }, th);
      CHECK((fam.log_hessian(t, th) - H).lpNorm<Eigen::Infinity>() < 1e-6);
      FamilyPoint pt = fam.evaluate(t, th);
      Vec g = fd_jacobian([&](const Vec& v) { return Vec::Constant(1, fam.density(t, v)); }, th).row(0).transpose();
      CHECK((pt.grad - g).lpNorm<Eigen::Infinity>() < 1e-6);
      Mat Hf = fd_jacobian([&](const Vec& v) { return fam.evaluate(t, v).grad; }, th);
      CHECK((pt.hess - Hf).lpNorm<Eigen::Infinity>() < 1e-6);
      CHECK(pt.f == doctest::Approx(fam.density(t, th)).epsilon(1e-14));
    }
  }
}

TEST_CASE("t-derivatives")
{
  auto fam = family_polyexp(4, 0.5);
  Vec th = vec({ -0.3, 0.4, -0.6, 0.1 });
  auto fd = [&](double t, int k) {
    double e = 1e-3;
    auto d = [&](double s) { return fam->density_t_derivative(s, th, k - 1); };
    return (d(t + e) - d(t - e)) / (2.0 * e);
  };
  for (double t : { -0.5, 0.2, 1.1 })
    for (int k = 1; k <= 4; ++k)
      CHECK(fam->density_t_derivative(t, th, k) == doctest::Approx(fd(t, k)).epsilon(1e-5));

  auto nrm = family_normal();
  Vec nt = vec({ 0.3, std::log(1.7) });
  CHECK(nrm->density_t_derivative(0.0, nt, 2) ==
        doctest::Approx(NormalDensity{ 0.3, 1.7 }.derivative(0.0, 2)));
  NormalDensity sn{ 0.0, 1.0 };
  CHECK(sn.derivative(1.0, 2) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(sn.derivative(0.0, 4) == doctest::Approx(3.0 * phi(0.0)));
  CHECK(sn.derivative(0.5, 1) == doctest::Approx(-0.5 * phi(0.5)));

  auto mult = family_mult_correction(phi, 2, 0.0);
  Vec mt = vec({ 0.0, 0.0 });
  CHECK(mult->density_t_derivative(1.0, mt, 1) == doctest::Approx(-phi(1.0)).epsilon(1e-6));
  CHECK(mult->density_t_derivative(1.0, mt, 2) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("family examples")
{
  auto p1 = family_polyexp(1, 0.0);
  CHECK(p1->density(3.7, vec({ std::log(0.2) })) == doctest::Approx(0.2));
  auto p2 = family_polyexp(2, 1.0);
  CHECK(p2->density(2.0, vec({ 0.0, 0.3 })) == doctest::Approx(1.3498588).epsilon(1e-7));
  Vec s = p2->score(3.0, vec({ 0.0, 0.3 }));
  CHECK(s(0) == 1.0);
  CHECK(s(1) == 2.0);
  CHECK(p2->is_log_concave_in_params());
  CHECK_THROWS(family_polyexp(0));
  CHECK_THROWS(family_polyexp(5));

  auto n = family_normal();
  CHECK(n->density(0.0, vec({ 0.0, 0.0 })) == doctest::Approx(0.3989423).epsilon(1e-7));
  Vec ns = n->score(0.0, vec({ 0.0, 0.0 }));
  CHECK(ns(0) == 0.0);
  CHECK(ns(1) == -1.0);
  Vec th = vec({ 0.3, std::log(1.7) });
  CHECK((n->score(-0.5, th) - fd_score(*n, -0.5, th)).lpNorm<Eigen::Infinity>() < 1e-6);

  auto m1 = family_mult_correction(phi, 1, 0.0);
  CHECK(m1->density(0.0, vec({ std::log(2.0) })) == doctest::Approx(0.7978846).epsilon(1e-7));
  CHECK(m1->density(0.8, vec({ 0.0 })) == doctest::Approx(phi(0.8)));
  auto m2 = family_mult_correction(phi, 2, 0.4);
  CHECK(m2->density(-0.3, vec({ 0.0, 0.0 })) == doctest::Approx(phi(-0.3)));
  CHECK_THROWS(family_mult_correction(phi, 3));
}

TEST_CASE("parameter decoding")
{
  auto n = family_normal();
  ParamVector pv = n->make_params(vec({ 0.5, std::log(2.0) }));
  Vec d = pv.decoded();
  CHECK(d(0) == 0.5);
  CHECK(d(1) == doctest::Approx(2.0));
  CHECK(n->encode(d)(1) == doctest::Approx(std::log(2.0)));
  CHECK_THROWS(n->encode(vec({ 0.0, -1.0 })));
}

TEST_CASE("centered families and transport")
{
  auto fam = family_polyexp(4, 0.0);
  Vec th = vec({ -0.2, 0.3, -0.4, 0.05 });
  auto moved = fam->clone_at(0.7);
  Vec th2 = fam->transport(th, 0.0, 0.7);
  for (double t : { -1.0, 0.0, 0.5, 2.0 })
    CHECK(moved->log_density(t, th2) == doctest::Approx(fam->log_density(t, th)).epsilon(1e-12));

  auto lin = family_linear(0.0);
  Vec lt = vec({ 0.4, 0.1 });
  auto lmoved = lin->clone_at(-0.5);
  Vec lt2 = lin->transport(lt, 0.0, -0.5);
  CHECK(lmoved->density(0.3, lt2) == doctest::Approx(lin->density(0.3, lt)));

  auto mult = family_mult_correction(phi, 2, 0.0);
  Vec mt = vec({ 0.1, -0.3 });
  auto mmoved = mult->clone_at(1.0);
  CHECK(mmoved->density(0.4, mult->transport(mt, 0.0, 1.0)) ==
        doctest::Approx(mult->density(0.4, mt)));
  CHECK_THROWS(family_normal()->clone_at(1.0));
}

TEST_CASE("weight schemes")
{
  auto p2 = family_polyexp(2, 0.0);
  auto score = weights_make(WeightKind::score, *p2);
  Vec w = score.weight(*p2, 0.0, 1.0, vec({ -1.0, 0.2 }));
  CHECK(w(0) == 1.0);
  CHECK(w(1) == 1.0);

  auto powers = weights_make(WeightKind::powers, *p2);
  Vec pw = powers.weight(*p2, 0.0, 0.5, vec({ 3.0, 9.0 }));
  CHECK(pw(0) == 1.0);
  CHECK(pw(1) == 0.5);
  CHECK(powers.weight_param_jacobian(*p2, 0.0, 0.5, vec({ 3.0, 9.0 })).isZero());

  auto p1 = family_polyexp(1, 0.0);
  auto l2 = weights_make(WeightKind::l2, *p1);
  CHECK(l2.weight(*p1, 0.0, 0.9, vec({ std::log(0.2) }))(0) == doctest::Approx(0.2));

  std::mt19937_64 gen(99);
  for (const auto& pr : probes()) {
    CAPTURE(pr.family->name());
    const LocalFamily& fam = *pr.family;
    Vec th = pr.theta(gen);
    double t = 0.5 * (pr.t_lo + pr.t_hi) + 0.1;
    auto sc = weights_make(WeightKind::score, fam);
    auto ls = weights_make(WeightKind::l2, fam);
    CHECK(sc.weight(fam, 0.0, t, th) == fam.score(t, th));
    CHECK((ls.weight(fam, 0.0, t, th) - fam.density(t, th) * fam.score(t, th)).lpNorm<Eigen::Infinity>() < 1e-14);
    for (auto ws : { sc, ls }) {
      Mat J = fd_jacobian([&](const Vec& v) { return ws.weight(fam, 0.0, t, v); }, th);
      CHECK((ws.weight_param_jacobian(fam, 0.0, t, th) - J).lpNorm<Eigen::Infinity>() < 1e-6);
    }
  }

  CHECK(weight_kind_from_name("l2") == WeightKind::l2);
  CHECK_THROWS(weight_kind_from_name("cubic"));
}

TEST_CASE("normal maximum likelihood")
{
  Vec data = vec({ -1.0, 1.0 });
  auto nd = NormalDensity::fit(data);
  CHECK(nd.mu == 0.0);
  CHECK(nd.sigma == doctest::Approx(1.0));
  CHECK(nd(0.0) == doctest::Approx(phi(0.0)));
  CHECK_THROWS(NormalDensity::fit(vec({ 2.0 })));
}
