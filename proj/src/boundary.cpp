#include "lpde/boundary.hpp"

#include <cmath>
#include <stdexcept>

namespace lpde {

namespace {

void
require_finite_support(const Kernel& k)
{
  if (!k.has_finite_support())
    throw std::invalid_argument("boundary functionals need a finite-support kernel");
}

double
truncated_integral(const Kernel& k, double p, const std::function<double(double)>& g)
{
  double S = k.support_radius();
  double hi = std::min(p, S);
  if (!(hi > -S))
    return 0.0;
  return integrate(g, -S, hi, quadrature_order, 4);
}

} // namespace

BoundaryMoments
boundary_moments(const Kernel& k, double p)
{
  require_finite_support(k);
  if (!(p >= 0.0))
    throw std::invalid_argument("relative position must be nonnegative");
  BoundaryMoments m;
  m.p = p;
  for (int l = 0; l < 4; ++l)
    m.a[l] = truncated_integral(k, p, [&](double u) { return std::pow(u, l) * k(u); });
  m.b = truncated_integral(k, p, [&](double u) { return k(u) * k(u); });
  const auto& a = m.a;
  m.Q = (a[2] * a[2] - a[1] * a[3]) / (a[2] * a[0] - a[1] * a[1]);
  return m;
}

std::function<double(double)>
boundary_kernel(const Kernel& k, double p)
{
  BoundaryMoments m = boundary_moments(k, p);
  double det = m.a[0] * m.a[2] - m.a[1] * m.a[1];
  double a1 = m.a[1], a2 = m.a[2];
  double hi = std::min(p, k.support_radius());
  return [k, a1, a2, det, hi](double z) {
    if (z > hi)
      return 0.0;
    return (a2 - a1 * z) / det * k(z);
  };
}

double
boundary_variance_factor(const Kernel& k, double p)
{
  BoundaryMoments m = boundary_moments(k, p);
  double det = m.a[0] * m.a[2] - m.a[1] * m.a[1];
  double num = truncated_integral(k, p, [&](double z) {
    double w = (m.a[2] - m.a[1] * z) * k(z);
    return w * w;
  });
  return num / (det * det);
}

double
loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("slope fit needs at least two matching points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]) / n;
    my += std::log(std::abs(y[i])) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(std::abs(y[i])) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

BoundaryBiasReport
boundary_bias_diag(const LocalFamily& family, const WeightScheme& scheme,
                   const Kernel& k, const std::vector<double>& h_list,
                   const std::function<double(double)>& f_true, double p_rel,
                   FitConfig cfg)
{
  require_finite_support(k);
  if (h_list.empty())
    throw std::invalid_argument("h_list must be nonempty");
  cfg.support_lower = 0.0;
  cfg.panels = std::max(cfg.panels, 4);
  BoundaryBiasReport rep;
  for (double h : h_list) {
    double x = p_rel * h;
    WeightedSample emp = population_measure(k, h, f_true, x, cfg);
    SmootherStats stats = measure_stats(k, h, x, emp);
    LocalFitResult r = fit_measure(family, scheme, k, h, emp, stats, cfg);
    rep.h.push_back(h);
    rep.x.push_back(x);
    rep.bias.push_back(r.f_hat - f_true(x));
    rep.status.push_back(r.status);
    if (r.status != FitStatus::converged)
      rep.ok = false;
  }
  bool all_zero = true;
  for (double b : rep.bias)
    all_zero = all_zero && b == 0.0;
  if (rep.h.size() >= 2 && !all_zero) {
    rep.slope = loglog_slope(rep.h, rep.bias);
    std::size_t imin = 0;
    for (std::size_t i = 1; i < rep.h.size(); ++i)
      if (rep.h[i] < rep.h[imin])
        imin = i;
    rep.coefficient = rep.bias[imin] / std::pow(rep.h[imin], std::round(rep.slope));
  }
  return rep;
}

} // namespace lpde
