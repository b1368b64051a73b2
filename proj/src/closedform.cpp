#include "lpde/closedform.hpp"

#include <cmath>
#include <numbers>

namespace lpde {

namespace {

ClosedFormResult
invalid(std::string why)
{
  ClosedFormResult r;
  r.diagnostic = std::move(why);
  return r;
}

} // namespace

ClosedFormResult
cf_loglinear(const SmootherStats& stats, double h)
{
  if (!(stats.f_tilde > 0.0))
    return invalid("classic estimate is zero");
  double b = stats.f_tilde_d1 / stats.f_tilde;
  ClosedFormResult r;
  r.f_hat = stats.f_tilde * std::exp(-0.5 * h * h * b * b);
  r.aux["b"] = b;
  r.valid = true;
  return r;
}

ClosedFormResult
cf_logquad(const SmootherStats& stats, double h)
{
  if (!(stats.f_tilde > 0.0))
    return invalid("classic estimate is zero");
  double q = stats.f_tilde_d1 / stats.f_tilde;
  double D = stats.f_tilde_d2 / stats.f_tilde - q * q;
  double denom = 1.0 + h * h * D;
  if (!(denom > 0.0))
    return invalid("1 + h^2 D <= 0: the log-quadratic equations have no solution");
  double R2 = 1.0 / denom;
  double R = std::sqrt(R2);
  ClosedFormResult r;
  r.f_hat = stats.f_tilde * R * std::exp(-0.5 * h * h * R2 * q * q);
  r.aux["R"] = R;
  r.aux["b"] = q * R2;
  r.aux["c"] = D / denom;
  r.aux["D"] = D;
  r.valid = true;
  return r;
}

ClosedFormResult
cf_mult_const(const std::function<double(double)>& f_init, const Kernel& k,
              double h, const Eigen::Ref<const Eigen::VectorXd>& data, double x)
{
  double conv = kernel_convolve(k, h, x, f_init);
  if (!(conv > 0.0))
    return invalid("kernel-smoothed start density is zero");
  SmootherStats s = classic_estimate(k, h, data, x);
  ClosedFormResult r;
  double ratio = f_init(x) / conv;
  r.f_hat = s.f_tilde * ratio;
  r.aux["a"] = s.f_tilde / conv;
  r.aux["convolution"] = conv;
  r.valid = true;
  return r;
}

ClosedFormResult
cf_mult_loglinear_normal(const SmootherStats& stats, double h, double sigma)
{
  if (!(stats.f_tilde > 0.0))
    return invalid("classic estimate is zero");
  if (!(sigma > 0.0))
    return invalid("start scale must be positive");
  double q = stats.f_tilde_d1 / stats.f_tilde;
  double g = 1.0 + h * h / (sigma * sigma);
  ClosedFormResult r;
  r.f_hat = stats.f_tilde * std::sqrt(g) * std::exp(-0.5 * h * h * g * q * q);
  r.aux["q"] = q;
  r.valid = true;
  return r;
}

ClosedFormResult
cf_running_normal(const Eigen::Ref<const Eigen::VectorXd>& data, double h,
                  double x, const Kernel& k)
{
  if (k.kind() != KernelKind::gaussian)
    return invalid("running normal closed form needs the Gaussian kernel");
  SmootherStats s = classic_estimate(k, h, data, x);
  if (!(s.f_tilde > 0.0))
    return invalid("classic estimate is zero");
  const double f = s.f_tilde;
  const double q = s.f_tilde_d1 / f;
  auto lhs = [q](double sv) {
    return std::exp(-0.5 * q * q * sv) / std::sqrt(2.0 * std::numbers::pi * sv);
  };
  double lo = h * h * (1.0 + 1e-12);
  if (!(lhs(lo) > f))
    return invalid("phi(h q) <= h f~: no running normal solution");
  double hi = 2.0 * lo;
  int doublings = 0;
  while (lhs(hi) > f && doublings < 60) {
    lo = hi;
    hi *= 2.0;
    ++doublings;
  }
  if (lhs(hi) > f)
    return invalid("bisection bracket not found");
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    (lhs(mid) > f ? lo : hi) = mid;
  }
  double sv = 0.5 * (lo + hi);
  double var = std::max(sv - h * h, 0.0);
  ClosedFormResult r;
  r.aux["mu"] = x + sv * q;
  r.aux["sigma"] = std::sqrt(var);
  double z = (x - r.aux["mu"]);
  r.f_hat = var > 0.0 ? std::exp(-0.5 * z * z / var) / std::sqrt(2.0 * std::numbers::pi * var)
                      : 0.0;
  r.valid = var > 0.0;
  if (!r.valid)
    r.diagnostic = "fitted scale collapsed to zero";
  return r;
}

ClosedFormResult
cf_hjort_glad(const std::function<double(double)>& f_init, const Kernel& k,
              double h, const Eigen::Ref<const Eigen::VectorXd>& data, double x)
{
  if (data.size() == 0)
    return invalid("data must be nonempty");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    double w = k.scaled(h, data(i) - x);
    if (w == 0.0)
      continue;
    double fi = f_init(data(i));
    if (!(fi > 0.0))
      return invalid("start density is not positive at a data point in the window");
    acc += w / fi;
  }
  ClosedFormResult r;
  r.f_hat = f_init(x) * acc / static_cast<double>(data.size());
  r.valid = std::isfinite(r.f_hat);
  return r;
}

} // namespace lpde
