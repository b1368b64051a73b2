#include "lpde/kernels.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lpde {

namespace {

constexpr double inv_sqrt_2pi = 0.3989422804014327;

double
std_normal_pdf(double z)
{
  return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

// int_{-a}^{a} z^j (c0 + c2 z^2 + c4 z^4) dz for even j
double
even_poly_moment(int j, double a, double c0, double c2, double c4)
{
  auto m = [a](int k) { return 2.0 * std::pow(a, k + 1) / (k + 1); };
  return c0 * m(j) + c2 * m(j + 2) + c4 * m(j + 4);
}

} // namespace

Kernel::Kernel(std::string name, KernelKind kind, double radius,
               std::function<double(double)> custom_eval)
  : name_(std::move(name))
  , kind_(kind)
  , radius_(radius)
  , custom_eval_(std::move(custom_eval))
{}

Kernel
Kernel::gaussian()
{
  return Kernel("gaussian", KernelKind::gaussian,
                std::numeric_limits<double>::infinity());
}

Kernel
Kernel::uniform_half()
{
  return Kernel("uniform", KernelKind::uniform_half, 0.5);
}

Kernel
Kernel::uniform_unit()
{
  return Kernel("uniform-unit", KernelKind::uniform_unit, 1.0);
}

Kernel
Kernel::epanechnikov()
{
  return Kernel("epanechnikov", KernelKind::epanechnikov, 0.5);
}

Kernel
Kernel::biweight()
{
  return Kernel("biweight", KernelKind::biweight, 1.0);
}

Kernel
Kernel::custom(std::string name, double support_radius,
               std::function<double(double)> eval)
{
  if (!(support_radius > 0.0))
    throw std::invalid_argument("kernel support radius must be positive");
  if (!eval)
    throw std::invalid_argument("custom kernel needs an evaluation function");
  return Kernel(std::move(name), KernelKind::custom, support_radius,
                std::move(eval));
}

Kernel
Kernel::from_name(std::string_view name)
{
  if (name == "gaussian" || name == "normal")
    return gaussian();
  if (name == "uniform" || name == "uniform-half")
    return uniform_half();
  if (name == "uniform-unit")
    return uniform_unit();
  if (name == "epanechnikov")
    return epanechnikov();
  if (name == "biweight")
    return biweight();
  throw std::invalid_argument("unknown kernel '" + std::string(name) + "'");
}

bool
Kernel::has_analytic_derivatives() const
{
  switch (kind_) {
    case KernelKind::gaussian:
    case KernelKind::epanechnikov:
    case KernelKind::biweight:
      return true;
    default:
      return false;
  }
}

double
Kernel::operator()(double z) const
{
  if (std::abs(z) > radius_)
    return 0.0;
  switch (kind_) {
    case KernelKind::gaussian:
      return std_normal_pdf(z);
    case KernelKind::uniform_half:
      return 1.0;
    case KernelKind::uniform_unit:
      return 0.5;
    case KernelKind::epanechnikov:
      return 1.5 * (1.0 - 4.0 * z * z);
    case KernelKind::biweight: {
      double s = 1.0 - z * z;
      return 15.0 / 16.0 * s * s;
    }
    case KernelKind::custom:
      return custom_eval_(z);
  }
  return 0.0;
}

double
Kernel::derivative(double z) const
{
  if (std::abs(z) > radius_)
    return 0.0;
  switch (kind_) {
    case KernelKind::gaussian:
      return -z * std_normal_pdf(z);
    case KernelKind::epanechnikov:
      return -12.0 * z;
    case KernelKind::biweight:
      return -3.75 * z * (1.0 - z * z);
    default:
      throw std::logic_error("kernel '" + name_ +
                             "' has no analytic derivative");
  }
}

double
Kernel::second_derivative(double z) const
{
  if (std::abs(z) > radius_)
    return 0.0;
  switch (kind_) {
    case KernelKind::gaussian:
      return (z * z - 1.0) * std_normal_pdf(z);
    case KernelKind::epanechnikov:
      return -12.0;
    case KernelKind::biweight:
      return -3.75 * (1.0 - 3.0 * z * z);
    default:
      throw std::logic_error("kernel '" + name_ +
                             "' has no analytic derivative");
  }
}

double
Kernel::moment(int j) const
{
  if (j < 0 || j > 6)
    throw std::invalid_argument("kernel moments are supported for j <= 6");
  if (j % 2 == 1)
    return 0.0;
  switch (kind_) {
    case KernelKind::gaussian: {
      // (j - 1)!!
      double m = 1.0;
      for (int i = j - 1; i > 0; i -= 2)
        m *= i;
      return m;
    }
    case KernelKind::uniform_half:
      return even_poly_moment(j, 0.5, 1.0, 0.0, 0.0);
    case KernelKind::uniform_unit:
      return even_poly_moment(j, 1.0, 0.5, 0.0, 0.0);
    case KernelKind::epanechnikov:
      return even_poly_moment(j, 0.5, 1.5, -6.0, 0.0);
    case KernelKind::biweight:
      return even_poly_moment(j, 1.0, 15.0 / 16.0, -30.0 / 16.0, 15.0 / 16.0);
    case KernelKind::custom:
      return moment_quadrature(j);
  }
  return 0.0;
}

double
Kernel::moment_quadrature(int j) const
{
  if (j < 0 || j > 6)
    throw std::invalid_argument("kernel moments are supported for j <= 6");
  double r = integration_radius();
  return integrate(
    [this, j](double z) { return std::pow(z, j) * eval(z); }, -r, r,
    quadrature_order, 2);
}

double
Kernel::roughness() const
{
  switch (kind_) {
    case KernelKind::gaussian:
      return 0.5 / std::sqrt(std::numbers::pi);
    case KernelKind::uniform_half:
      return 1.0;
    case KernelKind::uniform_unit:
      return 0.5;
    case KernelKind::epanechnikov:
      return 1.2;
    case KernelKind::biweight:
      return 5.0 / 7.0;
    case KernelKind::custom:
      return roughness_quadrature();
  }
  return 0.0;
}

double
Kernel::roughness_quadrature() const
{
  double r = integration_radius();
  return integrate([this](double z) { return eval(z) * eval(z); }, -r, r,
                   quadrature_order, 2);
}

double
Kernel::mgf(double u) const
{
  switch (kind_) {
    case KernelKind::gaussian:
      return std::exp(0.5 * u * u);
    case KernelKind::uniform_half:
    case KernelKind::uniform_unit: {
      double a = radius_;
      if (u == 0.0)
        return 1.0;
      return std::sinh(a * u) / (a * u);
    }
    default:
      break;
  }
  if (!has_finite_support())
    throw std::invalid_argument("moment-generating function of kernel '" +
                                name_ + "' is not available");
  return integrate([this, u](double z) { return std::exp(u * z) * eval(z); },
                   -radius_, radius_, quadrature_order, 2);
}

SmootherStats
classic_estimate(const Kernel& k, double h,
                 const Eigen::Ref<const Eigen::VectorXd>& data, double x)
{
  if (!(h > 0.0))
    throw std::invalid_argument("bandwidth must be positive");
  if (data.size() == 0)
    throw std::invalid_argument("data must be nonempty");

  const double n = static_cast<double>(data.size());
  SmootherStats s;
  s.x = x;
  double f = 0.0, d1 = 0.0, d2 = 0.0, g = 0.0, g2 = 0.0;
  const bool analytic = k.has_analytic_derivatives();
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    double u = data(i) - x;
    double z = u / h;
    double kz = k(z);
    f += kz;
    g += kz * u;
    g2 += kz * u * u;
    if (analytic) {
      // d/dx K((x_i - x)/h) = -K'(z)/h
      d1 -= k.derivative(z);
      d2 += k.second_derivative(z);
    }
  }
  s.f_tilde = f / (n * h);
  s.g_tilde = g / (n * h);
  s.g2_tilde = g2 / (n * h);
  if (analytic) {
    s.f_tilde_d1 = d1 / (n * h * h);
    s.f_tilde_d2 = d2 / (n * h * h * h);
  } else {
    double step = 1e-5 * h;
    auto fhat = [&](double at) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < data.size(); ++i)
        acc += k((data(i) - at) / h);
      return acc / (n * h);
    };
    double fp = fhat(x + step), fm = fhat(x - step);
    s.f_tilde_d1 = (fp - fm) / (2.0 * step);
    s.f_tilde_d2 = (fp - 2.0 * s.f_tilde + fm) / (step * step);
  }
  if (s.f_tilde > 0.0) {
    double q = s.f_tilde_d1 / s.f_tilde;
    s.q_tilde = q;
    s.D_hat = s.f_tilde_d2 / s.f_tilde - q * q;
  }
  return s;
}

Eigen::VectorXd
classic_density(const Kernel& k, double h,
                const Eigen::Ref<const Eigen::VectorXd>& data,
                const Eigen::Ref<const Eigen::VectorXd>& grid)
{
  if (!(h > 0.0))
    throw std::invalid_argument("bandwidth must be positive");
  if (data.size() == 0)
    throw std::invalid_argument("data must be nonempty");
  Eigen::VectorXd out(grid.size());
  const double n = static_cast<double>(data.size());
  for (Eigen::Index j = 0; j < grid.size(); ++j) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < data.size(); ++i)
      acc += k((data(i) - grid(j)) / h);
    out(j) = acc / (n * h);
  }
  return out;
}

QuadratureRule
kernel_window(const Kernel& k, double h, double x, double trunc, double lower,
              double upper, int panels)
{
  double r = k.integration_radius(trunc) * h;
  double lo = std::max(x - r, lower);
  double hi = std::min(x + r, upper);
  if (!(hi > lo))
    return QuadratureRule{};
  QuadratureRule rule = gauss_legendre_on(lo, hi, quadrature_order, panels);
  for (Eigen::Index i = 0; i < rule.size(); ++i)
    rule.weights(i) *= k.scaled(h, rule.nodes(i) - x);
  return rule;
}

double
kernel_convolve(const Kernel& k, double h, double x,
                const std::function<double(double)>& g, double trunc)
{
  if (!(h > 0.0))
    throw std::invalid_argument("bandwidth must be positive");
  QuadratureRule rule = kernel_window(k, h, x, trunc);
  double s = 0.0;
  for (Eigen::Index i = 0; i < rule.size(); ++i) {
    double v = g(rule.nodes(i));
    if (!std::isfinite(v))
      throw std::domain_error("integrand is not finite inside the kernel window");
    s += rule.weights(i) * v;
  }
  return s;
}

} // namespace lpde
