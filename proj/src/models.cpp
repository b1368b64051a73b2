#include "lpde/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lpde {

namespace {

constexpr double log_sqrt_2pi = 0.91893853320467274178;

// Probabilists' Hermite polynomial He_k(z), k <= 4.
double
hermite(int k, double z)
{
  switch (k) {
    case 0:
      return 1.0;
    case 1:
      return z;
    case 2:
      return z * z - 1.0;
    case 3:
      return z * z * z - 3.0 * z;
    case 4:
      return z * z * z * z - 6.0 * z * z + 3.0;
    default:
      throw std::invalid_argument("derivative order above 4 not supported");
  }
}

double
finite_difference_t(const LocalFamily& fam, double t, const Vec& theta, int k)
{
  static constexpr double steps[] = { 0.0, 1e-5, 1e-4, 1e-3, 5e-3 };
  if (k == 0)
    return fam.density(t, theta);
  double e = steps[k] * (1.0 + std::abs(t));
  auto f = [&](double s) { return fam.density(s, theta); };
  switch (k) {
    case 1:
      return (f(t + e) - f(t - e)) / (2.0 * e);
    case 2:
      return (f(t + e) - 2.0 * f(t) + f(t - e)) / (e * e);
    case 3:
      return (f(t + 2 * e) - 2.0 * f(t + e) + 2.0 * f(t - e) - f(t - 2 * e)) /
             (2.0 * e * e * e);
    case 4:
      return (f(t + 2 * e) - 4.0 * f(t + e) + 6.0 * f(t) - 4.0 * f(t - e) +
              f(t - 2 * e)) /
             (e * e * e * e);
    default:
      throw std::invalid_argument("derivative order above 4 not supported");
  }
}

class PolyExpFamily : public LocalFamily
{
public:
  PolyExpFamily(int p, double center)
    : p_(p)
    , center_(center)
  {}

  std::string name() const override { return "polyexp" + std::to_string(p_); }
  int dim() const override { return p_; }
  std::vector<std::string> param_names() const override
  {
    static const char* names[] = { "a", "b", "c", "d" };
    return { names, names + p_ };
  }
  std::vector<bool> log_scale() const override
  {
    std::vector<bool> s(p_, false);
    s[0] = true;
    return s;
  }
  bool is_centered() const override { return true; }
  double center() const override { return center_; }
  std::unique_ptr<LocalFamily> clone_at(double x) const override
  {
    return std::make_unique<PolyExpFamily>(p_, x);
  }
  Vec transport(const Vec& theta, double from, double to) const override
  {
    // sum_j theta_j (u + d)^j with u = t - to, d = to - from
    double d = to - from;
    Vec out = Vec::Zero(p_);
    for (int j = 0; j < p_; ++j) {
      double binom = 1.0;
      for (int k = 0; k <= j; ++k) {
        out(k) += theta(j) * binom * std::pow(d, j - k);
        binom = binom * (j - k) / (k + 1);
      }
    }
    return out;
  }

  double log_density(double t, const Vec& theta) const override
  {
    double u = t - center_;
    double acc = 0.0;
    for (int j = p_ - 1; j >= 0; --j)
      acc = acc * u + theta(j);
    return acc;
  }
  Vec score(double t, const Vec&) const override
  {
    return powers_vector(t - center_, p_);
  }
  Mat log_hessian(double, const Vec&) const override
  {
    return Mat::Zero(p_, p_);
  }
  FamilyPoint evaluate(double t, const Vec& theta) const override
  {
    FamilyPoint pt;
    pt.f = std::exp(log_density(t, theta));
    Vec u = score(t, theta);
    pt.grad = pt.f * u;
    pt.hess = pt.f * u * u.transpose();
    return pt;
  }

  double density_t_derivative(double t, const Vec& theta,
                              int k) const override
  {
    if (k < 0 || k > 4)
      throw std::invalid_argument("derivative order above 4 not supported");
    // d^k/dt^k exp(P) = Q_k exp(P), Q_{k+1} = Q_k' + P' Q_k
    double u = t - center_;
    std::vector<double> dp(std::max(p_ - 1, 1), 0.0); // coefficients of P'
    for (int j = 1; j < p_; ++j)
      dp[j - 1] = j * theta(j);
    std::vector<double> q{ 1.0 };
    for (int step = 0; step < k; ++step) {
      std::vector<double> next(q.size() + dp.size(), 0.0);
      for (std::size_t i = 1; i < q.size(); ++i)
        next[i - 1] += i * q[i];
      for (std::size_t i = 0; i < q.size(); ++i)
        for (std::size_t j = 0; j < dp.size(); ++j)
          next[i + j] += q[i] * dp[j];
      q = std::move(next);
    }
    double qv = 0.0;
    for (std::size_t i = q.size(); i-- > 0;)
      qv = qv * u + q[i];
    return qv * std::exp(log_density(t, theta));
  }

  std::optional<std::pair<double, double>> mass_interval(
    const Vec& theta) const override
  {
    // a Gaussian bump when the quadratic coefficient is negative
    if (p_ != 3 || !(theta(2) < 0.0))
      return std::nullopt;
    double var = -0.5 / theta(2);
    double mean = center_ + theta(1) * var;
    double sd = std::sqrt(var);
    return std::make_pair(mean - 12.0 * sd, mean + 12.0 * sd);
  }

  bool is_log_concave_in_params() const override { return true; }

  Vec initial_theta(const InitContext& ctx) const override
  {
    const auto& s = ctx.stats;
    Vec theta = Vec::Zero(p_);
    double f = std::max(s.f_tilde, 1e-300);
    double q = s.q_tilde.value_or(0.0);
    double k2h2 = ctx.kernel.variance() * ctx.h * ctx.h;
    if (p_ == 1) {
      theta(0) = std::log(f);
    } else if (p_ == 2) {
      theta(1) = q;
      theta(0) = std::log(f) - 0.5 * k2h2 * q * q;
    } else {
      double D = s.D_hat.value_or(0.0);
      double denom = 1.0 + k2h2 * D;
      if (!(denom > 0.1))
        D = 0.0, denom = 1.0;
      double c = D / denom;
      double R2 = 1.0 / denom;
      double b = q * R2;
      theta(0) = std::log(f) + 0.5 * std::log(R2) - 0.5 * k2h2 * R2 * q * q;
      theta(1) = b;
      theta(2) = 0.5 * c;
    }
    return theta;
  }

private:
  int p_;
  double center_;
};

class LinearFamily : public LocalFamily
{
public:
  explicit LinearFamily(double center)
    : center_(center)
  {}

  std::string name() const override { return "linear"; }
  int dim() const override { return 2; }
  std::vector<std::string> param_names() const override
  {
    return { "level", "slope" };
  }
  bool is_centered() const override { return true; }
  double center() const override { return center_; }
  std::unique_ptr<LocalFamily> clone_at(double x) const override
  {
    return std::make_unique<LinearFamily>(x);
  }
  Vec transport(const Vec& theta, double from, double to) const override
  {
    Vec out = theta;
    out(0) = theta(0) + theta(1) * (to - from);
    return out;
  }

  double density(double t, const Vec& theta) const override
  {
    return theta(0) + theta(1) * (t - center_);
  }
  double log_density(double t, const Vec& theta) const override
  {
    double f = density(t, theta);
    return f > 0.0 ? std::log(f) : -std::numeric_limits<double>::infinity();
  }
  Vec score(double t, const Vec& theta) const override
  {
    double f = density(t, theta);
    Vec u(2);
    u << 1.0, t - center_;
    if (!(f > 0.0))
      return Vec::Constant(2, std::numeric_limits<double>::quiet_NaN());
    return u / f;
  }
  Mat log_hessian(double t, const Vec& theta) const override
  {
    Vec u = score(t, theta);
    return -u * u.transpose();
  }
  FamilyPoint evaluate(double t, const Vec& theta) const override
  {
    FamilyPoint pt;
    pt.f = density(t, theta);
    pt.grad.resize(2);
    pt.grad << 1.0, t - center_;
    pt.hess = Mat::Zero(2, 2);
    return pt;
  }
  double density_t_derivative(double t, const Vec& theta,
                              int k) const override
  {
    if (k == 0)
      return density(t, theta);
    return k == 1 ? theta(1) : 0.0;
  }
  Vec initial_theta(const InitContext& ctx) const override
  {
    Vec theta(2);
    theta << ctx.stats.f_tilde, 0.0;
    return theta;
  }

private:
  double center_;
};

class NormalFamily : public LocalFamily
{
public:
  std::string name() const override { return "normal"; }
  int dim() const override { return 2; }
  std::vector<std::string> param_names() const override
  {
    return { "mu", "sigma" };
  }
  std::vector<bool> log_scale() const override { return { false, true }; }

  double log_density(double t, const Vec& theta) const override
  {
    double r = (t - theta(0)) * std::exp(-theta(1));
    return -theta(1) - log_sqrt_2pi - 0.5 * r * r;
  }
  Vec score(double t, const Vec& theta) const override
  {
    double inv_var = std::exp(-2.0 * theta(1));
    double d = t - theta(0);
    Vec u(2);
    u << d * inv_var, d * d * inv_var - 1.0;
    return u;
  }
  Mat log_hessian(double t, const Vec& theta) const override
  {
    double inv_var = std::exp(-2.0 * theta(1));
    double d = t - theta(0);
    Mat H(2, 2);
    H << -inv_var, -2.0 * d * inv_var, -2.0 * d * inv_var,
      -2.0 * d * d * inv_var;
    return H;
  }
  double density_t_derivative(double t, const Vec& theta,
                              int k) const override
  {
    return NormalDensity{ theta(0), std::exp(theta(1)) }.derivative(t, k);
  }
  std::optional<std::pair<double, double>> mass_interval(
    const Vec& theta) const override
  {
    double s = std::exp(theta(1));
    return std::make_pair(theta(0) - 12.0 * s, theta(0) + 12.0 * s);
  }

  Vec initial_theta(const InitContext& ctx) const override
  {
    auto [mu, log_sigma] =
      normal_moment_start(ctx.stats.x, ctx.stats.f_tilde, ctx.stats.g_tilde,
                          ctx.stats.g2_tilde,
                          ctx.kernel.variance() * ctx.h * ctx.h, ctx.h);
    Vec theta(2);
    theta << mu, log_sigma;
    return theta;
  }
};

class MultCorrectionFamily : public LocalFamily
{
public:
  MultCorrectionFamily(std::function<double(double)> f_init, int order,
                       double center, std::string init_name)
    : f_init_(std::move(f_init))
    , order_(order)
    , center_(center)
    , init_name_(std::move(init_name))
  {}

  std::string name() const override
  {
    return (order_ == 1 ? "mult-const(" : "mult-loglinear(") + init_name_ + ")";
  }
  int dim() const override { return order_; }
  std::vector<std::string> param_names() const override
  {
    if (order_ == 1)
      return { "a" };
    return { "a", "b" };
  }
  std::vector<bool> log_scale() const override
  {
    if (order_ == 1)
      return { true };
    return { true, false };
  }
  bool is_centered() const override { return true; }
  double center() const override { return center_; }
  std::unique_ptr<LocalFamily> clone_at(double x) const override
  {
    return std::make_unique<MultCorrectionFamily>(f_init_, order_, x,
                                                  init_name_);
  }
  Vec transport(const Vec& theta, double from, double to) const override
  {
    Vec out = theta;
    if (order_ == 2)
      out(0) += theta(1) * (to - from);
    return out;
  }

  double log_density(double t, const Vec& theta) const override
  {
    double fi = f_init_(t);
    if (!(fi > 0.0))
      return std::numeric_limits<double>::quiet_NaN();
    double acc = std::log(fi) + theta(0);
    if (order_ == 2)
      acc += theta(1) * (t - center_);
    return acc;
  }
  Vec score(double t, const Vec&) const override
  {
    return powers_vector(t - center_, order_);
  }
  Mat log_hessian(double, const Vec&) const override
  {
    return Mat::Zero(order_, order_);
  }
  bool is_log_concave_in_params() const override { return true; }

  Vec initial_theta(const InitContext& ctx) const override
  {
    const auto& s = ctx.stats;
    double x = s.x;
    double conv = kernel_convolve(ctx.kernel, ctx.h, x, f_init_, ctx.trunc);
    Vec theta = Vec::Zero(order_);
    theta(0) = std::log(std::max(s.f_tilde, 1e-300) / conv);
    if (order_ == 2) {
      double e = 1e-4 * (1.0 + std::abs(x));
      double dlog =
        (std::log(f_init_(x + e)) - std::log(f_init_(x - e))) / (2.0 * e);
      double b = s.q_tilde.value_or(0.0) - dlog;
      theta(1) = std::isfinite(b) ? b : 0.0;
    }
    return theta;
  }

private:
  std::function<double(double)> f_init_;
  int order_;
  double center_;
  std::string init_name_;
};

} // namespace

std::pair<double, double>
normal_moment_start(double x, double f, double g, double g2, double k2h2,
                    double h)
{
  // Inverts the Gaussian-kernel relations for the kernel-weighted local
  // mean m1 and variance v of a N(mu, sigma^2) density:
  //   v = sigma^2 k2h2 / (sigma^2 + k2h2),  m1 = (mu - x) k2h2 / (sigma^2 + k2h2)
  double floor_var = 0.25 * h * h;
  double var = floor_var;
  double m1 = 0.0;
  if (f > 0.0) {
    m1 = g / f;
    double v = g2 / f - m1 * m1;
    // the h/2 floor only bites when the kernel is narrower than the data
    if (v > 0.0)
      floor_var = 0.25 * std::min(h * h, v);
    if (v > 0.0 && v < 0.999 * k2h2)
      var = std::max(v * k2h2 / (k2h2 - v), floor_var);
    else if (v >= 0.999 * k2h2)
      var = std::max(v, 1000.0 * k2h2);
  }
  return { x + m1 * (var + k2h2) / k2h2, 0.5 * std::log(var) };
}

Vec
ParamVector::decoded() const
{
  Vec out = values;
  for (Eigen::Index j = 0; j < values.size(); ++j)
    if (j < static_cast<Eigen::Index>(log_scale.size()) && log_scale[j])
      out(j) = std::exp(values(j));
  return out;
}

std::vector<bool>
LocalFamily::log_scale() const
{
  return std::vector<bool>(dim(), false);
}

std::unique_ptr<LocalFamily>
LocalFamily::clone_at(double) const
{
  throw std::logic_error("family '" + name() + "' is not centered");
}

Vec
LocalFamily::transport(const Vec& theta, double, double) const
{
  return theta;
}

double
LocalFamily::density(double t, const Vec& theta) const
{
  return std::exp(log_density(t, theta));
}

FamilyPoint
LocalFamily::evaluate(double t, const Vec& theta) const
{
  FamilyPoint pt;
  pt.f = density(t, theta);
  Vec u = score(t, theta);
  pt.grad = pt.f * u;
  pt.hess = pt.f * (log_hessian(t, theta) + u * u.transpose());
  return pt;
}

double
LocalFamily::density_t_derivative(double t, const Vec& theta, int k) const
{
  if (k < 0 || k > 4)
    throw std::invalid_argument("derivative order above 4 not supported");
  return finite_difference_t(*this, t, theta, k);
}

ParamVector
LocalFamily::make_params(const Vec& internal) const
{
  return ParamVector{ internal, log_scale() };
}

Vec
LocalFamily::encode(const Vec& natural) const
{
  Vec out = natural;
  auto flags = log_scale();
  for (Eigen::Index j = 0; j < natural.size(); ++j) {
    if (flags[j]) {
      if (!(natural(j) > 0.0))
        throw std::invalid_argument("scale parameter must be positive");
      out(j) = std::log(natural(j));
    }
  }
  return out;
}

double
NormalDensity::operator()(double t) const
{
  double z = (t - mu) / sigma;
  return std::exp(-0.5 * z * z - log_sqrt_2pi) / sigma;
}

double
NormalDensity::derivative(double t, int k) const
{
  double z = (t - mu) / sigma;
  double sign = (k % 2 == 0) ? 1.0 : -1.0;
  return sign * hermite(k, z) * (*this)(t) / std::pow(sigma, k);
}

NormalDensity
NormalDensity::fit(const Eigen::Ref<const Eigen::VectorXd>& data)
{
  if (data.size() < 2)
    throw std::invalid_argument("normal fit needs at least two observations");
  double m = data.mean();
  double v = (data.array() - m).square().mean();
  if (!(v > 0.0))
    throw std::invalid_argument("normal fit needs nonconstant data");
  return NormalDensity{ m, std::sqrt(v) };
}

FamilyPtr
family_polyexp(int p, double center)
{
  if (p < 1 || p > 4)
    throw std::invalid_argument("polyexp family needs 1 <= p <= 4");
  return std::make_shared<PolyExpFamily>(p, center);
}

FamilyPtr
family_linear(double center)
{
  return std::make_shared<LinearFamily>(center);
}

FamilyPtr
family_normal()
{
  return std::make_shared<NormalFamily>();
}

FamilyPtr
family_mult_correction(std::function<double(double)> f_init, int order,
                       double center, std::string init_name)
{
  if (order != 1 && order != 2)
    throw std::invalid_argument("multiplicative correction order must be 1 or 2");
  if (!f_init)
    throw std::invalid_argument("f_init must be callable");
  return std::make_shared<MultCorrectionFamily>(std::move(f_init), order,
                                                center, std::move(init_name));
}

WeightKind
weight_kind_from_name(const std::string& name)
{
  if (name == "score")
    return WeightKind::score;
  if (name == "powers")
    return WeightKind::powers;
  if (name == "l2")
    return WeightKind::l2;
  throw std::invalid_argument("unknown weight scheme '" + name + "'");
}

std::string
to_string(WeightKind kind)
{
  switch (kind) {
    case WeightKind::score:
      return "score";
    case WeightKind::powers:
      return "powers";
    case WeightKind::l2:
      return "l2";
  }
  return "?";
}

Vec
powers_vector(double u, int p)
{
  Vec v(p);
  double acc = 1.0;
  for (int j = 0; j < p; ++j) {
    v(j) = acc;
    acc *= u;
  }
  return v;
}

Vec
WeightScheme::weight(const LocalFamily& family, double x, double t,
                     const Vec& theta) const
{
  switch (kind) {
    case WeightKind::score:
      return family.score(t, theta);
    case WeightKind::l2:
      return family.evaluate(t, theta).grad;
    case WeightKind::powers:
      return powers_vector(t - x, p);
  }
  return {};
}

Mat
WeightScheme::weight_param_jacobian(const LocalFamily& family, double,
                                    double t, const Vec& theta) const
{
  switch (kind) {
    case WeightKind::score:
      return family.log_hessian(t, theta);
    case WeightKind::l2:
      return family.evaluate(t, theta).hess;
    case WeightKind::powers:
      return Mat::Zero(p, p);
  }
  return {};
}

WeightScheme
weights_make(WeightKind kind, const LocalFamily& family)
{
  int p = family.dim();
  if (kind == WeightKind::powers && p > 4)
    throw std::invalid_argument("powers weights support at most 4 parameters");
  return WeightScheme{ kind, p };
}

} // namespace lpde
