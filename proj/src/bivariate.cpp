#include "lpde/bivariate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace lpde {

namespace {

void
check_bandwidths(double h1, double h2)
{
  if (!(h1 > 0.0) || !(h2 > 0.0) || !std::isfinite(h1) || !std::isfinite(h2))
    throw std::invalid_argument("bandwidths must be positive");
}

// Axis rule with weights w_m K_h(t_m - x), restricted to [lo, hi] when that
// is narrower than the kernel window.
QuadratureRule
axis_rule(const Kernel& k, double h, double x, const FitConfig& cfg,
          double lo = -std::numeric_limits<double>::infinity(),
          double hi = std::numeric_limits<double>::infinity())
{
  double r = k.integration_radius(cfg.trunc) * h;
  if (lo <= x - r && hi >= x + r)
    return kernel_window(k, h, x, cfg.trunc, -std::numeric_limits<double>::infinity(),
                         std::numeric_limits<double>::infinity(), cfg.panels);
  double a = std::max(lo, x - r), b = std::min(hi, x + r);
  if (!(b > a))
    return QuadratureRule{};
  QuadratureRule rule = gauss_legendre_on(a, b, quadrature_order,
                                          std::max(cfg.panels, 2));
  for (Eigen::Index i = 0; i < rule.size(); ++i)
    rule.weights(i) *= k.scaled(h, rule.nodes(i) - x);
  return rule;
}

WeightedSample2D
tensor(const QuadratureRule& r1, const QuadratureRule& r2)
{
  WeightedSample2D s;
  const Eigen::Index m1 = r1.size(), m2 = r2.size();
  s.points.resize(m1 * m2, 2);
  s.weights.resize(m1 * m2);
  for (Eigen::Index i = 0; i < m1; ++i)
    for (Eigen::Index j = 0; j < m2; ++j) {
      Eigen::Index r = i * m2 + j;
      s.points(r, 0) = r1.nodes(i);
      s.points(r, 1) = r2.nodes(j);
      s.weights(r) = r1.weights(i) * r2.weights(j);
    }
  return s;
}

class Constant2D : public LocalFamily2D
{
public:
  std::string name() const override { return "constant"; }
  int dim() const override { return 1; }
  std::vector<std::string> param_names() const override { return { "a" }; }
  std::vector<bool> log_scale() const override { return { true }; }
  double log_density(const Point2&, const Vec& theta) const override
  {
    return theta(0);
  }
  Vec score(const Point2&, const Vec&) const override { return Vec::Ones(1); }
  Mat log_hessian(const Point2&, const Vec&) const override
  {
    return Mat::Zero(1, 1);
  }
  Vec initial_theta(const InitContext2D& ctx) const override
  {
    return Vec::Constant(1, std::log(std::max(ctx.stats.f_tilde, 1e-300)));
  }
};

// exp of a polynomial in u = t - center: linear terms, optionally
// u1^2, u2^2 and u1 u2.
class LogPoly2D : public LocalFamily2D
{
public:
  LogPoly2D(bool quadratic, const Point2& center)
    : quadratic_(quadratic)
    , center_(center)
  {}

  std::string name() const override
  {
    return quadratic_ ? "logquad2d" : "loglinear2d";
  }
  int dim() const override { return quadratic_ ? 6 : 3; }
  std::vector<std::string> param_names() const override
  {
    if (quadratic_)
      return { "a", "b1", "b2", "c1", "c2", "d" };
    return { "a", "b1", "b2" };
  }
  std::vector<bool> log_scale() const override
  {
    std::vector<bool> s(dim(), false);
    s[0] = true;
    return s;
  }
  bool is_centered() const override { return true; }
  std::unique_ptr<LocalFamily2D> clone_at(const Point2& x) const override
  {
    return std::make_unique<LogPoly2D>(quadratic_, x);
  }
  Vec transport(const Vec& theta, const Point2& from,
                const Point2& to) const override
  {
    Vec out = theta;
    Point2 d = to - from;
    out(0) = theta.dot(basis(d));
    if (quadratic_) {
      out(1) += 2.0 * theta(3) * d(0) + theta(5) * d(1);
      out(2) += 2.0 * theta(4) * d(1) + theta(5) * d(0);
    }
    return out;
  }
  double log_density(const Point2& t, const Vec& theta) const override
  {
    return theta.dot(basis(t - center_));
  }
  Vec score(const Point2& t, const Vec&) const override
  {
    return basis(t - center_);
  }
  Mat log_hessian(const Point2&, const Vec&) const override
  {
    return Mat::Zero(dim(), dim());
  }
  Vec initial_theta(const InitContext2D& ctx) const override
  {
    const auto& s = ctx.stats;
    Vec theta = Vec::Zero(dim());
    double f = std::max(s.f_tilde, 1e-300);
    Point2 q = s.f_tilde > 0.0 ? Point2(s.grad / s.f_tilde) : Point2::Zero();
    double a1 = ctx.k1.variance() * ctx.h1 * ctx.h1;
    double a2 = ctx.k2.variance() * ctx.h2 * ctx.h2;
    theta(0) = std::log(f) - 0.5 * (a1 * q(0) * q(0) + a2 * q(1) * q(1));
    theta(1) = q(0);
    theta(2) = q(1);
    return theta;
  }

private:
  Vec basis(const Point2& u) const
  {
    Vec b(dim());
    b(0) = 1.0;
    b(1) = u(0);
    b(2) = u(1);
    if (quadratic_) {
      b(3) = u(0) * u(0);
      b(4) = u(1) * u(1);
      b(5) = u(0) * u(1);
    }
    return b;
  }

  bool quadratic_;
  Point2 center_;
};

class Binormal2D : public LocalFamily2D
{
public:
  std::string name() const override { return "binormal-product"; }
  int dim() const override { return 4; }
  std::vector<std::string> param_names() const override
  {
    return { "mu1", "mu2", "sigma1", "sigma2" };
  }
  std::vector<bool> log_scale() const override
  {
    return { false, false, true, true };
  }
  double log_density(const Point2& t, const Vec& theta) const override
  {
    double z1 = (t(0) - theta(0)) * std::exp(-theta(2));
    double z2 = (t(1) - theta(1)) * std::exp(-theta(3));
    return -std::log(2.0 * std::numbers::pi) - theta(2) - theta(3) -
           0.5 * (z1 * z1 + z2 * z2);
  }
  Vec score(const Point2& t, const Vec& theta) const override
  {
    Vec s(4);
    for (int i = 0; i < 2; ++i) {
      double inv = std::exp(-theta(2 + i));
      double z = (t(i) - theta(i)) * inv;
      s(i) = z * inv;
      s(2 + i) = z * z - 1.0;
    }
    return s;
  }
  Mat log_hessian(const Point2& t, const Vec& theta) const override
  {
    Mat H = Mat::Zero(4, 4);
    for (int i = 0; i < 2; ++i) {
      double inv = std::exp(-theta(2 + i));
      double z = (t(i) - theta(i)) * inv;
      H(i, i) = -inv * inv;
      H(i, 2 + i) = H(2 + i, i) = -2.0 * z * inv;
      H(2 + i, 2 + i) = -2.0 * z * z;
    }
    return H;
  }
  std::optional<Eigen::Matrix2d> mass_box(const Vec& theta) const override
  {
    Eigen::Matrix2d box;
    for (int i = 0; i < 2; ++i) {
      double sd = std::exp(theta(2 + i));
      if (!std::isfinite(sd) || !std::isfinite(theta(i)))
        return std::nullopt;
      box(i, 0) = theta(i) - 12.0 * sd;
      box(i, 1) = theta(i) + 12.0 * sd;
    }
    return box;
  }
  Vec initial_theta(const InitContext2D& ctx) const override
  {
    const auto& s = ctx.stats;
    Vec theta(4);
    const Kernel* k[2] = { &ctx.k1, &ctx.k2 };
    double h[2] = { ctx.h1, ctx.h2 };
    for (int i = 0; i < 2; ++i) {
      auto [mu, log_sigma] =
        normal_moment_start(s.x(i), s.f_tilde, s.g(i), s.g2(i),
                            k[i]->variance() * h[i] * h[i], h[i]);
      theta(i) = mu;
      theta(2 + i) = log_sigma;
    }
    return theta;
  }
};

Family2DPtr
centered2d(const LocalFamily2D& family, const Point2& x)
{
  if (family.is_centered())
    return Family2DPtr(family.clone_at(x));
  return Family2DPtr(&family, [](const LocalFamily2D*) {});
}

class Equations2D
{
public:
  Equations2D(const LocalFamily2D& family, WeightScheme2D scheme,
              const Kernel& k1, const Kernel& k2, double h1, double h2,
              const Point2& x, const WeightedSample2D& emp,
              const FitConfig& cfg)
    : family_(family)
    , scheme_(scheme)
    , k1_(k1)
    , k2_(k2)
    , h1_(h1)
    , h2_(h2)
    , x_(x)
    , emp_(emp)
    , cfg_(cfg)
  {
    if (scheme_.kind == WeightKind::powers)
      throw std::invalid_argument("bivariate fits take score or l2 weights");
    window_ = tensor(axis_rule(k1_, h1_, x_(0), cfg_), axis_rule(k2_, h2_, x_(1), cfg_));
  }

  const WeightedSample2D& model_rule(const Vec& theta, WeightedSample2D& tmp) const
  {
    auto box = family_.mass_box(theta);
    if (!box)
      return window_;
    tmp = tensor(axis_rule(k1_, h1_, x_(0), cfg_, (*box)(0, 0), (*box)(0, 1)),
                 axis_rule(k2_, h2_, x_(1), cfg_, (*box)(1, 0), (*box)(1, 1)));
    return tmp;
  }

  bool evaluate(const Vec& theta, Vec& V, Mat* J) const
  {
    const int p = family_.dim();
    V = Vec::Zero(p);
    if (J)
      *J = Mat::Zero(p, p);
    const bool l2 = scheme_.kind == WeightKind::l2;
    for (Eigen::Index i = 0; i < emp_.points.rows(); ++i) {
      Point2 t = emp_.points.row(i).transpose();
      double w = emp_.weights(i);
      if (l2) {
        FamilyPoint fp = family_.evaluate(t, theta);
        V.noalias() += w * fp.grad;
        if (J)
          J->noalias() += w * fp.hess;
      } else {
        V.noalias() += w * family_.score(t, theta);
        if (J)
          J->noalias() += w * family_.log_hessian(t, theta);
      }
    }
    WeightedSample2D tmp;
    const WeightedSample2D& rule = model_rule(theta, tmp);
    for (Eigen::Index m = 0; m < rule.points.rows(); ++m) {
      double w = rule.weights(m);
      if (w == 0.0)
        continue;
      FamilyPoint fp = family_.evaluate(rule.points.row(m).transpose(), theta);
      if (l2) {
        V.noalias() -= (w * fp.f) * fp.grad;
        if (J)
          J->noalias() -= w * (fp.f * fp.hess + fp.grad * fp.grad.transpose());
      } else {
        V.noalias() -= w * fp.grad;
        if (J)
          J->noalias() -= w * fp.hess;
      }
    }
    return V.allFinite() && (!J || J->allFinite());
  }

  double loglik(const Vec& theta) const
  {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < emp_.points.rows(); ++i)
      acc += emp_.weights(i) *
             family_.log_density(emp_.points.row(i).transpose(), theta);
    WeightedSample2D tmp;
    const WeightedSample2D& rule = model_rule(theta, tmp);
    for (Eigen::Index m = 0; m < rule.points.rows(); ++m)
      acc -= rule.weights(m) * family_.density(rule.points.row(m).transpose(), theta);
    return acc;
  }

private:
  const LocalFamily2D& family_;
  WeightScheme2D scheme_;
  const Kernel& k1_;
  const Kernel& k2_;
  double h1_;
  double h2_;
  Point2 x_;
  const WeightedSample2D& emp_;
  FitConfig cfg_;
  WeightedSample2D window_;
};

} // namespace

double
classic2d(const Kernel& k1, const Kernel& k2, double h1, double h2,
          const Sample2D& data, const Point2& x)
{
  check_bandwidths(h1, h2);
  if (data.rows() == 0)
    throw std::invalid_argument("data must be nonempty");
  double s = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    s += k1.scaled(h1, data(i, 0) - x(0)) * k2.scaled(h2, data(i, 1) - x(1));
  return s / static_cast<double>(data.rows());
}

WeightedSample2D
data_measure2d(const Kernel& k1, const Kernel& k2, double h1, double h2,
               const Sample2D& data, const Point2& x)
{
  check_bandwidths(h1, h2);
  if (data.rows() == 0)
    throw std::invalid_argument("data must be nonempty");
  const double n = static_cast<double>(data.rows());
  std::vector<Eigen::Index> keep;
  std::vector<double> wts;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    double w = k1.scaled(h1, data(i, 0) - x(0)) * k2.scaled(h2, data(i, 1) - x(1)) / n;
    if (w > 0.0) {
      keep.push_back(i);
      wts.push_back(w);
    }
  }
  WeightedSample2D s;
  s.points.resize(static_cast<Eigen::Index>(keep.size()), 2);
  s.weights.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    s.points.row(static_cast<Eigen::Index>(r)) = data.row(keep[r]);
    s.weights(static_cast<Eigen::Index>(r)) = wts[r];
  }
  return s;
}

WeightedSample2D
population_measure2d(const Kernel& k1, const Kernel& k2, double h1, double h2,
                     const std::function<double(const Point2&)>& f_true,
                     const Point2& x, const FitConfig& cfg)
{
  check_bandwidths(h1, h2);
  WeightedSample2D s = tensor(axis_rule(k1, h1, x(0), cfg), axis_rule(k2, h2, x(1), cfg));
  for (Eigen::Index m = 0; m < s.points.rows(); ++m) {
    double f = f_true(s.points.row(m).transpose());
    if (!std::isfinite(f))
      throw std::domain_error("true density is not finite inside the window");
    s.weights(m) *= f;
  }
  return s;
}

SmootherStats2D
measure_stats2d(const Kernel& k1, const Kernel& k2, double h1, double h2,
                const Point2& x, const WeightedSample2D& emp)
{
  SmootherStats2D s;
  s.x = x;
  for (Eigen::Index i = 0; i < emp.points.rows(); ++i) {
    double w = emp.weights(i);
    Point2 u = emp.points.row(i).transpose() - x;
    s.f_tilde += w;
    s.g += w * u;
    s.g2 += w * u.cwiseProduct(u);
  }
  s.grad(0) = s.g(0) / (k1.variance() * h1 * h1);
  s.grad(1) = s.g(1) / (k2.variance() * h2 * h2);
  return s;
}

SmootherStats2D
classic2d_stats(const Kernel& k1, const Kernel& k2, double h1, double h2,
                const Sample2D& data, const Point2& x)
{
  return measure_stats2d(k1, k2, h1, h2, x, data_measure2d(k1, k2, h1, h2, data, x));
}

ClosedFormResult
cf_bilinear2d(const SmootherStats2D& stats, double h1, double h2)
{
  check_bandwidths(h1, h2);
  ClosedFormResult r;
  if (!(stats.f_tilde > 0.0)) {
    r.diagnostic = "f~ is zero";
    return r;
  }
  double b1 = stats.grad(0) / stats.f_tilde, b2 = stats.grad(1) / stats.f_tilde;
  r.f_hat = stats.f_tilde * std::exp(-0.5 * (h1 * h1 * b1 * b1 + h2 * h2 * b2 * b2));
  r.aux["b1"] = b1;
  r.aux["b2"] = b2;
  r.valid = true;
  return r;
}

std::vector<bool>
LocalFamily2D::log_scale() const
{
  return std::vector<bool>(dim(), false);
}

std::unique_ptr<LocalFamily2D>
LocalFamily2D::clone_at(const Point2&) const
{
  throw std::logic_error(name() + " is not a centered family");
}

Vec
LocalFamily2D::transport(const Vec& theta, const Point2&, const Point2&) const
{
  return theta;
}

double
LocalFamily2D::density(const Point2& t, const Vec& theta) const
{
  return std::exp(log_density(t, theta));
}

FamilyPoint
LocalFamily2D::evaluate(const Point2& t, const Vec& theta) const
{
  FamilyPoint fp;
  fp.f = density(t, theta);
  Vec s = score(t, theta);
  fp.grad = fp.f * s;
  fp.hess = fp.f * (log_hessian(t, theta) + s * s.transpose());
  return fp;
}

ParamVector
LocalFamily2D::make_params(const Vec& internal) const
{
  return ParamVector{ internal, log_scale() };
}

Family2DPtr
family2d_constant()
{
  return std::make_shared<Constant2D>();
}

Family2DPtr
family2d_loglinear(const Point2& center)
{
  return std::make_shared<LogPoly2D>(false, center);
}

Family2DPtr
family2d_logquad(const Point2& center)
{
  return std::make_shared<LogPoly2D>(true, center);
}

Family2DPtr
family2d_binormal()
{
  return std::make_shared<Binormal2D>();
}

LocalFitResult
fit2d_measure(const LocalFamily2D& family, const WeightScheme2D& scheme,
              const Kernel& k1, const Kernel& k2, double h1, double h2,
              const WeightedSample2D& emp, const SmootherStats2D& stats,
              const FitConfig& cfg, std::optional<Vec> theta_init)
{
  check_bandwidths(h1, h2);
  LocalFitResult res;
  res.x = stats.x(0);
  if (!(stats.f_tilde >= cfg.min_mass) || emp.points.rows() == 0) {
    res.theta_hat = family.make_params(
      Vec::Constant(family.dim(), std::numeric_limits<double>::quiet_NaN()));
    res.status = FitStatus::skipped;
    return res;
  }

  auto fam = centered2d(family, stats.x);
  Equations2D eq(*fam, scheme, k1, k2, h1, h2, stats.x, emp, cfg);
  ResidualFn fn = [&eq](const Vec& th, Vec& V, Mat* J) { return eq.evaluate(th, V, J); };
  std::function<double(const Vec&)> objective;
  if (scheme.kind == WeightKind::score)
    objective = [&eq](const Vec& th) { return eq.loglik(th); };

  NewtonOutcome out;
  bool have = false;
  if (theta_init && theta_init->allFinite()) {
    out = newton_solve(fn, *theta_init, cfg, objective);
    have = true;
  }
  if (!have || out.status != FitStatus::converged) {
    Vec fresh = fam->initial_theta(InitContext2D{ stats, k1, k2, h1, h2 });
    NewtonOutcome alt = newton_solve(fn, fresh, cfg, objective);
    if (!have || alt.status == FitStatus::converged ||
        (out.status != FitStatus::converged && alt.grad_norm < out.grad_norm))
      out = alt;
  }

  res.theta_hat = fam->make_params(out.theta);
  res.status = out.status;
  res.iterations = out.iterations;
  res.grad_norm = out.grad_norm;
  double f = fam->density(stats.x, out.theta);
  res.f_hat = std::isfinite(f) ? std::max(f, 0.0) : 0.0;
  if (!std::isfinite(f) && res.status == FitStatus::converged)
    res.status = FitStatus::degenerate;
  res.local_loglik = eq.loglik(out.theta);
  return res;
}

LocalFitResult
fit2d(const LocalFamily2D& family, const WeightScheme2D& scheme,
      const Kernel& k1, const Kernel& k2, double h1, double h2,
      const Sample2D& data, const Point2& x, const FitConfig& cfg,
      std::optional<Vec> theta_init)
{
  WeightedSample2D emp = data_measure2d(k1, k2, h1, h2, data, x);
  SmootherStats2D stats = measure_stats2d(k1, k2, h1, h2, x, emp);
  return fit2d_measure(family, scheme, k1, k2, h1, h2, emp, stats, cfg,
                       std::move(theta_init));
}

std::size_t
Estimate2D::count(FitStatus s) const
{
  return static_cast<std::size_t>(std::count(status.begin(), status.end(), s));
}

Estimate2D
fit2d_grid(const LocalFamily2D& family, const WeightScheme2D& scheme,
           const Kernel& k1, const Kernel& k2, double h1, double h2,
           const Sample2D& data, const Eigen::Ref<const Vec>& grid1,
           const Eigen::Ref<const Vec>& grid2, const FitConfig& cfg)
{
  const Eigen::Index m1 = grid1.size(), m2 = grid2.size();
  Estimate2D est;
  est.grid1 = grid1;
  est.grid2 = grid2;
  est.f_hat = Mat::Zero(m1, m2);
  est.theta_trace.resize(m1 * m2);
  est.status.resize(m1 * m2, FitStatus::skipped);
  est.h1 = h1;
  est.h2 = h2;
  est.model = family.name();
  est.scheme = to_string(scheme.kind);

  auto point = [&](Eigen::Index r) { return Point2(grid1(r / m2), grid2(r % m2)); };
  auto store = [&](Eigen::Index r, const LocalFitResult& fit) {
    est.f_hat(r / m2, r % m2) = fit.f_hat;
    est.theta_trace[r] = fit.theta_hat;
    est.status[r] = fit.status;
  };

  if (cfg.warm_start || cfg.threads <= 1) {
    for (Eigen::Index r = 0; r < m1 * m2; ++r) {
      std::optional<Vec> init;
      if (cfg.warm_start) {
        // previous point in the row, or the start of the previous row
        Eigen::Index prev = r % m2 ? r - 1 : r - m2;
        if (prev >= 0 && est.status[prev] == FitStatus::converged)
          init = family.transport(est.theta_trace[prev].values, point(prev), point(r));
      }
      store(r, fit2d(family, scheme, k1, k2, h1, h2, data, point(r), cfg, std::move(init)));
    }
    return est;
  }

  std::vector<LocalFitResult> results(static_cast<std::size_t>(m1 * m2));
  const int nt = std::max(1, std::min<int>(cfg.threads, static_cast<int>(m1 * m2)));
  std::vector<std::thread> workers;
  for (int w = 0; w < nt; ++w)
    workers.emplace_back([&, w] {
      for (Eigen::Index r = w; r < m1 * m2; r += nt)
        results[static_cast<std::size_t>(r)] =
          fit2d(family, scheme, k1, k2, h1, h2, data, point(r), cfg);
    });
  for (auto& t : workers)
    t.join();
  for (Eigen::Index r = 0; r < m1 * m2; ++r)
    store(r, results[static_cast<std::size_t>(r)]);
  return est;
}

} // namespace lpde
