#include "lpde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace lpde {

std::string
to_string(FitStatus status)
{
  switch (status) {
    case FitStatus::converged:
      return "converged";
    case FitStatus::max_iter:
      return "maxiter";
    case FitStatus::skipped:
      return "skipped";
    case FitStatus::degenerate:
      return "degenerate";
  }
  return "?";
}

std::size_t
DensityEstimate::count(FitStatus s) const
{
  return static_cast<std::size_t>(std::count(status.begin(), status.end(), s));
}

WeightedSample
data_measure(const Kernel& k, double h, const Eigen::Ref<const Vec>& data,
             double x)
{
  if (!(h > 0.0))
    throw std::invalid_argument("bandwidth must be positive");
  if (data.size() == 0)
    throw std::invalid_argument("data must be nonempty");
  const double n = static_cast<double>(data.size());
  std::vector<double> pts, wts;
  pts.reserve(data.size());
  wts.reserve(data.size());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    double w = k.scaled(h, data(i) - x) / n;
    if (w > 0.0) {
      pts.push_back(data(i));
      wts.push_back(w);
    }
  }
  WeightedSample s;
  s.points = Eigen::Map<Vec>(pts.data(), static_cast<Eigen::Index>(pts.size()));
  s.weights = Eigen::Map<Vec>(wts.data(), static_cast<Eigen::Index>(wts.size()));
  return s;
}

WeightedSample
population_measure(const Kernel& k, double h,
                   const std::function<double(double)>& f_true, double x,
                   const FitConfig& cfg)
{
  QuadratureRule rule = kernel_window(k, h, x, cfg.trunc, cfg.support_lower,
                                      cfg.support_upper, cfg.panels);
  WeightedSample s;
  s.points = rule.nodes;
  s.weights = rule.weights;
  for (Eigen::Index i = 0; i < s.points.size(); ++i) {
    double f = f_true(s.points(i));
    if (!std::isfinite(f))
      throw std::domain_error("true density is not finite inside the window");
    s.weights(i) *= f;
  }
  return s;
}

SmootherStats
measure_stats(const Kernel& k, double h, double x, const WeightedSample& emp)
{
  SmootherStats s;
  s.x = x;
  Eigen::ArrayXd u = emp.points.array() - x;
  s.f_tilde = emp.weights.sum();
  s.g_tilde = (emp.weights.array() * u).sum();
  s.g2_tilde = (emp.weights.array() * u * u).sum();
  double k2 = k.moment(2), k4 = k.moment(4);
  double h2 = h * h;
  s.f_tilde_d1 = s.g_tilde / (k2 * h2);
  s.f_tilde_d2 = 2.0 * (s.g2_tilde - k2 * h2 * s.f_tilde) / (h2 * h2 * (k4 - k2 * k2));
  if (s.f_tilde > 0.0) {
    double q = s.f_tilde_d1 / s.f_tilde;
    s.q_tilde = q;
    s.D_hat = s.f_tilde_d2 / s.f_tilde - q * q;
  }
  return s;
}

LocalEquations::LocalEquations(const LocalFamily& family, WeightScheme scheme,
                               const Kernel& kernel, double h, double x,
                               WeightedSample emp, const FitConfig& cfg)
  : family_(family)
  , scheme_(scheme)
  , kernel_(kernel)
  , h_(h)
  , x_(x)
  , emp_(std::move(emp))
  , cfg_(cfg)
{
  window_ = kernel_window(kernel_, h_, x_, cfg_.trunc, cfg_.support_lower,
                          cfg_.support_upper, cfg_.panels);
}

QuadratureRule
LocalEquations::model_rule(const Vec& theta) const
{
  auto mass = family_.mass_interval(theta);
  if (!mass || window_.size() == 0)
    return window_;
  double r = kernel_.integration_radius(cfg_.trunc) * h_;
  double wlo = std::max(x_ - r, cfg_.support_lower);
  double whi = std::min(x_ + r, cfg_.support_upper);
  if (mass->first <= wlo && mass->second >= whi)
    return window_;
  double lo = std::max(wlo, mass->first);
  double hi = std::min(whi, mass->second);
  if (!(hi > lo))
    return QuadratureRule{};
  QuadratureRule rule = gauss_legendre_on(lo, hi, quadrature_order,
                                          std::max(cfg_.panels, 2));
  for (Eigen::Index i = 0; i < rule.size(); ++i)
    rule.weights(i) *= kernel_.scaled(h_, rule.nodes(i) - x_);
  return rule;
}

bool
LocalEquations::evaluate(const Vec& theta, Vec& V, Mat* J) const
{
  const int p = family_.dim();
  V = Vec::Zero(p);
  if (J)
    *J = Mat::Zero(p, p);

  for (Eigen::Index i = 0; i < emp_.points.size(); ++i) {
    double t = emp_.points(i), w = emp_.weights(i);
    V.noalias() += w * scheme_.weight(family_, x_, t, theta);
    if (J && scheme_.kind != WeightKind::powers)
      J->noalias() += w * scheme_.weight_param_jacobian(family_, x_, t, theta);
  }

  QuadratureRule rule = model_rule(theta);
  for (Eigen::Index m = 0; m < rule.size(); ++m) {
    double t = rule.nodes(m), w = rule.weights(m);
    if (w == 0.0)
      continue;
    FamilyPoint fp = family_.evaluate(t, theta);
    switch (scheme_.kind) {
      case WeightKind::score:
        V.noalias() -= w * fp.grad;
        if (J)
          J->noalias() -= w * fp.hess;
        break;
      case WeightKind::l2:
        V.noalias() -= (w * fp.f) * fp.grad;
        if (J)
          J->noalias() -= w * (fp.f * fp.hess + fp.grad * fp.grad.transpose());
        break;
      case WeightKind::powers: {
        Vec pw = powers_vector(t - x_, p);
        V.noalias() -= (w * fp.f) * pw;
        if (J)
          J->noalias() -= w * pw * fp.grad.transpose();
        break;
      }
    }
  }
  if (!V.allFinite())
    return false;
  return !J || J->allFinite();
}

Vec
LocalEquations::value(const Vec& theta) const
{
  Vec V;
  evaluate(theta, V, nullptr);
  return V;
}

double
LocalEquations::loglik(const Vec& theta) const
{
  double acc = 0.0;
  for (Eigen::Index i = 0; i < emp_.points.size(); ++i)
    acc += emp_.weights(i) * family_.log_density(emp_.points(i), theta);
  QuadratureRule rule = model_rule(theta);
  for (Eigen::Index m = 0; m < rule.size(); ++m)
    acc -= rule.weights(m) * family_.density(rule.nodes(m), theta);
  return acc;
}

namespace {

// Solves J step = -V after row/column equilibration, escalating the ridge
// term on near-singular systems.
bool
regularized_step(const Mat& J, const Vec& V, Vec& step)
{
  const Eigen::Index p = J.rows();
  Vec r(p), c(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    double m = J.row(i).cwiseAbs().maxCoeff();
    r(i) = m > 0.0 ? 1.0 / m : 1.0;
  }
  Mat A = r.asDiagonal() * J;
  for (Eigen::Index j = 0; j < p; ++j) {
    double m = A.col(j).cwiseAbs().maxCoeff();
    c(j) = m > 0.0 ? 1.0 / m : 1.0;
  }
  A = A * c.asDiagonal();
  Vec b = -(r.asDiagonal() * V);
  double ridge = 1e-10;
  for (int attempt = 0; attempt < 3; ++attempt, ridge *= 1e4) {
    Mat Ar = A + ridge * Mat::Identity(p, p);
    Eigen::FullPivLU<Mat> lu(Ar);
    if (!(lu.rcond() > 1e-14))
      continue;
    step = c.asDiagonal() * lu.solve(b);
    if (step.allFinite())
      return true;
  }
  return false;
}

// Gradient-biased fallback when the Newton direction does not reduce |V|:
// (J'J + mu diag(J'J)) d = -J'V with mu raised until |V| drops.
bool
marquardt_step(const ResidualFn& fn, const Mat& J, const Vec& V, Vec& theta,
               Vec& Vn)
{
  Mat A = J.transpose() * J;
  Vec g = J.transpose() * V;
  Vec d = A.diagonal().cwiseMax(1e-300 + 1e-12 * A.diagonal().maxCoeff());
  const double vnorm = V.norm();
  for (double mu = 1e-6; mu <= 1e12; mu *= 10.0) {
    Mat M = A;
    M.diagonal() += mu * d;
    Eigen::LLT<Mat> llt(M);
    if (llt.info() != Eigen::Success)
      continue;
    Vec trial = theta - llt.solve(g);
    if (fn(trial, Vn, nullptr) && Vn.norm() < vnorm) {
      theta = trial;
      return true;
    }
  }
  return false;
}

// Ascent on a merit function whose gradient is V and Hessian is J: the
// Newton step when it points uphill, otherwise a shifted-Hessian step,
// with an Armijo line search.
bool
ascent_step(const std::function<double(const Vec&)>& objective,
            const Mat& J, const Vec& V, const Vec* newton, Vec& theta,
            int max_halvings)
{
  const double f0 = objective(theta);
  if (!std::isfinite(f0))
    return false;
  Vec d;
  if (newton && newton->dot(V) > 0.0) {
    d = *newton;
  } else {
    Mat N = -0.5 * (J + J.transpose());
    Vec D = N.diagonal().cwiseAbs().cwiseMax(1e-300);
    for (double mu = 1e-8; mu <= 1e8 && d.size() == 0; mu *= 10.0) {
      Mat M = N;
      M.diagonal() += mu * D;
      Eigen::LLT<Mat> llt(M);
      if (llt.info() == Eigen::Success)
        d = llt.solve(V);
    }
    if (d.size() == 0 || !d.allFinite())
      return false;
  }
  const double slope = V.dot(d);
  double lambda = 1.0;
  for (int k = 0; k <= max_halvings; ++k, lambda *= 0.5) {
    Vec trial = theta + lambda * d;
    double f = objective(trial);
    if (std::isfinite(f) && f > f0 + 1e-4 * lambda * slope) {
      theta = trial;
      return true;
    }
  }
  return false;
}

} // namespace

NewtonOutcome
newton_solve(const ResidualFn& fn, Vec theta, const FitConfig& cfg,
             const std::function<double(const Vec&)>& objective)
{
  NewtonOutcome out;
  Vec V, Vn;
  Mat J;
  if (!theta.allFinite() || !fn(theta, V, &J)) {
    out.theta = theta;
    out.status = FitStatus::degenerate;
    return out;
  }

  auto polish = [&]() {
    for (int k = 0; k < 3; ++k) {
      Vec step;
      if (!regularized_step(J, V, step))
        break;
      Vec trial = theta + step;
      if (!fn(trial, Vn, nullptr) || Vn.norm() > V.norm())
        break;
      theta = trial;
      V = Vn;
      if (V.lpNorm<Eigen::Infinity>() == 0.0 || !fn(theta, V, &J))
        break;
    }
  };

  int it = 0;
  for (; it < cfg.max_iter; ++it) {
    if (V.lpNorm<Eigen::Infinity>() <= cfg.grad_tol) {
      polish();
      out.status = FitStatus::converged;
      break;
    }
    Vec step;
    bool solved = regularized_step(J, V, step);
    bool accepted = objective && ascent_step(objective, J, V,
                                             solved ? &step : nullptr, theta,
                                             cfg.max_halvings);
    if (!solved && !accepted) {
      out.status = FitStatus::degenerate;
      break;
    }
    double lambda = 1.0;
    const double vnorm = V.norm();
    for (int k = 0; !accepted && k <= cfg.max_halvings; ++k, lambda *= 0.5) {
      Vec trial = theta + lambda * step;
      if (fn(trial, Vn, nullptr) && Vn.norm() < vnorm) {
        theta = trial;
        accepted = true;
        break;
      }
    }
    if (!accepted)
      accepted = marquardt_step(fn, J, V, theta, Vn);
    if (!accepted) {
      out.status = FitStatus::max_iter;
      break;
    }
    if (!fn(theta, V, &J)) {
      out.status = FitStatus::degenerate;
      break;
    }
  }
  if (it == cfg.max_iter) {
    out.status = V.lpNorm<Eigen::Infinity>() <= cfg.grad_tol
                   ? FitStatus::converged
                   : FitStatus::max_iter;
  }
  out.theta = theta;
  out.iterations = it;
  out.grad_norm = V.lpNorm<Eigen::Infinity>();
  return out;
}

std::shared_ptr<const LocalFamily>
centered_at(const LocalFamily& family, double x)
{
  if (family.is_centered())
    return std::shared_ptr<const LocalFamily>(family.clone_at(x));
  return std::shared_ptr<const LocalFamily>(&family, [](const LocalFamily*) {});
}

double
local_loglik(const LocalFamily& family, const Kernel& kernel, double h,
             const Eigen::Ref<const Vec>& data, double x, const Vec& theta,
             const FitConfig& cfg)
{
  auto fam = centered_at(family, x);
  WeightedSample emp = data_measure(kernel, h, data, x);
  for (Eigen::Index i = 0; i < emp.points.size(); ++i)
    if (!std::isfinite(fam->log_density(emp.points(i), theta)))
      throw std::domain_error("log-density is not finite at a weighted data point");
  LocalEquations eq(*fam, weights_make(WeightKind::score, *fam), kernel, h, x,
                    std::move(emp), cfg);
  return eq.loglik(theta);
}

Vec
estimating_eqs(const LocalFamily& family, const WeightScheme& scheme,
               const Kernel& kernel, double h,
               const Eigen::Ref<const Vec>& data, double x, const Vec& theta,
               const FitConfig& cfg)
{
  auto fam = centered_at(family, x);
  LocalEquations eq(*fam, scheme, kernel, h, x,
                    data_measure(kernel, h, data, x), cfg);
  Vec V;
  if (!eq.evaluate(theta, V, nullptr))
    throw std::domain_error("estimating equations are not finite");
  return V;
}

LocalFitResult
fit_measure(const LocalFamily& family, const WeightScheme& scheme,
            const Kernel& kernel, double h, const WeightedSample& emp,
            const SmootherStats& stats, const FitConfig& cfg,
            std::optional<Vec> theta_init)
{
  LocalFitResult res;
  res.x = stats.x;
  const double x = stats.x;
  if (!(stats.f_tilde >= cfg.min_mass) || emp.points.size() == 0) {
    res.theta_hat = family.make_params(
      Vec::Constant(family.dim(), std::numeric_limits<double>::quiet_NaN()));
    res.status = FitStatus::skipped;
    return res;
  }

  auto fam = centered_at(family, x);
  LocalEquations eq(*fam, scheme, kernel, h, x, emp, cfg);
  ResidualFn fn = [&eq](const Vec& th, Vec& V, Mat* J) {
    return eq.evaluate(th, V, J);
  };
  // score equations are the gradient of the local log-likelihood
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
    Vec fresh = fam->initial_theta(InitContext{ stats, kernel, h, cfg.trunc });
    NewtonOutcome alt = newton_solve(fn, fresh, cfg, objective);
    if (!have || alt.status == FitStatus::converged ||
        (out.status != FitStatus::converged && alt.grad_norm < out.grad_norm))
      out = alt;
  }

  res.theta_hat = fam->make_params(out.theta);
  res.status = out.status;
  res.iterations = out.iterations;
  res.grad_norm = out.grad_norm;
  double f = fam->density(x, out.theta);
  res.f_hat = std::isfinite(f) ? std::max(f, 0.0) : 0.0;
  if (!std::isfinite(f) && res.status == FitStatus::converged)
    res.status = FitStatus::degenerate;
  res.local_loglik = eq.loglik(out.theta);
  return res;
}

LocalFitResult
fit_at(const LocalFamily& family, const WeightScheme& scheme,
       const Kernel& kernel, double h, const Eigen::Ref<const Vec>& data,
       double x, const FitConfig& cfg, std::optional<Vec> theta_init)
{
  SmootherStats stats = classic_estimate(kernel, h, data, x);
  return fit_measure(family, scheme, kernel, h, data_measure(kernel, h, data, x),
                     stats, cfg, std::move(theta_init));
}

DensityEstimate
fit_grid(const LocalFamily& family, const WeightScheme& scheme,
         const Kernel& kernel, double h, const Eigen::Ref<const Vec>& data,
         const Eigen::Ref<const Vec>& grid, const FitConfig& cfg)
{
  for (Eigen::Index j = 1; j < grid.size(); ++j)
    if (!(grid(j) > grid(j - 1)))
      throw std::invalid_argument("grid must be strictly increasing");

  const Eigen::Index m = grid.size();
  DensityEstimate est;
  est.grid = grid;
  est.f_hat = Vec::Zero(m);
  est.theta_trace.resize(m);
  est.status.resize(m, FitStatus::skipped);
  est.h = h;
  est.kernel = kernel.name();
  est.model = family.name();
  est.scheme = to_string(scheme.kind);

  auto store = [&](Eigen::Index j, const LocalFitResult& r) {
    est.f_hat(j) = r.f_hat;
    est.theta_trace[j] = r.theta_hat;
    est.status[j] = r.status;
  };

  if (cfg.warm_start || cfg.threads <= 1) {
    std::optional<Vec> prev;
    double prev_x = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      std::optional<Vec> init;
      if (cfg.warm_start && prev)
        init = family.transport(*prev, prev_x, grid(j));
      LocalFitResult r = fit_at(family, scheme, kernel, h, data, grid(j), cfg,
                                std::move(init));
      store(j, r);
      if (r.status == FitStatus::converged) {
        prev = r.theta_hat.values;
        prev_x = grid(j);
      } else {
        prev.reset();
      }
    }
    return est;
  }

  std::vector<LocalFitResult> results(static_cast<std::size_t>(m));
  const int nthreads =
    std::max(1, std::min<int>(cfg.threads, static_cast<int>(m)));
  std::vector<std::thread> workers;
  for (int w = 0; w < nthreads; ++w) {
    workers.emplace_back([&, w]() {
      for (Eigen::Index j = w; j < m; j += nthreads)
        results[static_cast<std::size_t>(j)] =
          fit_at(family, scheme, kernel, h, data, grid(j), cfg);
    });
  }
  for (auto& t : workers)
    t.join();
  for (Eigen::Index j = 0; j < m; ++j)
    store(j, results[static_cast<std::size_t>(j)]);
  return est;
}

} // namespace lpde
