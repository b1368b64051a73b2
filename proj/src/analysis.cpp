#include "lpde/analysis.hpp"

#include "lpde/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace lpde {

namespace {

std::vector<double>
parse_numbers(const std::string& text)
{
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = std::stod(item, &used);
    if (used != item.size())
      throw std::invalid_argument("bad number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

// Integration rule for the local criteria: the population window with the
// configured support clipping.
QuadratureRule
criterion_rule(const Kernel& k, double h, double x, const FitConfig& cfg)
{
  return kernel_window(k, h, x, cfg.trunc, cfg.support_lower,
                       cfg.support_upper, std::max(cfg.panels, 1));
}

Derivs
family_derivs(const LocalFamily& fam, double x, const Vec& theta)
{
  return { fam.density(x, theta), fam.density_t_derivative(x, theta, 1),
           fam.density_t_derivative(x, theta, 2) };
}

} // namespace

double
Rng::uniform()
{
  return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
}

double
Rng::normal()
{
  if (spare_) {
    double z = *spare_;
    spare_.reset();
    return z;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  return u * m;
}

TrueDensity
TrueDensity::normal(double mu, double sigma)
{
  if (!(sigma > 0.0))
    throw std::invalid_argument("normal density needs sigma > 0");
  TrueDensity d;
  d.weights_ = { 1.0 };
  d.components_ = { NormalDensity{ mu, sigma } };
  std::ostringstream os;
  os << "normal:" << mu << ',' << sigma;
  d.name_ = os.str();
  return d;
}

TrueDensity
TrueDensity::mixture(std::vector<double> weights,
                     std::vector<NormalDensity> components)
{
  if (weights.empty() || weights.size() != components.size())
    throw std::invalid_argument("mixture needs matching weights and components");
  double total = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (!(weights[j] > 0.0) || !(components[j].sigma > 0.0))
      throw std::invalid_argument("mixture weights and sigmas must be positive");
    total += weights[j];
  }
  TrueDensity d;
  std::ostringstream os;
  os << "mixture:";
  for (std::size_t j = 0; j < weights.size(); ++j) {
    weights[j] /= total;
    os << (j ? "," : "") << weights[j] << ',' << components[j].mu << ','
       << components[j].sigma;
  }
  d.weights_ = std::move(weights);
  d.components_ = std::move(components);
  d.name_ = os.str();
  return d;
}

TrueDensity
TrueDensity::exponential(double rate)
{
  if (!(rate > 0.0))
    throw std::invalid_argument("exponential density needs rate > 0");
  TrueDensity d;
  d.kind_ = Kind::exponential;
  d.rate_ = rate;
  std::ostringstream os;
  os << "exp:" << rate;
  d.name_ = os.str();
  return d;
}

TrueDensity
TrueDensity::from_name(const std::string& spec)
{
  auto colon = spec.find(':');
  std::string head = spec.substr(0, colon);
  std::vector<double> args;
  if (colon != std::string::npos)
    args = parse_numbers(spec.substr(colon + 1));

  if (head == "normal") {
    if (args.empty())
      return normal();
    if (args.size() != 2)
      throw std::invalid_argument("normal takes mu,sigma");
    return normal(args[0], args[1]);
  }
  if (head == "mixture") {
    if (args.empty())
      return mixture({ 0.5, 0.5 }, { { 0.0, 1.0 }, { 3.0, 1.0 } });
    if (args.size() % 3 != 0)
      throw std::invalid_argument("mixture takes weight,mu,sigma triples");
    std::vector<double> w;
    std::vector<NormalDensity> c;
    for (std::size_t j = 0; j < args.size(); j += 3) {
      w.push_back(args[j]);
      c.push_back({ args[j + 1], args[j + 2] });
    }
    return mixture(std::move(w), std::move(c));
  }
  if (head == "exp") {
    if (args.empty())
      return exponential();
    if (args.size() != 1)
      throw std::invalid_argument("exp takes one rate");
    return exponential(args[0]);
  }
  throw std::invalid_argument("unknown density '" + head + "'");
}

double
TrueDensity::derivative(double t, int k) const
{
  if (k < 0 || k > 4)
    throw std::invalid_argument("density derivatives are available up to order 4");
  if (kind_ == Kind::exponential) {
    if (t < 0.0)
      return 0.0;
    return std::pow(-rate_, k) * rate_ * std::exp(-rate_ * t);
  }
  double s = 0.0;
  for (std::size_t j = 0; j < weights_.size(); ++j)
    s += weights_[j] * components_[j].derivative(t, k);
  return s;
}

double
TrueDensity::support_lower() const
{
  return kind_ == Kind::exponential ? 0.0
                                    : -std::numeric_limits<double>::infinity();
}

std::pair<double, double>
TrueDensity::bulk_range() const
{
  if (kind_ == Kind::exponential)
    return { 0.05 / rate_, 5.0 / rate_ };
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& c : components_) {
    lo = std::min(lo, c.mu - 3.0 * c.sigma);
    hi = std::max(hi, c.mu + 3.0 * c.sigma);
  }
  return { lo, hi };
}

double
TrueDensity::draw(Rng& rng) const
{
  if (kind_ == Kind::exponential)
    return -std::log(rng.uniform()) / rate_;
  std::size_t j = 0;
  if (weights_.size() > 1) {
    double u = rng.uniform(), acc = 0.0;
    for (j = 0; j + 1 < weights_.size(); ++j) {
      acc += weights_[j];
      if (u < acc)
        break;
    }
  }
  return components_[j].mu + components_[j].sigma * rng.normal();
}

Vec
TrueDensity::sample(Rng& rng, int n) const
{
  Vec out(n);
  for (int i = 0; i < n; ++i)
    out(i) = draw(rng);
  return out;
}

std::function<double(double)>
TrueDensity::as_function() const
{
  return [d = *this](double t) { return d(t); };
}

SimplexResult
nelder_mead(const std::function<double(const Vec&)>& fn, Vec x0,
            const Vec& step, double tol, int max_iter)
{
  const Eigen::Index p = x0.size();
  if (step.size() != p || !(step.array() > 0.0).all())
    throw std::invalid_argument("simplex steps must be positive, one per coordinate");

  SimplexResult res;
  Vec scale = step;
  for (int restart = 0; restart < 6; ++restart) {
    std::vector<Vec> pts(p + 1, x0);
    std::vector<double> val(p + 1);
    for (Eigen::Index j = 0; j < p; ++j)
      pts[j + 1](j) += scale(j);
    for (Eigen::Index j = 0; j <= p; ++j)
      val[j] = fn(pts[j]);

    std::vector<Eigen::Index> order(p + 1);
    bool converged = false;
    while (res.iterations < max_iter) {
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(),
                [&](auto a, auto b) { return val[a] < val[b]; });
      const Vec& best = pts[order[0]];
      double diam = 0.0;
      for (Eigen::Index j = 1; j <= p; ++j)
        diam = std::max(diam, ((pts[order[j]] - best).array() / step.array())
                                .abs()
                                .maxCoeff());
      if (diam < tol) {
        converged = true;
        break;
      }
      ++res.iterations;

      Eigen::Index worst = order[p];
      Vec centroid = Vec::Zero(p);
      for (Eigen::Index j = 0; j < p; ++j)
        centroid += pts[order[j]];
      centroid /= static_cast<double>(p);

      Vec xr = centroid + (centroid - pts[worst]);
      double fr = fn(xr);
      if (fr < val[order[0]]) {
        Vec xe = centroid + 2.0 * (centroid - pts[worst]);
        double fe = fn(xe);
        if (fe < fr)
          pts[worst] = xe, val[worst] = fe;
        else
          pts[worst] = xr, val[worst] = fr;
        continue;
      }
      if (fr < val[order[p - 1]]) {
        pts[worst] = xr, val[worst] = fr;
        continue;
      }
      Vec xc = fr < val[worst] ? Vec(centroid + 0.5 * (xr - centroid))
                               : Vec(centroid + 0.5 * (pts[worst] - centroid));
      double fc = fn(xc);
      if (fc <= std::min(fr, val[worst])) {
        pts[worst] = xc, val[worst] = fc;
        continue;
      }
      for (Eigen::Index j = 1; j <= p; ++j) {
        Eigen::Index i = order[j];
        pts[i] = best + 0.5 * (pts[i] - best);
        val[i] = fn(pts[i]);
      }
    }

    auto ib = std::min_element(val.begin(), val.end()) - val.begin();
    double moved = res.x.size() ? ((pts[ib] - res.x).array() / step.array())
                                    .abs()
                                    .maxCoeff()
                                : std::numeric_limits<double>::infinity();
    res.x = pts[ib];
    res.value = val[ib];
    res.converged = converged;
    if (!converged || moved < 10.0 * tol)
      break;
    x0 = res.x;
    scale = step * std::max(1e-4, std::min(1.0, 100.0 * moved));
  }
  return res;
}

double
local_kl(const LocalFamily& centered, const Kernel& k, double h,
         const std::function<double(double)>& f_true, double x,
         const Vec& theta, const FitConfig& cfg)
{
  QuadratureRule rule = criterion_rule(k, h, x, cfg);
  double s = 0.0;
  for (Eigen::Index i = 0; i < rule.size(); ++i) {
    double t = rule.nodes(i);
    double f = f_true(t);
    double lg = centered.log_density(t, theta);
    if (std::isnan(lg))
      return std::numeric_limits<double>::infinity();
    if (f > 0.0) {
      // f log(f/g) - f + g = f (e^y - 1 - y), y = log(g/f)
      double y = lg - std::log(f);
      s += rule.weights(i) * f * (std::expm1(y) - y);
    } else {
      s += rule.weights(i) * std::exp(lg);
    }
  }
  return std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
}

double
local_l2(const LocalFamily& centered, const Kernel& k, double h,
         const std::function<double(double)>& f_true, double x,
         const Vec& theta, const FitConfig& cfg)
{
  QuadratureRule rule = criterion_rule(k, h, x, cfg);
  double s = 0.0;
  for (Eigen::Index i = 0; i < rule.size(); ++i) {
    double t = rule.nodes(i);
    double d = f_true(t) - centered.density(t, theta);
    s += rule.weights(i) * d * d;
  }
  return std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
}

PopulationFit
population_theta0(const LocalFamily& family, const WeightScheme& scheme,
                  const Kernel& k, double h,
                  const std::function<double(double)>& f_true, double x,
                  const PopulationOptions& opts)
{
  if (!(h > 0.0))
    throw std::invalid_argument("bandwidth must be positive");
  const FitConfig& cfg = opts.cfg;
  auto fam = centered_at(family, x);

  PopulationFit pf;
  pf.x = x;
  pf.h = h;
  pf.f_at_x = f_true(x);

  WeightedSample emp = population_measure(k, h, f_true, x, cfg);
  SmootherStats stats = measure_stats(k, h, x, emp);
  LocalFitResult fit = fit_measure(*fam, scheme, k, h, emp, stats, cfg,
                                   opts.theta_init);
  pf.status = fit.status;
  pf.theta0 = fit.theta_hat;
  if (fit.status != FitStatus::converged) {
    pf.diagnostic = "population root not found (" + to_string(fit.status) + ")";
    pf.f0_at_x = fit.f_hat;
    pf.bias = pf.f0_at_x - pf.f_at_x;
    return pf;
  }

  const Vec& theta = fit.theta_hat.values;
  LocalEquations eq(*fam, scheme, k, h, x, emp, cfg);
  Vec V;
  Mat J;
  eq.evaluate(theta, V, &J);
  pf.residual = V.lpNorm<Eigen::Infinity>();
  pf.f0_at_x = fam->density(x, theta);
  pf.bias = pf.f0_at_x - pf.f_at_x;
  pf.kl_local = local_kl(*fam, k, h, f_true, x, theta, cfg);
  pf.ok = true;

  bool score = scheme.kind == WeightKind::score;
  bool l2 = scheme.kind == WeightKind::l2;
  if (opts.simplex_check && (score || l2)) {
    auto crit = [&](const Vec& th) {
      return score ? local_kl(*fam, k, h, f_true, x, th, cfg)
                   : local_l2(*fam, k, h, f_true, x, th, cfg);
    };
    // coordinate scales from the curvature of the criterion at the root
    Vec step(theta.size());
    for (Eigen::Index j = 0; j < theta.size(); ++j)
      step(j) = 0.1 * std::sqrt(std::abs(J(0, 0)) / std::max(std::abs(J(j, j)), 1e-300));
    Vec start = fam->initial_theta(InitContext{ stats, k, h, cfg.trunc });
    SimplexResult nm = nelder_mead(crit, start, step, 1e-11, 40000);
    pf.simplex_theta = nm.x;
    Vec gap = (nm.x - theta).cwiseAbs().cwiseQuotient(
      (Vec::Ones(theta.size()) + theta.cwiseAbs()));
    pf.simplex_gap = gap.maxCoeff();
    if (!(pf.simplex_gap <= opts.agreement_tol)) {
      pf.ok = false;
      std::ostringstream os;
      os << "simplex minimizer differs from the root by " << pf.simplex_gap;
      pf.diagnostic = os.str();
    }
  }
  return pf;
}

BiasCurve
population_bias_curve(const LocalFamily& family, const WeightScheme& scheme,
                      const Kernel& k,
                      const std::function<double(double)>& f_true, double x,
                      const std::vector<double>& h_list, PopulationOptions opts)
{
  if (h_list.size() < 4)
    throw std::invalid_argument("bias curve needs at least four bandwidths");
  for (std::size_t i = 1; i < h_list.size(); ++i)
    if (!(h_list[i] < h_list[i - 1]) || !(h_list[i] > 0.0))
      throw std::invalid_argument("bandwidths must be positive and decreasing");

  BiasCurve bc;
  bc.ok = true;
  for (double h : h_list) {
    PopulationFit pf = population_theta0(family, scheme, k, h, f_true, x, opts);
    if (pf.ok)
      opts.theta_init = pf.theta0.values;
    bc.ok = bc.ok && pf.ok;
    bc.h.push_back(h);
    bc.bias.push_back(pf.bias);
    bc.fits.push_back(std::move(pf));
  }
  std::vector<double> hs(bc.h.end() - 4, bc.h.end());
  std::vector<double> bs(bc.bias.end() - 4, bc.bias.end());
  bc.slope = loglog_slope(hs, bs);
  bc.order = static_cast<int>(std::lround(bc.slope));
  bc.coefficient = bc.bias.back() / std::pow(bc.h.back(), bc.order);
  if (!std::isfinite(bc.slope))
    bc.ok = false;
  return bc;
}

double
bias_factor(BiasCase c, const BiasInputs& in)
{
  auto need = [](const auto& v, const char* what) {
    if (!v)
      throw std::invalid_argument(std::string("bias_factor needs ") + what);
    return *v;
  };
  Derivs f = need(in.f, "f derivatives");
  switch (c) {
    case BiasCase::one_param: {
      Derivs f0 = need(in.f0, "f0 derivatives");
      double r = need(in.v0_log_derivative, "v0'/v0");
      return f[2] - f0[2] + 2.0 * r * (f[1] - f0[1]);
    }
    case BiasCase::two_param: {
      Derivs f0 = need(in.f0, "f0 derivatives");
      return f[2] - f0[2];
    }
    case BiasCase::mult_const: {
      Derivs g = need(in.f_init, "f_init derivatives");
      return f[2] - f[0] * g[2] / g[0];
    }
    case BiasCase::mult_loglin: {
      Derivs g = need(in.f_init, "f_init derivatives");
      double lg = g[1] / g[0];
      return f[2] - f[1] * f[1] / f[0] + f[0] * lg * lg - f[0] * g[2] / g[0];
    }
    case BiasCase::hjort_glad: {
      Derivs g = need(in.f_init, "f_init derivatives");
      double lg = g[1] / g[0];
      // f_init (f / f_init)''
      return f[2] - 2.0 * f[1] * lg - f[0] * g[2] / g[0] + 2.0 * f[0] * lg * lg;
    }
  }
  throw std::invalid_argument("unknown bias case");
}

double
tau_squared(const Kernel& k, const Mat& basis)
{
  const Eigen::Index p = basis.rows();
  if (p < 1 || p > 4 || basis.cols() != p)
    throw std::invalid_argument("tau_squared needs a square basis with 1 <= p <= 4");
  Mat A(p, p), B(p, p);
  double r = k.integration_radius();
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) {
      int m = static_cast<int>(i + j);
      A(i, j) = k.moment(m);
      B(i, j) = integrate([&](double z) { return std::pow(z, m) * k(z) * k(z); },
                          -r, r, quadrature_order, 8);
    }
  Mat Ab = basis * A * basis.transpose();
  Mat Bb = basis * B * basis.transpose();
  Eigen::FullPivLU<Mat> lu(Ab);
  if (!lu.isInvertible() || lu.rcond() < 1e-14)
    throw std::domain_error("moment matrix is singular");
  Vec u0 = basis.col(0);
  Vec a = lu.solve(u0);
  return a.dot(Bb * a);
}

double
tau_squared(const Kernel& k, int p)
{
  if (p < 1 || p > 4)
    throw std::invalid_argument("tau_squared needs 1 <= p <= 4");
  return tau_squared(k, Mat::Identity(p, p));
}

std::function<double(double)>
fourth_order_equivalent(const Kernel& k)
{
  double k2 = k.moment(2), k4 = k.moment(4);
  double den = k4 - k2 * k2;
  if (!(den > 0.0))
    throw std::domain_error("kernel moments give no fourth-order equivalent");
  return [k, k2, k4, den](double z) { return (k4 - k2 * z * z) / den * k(z); };
}

SandwichMatrices
sandwich_matrices(const LocalFamily& family, const WeightScheme& scheme,
                  const Kernel& k, double h,
                  const std::function<double(double)>& f_true, double x,
                  const Vec& theta0, const FitConfig& cfg)
{
  auto fam = centered_at(family, x);
  const Eigen::Index p = theta0.size();
  QuadratureRule rule = criterion_rule(k, h, x, cfg);
  SandwichMatrices s;
  s.J = Mat::Zero(p, p);
  s.M = Mat::Zero(p, p);
  s.xi = Vec::Zero(p);
  for (Eigen::Index i = 0; i < rule.size(); ++i) {
    double t = rule.nodes(i), w = rule.weights(i);
    double f = f_true(t);
    FamilyPoint fp = fam->evaluate(t, theta0);
    Vec v = scheme.weight(*fam, x, t, theta0);
    Mat vstar = scheme.weight_param_jacobian(*fam, x, t, theta0);
    s.J += w * (v * fp.grad.transpose() + vstar * (fp.f - f));
    s.M += w * k.scaled(h, t - x) * f * (v * v.transpose());
    s.xi += w * f * v;
  }
  s.M = h * (s.M - s.xi * s.xi.transpose());
  return s;
}

McReport
mc_experiment(const TrueDensity& truth, const EstimatorSpec& est, int n,
              int reps, std::uint64_t seed, const Eigen::Ref<const Vec>& grid,
              int threads)
{
  if (reps < 2)
    throw std::invalid_argument("Monte Carlo needs at least two replications");
  if (n < 1 || grid.size() == 0)
    throw std::invalid_argument("Monte Carlo needs data and a grid");

  const Eigen::Index m = grid.size();
  Mat values(reps, m);
  std::vector<char> failed(reps, 0);
  WeightScheme scheme;
  if (est.family)
    scheme = weights_make(est.scheme, *est.family);

  auto run = [&](int r) {
    Rng rng(seed + static_cast<std::uint64_t>(r));
    Vec data = truth.sample(rng, n);
    if (!est.family) {
      values.row(r) = classic_density(est.kernel, est.h, data, grid).transpose();
      return;
    }
    DensityEstimate de = fit_grid(*est.family, scheme, est.kernel, est.h, data,
                                  grid, est.cfg);
    values.row(r) = de.f_hat.transpose();
    failed[r] = de.count(FitStatus::converged) != static_cast<std::size_t>(m);
  };

  int nt = std::max(1, std::min(threads, reps));
  if (nt == 1) {
    for (int r = 0; r < reps; ++r)
      run(r);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(nt);
    for (int w = 0; w < nt; ++w)
      pool.emplace_back([&, w] {
        try {
          for (int r = w; r < reps; r += nt)
            run(r);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& th : pool)
      th.join();
    for (auto& e : errors)
      if (e)
        std::rethrow_exception(e);
  }

  McReport rep;
  rep.estimator = est.id;
  rep.density = truth.name();
  rep.n = n;
  rep.reps = reps;
  rep.seed = seed;
  rep.failed_reps = static_cast<int>(std::count(failed.begin(), failed.end(), 1));
  rep.flagged = rep.failed_reps > 0.05 * reps;
  const int kept = reps - rep.failed_reps;

  const double k2 = est.kernel.variance();
  const double tau2 = tau_squared(est.kernel, std::min(est.params(), 4));
  FitConfig pcfg = est.cfg;
  pcfg.support_lower = std::max(pcfg.support_lower, truth.support_lower());
  pcfg.panels = std::max(pcfg.panels, 4);
  PopulationOptions popt;
  popt.cfg = pcfg;
  popt.cfg.max_iter = 200;
  popt.simplex_check = false;
  auto ftrue = truth.as_function();

  for (Eigen::Index j = 0; j < m; ++j) {
    McRow row;
    row.x = grid(j);
    row.f_true = truth(row.x);
    double sum = 0.0;
    for (int r = 0; r < reps; ++r)
      if (!failed[r])
        sum += values(r, j);
    const double nk = static_cast<double>(kept);
    row.mean = kept ? sum / nk : std::numeric_limits<double>::quiet_NaN();
    double s2 = 0.0, s4 = 0.0, se = 0.0;
    for (int r = 0; r < reps; ++r) {
      if (failed[r])
        continue;
      double d = values(r, j) - row.mean;
      double e = values(r, j) - row.f_true;
      s2 += d * d;
      s4 += d * d * d * d;
      se += e * e;
    }
    row.bias = row.mean - row.f_true;
    row.variance = s2 / nk;
    row.mse = se / nk;
    row.bias_se = std::sqrt(row.variance / nk);
    row.variance_se = std::sqrt(std::max(s4 / nk - row.variance * row.variance, 0.0) / nk);
    row.variance_theory =
      tau2 * row.f_true / (n * est.h) - row.f_true * row.f_true / n;

    Derivs fd{ truth.derivative(row.x, 0), truth.derivative(row.x, 1),
               truth.derivative(row.x, 2) };
    if (!est.family) {
      QuadratureRule rule = criterion_rule(est.kernel, est.h, row.x, pcfg);
      row.bias_population = rule.integrate(ftrue) - row.f_true;
      row.bias_asymptotic = 0.5 * k2 * est.h * est.h * fd[2];
      rep.rows.push_back(row);
      continue;
    }
    PopulationFit pf =
      population_theta0(*est.family, scheme, est.kernel, est.h, ftrue, row.x, popt);
    row.bias_population = pf.status == FitStatus::converged
                            ? pf.bias
                            : std::numeric_limits<double>::quiet_NaN();
    if (pf.status == FitStatus::converged && est.params() <= 2) {
      auto fam = centered_at(*est.family, row.x);
      const Vec& th = pf.theta0.values;
      BiasInputs in;
      in.f = fd;
      in.f0 = family_derivs(*fam, row.x, th);
      BiasCase bc = BiasCase::two_param;
      if (est.params() == 1) {
        bc = BiasCase::one_param;
        double d = 1e-4 * est.h;
        double vp = scheme.weight(*fam, row.x, row.x + d, th)(0);
        double vm = scheme.weight(*fam, row.x, row.x - d, th)(0);
        double v0 = scheme.weight(*fam, row.x, row.x, th)(0);
        in.v0_log_derivative = (vp - vm) / (2.0 * d * v0);
      }
      row.bias_asymptotic = 0.5 * k2 * est.h * est.h * bias_factor(bc, in);
    }
    rep.rows.push_back(row);
  }
  return rep;
}

} // namespace lpde
