#include "lpde/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace lpde {

namespace {

void
require_positive(double v, const char* what)
{
  if (!(v > 0.0) || !std::isfinite(v))
    throw std::invalid_argument(std::string(what) + " must be positive");
}

double
trapezoid(const Vec& y, double step)
{
  if (y.size() < 2)
    return 0.0;
  return step * (y.sum() - 0.5 * (y(0) + y(y.size() - 1)));
}

Vec
without(const Eigen::Ref<const Vec>& data, Eigen::Index i)
{
  Vec out(data.size() - 1);
  out.head(i) = data.head(i);
  out.tail(data.size() - 1 - i) = data.tail(data.size() - 1 - i);
  return out;
}

} // namespace

AmiseReport
amise(double h, double n, const Kernel& k, double R_b)
{
  require_positive(h, "h");
  require_positive(n, "n");
  require_positive(R_b, "R_b");
  double k2 = k.variance();
  AmiseReport r;
  r.h = h;
  r.squared_bias_term = 0.25 * k2 * k2 * std::pow(h, 4) * R_b;
  r.variance_term = k.roughness() / (n * h);
  r.amise = r.squared_bias_term + r.variance_term;
  return r;
}

double
optimal_h(double n, const Kernel& k, double R_new)
{
  require_positive(n, "n");
  require_positive(R_new, "R_new");
  double k2 = k.variance();
  return std::pow(k.roughness() / (k2 * k2), 0.2) * std::pow(R_new, -0.2) *
         std::pow(n, -0.2);
}

double
optimal_amise(double n, const Kernel& k, double R_new)
{
  require_positive(n, "n");
  require_positive(R_new, "R_new");
  return 1.25 * std::pow(k.roughness() * std::sqrt(k.variance()), 0.8) *
         std::pow(R_new, 0.2) * std::pow(n, -0.8);
}

double
roughness_functional(const std::function<double(double)>& g_dd, double lo,
                     double hi, int panels)
{
  if (!(hi > lo))
    throw std::invalid_argument("roughness interval is empty");
  const QuadratureRule rule = gauss_legendre_on(lo, hi, quadrature_order, panels);
  double s = 0.0;
  for (Eigen::Index i = 0; i < rule.size(); ++i) {
    double g = g_dd(rule.nodes(i));
    if (!std::isfinite(g))
      throw std::domain_error("roughness integrand is not finite");
    s += rule.weights(i) * g * g;
  }
  return s;
}

LscvScore
lscv_score(const LocalFamily& family, const WeightScheme& scheme,
           const Kernel& k, const Eigen::Ref<const Vec>& data, double h,
           const FitConfig& cfg, int nodes)
{
  const Eigen::Index n = data.size();
  if (n < 2)
    throw std::invalid_argument("cross-validation needs at least two points");
  require_positive(h, "h");
  if (nodes < 2)
    throw std::invalid_argument("cross-validation needs at least two nodes");

  LscvScore s;
  s.h = h;
  Vec grid = Vec::LinSpaced(nodes, data.minCoeff() - 4.0 * h,
                            data.maxCoeff() + 4.0 * h);
  DensityEstimate full = fit_grid(family, scheme, k, h, data, grid, cfg);
  Vec sq = full.f_hat.array().square();
  s.integral_term = trapezoid(sq, grid(1) - grid(0));
  std::size_t grid_bad = full.count(FitStatus::max_iter) +
                         full.count(FitStatus::degenerate);

  double sum = 0.0;
  int kept = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double xi = data(i);
    LocalFitResult at = fit_at(family, scheme, k, h, data, xi, cfg);
    std::optional<Vec> init;
    if (at.status == FitStatus::converged)
      init = at.theta_hat.values;
    LocalFitResult loo = fit_at(family, scheme, k, h, without(data, i), xi, cfg, init);
    if (loo.status != FitStatus::converged) {
      ++s.dropped;
      continue;
    }
    sum += loo.f_hat;
    ++kept;
  }
  s.cross_term = kept ? 2.0 * sum / kept : std::numeric_limits<double>::quiet_NaN();
  s.score = s.integral_term - s.cross_term;
  s.ok = std::isfinite(s.score) && s.dropped * 10 <= n &&
         grid_bad * 10 <= static_cast<std::size_t>(nodes);
  return s;
}

double
normal_reference_h(const Eigen::Ref<const Vec>& data)
{
  const Eigen::Index n = data.size();
  if (n < 2)
    throw std::invalid_argument("reference bandwidth needs at least two points");
  double mean = data.mean();
  double sd = std::sqrt((data.array() - mean).square().sum() / (n - 1));
  if (!(sd > 0.0))
    throw std::invalid_argument("reference bandwidth needs spread in the data");
  return 1.059 * sd * std::pow(static_cast<double>(n), -0.2);
}

Vec
default_h_grid(const Eigen::Ref<const Vec>& data, int count)
{
  double ref = normal_reference_h(data);
  Vec g = Vec::LinSpaced(count, std::log(ref / 8.0), std::log(4.0 * ref));
  return g.array().exp();
}

BandwidthSelection
select_h_lscv(const LocalFamily& family, const WeightScheme& scheme,
              const Kernel& k, const Eigen::Ref<const Vec>& data, Vec h_grid,
              const FitConfig& cfg, int threads)
{
  if (h_grid.size() == 0)
    h_grid = default_h_grid(data);
  for (Eigen::Index j = 0; j < h_grid.size(); ++j)
    require_positive(h_grid(j), "grid bandwidth");

  const Eigen::Index m = h_grid.size();
  BandwidthSelection sel;
  sel.method = "lscv";
  sel.details.resize(m);
  int nt = std::max(1, std::min<int>(threads, static_cast<int>(m)));
  if (nt == 1) {
    for (Eigen::Index j = 0; j < m; ++j)
      sel.details[j] = lscv_score(family, scheme, k, data, h_grid(j), cfg);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(nt);
    for (int w = 0; w < nt; ++w)
      pool.emplace_back([&, w] {
        try {
          for (Eigen::Index j = w; j < m; j += nt)
            sel.details[j] = lscv_score(family, scheme, k, data, h_grid(j), cfg);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : pool)
      t.join();
    for (auto& e : errors)
      if (e)
        std::rethrow_exception(e);
  }

  double best = std::numeric_limits<double>::infinity();
  for (const auto& d : sel.details) {
    sel.score_curve.emplace_back(d.h, d.score);
    if (d.ok && d.score < best) {
      best = d.score;
      sel.h_selected = d.h;
    }
  }
  sel.ok = std::isfinite(best);
  if (!sel.ok)
    sel.diagnostic = "every grid bandwidth was flagged";
  return sel;
}

PluginRatio
plugin_ratio(const LocalFamily& family, const WeightScheme& scheme,
             const Kernel& k, const Eigen::Ref<const Vec>& data,
             const FitConfig& cfg, int nodes)
{
  if (nodes < 5)
    throw std::invalid_argument("plug-in ratio needs at least five nodes");
  PluginRatio pr;
  const double h = normal_reference_h(data);
  pr.h_classic = h;
  Vec grid = Vec::LinSpaced(nodes, data.minCoeff() - 4.0 * h,
                            data.maxCoeff() + 4.0 * h);
  const double step = grid(1) - grid(0);
  Vec ft = classic_density(k, h, data, grid);
  DensityEstimate est = fit_grid(family, scheme, k, h, data, grid, cfg);

  Vec trad = Vec::Zero(nodes), b = Vec::Zero(nodes);
  for (Eigen::Index j = 1; j + 1 < nodes; ++j) {
    double f2 = (ft(j + 1) - 2.0 * ft(j) + ft(j - 1)) / (step * step);
    double f02 = 0.0;
    if (est.status[j] == FitStatus::converged) {
      auto fam = centered_at(family, grid(j));
      const Vec& th = est.theta_trace[j].values;
      f02 = (fam->density(grid(j) + step, th) - 2.0 * fam->density(grid(j), th) +
             fam->density(grid(j) - step, th)) /
            (step * step);
    }
    trad(j) = f2 * f2;
    b(j) = (f2 - f02) * (f2 - f02);
  }
  pr.R_trad = trapezoid(trad, step);
  pr.R_new = trapezoid(b, step);
  if (!(pr.R_new > 0.0) || !(pr.R_trad > 0.0))
    throw std::domain_error("estimated roughness is zero");
  pr.ratio = std::pow(pr.R_trad / pr.R_new, 0.2);
  pr.h_selected = h * pr.ratio;
  return pr;
}

} // namespace lpde
