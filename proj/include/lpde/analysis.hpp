#pragma once

#include "lpde/kernels.hpp"
#include "lpde/models.hpp"
#include "lpde/solver.hpp"

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace lpde {

//! Seeded stream: mt19937_64 with a portable uniform and a polar-method
//! standard normal, so draws do not depend on the standard library vendor.
class Rng
{
public:
  explicit Rng(std::uint64_t seed)
    : gen_(seed)
  {
  }

  //! Uniform on (0, 1).
  double uniform();
  double normal();

private:
  std::mt19937_64 gen_;
  std::optional<double> spare_;
};

//! A known density with analytic derivatives (order <= 4) and a sampler.
class TrueDensity
{
public:
  static TrueDensity normal(double mu = 0.0, double sigma = 1.0);
  static TrueDensity mixture(std::vector<double> weights,
                             std::vector<NormalDensity> components);
  static TrueDensity exponential(double rate = 1.0);
  //! "normal[:mu,sigma]", "mixture[:w,mu,sigma,...]" (default
  //! 0.5 N(0,1) + 0.5 N(3,1)) or "exp[:rate]".
  static TrueDensity from_name(const std::string& spec);

  const std::string& name() const { return name_; }
  double operator()(double t) const { return derivative(t, 0); }
  double derivative(double t, int k) const;
  //! 0 for the exponential, -inf otherwise.
  double support_lower() const;
  //! Mean +- 3 sd per component, or [0.05, 5] / rate.
  std::pair<double, double> bulk_range() const;

  double draw(Rng& rng) const;
  Vec sample(Rng& rng, int n) const;
  std::function<double(double)> as_function() const;

private:
  enum class Kind
  {
    mixture,
    exponential
  };

  Kind kind_ = Kind::mixture;
  std::string name_;
  std::vector<double> weights_;
  std::vector<NormalDensity> components_;
  double rate_ = 1.0;
};

struct SimplexResult
{
  Vec x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

//! Nelder-Mead simplex search with restarts from the best vertex.
SimplexResult nelder_mead(const std::function<double(const Vec&)>& fn,
                          Vec x0, const Vec& step, double tol = 1e-13,
                          int max_iter = 20000);

struct PopulationOptions
{
  FitConfig cfg = [] {
    FitConfig c;
    c.max_iter = 200;
    c.panels = 4;
    return c;
  }();
  //! Cross-check the root against a direct simplex minimization of the
  //! local Kullback-Leibler distance (score weights) or the local L2
  //! criterion (L2 weights).
  bool simplex_check = true;
  double agreement_tol = 1e-6;
  std::optional<Vec> theta_init;
};

//! The locally least false parameter at x for a known density.
struct PopulationFit
{
  double x = 0.0;
  double h = 0.0;
  ParamVector theta0;
  double f0_at_x = 0.0;
  double f_at_x = 0.0;
  double bias = 0.0; //!< f0(x) - f(x)
  double kl_local = 0.0;
  FitStatus status = FitStatus::skipped;
  double residual = std::numeric_limits<double>::quiet_NaN();
  std::optional<Vec> simplex_theta;
  double simplex_gap = std::numeric_limits<double>::quiet_NaN();
  bool ok = false;
  std::string diagnostic;
};

//! int K_h(t - x) [f log(f / f_theta) - (f - f_theta)] dt.
double local_kl(const LocalFamily& centered, const Kernel& k, double h,
                const std::function<double(double)>& f_true, double x,
                const Vec& theta, const FitConfig& cfg);

//! int K_h(t - x) (f - f_theta)^2 dt.
double local_l2(const LocalFamily& centered, const Kernel& k, double h,
                const std::function<double(double)>& f_true, double x,
                const Vec& theta, const FitConfig& cfg);

PopulationFit population_theta0(const LocalFamily& family,
                                const WeightScheme& scheme, const Kernel& k,
                                double h,
                                const std::function<double(double)>& f_true,
                                double x, const PopulationOptions& opts = {});

struct BiasCurve
{
  std::vector<double> h;
  std::vector<double> bias;
  std::vector<PopulationFit> fits;
  //! Least-squares slope of log|bias| on log h over the four smallest h.
  double slope = 0.0;
  int order = 0; //!< rounded slope
  //! bias / h^order at the smallest h.
  double coefficient = 0.0;
  bool ok = false;
};

//! Population bias over a decreasing list of at least four bandwidths,
//! warm-starting each root from the previous one.
BiasCurve population_bias_curve(const LocalFamily& family,
                                const WeightScheme& scheme, const Kernel& k,
                                const std::function<double(double)>& f_true,
                                double x, const std::vector<double>& h_list,
                                PopulationOptions opts = [] {
                                  PopulationOptions o;
                                  o.simplex_check = false;
                                  return o;
                                }());

enum class BiasCase
{
  one_param,
  two_param,
  mult_const,
  mult_loglin,
  hjort_glad
};

//! Value and first two derivatives of a function at x.
using Derivs = std::array<double, 3>;

struct BiasInputs
{
  std::optional<Derivs> f;
  std::optional<Derivs> f0;
  std::optional<Derivs> f_init;
  //! v0'(x) / v0(x) for the one-parameter case.
  std::optional<double> v0_log_derivative;
};

//! Leading bias factor b(x), with E f^(x) = f(x) + k2 h^2 b(x) / 2 + ...
double bias_factor(BiasCase c, const BiasInputs& in);

//! e1' A^-1 B A^-1 e1 with A = int K V V', B = int K^2 V V' and
//! V(z) = (1, z, ..., z^{p-1}).
double tau_squared(const Kernel& k, int p);
//! Same with v = u = basis * V(z); the value does not depend on a
//! nonsingular basis.
double tau_squared(const Kernel& k, const Mat& basis);

//! z -> (k4 - k2 z^2) / (k4 - k2^2) K(z), which integrates to one.
std::function<double(double)> fourth_order_equivalent(const Kernel& k);

//! J_h = int K_h [v u' f0 + v* (f0 - f)] and
//! M_h = h int K_h^2 v v' f - h xi xi', xi = int K_h v f, at theta0.
struct SandwichMatrices
{
  Mat J;
  Mat M;
  Vec xi;
};

SandwichMatrices sandwich_matrices(const LocalFamily& family,
                                   const WeightScheme& scheme, const Kernel& k,
                                   double h,
                                   const std::function<double(double)>& f_true,
                                   double x, const Vec& theta0,
                                   const FitConfig& cfg = {});

//! Estimator run by the Monte Carlo harness; a null family means the
//! classic kernel estimator.
struct EstimatorSpec
{
  std::string id = "classic";
  FamilyPtr family;
  WeightKind scheme = WeightKind::score;
  Kernel kernel = Kernel::gaussian();
  double h = 0.3;
  FitConfig cfg;

  int params() const { return family ? family->dim() : 1; }
};

struct McRow
{
  double x = 0.0;
  double f_true = 0.0;
  double mean = 0.0;
  double bias = 0.0;
  double variance = 0.0;
  double mse = 0.0;
  double bias_se = 0.0;
  double variance_se = 0.0;
  //! Population bias f(x, theta0) - f(x) (classic: K_h * f - f).
  double bias_population = 0.0;
  //! k2 h^2 b(x) / 2 for one or two parameters; NaN otherwise.
  double bias_asymptotic = std::numeric_limits<double>::quiet_NaN();
  //! tau^2 f / (n h) - f^2 / n.
  double variance_theory = 0.0;
};

struct McReport
{
  std::string estimator;
  std::string density;
  int n = 0;
  int reps = 0;
  std::uint64_t seed = 0;
  int failed_reps = 0;
  bool flagged = false;
  std::vector<McRow> rows;
};

//! Replication r draws n points from Rng(seed + r); moments are
//! accumulated in replication order, so the report does not depend on
//! `threads`.
McReport mc_experiment(const TrueDensity& truth, const EstimatorSpec& est,
                       int n, int reps, std::uint64_t seed,
                       const Eigen::Ref<const Vec>& grid, int threads = 1);

} // namespace lpde
