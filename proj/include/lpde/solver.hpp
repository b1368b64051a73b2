#pragma once

#include "lpde/kernels.hpp"
#include "lpde/models.hpp"

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace lpde {

enum class FitStatus
{
  converged,
  max_iter,
  skipped,
  degenerate
};

std::string to_string(FitStatus status);

struct FitConfig
{
  double grad_tol = 1e-10;
  int max_iter = 50;
  int max_halvings = 30;
  double trunc = default_trunc;
  bool warm_start = true;
  double min_mass = 1e-12;
  //! Known support of f; the model integral is clipped to it.
  double support_lower = -std::numeric_limits<double>::infinity();
  double support_upper = std::numeric_limits<double>::infinity();
  //! Gauss-Legendre panels (64 nodes each) for the model integral.
  int panels = 1;
  //! Worker threads for fit_grid when warm_start is off.
  int threads = 1;
};

struct LocalFitResult
{
  double x = 0.0;
  ParamVector theta_hat;
  double f_hat = 0.0;
  FitStatus status = FitStatus::skipped;
  int iterations = 0;
  double grad_norm = 0.0;
  double local_loglik = std::numeric_limits<double>::quiet_NaN();
};

struct DensityEstimate
{
  Vec grid;
  Vec f_hat;
  std::vector<ParamVector> theta_trace;
  std::vector<FitStatus> status;
  double h = 0.0;
  std::string kernel;
  std::string model;
  std::string scheme;

  std::size_t count(FitStatus s) const;
};

//! Point masses w_i at t_i standing in for the kernel-weighted empirical
//! measure: w_i = K_h(x_i - x) / n for data, or quadrature weights times
//! K_h(t - x) f(t) for a population density.
struct WeightedSample
{
  Vec points;
  Vec weights;

  double mass() const { return weights.sum(); }
};

WeightedSample data_measure(const Kernel& k, double h,
                            const Eigen::Ref<const Vec>& data, double x);

WeightedSample population_measure(const Kernel& k, double h,
                                  const std::function<double(double)>& f_true,
                                  double x, const FitConfig& cfg);

//! f~, g~, g~2 of a weighted sample, with f~' and f~'' recovered from the
//! local moments (exact for the Gaussian kernel up to O(h^4) terms).
SmootherStats measure_stats(const Kernel& k, double h, double x,
                            const WeightedSample& emp);

//! V(theta) = sum_i w_i v(x, t_i, theta) - int K_h(t - x) v(x, t, theta)
//! f(t, theta) dt and its analytic Jacobian, for a family already centered
//! at x.
class LocalEquations
{
public:
  LocalEquations(const LocalFamily& family, WeightScheme scheme,
                 const Kernel& kernel, double h, double x,
                 WeightedSample emp, const FitConfig& cfg);

  //! False when V or J is not finite.
  bool evaluate(const Vec& theta, Vec& V, Mat* J = nullptr) const;
  Vec value(const Vec& theta) const;
  //! sum_i w_i log f(t_i, theta) - int K_h(t - x) f(t, theta) dt.
  double loglik(const Vec& theta) const;
  QuadratureRule model_rule(const Vec& theta) const;

  const LocalFamily& family() const { return family_; }
  double x() const { return x_; }

private:
  const LocalFamily& family_;
  WeightScheme scheme_;
  const Kernel& kernel_;
  double h_;
  double x_;
  WeightedSample emp_;
  FitConfig cfg_;
  QuadratureRule window_;
};

struct NewtonOutcome
{
  Vec theta;
  FitStatus status = FitStatus::max_iter;
  int iterations = 0;
  double grad_norm = std::numeric_limits<double>::infinity();
};

//! Residual function: fills V and, when J is non-null, its Jacobian.
using ResidualFn = std::function<bool(const Vec&, Vec&, Mat*)>;

//! Damped Newton with step halving, equilibrated and regularized linear
//! solves, and a short polishing phase once the tolerance is reached.
//! When V is the gradient of `objective`, steps must increase it first;
//! otherwise (or if that fails) they must reduce |V|.
NewtonOutcome newton_solve(const ResidualFn& fn, Vec theta,
                           const FitConfig& cfg,
                           const std::function<double(const Vec&)>& objective = {});

//! n^-1 sum K_h(x_i - x) log f(x_i, theta) - int K_h(t - x) f(t, theta) dt.
double local_loglik(const LocalFamily& family, const Kernel& kernel, double h,
                    const Eigen::Ref<const Vec>& data, double x,
                    const Vec& theta, const FitConfig& cfg = {});

Vec estimating_eqs(const LocalFamily& family, const WeightScheme& scheme,
                   const Kernel& kernel, double h,
                   const Eigen::Ref<const Vec>& data, double x,
                   const Vec& theta, const FitConfig& cfg = {});

LocalFitResult fit_at(const LocalFamily& family, const WeightScheme& scheme,
                      const Kernel& kernel, double h,
                      const Eigen::Ref<const Vec>& data, double x,
                      const FitConfig& cfg = {},
                      std::optional<Vec> theta_init = std::nullopt);

//! Same as fit_at but against an arbitrary weighted sample; `stats` drives
//! the fresh initialization and the skip rule.
LocalFitResult fit_measure(const LocalFamily& family,
                           const WeightScheme& scheme, const Kernel& kernel,
                           double h, const WeightedSample& emp,
                           const SmootherStats& stats, const FitConfig& cfg,
                           std::optional<Vec> theta_init = std::nullopt);

DensityEstimate fit_grid(const LocalFamily& family,
                         const WeightScheme& scheme, const Kernel& kernel,
                         double h, const Eigen::Ref<const Vec>& data,
                         const Eigen::Ref<const Vec>& grid,
                         const FitConfig& cfg = {});

//! The family expanded around x (a copy for centered families).
std::shared_ptr<const LocalFamily> centered_at(const LocalFamily& family,
                                               double x);

} // namespace lpde
