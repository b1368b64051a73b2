#pragma once

#include "lpde/kernels.hpp"

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lpde {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

//! Parameters in the family's internal parameterisation. Entries flagged
//! in `log_scale` hold the logarithm of a positive quantity.
struct ParamVector
{
  Vec values;
  std::vector<bool> log_scale;

  Eigen::Index size() const { return values.size(); }
  //! Natural-scale parameters (log-scale entries exponentiated).
  Vec decoded() const;
};

//! Density value and its parameter gradient/Hessian at one point.
struct FamilyPoint
{
  double f = 0.0;
  Vec grad; //!< d f / d theta
  Mat hess; //!< d^2 f / d theta^2
};

//! What a family sees when picking a starting point for the local solver.
struct InitContext
{
  const SmootherStats& stats;
  const Kernel& kernel;
  double h;
  double trunc;
};

//! A parametric family f(t, theta) fitted locally. Centered families
//! (polynomial-exponential, local line, multiplicative corrections) expand
//! around an evaluation point and are re-centered by the solver.
class LocalFamily
{
public:
  virtual ~LocalFamily() = default;

  virtual std::string name() const = 0;
  virtual int dim() const = 0;
  virtual std::vector<std::string> param_names() const = 0;
  virtual std::vector<bool> log_scale() const;

  virtual bool is_centered() const { return false; }
  virtual double center() const { return 0.0; }
  //! A copy expanded around x. Only meaningful for centered families.
  virtual std::unique_ptr<LocalFamily> clone_at(double x) const;
  //! Maps parameters for center `from` to (approximately) the same curve
  //! expanded around `to`.
  virtual Vec transport(const Vec& theta, double from, double to) const;

  virtual double log_density(double t, const Vec& theta) const = 0;
  virtual double density(double t, const Vec& theta) const;
  //! d log f / d theta in the internal parameterisation.
  virtual Vec score(double t, const Vec& theta) const = 0;
  //! d^2 log f / d theta^2.
  virtual Mat log_hessian(double t, const Vec& theta) const = 0;
  virtual FamilyPoint evaluate(double t, const Vec& theta) const;

  //! k-th derivative of f(., theta) in t, k <= 4. Defaults to finite
  //! differences.
  virtual double density_t_derivative(double t, const Vec& theta, int k) const;

  //! Interval outside which f(., theta) carries negligible mass, if any.
  virtual std::optional<std::pair<double, double>> mass_interval(const Vec&) const
  {
    return std::nullopt;
  }

  virtual bool is_log_concave_in_params() const { return false; }

  //! Starting parameters at a fresh evaluation point.
  virtual Vec initial_theta(const InitContext& ctx) const = 0;

  ParamVector make_params(const Vec& internal) const;
  //! Internal parameters from natural-scale values.
  Vec encode(const Vec& natural) const;
};

using FamilyPtr = std::shared_ptr<const LocalFamily>;

//! N(mu, sigma^2) with analytic derivatives up to order four.
struct NormalDensity
{
  double mu = 0.0;
  double sigma = 1.0;

  double operator()(double t) const;
  double derivative(double t, int k) const;
  //! Closed-form maximum likelihood fit (divisor n).
  static NormalDensity fit(const Eigen::Ref<const Eigen::VectorXd>& data);
};

//! Starting (mu, log sigma) for a normal fit from kernel-weighted local
//! moments f = sum w, g = sum w (t - x), g2 = sum w (t - x)^2.
std::pair<double, double> normal_moment_start(double x, double f, double g,
                                              double g2, double k2h2,
                                              double h);

//! exp(sum_j theta_j (t - x)^j), j = 0..p-1, for 1 <= p <= 4.
FamilyPtr family_polyexp(int p, double center = 0.0);

//! theta_1 + theta_2 (t - x): the local line of the classic-equivalence
//! results. Only a local model; positivity holds near x.
FamilyPtr family_linear(double center = 0.0);

//! Normal family with internal parameters (mu, log sigma).
FamilyPtr family_normal();

//! f_init(t) * exp(theta_0) (order 1) or f_init(t) * exp(theta_0 +
//! theta_1 (t - x)) (order 2), with theta_0 = log a.
FamilyPtr family_mult_correction(std::function<double(double)> f_init,
                                 int order,
                                 double center = 0.0,
                                 std::string init_name = "f_init");

enum class WeightKind
{
  score,
  powers,
  l2
};

WeightKind weight_kind_from_name(const std::string& name);
std::string to_string(WeightKind kind);

//! Weight functions v(x, t, theta) of the local estimating equations.
struct WeightScheme
{
  WeightKind kind = WeightKind::score;
  int p = 1;

  Vec weight(const LocalFamily& family, double x, double t,
             const Vec& theta) const;
  //! d v / d theta (p x p).
  Mat weight_param_jacobian(const LocalFamily& family, double x, double t,
                            const Vec& theta) const;
};

WeightScheme weights_make(WeightKind kind, const LocalFamily& family);

//! (1, u, ..., u^{p-1}).
Vec powers_vector(double u, int p);

} // namespace lpde
