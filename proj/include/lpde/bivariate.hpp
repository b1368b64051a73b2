#pragma once

#include "lpde/closedform.hpp"
#include "lpde/kernels.hpp"
#include "lpde/models.hpp"
#include "lpde/solver.hpp"

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace lpde {

using Point2 = Eigen::Vector2d;
//! One observation per row.
using Sample2D = Eigen::Matrix<double, Eigen::Dynamic, 2>;

//! n^-1 sum K1_{h1}(x_i1 - x1) K2_{h2}(x_i2 - x2).
double classic2d(const Kernel& k1, const Kernel& k2, double h1, double h2,
                 const Sample2D& data, const Point2& x);

//! Point masses standing in for the product-kernel weighted measure.
struct WeightedSample2D
{
  Sample2D points;
  Vec weights;
};

WeightedSample2D data_measure2d(const Kernel& k1, const Kernel& k2, double h1,
                                double h2, const Sample2D& data,
                                const Point2& x);

//! Tensor Gauss-Legendre nodes over the product window, weighted by
//! K1_{h1} K2_{h2} f.
WeightedSample2D population_measure2d(const Kernel& k1, const Kernel& k2,
                                      double h1, double h2,
                                      const std::function<double(const Point2&)>& f_true,
                                      const Point2& x, const FitConfig& cfg = {});

//! f~ with its local moments and partial derivatives, the partials taken
//! from the first moments (exact for Gaussian kernels).
struct SmootherStats2D
{
  Point2 x = Point2::Zero();
  double f_tilde = 0.0;
  Point2 grad = Point2::Zero(); //!< (df~/dx1, df~/dx2)
  Point2 g = Point2::Zero();    //!< sum w (t_i - x_i)
  Point2 g2 = Point2::Zero();   //!< sum w (t_i - x_i)^2
};

SmootherStats2D measure_stats2d(const Kernel& k1, const Kernel& k2, double h1,
                                double h2, const Point2& x,
                                const WeightedSample2D& emp);

SmootherStats2D classic2d_stats(const Kernel& k1, const Kernel& k2, double h1,
                                double h2, const Sample2D& data,
                                const Point2& x);

//! Local log-linear fit with Gaussian product kernels:
//! f~ exp(-sum h_i^2 (f~'_i / f~)^2 / 2).
ClosedFormResult cf_bilinear2d(const SmootherStats2D& stats, double h1,
                               double h2);

struct InitContext2D
{
  const SmootherStats2D& stats;
  const Kernel& k1;
  const Kernel& k2;
  double h1;
  double h2;
};

//! A parametric family on the plane fitted locally; centered families
//! expand around the evaluation point.
class LocalFamily2D
{
public:
  virtual ~LocalFamily2D() = default;

  virtual std::string name() const = 0;
  virtual int dim() const = 0;
  virtual std::vector<std::string> param_names() const = 0;
  virtual std::vector<bool> log_scale() const;

  virtual bool is_centered() const { return false; }
  virtual std::unique_ptr<LocalFamily2D> clone_at(const Point2& x) const;
  virtual Vec transport(const Vec& theta, const Point2& from,
                        const Point2& to) const;

  virtual double log_density(const Point2& t, const Vec& theta) const = 0;
  double density(const Point2& t, const Vec& theta) const;
  virtual Vec score(const Point2& t, const Vec& theta) const = 0;
  virtual Mat log_hessian(const Point2& t, const Vec& theta) const = 0;
  FamilyPoint evaluate(const Point2& t, const Vec& theta) const;

  //! Box outside which f(., theta) carries negligible mass, if any.
  virtual std::optional<Eigen::Matrix2d> mass_box(const Vec&) const
  {
    return std::nullopt;
  }

  virtual Vec initial_theta(const InitContext2D& ctx) const = 0;

  ParamVector make_params(const Vec& internal) const;
};

using Family2DPtr = std::shared_ptr<const LocalFamily2D>;

//! exp(theta_0): the bivariate local constant.
Family2DPtr family2d_constant();
//! exp(theta_0 + theta_1 (t1 - x1) + theta_2 (t2 - x2)).
Family2DPtr family2d_loglinear(const Point2& center = Point2::Zero());
//! Log-linear plus theta_3 u1^2 + theta_4 u2^2 + theta_5 u1 u2.
Family2DPtr family2d_logquad(const Point2& center = Point2::Zero());
//! N(mu1, s1^2) x N(mu2, s2^2), internal (mu1, mu2, log s1, log s2).
Family2DPtr family2d_binormal();

//! Score weights, or L2 weights f(t, theta) times the score.
struct WeightScheme2D
{
  WeightKind kind = WeightKind::score;
};

LocalFitResult fit2d_measure(const LocalFamily2D& family,
                             const WeightScheme2D& scheme, const Kernel& k1,
                             const Kernel& k2, double h1, double h2,
                             const WeightedSample2D& emp,
                             const SmootherStats2D& stats,
                             const FitConfig& cfg = {},
                             std::optional<Vec> theta_init = std::nullopt);

//! Local fit at x. The model integral uses a tensor 64 x 64 Gauss-Legendre
//! rule over the product window. LocalFitResult::x holds x1.
LocalFitResult fit2d(const LocalFamily2D& family, const WeightScheme2D& scheme,
                     const Kernel& k1, const Kernel& k2, double h1, double h2,
                     const Sample2D& data, const Point2& x,
                     const FitConfig& cfg = {},
                     std::optional<Vec> theta_init = std::nullopt);

struct Estimate2D
{
  Vec grid1;
  Vec grid2;
  Mat f_hat; //!< grid1.size() x grid2.size()
  std::vector<ParamVector> theta_trace; //!< row-major over (grid1, grid2)
  std::vector<FitStatus> status;
  double h1 = 0.0;
  double h2 = 0.0;
  std::string model;
  std::string scheme;

  std::size_t count(FitStatus s) const;
};

//! Fits over the rectangular grid grid1 x grid2 in row-major order, warm
//! starting along rows, or in parallel when warm starts are off.
Estimate2D fit2d_grid(const LocalFamily2D& family, const WeightScheme2D& scheme,
                      const Kernel& k1, const Kernel& k2, double h1, double h2,
                      const Sample2D& data, const Eigen::Ref<const Vec>& grid1,
                      const Eigen::Ref<const Vec>& grid2,
                      const FitConfig& cfg = {});

} // namespace lpde
