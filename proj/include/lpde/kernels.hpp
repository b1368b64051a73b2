#pragma once

#include "lpde/quadrature.hpp"

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

namespace lpde {

inline constexpr double default_trunc = 8.0;
inline constexpr int quadrature_order = 64;

enum class KernelKind
{
  gaussian,
  uniform_half, //!< uniform on [-1/2, 1/2]
  uniform_unit, //!< uniform on [-1, 1]
  epanechnikov, //!< K0(z) = 3/2 (1 - 4 z^2)_+, support [-1/2, 1/2]
  biweight,     //!< 15/16 (1 - z^2)^2 on [-1, 1]
  custom
};

//! Symmetric smoothing kernel. Immutable after construction.
class Kernel
{
public:
  static Kernel gaussian();
  static Kernel uniform_half();
  static Kernel uniform_unit();
  static Kernel epanechnikov();
  static Kernel biweight();

  //! A user kernel without analytic moments; moments, roughness and the
  //! moment-generating function fall back to quadrature.
  static Kernel custom(std::string name,
                       double support_radius,
                       std::function<double(double)> eval);

  //! Looks up a shipped kernel by its CLI name ("gaussian", "uniform",
  //! "uniform-unit", "epanechnikov", "biweight").
  static Kernel from_name(std::string_view name);

  const std::string& name() const { return name_; }
  KernelKind kind() const { return kind_; }
  double support_radius() const { return radius_; }
  bool has_finite_support() const { return std::isfinite(radius_); }
  bool has_analytic_moments() const { return kind_ != KernelKind::custom; }
  bool has_analytic_derivatives() const;

  double operator()(double z) const;
  double eval(double z) const { return (*this)(z); }
  //! K'(z) and K''(z); only meaningful when has_analytic_derivatives().
  double derivative(double z) const;
  double second_derivative(double z) const;

  //! K_h(u) = K(u / h) / h.
  double scaled(double h, double u) const { return eval(u / h) / h; }

  //! k_j = int z^j K(z) dz for j <= 6.
  double moment(int j) const;
  double moment_quadrature(int j) const;
  //! sigma_K^2 = k_2.
  double variance() const { return moment(2); }

  //! R(K) = int K(z)^2 dz.
  double roughness() const;
  double roughness_quadrature() const;

  //! psi(u) = int exp(u z) K(z) dz.
  double mgf(double u) const;

  //! Half-width of the integration window in standard units: the support
  //! radius, or `trunc` for infinite-support kernels.
  double integration_radius(double trunc = default_trunc) const
  {
    return has_finite_support() ? radius_ : trunc;
  }

private:
  Kernel(std::string name, KernelKind kind, double radius,
         std::function<double(double)> custom_eval = {});

  std::string name_;
  KernelKind kind_;
  double radius_;
  std::function<double(double)> custom_eval_;
};

//! Classic kernel smoother quantities at a point.
struct SmootherStats
{
  double x = 0.0;
  double f_tilde = 0.0;
  double f_tilde_d1 = 0.0;
  double f_tilde_d2 = 0.0;
  double g_tilde = 0.0;  //!< n^-1 sum K_h(x_i - x)(x_i - x)
  double g2_tilde = 0.0; //!< n^-1 sum K_h(x_i - x)(x_i - x)^2
  //! f~'/f~ and f~''/f~ - (f~'/f~)^2; empty when f~ = 0.
  std::optional<double> q_tilde;
  std::optional<double> D_hat;
};

//! Classic kernel estimate f~(x) with its first two derivatives and local
//! moments. Derivatives are analytic for Gaussian and polynomial kernels and
//! central differences (step 1e-5 h) otherwise.
SmootherStats classic_estimate(const Kernel& k, double h,
                               const Eigen::Ref<const Eigen::VectorXd>& data,
                               double x);

//! f~ on a grid.
Eigen::VectorXd classic_density(const Kernel& k, double h,
                                const Eigen::Ref<const Eigen::VectorXd>& data,
                                const Eigen::Ref<const Eigen::VectorXd>& grid);

//! Quadrature over the kernel window around x: nodes t_m in
//! [x - S h, x + S h] intersected with [lower, upper], weights
//! w_m K_h(t_m - x). Empty when the intersection is empty.
QuadratureRule kernel_window(const Kernel& k, double h, double x,
                             double trunc = default_trunc,
                             double lower = -std::numeric_limits<double>::infinity(),
                             double upper = std::numeric_limits<double>::infinity(),
                             int panels = 1);

//! int K_h(t - x) g(t) dt by 64-node Gauss-Legendre over the kernel window.
double kernel_convolve(const Kernel& k, double h, double x,
                       const std::function<double(double)>& g,
                       double trunc = default_trunc);

} // namespace lpde
