#pragma once

#include "lpde/kernels.hpp"

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <string>

namespace lpde {

struct ClosedFormResult
{
  double f_hat = 0.0;
  //! Named by-products such as b, R, c, mu, sigma.
  std::map<std::string, double> aux;
  bool valid = false;
  std::string diagnostic;
};

//! Local log-linear fit with the Gaussian kernel:
//! f~ exp(-h^2 b^2 / 2), b = f~'/f~.
ClosedFormResult cf_loglinear(const SmootherStats& stats, double h);

//! Local log-quadratic fit with the Gaussian kernel. R^2 = 1/(1 + h^2 D),
//! f = f~ R exp(-h^2 R^2 q^2 / 2), with b = q R^2 and c = D/(1 + h^2 D).
ClosedFormResult cf_logquad(const SmootherStats& stats, double h);

//! f~(x) f_init(x) / (K_h * f_init)(x).
ClosedFormResult cf_mult_const(const std::function<double(double)>& f_init,
                               const Kernel& k, double h,
                               const Eigen::Ref<const Eigen::VectorXd>& data,
                               double x);

//! Log-linear correction of a N(m, sigma^2) start with the Gaussian kernel;
//! the result does not depend on m.
ClosedFormResult cf_mult_loglinear_normal(const SmootherStats& stats, double h,
                                          double sigma);

//! Running normal fit matching f~ and f~' (Gaussian kernel): solves
//! (2 pi s)^{-1/2} exp(-q^2 s / 2) = f~ for s = sigma^2 + h^2 by bisection,
//! then mu = x + s q.
ClosedFormResult cf_running_normal(const Eigen::Ref<const Eigen::VectorXd>& data,
                                   double h, double x,
                                   const Kernel& k = Kernel::gaussian());

//! Parametric-start estimator f_init(x) n^-1 sum K_h(x_i - x) / f_init(x_i).
ClosedFormResult cf_hjort_glad(const std::function<double(double)>& f_init,
                               const Kernel& k, double h,
                               const Eigen::Ref<const Eigen::VectorXd>& data,
                               double x);

} // namespace lpde
