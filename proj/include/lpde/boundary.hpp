#pragma once

#include "lpde/kernels.hpp"
#include "lpde/models.hpp"
#include "lpde/solver.hpp"

#include <array>
#include <functional>
#include <vector>

namespace lpde {

//! Truncated kernel functionals at relative position p (x = p h) next to a
//! boundary at zero: a_l(p) = int_{-S}^{p} u^l K(u) du, b(p) = int K^2, and
//! the two-parameter bias factor Q(p).
struct BoundaryMoments
{
  double p = 0.0;
  std::array<double, 4> a{};
  double b = 0.0;
  double Q = 0.0;
};

BoundaryMoments boundary_moments(const Kernel& k, double p);

//! z -> {(a2 - a1 z)/(a0 a2 - a1^2)} K(z) on [-S, p], zero elsewhere.
std::function<double(double)> boundary_kernel(const Kernel& k, double p);

//! int_{-S}^{p} (a2 - a1 z)^2 K(z)^2 dz / (a0 a2 - a1^2)^2.
double boundary_variance_factor(const Kernel& k, double p);

struct BoundaryBiasReport
{
  std::vector<double> h;
  std::vector<double> x;
  std::vector<double> bias; //!< f(x, theta0) - f(x)
  std::vector<FitStatus> status;
  double slope = 0.0;
  //! bias / h^order at the smallest h, with order the rounded slope.
  double coefficient = 0.0;
  bool ok = true;
};

//! Population fits on [0, inf) at x = p_rel h for each h in h_list, and the
//! log-log slope of |bias| on h.
BoundaryBiasReport boundary_bias_diag(const LocalFamily& family,
                                      const WeightScheme& scheme,
                                      const Kernel& k,
                                      const std::vector<double>& h_list,
                                      const std::function<double(double)>& f_true,
                                      double p_rel,
                                      FitConfig cfg = {});

//! Least-squares slope of log|y| on log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace lpde
