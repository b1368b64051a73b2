#pragma once

#include "lpde/kernels.hpp"
#include "lpde/models.hpp"
#include "lpde/solver.hpp"

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace lpde {

struct AmiseReport
{
  double h = 0.0;
  double amise = 0.0;
  double squared_bias_term = 0.0; //!< k2^2 h^4 R_b / 4
  double variance_term = 0.0;     //!< R(K) / (n h)
};

AmiseReport amise(double h, double n, const Kernel& k, double R_b);

//! {R(K) / k2^2}^{1/5} R_new^{-1/5} n^{-1/5}.
double optimal_h(double n, const Kernel& k, double R_new);

//! 5/4 {R(K) sigma_K}^{4/5} R_new^{1/5} n^{-4/5}.
double optimal_amise(double n, const Kernel& k, double R_new);

//! int_lo^hi g_dd(x)^2 dx by composite Gauss-Legendre.
double roughness_functional(const std::function<double(double)>& g_dd,
                            double lo, double hi, int panels = 32);

struct LscvScore
{
  double h = 0.0;
  double score = 0.0;
  double integral_term = 0.0; //!< int f^2
  double cross_term = 0.0;    //!< 2 n^-1 sum f_(i)(x_i)
  int dropped = 0;            //!< leave-one-out fits that did not converge
  bool ok = false;
};

//! int f^2 (512-node trapezoid over the data range widened by 4h) minus
//! 2 n^-1 sum_i f_(i)(x_i), with exact leave-one-out refits started from
//! the full-data fit at x_i. Dropped points are left out of the mean.
LscvScore lscv_score(const LocalFamily& family, const WeightScheme& scheme,
                     const Kernel& k, const Eigen::Ref<const Vec>& data,
                     double h, const FitConfig& cfg = {}, int nodes = 512);

//! 1.059 sd n^{-1/5}.
double normal_reference_h(const Eigen::Ref<const Vec>& data);

//! 30 log-spaced values over [h_ref / 8, 4 h_ref].
Vec default_h_grid(const Eigen::Ref<const Vec>& data, int count = 30);

struct BandwidthSelection
{
  std::string method;
  double h_selected = 0.0;
  std::vector<std::pair<double, double>> score_curve;
  std::vector<LscvScore> details;
  bool ok = false;
  std::string diagnostic;
};

//! Minimizes lscv_score over h_grid (default_h_grid when empty). Grid
//! points run on up to `threads` workers.
BandwidthSelection select_h_lscv(const LocalFamily& family,
                                 const WeightScheme& scheme, const Kernel& k,
                                 const Eigen::Ref<const Vec>& data,
                                 Vec h_grid = {}, const FitConfig& cfg = {},
                                 int threads = 1);

struct PluginRatio
{
  double h_classic = 0.0;
  double R_trad = 0.0;
  double R_new = 0.0;
  double ratio = 0.0; //!< (R_trad / R_new)^{1/5}
  double h_selected = 0.0;
};

//! Scales the normal-reference bandwidth by an estimate of
//! (R_trad / R_new)^{1/5}: f'' from second differences of the classic
//! estimate and f0'' from second differences of the local fitted curves,
//! both at the classic bandwidth.
PluginRatio plugin_ratio(const LocalFamily& family, const WeightScheme& scheme,
                         const Kernel& k, const Eigen::Ref<const Vec>& data,
                         const FitConfig& cfg = {}, int nodes = 256);

} // namespace lpde
