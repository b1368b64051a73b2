#pragma once

#include <Eigen/Dense>
#include <functional>

namespace lpde {

//! Nodes and weights of a discrete integration rule (or of a weighted
//! point set such as an empirical measure).
struct QuadratureRule
{
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;

  Eigen::Index size() const { return nodes.size(); }

  //! Sum of w_i g(t_i).
  double integrate(const std::function<double(double)>& g) const;
};

//! Gauss-Legendre nodes and weights on [-1, 1]; computed once per order.
const QuadratureRule& gauss_legendre(int order);

//! Composite Gauss-Legendre rule on [lo, hi] with `panels` equal panels.
QuadratureRule gauss_legendre_on(double lo, double hi, int order = 64,
                                 int panels = 1);

//! Composite Gauss-Legendre integral of g over [lo, hi].
double integrate(const std::function<double(double)>& g, double lo, double hi,
                 int order = 64, int panels = 1);

} // namespace lpde
