#include "lpde/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace lpde {

namespace {

QuadratureRule
compute_gauss_legendre(int n)
{
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16)
        break;
    }
    // recompute the derivative at the converged node
    double p0 = 1.0, p1 = 0.0;
    for (int j = 1; j <= n; ++j) {
      double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes(i) = -z;
    rule.nodes(n - 1 - i) = z;
    rule.weights(i) = w;
    rule.weights(n - 1 - i) = w;
  }
  return rule;
}

} // namespace

double
QuadratureRule::integrate(const std::function<double(double)>& g) const
{
  double s = 0.0;
  for (Eigen::Index i = 0; i < nodes.size(); ++i)
    s += weights(i) * g(nodes(i));
  return s;
}

const QuadratureRule&
gauss_legendre(int order)
{
  if (order < 1)
    throw std::invalid_argument("Gauss-Legendre order must be positive");
  static std::mutex mtx;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(order);
  if (it == cache.end())
    it = cache.emplace(order, compute_gauss_legendre(order)).first;
  return it->second;
}

QuadratureRule
gauss_legendre_on(double lo, double hi, int order, int panels)
{
  if (panels < 1)
    throw std::invalid_argument("number of panels must be positive");
  const auto& base = gauss_legendre(order);
  QuadratureRule rule;
  rule.nodes.resize(static_cast<Eigen::Index>(order) * panels);
  rule.weights.resize(rule.nodes.size());
  double width = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p) {
    double a = lo + p * width;
    double half = 0.5 * width;
    double mid = a + half;
    rule.nodes.segment(static_cast<Eigen::Index>(p) * order, order) =
      (mid + half * base.nodes.array()).matrix();
    rule.weights.segment(static_cast<Eigen::Index>(p) * order, order) =
      half * base.weights;
  }
  return rule;
}

double
integrate(const std::function<double(double)>& g, double lo, double hi,
          int order, int panels)
{
  return gauss_legendre_on(lo, hi, order, panels).integrate(g);
}

} // namespace lpde
