#pragma once

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dpgopt {

/// Gauss-Legendre rule on the reference element [-1, 1].
template <typename Scalar>
struct QuadratureRule {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> points;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;

  Eigen::Index size() const { return points.size(); }
};

namespace detail {

// Legendre P_n(x) and P_n'(x) by the three-term recurrence.
template <typename Scalar>
std::pair<Scalar, Scalar> legendre_with_derivative(int n, Scalar x) {
  Scalar p0 = 1;
  Scalar p1 = x;
  if (n == 0) return {p0, Scalar(0)};
  for (int k = 2; k <= n; ++k) {
    const Scalar pk = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  const Scalar dp = n * (x * p1 - p0) / (x * x - 1);
  return {p1, dp};
}

}  // namespace detail

/// n-point Gauss-Legendre rule; exact for polynomials of degree <= 2n - 1.
template <typename Scalar = double>
QuadratureRule<Scalar> gauss_rule(int n_points) {
  if (n_points < 1) throw std::invalid_argument("gauss_rule: n_points must be >= 1");
  QuadratureRule<Scalar> rule;
  rule.points.resize(n_points);
  rule.weights.resize(n_points);
  const int n = n_points;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    Scalar x = std::cos(std::numbers::pi_v<Scalar> * (i + Scalar(0.75)) / (n + Scalar(0.5)));
    Scalar dp = 0;
    for (int it = 0; it < 100; ++it) {
      auto [p, d] = detail::legendre_with_derivative(n, x);
      dp = d;
      const Scalar dx = p / d;
      x -= dx;
      if (std::abs(dx) < 4 * std::numeric_limits<Scalar>::epsilon()) break;
    }
    dp = detail::legendre_with_derivative(n, x).second;
    const Scalar w = 2 / ((1 - x * x) * dp * dp);
    rule.points[i] = -x;
    rule.points[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.points[n / 2] = 0;
  return rule;
}

}  // namespace dpgopt
