#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

#include "dpgopt/quadrature.hpp"

namespace dpgopt {

enum class BasisKind { trial, enriched_test };

template <typename Scalar>
struct BasisValues {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> derivatives;  // d/dxi
};

/// Nodal Lagrange basis of a given order on [-1, 1].
///
/// Orders up to 3 use equispaced nodes; higher orders switch to
/// Gauss-Lobatto points to keep the Gram matrices well conditioned.
template <typename Scalar = double>
class LagrangeBasis {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit LagrangeBasis(int order, BasisKind kind = BasisKind::trial)
      : order_(order), kind_(kind), nodes_(order + 1) {
    if (order < 0) throw std::invalid_argument("LagrangeBasis: negative order");
    if (order == 0) {
      nodes_[0] = 0;
    } else if (order <= 3) {
      for (int i = 0; i <= order; ++i) nodes_[i] = Scalar(-1) + Scalar(2) * i / order;
    } else {
      nodes_ = lobatto_points(order + 1);
    }
    denominators_.resize(order + 1);
    for (int i = 0; i <= order; ++i) {
      Scalar d = 1;
      for (int j = 0; j <= order; ++j)
        if (j != i) d *= nodes_[i] - nodes_[j];
      denominators_[i] = d;
    }
  }

  int order() const { return order_; }
  BasisKind kind() const { return kind_; }
  Eigen::Index size() const { return order_ + 1; }
  const Vector& nodes() const { return nodes_; }

  BasisValues<Scalar> eval(Scalar xi) const {
    constexpr Scalar slack = Scalar(1e-12);
    if (!(xi >= Scalar(-1) - slack && xi <= Scalar(1) + slack))
      throw std::out_of_range("LagrangeBasis::eval: xi outside [-1, 1]");
    BasisValues<Scalar> out{Vector::Zero(size()), Vector::Zero(size())};
    if (order_ == 0) {
      out.values[0] = 1;
      return out;
    }
    for (int i = 0; i <= order_; ++i) {
      Scalar value = 1;
      Scalar derivative = 0;
      for (int j = 0; j <= order_; ++j) {
        if (j == i) continue;
        // product rule: d(value * f_j) = derivative * f_j + value * f_j'
        const Scalar f = xi - nodes_[j];
        derivative = derivative * f + value;
        value *= f;
      }
      out.values[i] = value / denominators_[i];
      out.derivatives[i] = derivative / denominators_[i];
    }
    return out;
  }

 private:
  static Vector lobatto_points(int n) {
    // Interior points are the roots of P'_{n-1}; Newton from Chebyshev seeds.
    Vector x(n);
    const int N = n - 1;
    for (int i = 0; i < n; ++i) x[i] = -std::cos(std::numbers::pi_v<Scalar> * i / N);
    for (int it = 0; it < 100; ++it) {
      Scalar max_dx = 0;
      for (int i = 1; i < N; ++i) {
        // P'_N and P''_N from the Legendre ODE.
        auto [p, dp] = detail::legendre_with_derivative(N, x[i]);
        const Scalar ddp = (2 * x[i] * dp - N * (N + 1) * p) / (1 - x[i] * x[i]);
        const Scalar dx = dp / ddp;
        x[i] -= dx;
        max_dx = std::max(max_dx, std::abs(dx));
      }
      if (max_dx < 8 * std::numeric_limits<Scalar>::epsilon()) break;
    }
    return x;
  }

  int order_;
  BasisKind kind_;
  Vector nodes_;
  Vector denominators_;
};

template <typename Scalar>
BasisValues<Scalar> eval_basis(const LagrangeBasis<Scalar>& basis, Scalar xi) {
  return basis.eval(xi);
}

}  // namespace dpgopt
