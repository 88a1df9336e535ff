#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dpgopt {

/// Uniform partition of a truncated 1-D interval.
///
/// The skeleton consists of all nodes: interior element interfaces plus
/// the two endpoints.
template <typename Scalar = double>
class Mesh1D {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Mesh1D(Scalar x_min, Scalar x_max, Eigen::Index n_elements)
      : x_min_(x_min), x_max_(x_max), n_elements_(n_elements) {
    if (!(x_min < x_max)) throw std::invalid_argument("Mesh1D: degenerate interval");
    if (n_elements < 1) throw std::invalid_argument("Mesh1D: need at least one element");
    h_ = (x_max - x_min) / Scalar(n_elements);
    nodes_.resize(n_elements + 1);
    for (Eigen::Index i = 0; i <= n_elements; ++i) nodes_[i] = x_min + Scalar(i) * h_;
    nodes_[n_elements] = x_max;
  }

  Scalar x_min() const { return x_min_; }
  Scalar x_max() const { return x_max_; }
  Scalar h() const { return h_; }
  Eigen::Index n_elements() const { return n_elements_; }
  Eigen::Index n_nodes() const { return n_elements_ + 1; }
  Eigen::Index n_interior_nodes() const { return n_elements_ - 1; }
  const Vector& nodes() const { return nodes_; }

  Scalar left(Eigen::Index e) const { return nodes_[e]; }
  Scalar right(Eigen::Index e) const { return nodes_[e + 1]; }
  Scalar center(Eigen::Index e) const { return Scalar(0.5) * (nodes_[e] + nodes_[e + 1]); }

  bool contains(Scalar x) const { return x >= x_min_ && x <= x_max_; }

  /// Element containing x; points on an interface belong to the right element
  /// except at x_max.
  Eigen::Index locate(Scalar x) const {
    if (!contains(x)) throw std::out_of_range("Mesh1D::locate: point outside the mesh");
    auto e = static_cast<Eigen::Index>(std::floor((x - x_min_) / h_));
    e = std::clamp<Eigen::Index>(e, 0, n_elements_ - 1);
    if (x < nodes_[e] && e > 0) --e;
    if (x >= nodes_[e + 1] && e + 1 < n_elements_) ++e;
    return e;
  }

  /// Reference coordinate of x inside element e.
  Scalar to_reference(Eigen::Index e, Scalar x) const {
    const Scalar xi = (x - center(e)) * Scalar(2) / h_;
    return std::clamp(xi, Scalar(-1), Scalar(1));
  }

  Scalar to_physical(Eigen::Index e, Scalar xi) const { return center(e) + Scalar(0.5) * h_ * xi; }

 private:
  Scalar x_min_;
  Scalar x_max_;
  Eigen::Index n_elements_;
  Scalar h_;
  Vector nodes_;
};

using Mesh = Mesh1D<double>;

template <typename Scalar>
Mesh1D<Scalar> build_uniform_mesh(Scalar x_min, Scalar x_max, Eigen::Index n_elements) {
  return Mesh1D<Scalar>(x_min, x_max, n_elements);
}

}  // namespace dpgopt
