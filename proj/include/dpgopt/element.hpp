#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dpgopt/basis.hpp"
#include "dpgopt/forms.hpp"
#include "dpgopt/quadrature.hpp"

namespace dpgopt {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar = double>
struct ElementGeometry {
  Scalar left = 0;
  Scalar right = 1;

  Scalar width() const { return right - left; }
  Scalar jacobian() const { return Scalar(0.5) * width(); }
  Scalar map(Scalar xi) const { return Scalar(0.5) * (left + right) + jacobian() * xi; }
};

/// Trial and enriched-test bases tabulated at the quadrature points and at
/// the two element endpoints.
template <typename Scalar = double>
class ReferenceElement {
 public:
  ReferenceElement(int trial_order, int test_order, int n_quadrature)
      : trial_(trial_order, BasisKind::trial),
        test_(test_order, BasisKind::enriched_test),
        quad_(gauss_rule<Scalar>(n_quadrature)) {
    const auto nq = quad_.size();
    trial_values_.resize(nq, trial_.size());
    trial_derivs_.resize(nq, trial_.size());
    test_values_.resize(nq, test_.size());
    test_derivs_.resize(nq, test_.size());
    for (Eigen::Index q = 0; q < nq; ++q) {
      const auto tr = trial_.eval(quad_.points[q]);
      const auto te = test_.eval(quad_.points[q]);
      trial_values_.row(q) = tr.values.transpose();
      trial_derivs_.row(q) = tr.derivatives.transpose();
      test_values_.row(q) = te.values.transpose();
      test_derivs_.row(q) = te.derivatives.transpose();
    }
    test_left_ = test_.eval(Scalar(-1)).values;
    test_right_ = test_.eval(Scalar(1)).values;
    trial_left_ = trial_.eval(Scalar(-1));
    trial_right_ = trial_.eval(Scalar(1));
  }

  const LagrangeBasis<Scalar>& trial() const { return trial_; }
  const LagrangeBasis<Scalar>& test() const { return test_; }
  const QuadratureRule<Scalar>& quadrature() const { return quad_; }
  int trial_order() const { return trial_.order(); }
  int test_order() const { return test_.order(); }

  // Rows indexed by quadrature point, derivatives with respect to xi.
  const MatrixX<Scalar>& trial_values() const { return trial_values_; }
  const MatrixX<Scalar>& trial_derivatives() const { return trial_derivs_; }
  const MatrixX<Scalar>& test_values() const { return test_values_; }
  const MatrixX<Scalar>& test_derivatives() const { return test_derivs_; }
  const VectorX<Scalar>& test_left() const { return test_left_; }
  const VectorX<Scalar>& test_right() const { return test_right_; }
  const BasisValues<Scalar>& trial_left() const { return trial_left_; }
  const BasisValues<Scalar>& trial_right() const { return trial_right_; }

  Eigen::Index test_dimension(Formulation f) const {
    return (f == Formulation::ultraweak ? 2 : 1) * test_.size();
  }
  /// Local columns: primal [u | q_L q_R], ultraweak [u g | uhat_L uhat_R | ghat_L ghat_R].
  Eigen::Index trial_columns(Formulation f) const {
    return f == Formulation::ultraweak ? 2 * trial_.size() + 4 : trial_.size() + 2;
  }

 private:
  LagrangeBasis<Scalar> trial_;
  LagrangeBasis<Scalar> test_;
  QuadratureRule<Scalar> quad_;
  MatrixX<Scalar> trial_values_, trial_derivs_, test_values_, test_derivs_;
  VectorX<Scalar> test_left_, test_right_;
  BasisValues<Scalar> trial_left_, trial_right_;
};

/// Column layout of the local form matrix.
struct ColumnBlocks {
  Eigen::Index field_begin = 0, field_count = 0;
  Eigen::Index trace_begin = 0, trace_count = 0;
  Eigen::Index flux_begin = 0, flux_count = 0;
};

template <typename Scalar>
ColumnBlocks column_blocks(Formulation f, const ReferenceElement<Scalar>& ref) {
  const auto n = ref.trial().size();
  if (f == Formulation::primal) return {0, n, n, 0, n, 2};
  return {0, 2 * n, 2 * n, 2, 2 * n + 2, 2};
}

/// Nodal data of a discrete state restricted to one element: field values,
/// gradient values (u_x for primal, the gradient unknown for ultraweak), and
/// the skeleton slopes u_x at the two endpoints.
template <typename Scalar = double>
struct ElementState {
  VectorX<Scalar> u;
  VectorX<Scalar> gradient;
  Scalar slope_left = 0;
  Scalar slope_right = 0;
};

/// Gram matrix of the test inner product on one element.
template <typename Scalar>
MatrixX<Scalar> assemble_gram(const ElementGeometry<Scalar>& element, const NormSpec<Scalar>& norm,
                              const ReferenceElement<Scalar>& ref) {
  norm.validate();
  const auto& quad = ref.quadrature();
  const auto m = ref.test().size();
  const Scalar jac = element.jacobian();
  const Scalar dxi = 1 / jac;
  const auto dim = ref.test_dimension(norm.formulation);
  MatrixX<Scalar> G = MatrixX<Scalar>::Zero(dim, dim);

  for (Eigen::Index q = 0; q < quad.size(); ++q) {
    const Scalar w = quad.weights[q] * jac;
    const Scalar x = element.map(quad.points[q]);
    const auto psi = ref.test_values().row(q).transpose();
    const VectorX<Scalar> dpsi = ref.test_derivatives().row(q).transpose() * dxi;
    if (norm.formulation == Formulation::primal) {
      G.noalias() += (w * norm.value_weight) * psi * psi.transpose();
      if (norm.gradient_weight > 0) {
        const Scalar d2 = norm.gradient_scale * norm.gradient_scale;
        G.noalias() += (w * norm.gradient_weight * d2) * dpsi * dpsi.transpose();
      }
      continue;
    }
    const auto& form = norm.adjoint_of;
    const auto& c = form.coefficients;
    const Scalar s = form.implicit_scale();
    const Scalar a = c.diffusion(x);
    const Scalar beta = c.diffusion.derivative(x) - c.convection(x);
    const Scalar react = 1 + s * c.reaction(x);
    // adjoint components evaluated on the stacked test basis [v | w]
    VectorX<Scalar> adj_u(2 * m), adj_g(2 * m);
    adj_u << react * psi, dpsi;
    adj_g << s * (a * dpsi + beta * psi), psi;
    G.noalias() += (w * norm.value_weight) * adj_u * adj_u.transpose();
    G.noalias() += (w * norm.gradient_weight) * adj_g * adj_g.transpose();
    if (norm.l2_weight > 0) {
      G.topLeftCorner(m, m).noalias() += (w * norm.l2_weight) * psi * psi.transpose();
      G.bottomRightCorner(m, m).noalias() += (w * norm.l2_weight) * psi * psi.transpose();
    }
  }
  return G;
}

/// Rectangular form matrix B (rows: enriched test functions, columns:
/// field | trace | flux unknowns) of the implicit part of one theta-step.
///
/// Flux unknowns carry the scaled normal flux -dt*theta*a*u_x, so their
/// columns hold the outward normal (-1 left, +1 right) times the test values.
template <typename Scalar>
MatrixX<Scalar> assemble_element_matrix(const ElementGeometry<Scalar>& element,
                                        const FormSpec<Scalar>& form,
                                        const ReferenceElement<Scalar>& ref) {
  form.validate();
  const auto& quad = ref.quadrature();
  const auto n = ref.trial().size();
  const auto m = ref.test().size();
  const Scalar jac = element.jacobian();
  const Scalar dxi = 1 / jac;
  const Scalar s = form.implicit_scale();
  const auto& c = form.coefficients;
  MatrixX<Scalar> B =
      MatrixX<Scalar>::Zero(ref.test_dimension(form.formulation), ref.trial_columns(form.formulation));

  for (Eigen::Index q = 0; q < quad.size(); ++q) {
    const Scalar w = quad.weights[q] * jac;
    const Scalar x = element.map(quad.points[q]);
    const auto phi = ref.trial_values().row(q).transpose();
    const VectorX<Scalar> dphi = ref.trial_derivatives().row(q).transpose() * dxi;
    const auto psi = ref.test_values().row(q).transpose();
    const VectorX<Scalar> dpsi = ref.test_derivatives().row(q).transpose() * dxi;
    const Scalar a = c.diffusion(x);
    const Scalar beta = c.diffusion.derivative(x) - c.convection(x);
    const Scalar react = c.reaction(x);

    if (form.formulation == Formulation::primal) {
      B.leftCols(n).noalias() += w * (psi * phi.transpose() +
                                      s * (a * dpsi * dphi.transpose() +
                                           psi * (beta * dphi + react * phi).transpose()));
    } else {
      // rows [v | w], columns [u | g]
      B.block(0, 0, m, n).noalias() += (w * (1 + s * react)) * psi * phi.transpose();
      B.block(0, n, m, n).noalias() += (w * s) * (a * dpsi + beta * psi) * phi.transpose();
      B.block(m, 0, m, n).noalias() += w * dpsi * phi.transpose();
      B.block(m, n, m, n).noalias() += w * psi * phi.transpose();
    }
  }

  const auto blocks = column_blocks(form.formulation, ref);
  if (form.formulation == Formulation::primal) {
    B.col(blocks.flux_begin) = -ref.test_left();
    B.col(blocks.flux_begin + 1) = ref.test_right();
  } else {
    // -<uhat, w n> on the second equation, <ghat, v n> on the first
    B.col(blocks.trace_begin).tail(m) = ref.test_left();
    B.col(blocks.trace_begin + 1).tail(m) = -ref.test_right();
    B.col(blocks.flux_begin).head(m) = -ref.test_left();
    B.col(blocks.flux_begin + 1).head(m) = ref.test_right();
  }
  return B;
}

/// (u, v) against the enriched test basis; zero on the second-equation rows.
template <typename Scalar>
VectorX<Scalar> mass_load(const ElementGeometry<Scalar>& element, Formulation formulation,
                          const ReferenceElement<Scalar>& ref, const VectorX<Scalar>& u_nodal) {
  if (u_nodal.size() != ref.trial().size())
    throw std::invalid_argument("mass_load: nodal vector does not match the trial basis");
  const auto& quad = ref.quadrature();
  VectorX<Scalar> l = VectorX<Scalar>::Zero(ref.test_dimension(formulation));
  const auto m = ref.test().size();
  for (Eigen::Index q = 0; q < quad.size(); ++q) {
    const Scalar w = quad.weights[q] * element.jacobian();
    const Scalar uq = ref.trial_values().row(q).dot(u_nodal);
    l.head(m).noalias() += (w * uq) * ref.test_values().row(q).transpose();
  }
  return l;
}

/// (f, v) for a function f, integrated piecewise between the given break
/// points (kinks of f) so the quadrature stays exact-order on each piece.
template <typename Scalar, typename Function, typename Breaks>
VectorX<Scalar> function_mass_load(const ElementGeometry<Scalar>& element, Formulation formulation,
                                   const ReferenceElement<Scalar>& ref, const Function& f, const Breaks& breaks) {
  std::vector<Scalar> cuts{Scalar(-1)};
  for (Scalar x : breaks) {
    const Scalar xi = (x - element.map(Scalar(0))) / element.jacobian();
    if (xi > Scalar(-1) + Scalar(1e-12) && xi < Scalar(1) - Scalar(1e-12)) cuts.push_back(xi);
  }
  cuts.push_back(Scalar(1));
  std::sort(cuts.begin(), cuts.end());
  const auto& quad = ref.quadrature();
  const auto m = ref.test().size();
  VectorX<Scalar> l = VectorX<Scalar>::Zero(ref.test_dimension(formulation));
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const Scalar mid = Scalar(0.5) * (cuts[k] + cuts[k + 1]);
    const Scalar half = Scalar(0.5) * (cuts[k + 1] - cuts[k]);
    for (Eigen::Index q = 0; q < quad.size(); ++q) {
      const Scalar xi = mid + half * quad.points[q];
      const Scalar w = quad.weights[q] * half * element.jacobian();
      l.head(m).noalias() += (w * f(element.map(xi))) * ref.test().eval(xi).values;
    }
  }
  return l;
}

/// Weak action L(state; v) = (a g, v') + ((a' - b) g + c u, v) - <a s n, v>,
/// with g the gradient field and s the skeleton slopes.
template <typename Scalar>
VectorX<Scalar> operator_load(const ElementGeometry<Scalar>& element, Formulation formulation,
                              const OperatorCoefficients<Scalar>& c,
                              const ReferenceElement<Scalar>& ref, const ElementState<Scalar>& state) {
  const auto n = ref.trial().size();
  if (state.u.size() != n || state.gradient.size() != n)
    throw std::invalid_argument("operator_load: state does not match the trial basis");
  const auto& quad = ref.quadrature();
  const auto m = ref.test().size();
  const Scalar jac = element.jacobian();
  const Scalar dxi = 1 / jac;
  VectorX<Scalar> l = VectorX<Scalar>::Zero(ref.test_dimension(formulation));
  if (c.is_zero()) return l;
  for (Eigen::Index q = 0; q < quad.size(); ++q) {
    const Scalar w = quad.weights[q] * jac;
    const Scalar x = element.map(quad.points[q]);
    const Scalar uq = ref.trial_values().row(q).dot(state.u);
    const Scalar gq = ref.trial_values().row(q).dot(state.gradient);
    const Scalar a = c.diffusion(x);
    const Scalar beta = c.diffusion.derivative(x) - c.convection(x);
    l.head(m).noalias() += (w * a * gq * dxi) * ref.test_derivatives().row(q).transpose();
    l.head(m).noalias() += (w * (beta * gq + c.reaction(x) * uq)) * ref.test_values().row(q).transpose();
  }
  const Scalar flux_left = c.diffusion(element.left) * state.slope_left;
  const Scalar flux_right = c.diffusion(element.right) * state.slope_right;
  l.head(m) += flux_left * ref.test_left() - flux_right * ref.test_right();
  return l;
}

/// B and l of one theta-step: l = (u^n, v) - dt (1 - theta) L(u^n; v).
template <typename Scalar>
std::pair<MatrixX<Scalar>, VectorX<Scalar>> assemble_element_forms(
    const ElementGeometry<Scalar>& element, const FormSpec<Scalar>& form,
    const ReferenceElement<Scalar>& ref, const ElementState<Scalar>& previous) {
  auto B = assemble_element_matrix(element, form, ref);
  VectorX<Scalar> l = mass_load(element, form.formulation, ref, previous.u);
  const Scalar explicit_scale = form.dt * (1 - form.theta);
  if (explicit_scale != 0)
    l -= explicit_scale * operator_load(element, form.formulation, form.coefficients, ref, previous);
  return {std::move(B), std::move(l)};
}

/// Element-local DPG system with its condensed normal equations
/// A = B^T G^{-1} B, b = B^T G^{-1} l. G is only ever factored, never inverted.
template <typename Scalar = double>
struct ElementSystem {
  MatrixX<Scalar> G;
  MatrixX<Scalar> B;
  VectorX<Scalar> l;
  MatrixX<Scalar> A;
  VectorX<Scalar> b;
  Eigen::LLT<MatrixX<Scalar>> gram_factor;
  MatrixX<Scalar> optimal_test;  // G^{-1} B: optimal test functions in the enriched basis

  /// Condensed load for a new right-hand side.
  VectorX<Scalar> condense_load(const VectorX<Scalar>& load) const {
    return optimal_test.transpose() * load;
  }
  /// Squared test-norm of the Riesz representation of a residual.
  Scalar residual_norm_squared(const VectorX<Scalar>& residual) const {
    return residual.dot(gram_factor.solve(residual));
  }
};

struct CholeskyFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
ElementSystem<Scalar> condense_element(MatrixX<Scalar> G, MatrixX<Scalar> B, VectorX<Scalar> l) {
  if (G.rows() != G.cols() || G.rows() != B.rows() || l.size() != B.rows())
    throw std::invalid_argument("condense_element: dimension mismatch");
  ElementSystem<Scalar> sys;
  sys.gram_factor.compute(G);
  if (sys.gram_factor.info() != Eigen::Success)
    throw CholeskyFailure("condense_element: Gram matrix is not positive definite");
  sys.optimal_test = sys.gram_factor.solve(B);
  sys.A = B.transpose() * sys.optimal_test;
  sys.b = sys.optimal_test.transpose() * l;
  sys.G = std::move(G);
  sys.B = std::move(B);
  sys.l = std::move(l);
  return sys;
}

}  // namespace dpgopt
