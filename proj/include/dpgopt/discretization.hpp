#pragma once

#include <functional>
#include <vector>

#include "dpgopt/dpg_system.hpp"
#include "dpgopt/element.hpp"
#include "dpgopt/mesh.hpp"

namespace dpgopt {

/// Global DOF vector plus the physical slope u_x at every skeleton node.
/// The slopes feed the explicit part of a theta-step.
struct DiscreteState {
  VectorXd dofs;
  VectorXd slopes;
};

/// Mesh, formulation, bases and DOF numbering of one DPG space.
class Discretization {
 public:
  Discretization(Mesh mesh, Formulation formulation, int order, int enrichment = 2,
                 int extra_quadrature = 0);

  const Mesh& mesh() const { return mesh_; }
  Formulation formulation() const { return formulation_; }
  int order() const { return order_; }
  int test_order() const { return ref_.test_order(); }
  const ReferenceElement<double>& reference() const { return ref_; }
  const DofMap& dof_map() const { return map_; }
  Index n_elements() const { return mesh_.n_elements(); }

  ElementGeometry<double> geometry(Index e) const { return {mesh_.left(e), mesh_.right(e)}; }
  /// Physical coordinate of trial node j in element e.
  double node_coordinate(Index e, int j) const;

  ElementState<double> element_state(const DiscreteState& state, Index e) const;
  std::vector<ElementState<double>> element_states(const DiscreteState& state) const;

  /// Price at x (ultraweak: the trace on skeleton nodes, the field elsewhere).
  double value(const DiscreteState& state, double x) const;
  /// u_x at x (primal: derivative of the field; ultraweak: the gradient unknown).
  double gradient(const DiscreteState& state, double x) const;
  /// d/dx of the gradient field at x.
  double gradient_derivative(const DiscreteState& state, double x) const;

  /// Output nodes: the n*p+1 distinct trial node coordinates.
  VectorXd output_coordinates() const;
  VectorXd output_values(const DiscreteState& state) const;

  /// Unknowns carrying a price value (used for obstacles and masks) and their coordinates.
  const std::vector<Index>& price_dofs() const { return price_dofs_; }
  const VectorXd& price_coordinates() const { return price_coordinates_; }

  /// Nodal interpolant of f; gradient fields are the element-wise derivative.
  DiscreteState interpolate(const std::function<double(double)>& f) const;
  /// Replace the gradient unknowns by the derivative of the field (ultraweak only).
  void sync_gradient(DiscreteState& state) const;
  /// Average of the one-sided gradient values at each skeleton node.
  VectorXd average_slopes(const VectorXd& dofs) const;
  /// Slopes from the flux unknowns, s = -flux / (dt_theta * a); falls back to
  /// averaged one-sided values where a vanishes or dt_theta = 0.
  VectorXd recover_slopes(const VectorXd& dofs, const Quadratic<double>& diffusion, double dt_theta) const;

 private:
  std::pair<Index, double> locate(double x) const;
  VectorXd field_coefficients(const VectorXd& dofs, Index e) const;
  VectorXd gradient_coefficients(const VectorXd& dofs, Index e) const;

  Mesh mesh_;
  Formulation formulation_;
  int order_;
  ReferenceElement<double> ref_;
  DofMap map_;
  MatrixXd derivative_at_nodes_;  // (j, k) = phi_k'(xi_j), reference scale
  std::vector<Index> price_dofs_;
  VectorXd price_coordinates_;
};

}  // namespace dpgopt
