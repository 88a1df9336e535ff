#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <stdexcept>
#include <utility>
#include <vector>

#include "dpgopt/element.hpp"
#include "dpgopt/mesh.hpp"

namespace dpgopt {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using SparseMatrixd = Eigen::SparseMatrix<double>;

struct SingularSystem : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Global numbering of the trial unknowns.
///
/// Primal: continuous Lagrange field nodes, then one flux per skeleton node.
/// Ultraweak: discontinuous field u and gradient per element, then the
/// traces uhat and the fluxes ghat, one per skeleton node each.
struct DofMap {
  Formulation formulation = Formulation::primal;
  int order = 1;
  Index n_elements = 0;
  Index n_dofs = 0;
  Index field_offset = 0;
  Index gradient_offset = 0;  // ultraweak only
  Index trace_offset = 0;     // ultraweak only
  Index flux_offset = 0;
  std::vector<std::vector<Index>> element_dofs;  // local column -> global dof

  Index field_dof(Index element, Index local) const;
  Index gradient_dof(Index element, Index local) const;
  /// Unknown carrying the price at a skeleton node (primal field node or ultraweak trace).
  Index vertex_value_dof(Index node) const;
  Index flux_dof(Index node) const;
};

DofMap make_dof_map(const Mesh& mesh, Formulation formulation, int order);

/// dof = sum_j weight_j * dof_j + value. Masters must be unconstrained.
struct Constraint {
  Index dof = 0;
  std::vector<std::pair<Index, double>> masters;
  double value = 0;
};

/// Elimination of constrained unknowns: u = T u_free + g.
class ConstraintMap {
 public:
  ConstraintMap() = default;
  ConstraintMap(Index n_dofs, const std::vector<Constraint>& constraints);

  Index n_dofs() const { return n_dofs_; }
  Index n_free() const { return static_cast<Index>(free_dofs_.size()); }
  const SparseMatrixd& transform() const { return transform_; }
  const std::vector<Index>& free_dofs() const { return free_dofs_; }
  /// Reduced index of a full dof, or -1 if it is constrained.
  Index reduced_index(Index dof) const { return reduced_index_[dof]; }

  /// Offset g for the given constraint values (one per constraint, in order).
  VectorXd offset(const VectorXd& values) const;
  VectorXd expand(const VectorXd& reduced, const VectorXd& values) const;
  VectorXd default_values() const;
  std::size_t n_constraints() const { return constraints_.size(); }

 private:
  Index n_dofs_ = 0;
  std::vector<Constraint> constraints_;
  std::vector<Index> free_dofs_;
  std::vector<Index> reduced_index_;
  SparseMatrixd transform_;
};

/// Scatter-add of element normal equations.
SparseMatrixd assemble_global_matrix(const std::vector<ElementSystem<double>>& elements, const DofMap& map);
VectorXd assemble_global_rhs(const std::vector<VectorXd>& element_rhs, const DofMap& map);

/// Condenses element systems, eliminates constraints and solves the SPD system.
VectorXd solve_dpg_system(const std::vector<ElementSystem<double>>& elements, const DofMap& map,
                          const std::vector<Constraint>& constraints);

struct ErrorIndicator {
  VectorXd element_eta;  // eta_e
  double eta = 0;        // sqrt(sum eta_e^2)
};

/// eta_e^2 = r_e^T G_e^{-1} r_e with r_e = l_e - B_e u_e.
ErrorIndicator error_indicator(const std::vector<ElementSystem<double>>& elements, const DofMap& map,
                               const VectorXd& solution);

struct MixedSolution {
  VectorXd u;
  std::vector<VectorXd> epsilon;  // Riesz representation of the residual, per element
  double epsilon_norm = 0;        // |epsilon|_V
};

/// Monolithic saddle-point solve of (eps, v)_V + b(u, v) = l(v), b(du, eps) = 0.
/// Dense; intended as a reference for small meshes.
MixedSolution solve_mixed_reference(const std::vector<ElementSystem<double>>& elements, const DofMap& map,
                                    const std::vector<Constraint>& constraints);

/// Extract the local coefficient vector of element e.
VectorXd gather(const VectorXd& global, const DofMap& map, Index e);

/// Factored reduced system for a fixed set of element matrices, reused for
/// every right-hand side of a time march.
class CondensedOperator {
 public:
  CondensedOperator(std::vector<ElementSystem<double>> elements, const DofMap& map,
                    const std::vector<Constraint>& constraint_structure);

  const std::vector<ElementSystem<double>>& elements() const { return elements_; }
  const ConstraintMap& constraints() const { return constraints_; }
  const SparseMatrixd& global_matrix() const { return global_; }
  const SparseMatrixd& reduced_matrix() const { return reduced_; }

  /// Condensed reduced right-hand side for element loads l_e.
  VectorXd reduced_rhs(const std::vector<VectorXd>& loads, const VectorXd& constraint_values) const;
  VectorXd solve_reduced(const VectorXd& rhs) const;
  VectorXd solve(const std::vector<VectorXd>& loads, const VectorXd& constraint_values) const;
  ErrorIndicator indicator(const std::vector<VectorXd>& loads, const VectorXd& solution) const;

 private:
  std::vector<ElementSystem<double>> elements_;
  DofMap map_;
  ConstraintMap constraints_;
  SparseMatrixd global_;
  SparseMatrixd reduced_;
  Eigen::SimplicialLDLT<SparseMatrixd> factor_;
};

}  // namespace dpgopt
