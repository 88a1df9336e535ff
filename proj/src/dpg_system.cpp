#include "dpgopt/dpg_system.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

namespace dpgopt {

Index DofMap::field_dof(Index element, Index local) const {
  if (formulation == Formulation::primal) return field_offset + element * order + local;
  return field_offset + element * (order + 1) + local;
}

Index DofMap::gradient_dof(Index element, Index local) const {
  if (formulation == Formulation::primal) throw std::logic_error("DofMap: primal has no gradient unknown");
  return gradient_offset + element * (order + 1) + local;
}

Index DofMap::vertex_value_dof(Index node) const {
  if (formulation == Formulation::primal) return field_offset + node * order;
  return trace_offset + node;
}

Index DofMap::flux_dof(Index node) const { return flux_offset + node; }

DofMap make_dof_map(const Mesh& mesh, Formulation formulation, int order) {
  if (order < 1) throw std::invalid_argument("make_dof_map: trial order must be at least 1");
  DofMap map;
  map.formulation = formulation;
  map.order = order;
  map.n_elements = mesh.n_elements();
  const Index n = map.n_elements;
  const Index nodes = n + 1;
  if (formulation == Formulation::primal) {
    map.flux_offset = n * order + 1;
    map.n_dofs = map.flux_offset + nodes;
  } else {
    map.gradient_offset = n * (order + 1);
    map.trace_offset = 2 * n * (order + 1);
    map.flux_offset = map.trace_offset + nodes;
    map.n_dofs = map.flux_offset + nodes;
  }
  map.element_dofs.resize(n);
  for (Index e = 0; e < n; ++e) {
    auto& dofs = map.element_dofs[e];
    for (int j = 0; j <= order; ++j) dofs.push_back(map.field_dof(e, j));
    if (formulation == Formulation::ultraweak) {
      for (int j = 0; j <= order; ++j) dofs.push_back(map.gradient_dof(e, j));
      dofs.push_back(map.trace_offset + e);
      dofs.push_back(map.trace_offset + e + 1);
    }
    dofs.push_back(map.flux_dof(e));
    dofs.push_back(map.flux_dof(e + 1));
  }
  return map;
}

ConstraintMap::ConstraintMap(Index n_dofs, const std::vector<Constraint>& constraints)
    : n_dofs_(n_dofs), constraints_(constraints), reduced_index_(n_dofs, 0) {
  for (const auto& c : constraints_) {
    if (c.dof < 0 || c.dof >= n_dofs) throw std::out_of_range("ConstraintMap: constrained dof out of range");
    if (reduced_index_[c.dof] == -1) throw std::invalid_argument("ConstraintMap: dof constrained twice");
    reduced_index_[c.dof] = -1;
  }
  for (Index i = 0; i < n_dofs; ++i) {
    if (reduced_index_[i] == -1) continue;
    reduced_index_[i] = static_cast<Index>(free_dofs_.size());
    free_dofs_.push_back(i);
  }
  std::vector<Eigen::Triplet<double>> triplets;
  for (Index i : free_dofs_) triplets.emplace_back(i, reduced_index_[i], 1.0);
  for (const auto& c : constraints_) {
    for (const auto& [master, weight] : c.masters) {
      if (master < 0 || master >= n_dofs) throw std::out_of_range("ConstraintMap: master dof out of range");
      if (reduced_index_[master] < 0)
        throw std::invalid_argument("ConstraintMap: master dof " + std::to_string(master) + " is constrained");
      triplets.emplace_back(c.dof, reduced_index_[master], weight);
    }
  }
  transform_.resize(n_dofs, n_free());
  transform_.setFromTriplets(triplets.begin(), triplets.end());
}

VectorXd ConstraintMap::default_values() const {
  VectorXd v(static_cast<Index>(constraints_.size()));
  for (std::size_t k = 0; k < constraints_.size(); ++k) v[static_cast<Index>(k)] = constraints_[k].value;
  return v;
}

VectorXd ConstraintMap::offset(const VectorXd& values) const {
  if (values.size() != static_cast<Index>(constraints_.size()))
    throw std::invalid_argument("ConstraintMap::offset: one value per constraint expected");
  VectorXd g = VectorXd::Zero(n_dofs_);
  for (std::size_t k = 0; k < constraints_.size(); ++k) g[constraints_[k].dof] = values[static_cast<Index>(k)];
  return g;
}

VectorXd ConstraintMap::expand(const VectorXd& reduced, const VectorXd& values) const {
  if (reduced.size() != n_free()) throw std::invalid_argument("ConstraintMap::expand: size mismatch");
  return transform_ * reduced + offset(values);
}

SparseMatrixd assemble_global_matrix(const std::vector<ElementSystem<double>>& elements, const DofMap& map) {
  if (static_cast<Index>(elements.size()) != map.n_elements)
    throw std::invalid_argument("assemble_global_matrix: element count mismatch");
  std::vector<Eigen::Triplet<double>> triplets;
  for (Index e = 0; e < map.n_elements; ++e) {
    const auto& dofs = map.element_dofs[e];
    const auto& A = elements[e].A;
    for (Index j = 0; j < A.cols(); ++j)
      for (Index i = 0; i < A.rows(); ++i) triplets.emplace_back(dofs[i], dofs[j], A(i, j));
  }
  SparseMatrixd K(map.n_dofs, map.n_dofs);
  K.setFromTriplets(triplets.begin(), triplets.end());
  return K;
}

VectorXd assemble_global_rhs(const std::vector<VectorXd>& element_rhs, const DofMap& map) {
  VectorXd f = VectorXd::Zero(map.n_dofs);
  for (Index e = 0; e < map.n_elements; ++e) {
    const auto& dofs = map.element_dofs[e];
    for (std::size_t i = 0; i < dofs.size(); ++i) f[dofs[i]] += element_rhs[e][static_cast<Index>(i)];
  }
  return f;
}

VectorXd gather(const VectorXd& global, const DofMap& map, Index e) {
  const auto& dofs = map.element_dofs[e];
  VectorXd local(static_cast<Index>(dofs.size()));
  for (std::size_t i = 0; i < dofs.size(); ++i) local[static_cast<Index>(i)] = global[dofs[i]];
  return local;
}

namespace {

void factor_spd(Eigen::SimplicialLDLT<SparseMatrixd>& ldlt, const SparseMatrixd& K) {
  ldlt.compute(K);
  if (ldlt.info() != Eigen::Success) throw SingularSystem("global DPG system: factorization failed");
  const auto& d = ldlt.vectorD();
  const double scale = d.cwiseAbs().maxCoeff();
  if (!(d.minCoeff() > 1e-14 * scale)) throw SingularSystem("global DPG system is not positive definite");
}

std::vector<VectorXd> element_loads(const std::vector<ElementSystem<double>>& elements) {
  std::vector<VectorXd> loads;
  loads.reserve(elements.size());
  for (const auto& el : elements) loads.push_back(el.l);
  return loads;
}

ErrorIndicator residual_indicator(const std::vector<ElementSystem<double>>& elements, const DofMap& map,
                                  const std::vector<VectorXd>& loads, const VectorXd& solution) {
  ErrorIndicator out;
  out.element_eta.resize(map.n_elements);
  double total = 0;
  for (Index e = 0; e < map.n_elements; ++e) {
    const VectorXd r = loads[e] - elements[e].B * gather(solution, map, e);
    const double eta2 = std::max(0.0, elements[e].residual_norm_squared(r));
    out.element_eta[e] = std::sqrt(eta2);
    total += eta2;
  }
  out.eta = std::sqrt(total);
  return out;
}

}  // namespace

VectorXd solve_dpg_system(const std::vector<ElementSystem<double>>& elements, const DofMap& map,
                          const std::vector<Constraint>& constraints) {
  CondensedOperator op(elements, map, constraints);
  return op.solve(element_loads(elements), op.constraints().default_values());
}

ErrorIndicator error_indicator(const std::vector<ElementSystem<double>>& elements, const DofMap& map,
                               const VectorXd& solution) {
  return residual_indicator(elements, map, element_loads(elements), solution);
}

MixedSolution solve_mixed_reference(const std::vector<ElementSystem<double>>& elements, const DofMap& map,
                                    const std::vector<Constraint>& constraints) {
  const ConstraintMap cmap(map.n_dofs, constraints);
  const VectorXd g = cmap.offset(cmap.default_values());
  const MatrixXd T = MatrixXd(cmap.transform());

  std::vector<Index> test_offset(elements.size() + 1, 0);
  for (std::size_t e = 0; e < elements.size(); ++e) test_offset[e + 1] = test_offset[e] + elements[e].G.rows();
  const Index n_test = test_offset.back();
  const Index n_free = cmap.n_free();

  MatrixXd K = MatrixXd::Zero(n_test + n_free, n_test + n_free);
  VectorXd rhs = VectorXd::Zero(n_test + n_free);
  for (Index e = 0; e < map.n_elements; ++e) {
    const auto& el = elements[e];
    const Index o = test_offset[e];
    const Index m = el.G.rows();
    K.block(o, o, m, m) = el.G;
    MatrixXd BT = MatrixXd::Zero(m, n_free);
    const auto& dofs = map.element_dofs[e];
    for (std::size_t j = 0; j < dofs.size(); ++j) BT += el.B.col(static_cast<Index>(j)) * T.row(dofs[j]);
    K.block(o, n_test, m, n_free) = BT;
    K.block(n_test, o, n_free, m) = BT.transpose();
    rhs.segment(o, m) = el.l - el.B * gather(g, map, e);
  }
  const VectorXd sol = K.fullPivLu().solve(rhs);

  MixedSolution out;
  out.u = cmap.expand(sol.tail(n_free), cmap.default_values());
  double norm2 = 0;
  for (Index e = 0; e < map.n_elements; ++e) {
    const Index m = elements[e].G.rows();
    VectorXd eps = sol.segment(test_offset[e], m);
    norm2 += eps.dot(elements[e].G * eps);
    out.epsilon.push_back(std::move(eps));
  }
  out.epsilon_norm = std::sqrt(std::max(0.0, norm2));
  return out;
}

CondensedOperator::CondensedOperator(std::vector<ElementSystem<double>> elements, const DofMap& map,
                                     const std::vector<Constraint>& constraint_structure)
    : elements_(std::move(elements)), map_(map), constraints_(map.n_dofs, constraint_structure) {
  global_ = assemble_global_matrix(elements_, map_);
  const auto& T = constraints_.transform();
  reduced_ = SparseMatrixd(T.transpose() * global_ * T);
  factor_spd(factor_, reduced_);
}

VectorXd CondensedOperator::reduced_rhs(const std::vector<VectorXd>& loads, const VectorXd& constraint_values) const {
  if (static_cast<Index>(loads.size()) != map_.n_elements)
    throw std::invalid_argument("CondensedOperator: one load per element expected");
  std::vector<VectorXd> condensed;
  condensed.reserve(loads.size());
  for (std::size_t e = 0; e < loads.size(); ++e) condensed.push_back(elements_[e].condense_load(loads[e]));
  const VectorXd f = assemble_global_rhs(condensed, map_);
  const VectorXd g = constraints_.offset(constraint_values);
  return constraints_.transform().transpose() * (f - global_ * g);
}

VectorXd CondensedOperator::solve_reduced(const VectorXd& rhs) const { return factor_.solve(rhs); }

VectorXd CondensedOperator::solve(const std::vector<VectorXd>& loads, const VectorXd& constraint_values) const {
  return constraints_.expand(solve_reduced(reduced_rhs(loads, constraint_values)), constraint_values);
}

ErrorIndicator CondensedOperator::indicator(const std::vector<VectorXd>& loads, const VectorXd& solution) const {
  return residual_indicator(elements_, map_, loads, solution);
}

}  // namespace dpgopt
