#include "dpgopt/discretization.hpp"

#include <cmath>

namespace dpgopt {

Discretization::Discretization(Mesh mesh, Formulation formulation, int order, int enrichment,
                               int extra_quadrature)
    : mesh_(std::move(mesh)),
      formulation_(formulation),
      order_(order),
      ref_(order, order + enrichment, order + enrichment + 2 + extra_quadrature),
      map_(make_dof_map(mesh_, formulation, order)) {
  if (enrichment < 0) throw std::invalid_argument("Discretization: negative enrichment");
  const auto n = ref_.trial().size();
  derivative_at_nodes_.resize(n, n);
  for (Index j = 0; j < n; ++j)
    derivative_at_nodes_.row(j) = ref_.trial().eval(ref_.trial().nodes()[j]).derivatives.transpose();

  std::vector<double> coords;
  if (formulation_ == Formulation::primal) {
    for (Index e = 0; e < n_elements(); ++e)
      for (int j = 0; j < order_; ++j) {
        price_dofs_.push_back(map_.field_dof(e, j));
        coords.push_back(node_coordinate(e, j));
      }
    price_dofs_.push_back(map_.field_dof(n_elements() - 1, order_));
    coords.push_back(mesh_.x_max());
  } else {
    for (Index e = 0; e < n_elements(); ++e)
      for (int j = 0; j <= order_; ++j) {
        price_dofs_.push_back(map_.field_dof(e, j));
        coords.push_back(node_coordinate(e, j));
      }
    for (Index i = 0; i < mesh_.n_nodes(); ++i) {
      price_dofs_.push_back(map_.vertex_value_dof(i));
      coords.push_back(mesh_.nodes()[i]);
    }
  }
  price_coordinates_ = Eigen::Map<VectorXd>(coords.data(), static_cast<Index>(coords.size()));
}

double Discretization::node_coordinate(Index e, int j) const {
  if (j == 0) return mesh_.left(e);
  if (j == order_) return mesh_.right(e);
  return mesh_.to_physical(e, ref_.trial().nodes()[j]);
}

VectorXd Discretization::field_coefficients(const VectorXd& dofs, Index e) const {
  VectorXd c(order_ + 1);
  for (int j = 0; j <= order_; ++j) c[j] = dofs[map_.field_dof(e, j)];
  return c;
}

VectorXd Discretization::gradient_coefficients(const VectorXd& dofs, Index e) const {
  if (formulation_ == Formulation::ultraweak) {
    VectorXd c(order_ + 1);
    for (int j = 0; j <= order_; ++j) c[j] = dofs[map_.gradient_dof(e, j)];
    return c;
  }
  return derivative_at_nodes_ * field_coefficients(dofs, e) / geometry(e).jacobian();
}

ElementState<double> Discretization::element_state(const DiscreteState& state, Index e) const {
  ElementState<double> s;
  s.u = field_coefficients(state.dofs, e);
  s.gradient = gradient_coefficients(state.dofs, e);
  s.slope_left = state.slopes[e];
  s.slope_right = state.slopes[e + 1];
  return s;
}

std::vector<ElementState<double>> Discretization::element_states(const DiscreteState& state) const {
  std::vector<ElementState<double>> out;
  out.reserve(static_cast<std::size_t>(n_elements()));
  for (Index e = 0; e < n_elements(); ++e) out.push_back(element_state(state, e));
  return out;
}

std::pair<Index, double> Discretization::locate(double x) const {
  const Index e = mesh_.locate(x);
  return {e, mesh_.to_reference(e, x)};
}

double Discretization::value(const DiscreteState& state, double x) const {
  if (formulation_ == Formulation::ultraweak) {
    const double i = (x - mesh_.x_min()) / mesh_.h();
    const double nearest = std::round(i);
    if (std::abs(i - nearest) < 1e-12 && mesh_.contains(x))
      return state.dofs[map_.vertex_value_dof(static_cast<Index>(nearest))];
  }
  const auto [e, xi] = locate(x);
  return ref_.trial().eval(xi).values.dot(field_coefficients(state.dofs, e));
}

double Discretization::gradient(const DiscreteState& state, double x) const {
  const auto [e, xi] = locate(x);
  const auto b = ref_.trial().eval(xi);
  if (formulation_ == Formulation::ultraweak) return b.values.dot(gradient_coefficients(state.dofs, e));
  return b.derivatives.dot(field_coefficients(state.dofs, e)) / geometry(e).jacobian();
}

double Discretization::gradient_derivative(const DiscreteState& state, double x) const {
  const auto [e, xi] = locate(x);
  return ref_.trial().eval(xi).derivatives.dot(gradient_coefficients(state.dofs, e)) / geometry(e).jacobian();
}

VectorXd Discretization::output_coordinates() const {
  VectorXd x(n_elements() * order_ + 1);
  for (Index e = 0; e < n_elements(); ++e)
    for (int j = 0; j < order_; ++j) x[e * order_ + j] = node_coordinate(e, j);
  x[x.size() - 1] = mesh_.x_max();
  return x;
}

VectorXd Discretization::output_values(const DiscreteState& state) const {
  VectorXd v(n_elements() * order_ + 1);
  for (Index e = 0; e < n_elements(); ++e) {
    v[e * order_] = state.dofs[map_.vertex_value_dof(e)];
    for (int j = 1; j < order_; ++j) v[e * order_ + j] = state.dofs[map_.field_dof(e, j)];
  }
  v[v.size() - 1] = state.dofs[map_.vertex_value_dof(mesh_.n_nodes() - 1)];
  return v;
}

DiscreteState Discretization::interpolate(const std::function<double(double)>& f) const {
  DiscreteState s;
  s.dofs = VectorXd::Zero(map_.n_dofs);
  for (std::size_t k = 0; k < price_dofs_.size(); ++k)
    s.dofs[price_dofs_[k]] = f(price_coordinates_[static_cast<Index>(k)]);
  sync_gradient(s);
  s.slopes = average_slopes(s.dofs);
  return s;
}

void Discretization::sync_gradient(DiscreteState& state) const {
  if (formulation_ != Formulation::ultraweak) return;
  for (Index e = 0; e < n_elements(); ++e) {
    const VectorXd g = derivative_at_nodes_ * field_coefficients(state.dofs, e) / geometry(e).jacobian();
    for (int j = 0; j <= order_; ++j) state.dofs[map_.gradient_dof(e, j)] = g[j];
  }
}

VectorXd Discretization::average_slopes(const VectorXd& dofs) const {
  const Index n = n_elements();
  VectorXd s = VectorXd::Zero(n + 1);
  VectorXd count = VectorXd::Zero(n + 1);
  for (Index e = 0; e < n; ++e) {
    const VectorXd g = gradient_coefficients(dofs, e);
    s[e] += g[0];
    s[e + 1] += g[order_];
    count[e] += 1;
    count[e + 1] += 1;
  }
  return s.cwiseQuotient(count);
}

VectorXd Discretization::recover_slopes(const VectorXd& dofs, const Quadratic<double>& diffusion,
                                        double dt_theta) const {
  VectorXd s = average_slopes(dofs);
  if (dt_theta <= 0) return s;
  for (Index i = 0; i < mesh_.n_nodes(); ++i) {
    const double a = diffusion(mesh_.nodes()[i]);
    if (a > 1e-12) s[i] = -dofs[map_.flux_dof(i)] / (dt_theta * a);
  }
  return s;
}

}  // namespace dpgopt
