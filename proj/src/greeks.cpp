#include "dpgopt/greeks.hpp"

#include <algorithm>
#include <cmath>

namespace dpgopt {

namespace {

void require_log_price(const PricingResult& r) {
  if (r.transform.kind != TransformKind::log_price)
    throw std::invalid_argument("Greeks need a log-price solution");
}

/// u_x and u_xx at vertices from the slopes carried by the gradient trace.
struct VertexDerivatives {
  VectorXd ux;
  VectorXd uxx;
};

VertexDerivatives vertex_derivatives(const Discretization& disc, const DiscreteState& s) {
  const Index n = disc.mesh().n_nodes();
  const double h = disc.mesh().h();
  VertexDerivatives d{s.slopes, VectorXd(n)};
  for (Index i = 1; i + 1 < n; ++i) d.uxx[i] = (s.slopes[i + 1] - s.slopes[i - 1]) / (2 * h);
  d.uxx[0] = (s.slopes[1] - s.slopes[0]) / h;
  d.uxx[n - 1] = (s.slopes[n - 1] - s.slopes[n - 2]) / h;
  return d;
}

/// Linear interpolation of vertex data at x.
double at_point(const Discretization& disc, const VectorXd& v, double x) {
  const auto& mesh = disc.mesh();
  const Index e = mesh.locate(x);
  const double w = (x - mesh.left(e)) / mesh.h();
  return (1 - w) * v[e] + w * v[e + 1];
}

/// u_xx at x from slope difference quotients at cell midpoints.
double second_derivative_at(const Discretization& disc, const VectorXd& slopes, double x) {
  const auto& mesh = disc.mesh();
  const double h = mesh.h();
  const Index cells = mesh.n_elements();
  if (cells < 2) return (slopes[1] - slopes[0]) / h;
  const Index e = mesh.locate(x);
  const auto mid = [&](Index k) { return (slopes[k + 1] - slopes[k]) / h; };
  const double c = mesh.center(e);
  const Index k = x < c ? std::max<Index>(e - 1, 0) : std::min<Index>(e, cells - 2);
  const double w = (x - mesh.center(k)) / h;
  return (1 - w) * mid(k) + w * mid(k + 1);
}

}  // namespace

GreekField delta_from_ultraweak(const PricingResult& result) {
  require_log_price(result);
  if (result.grid.formulation != Formulation::ultraweak)
    throw std::invalid_argument("delta_from_ultraweak: result is not ultraweak");
  const auto& disc = *result.disc;
  const auto& s = result.solution.final_state();
  const VectorXd x = disc.output_coordinates();
  GreekField g;
  g.S = x.array().exp();
  g.delta.resize(x.size());
  for (Index i = 0; i < x.size(); ++i) g.delta[i] = at_point(disc, s.slopes, x[i]) / g.S[i];
  g.delta_at_S0 = at_point(disc, s.slopes, std::log(result.market.S0)) / result.market.S0;
  return g;
}

GreekField gamma_from_solution(const PricingResult& result, double jump_fraction) {
  require_log_price(result);
  const auto& disc = *result.disc;
  const auto& s = result.solution.final_state();
  const VectorXd x = disc.output_coordinates();
  const Index n = x.size();
  GreekField g;
  g.S = x.array().exp();
  g.delta.resize(n);
  g.gamma.resize(n);
  VectorXd ux(n), uxx(n);

  if (result.grid.formulation == Formulation::ultraweak) {
    const auto d = vertex_derivatives(disc, s);
    for (Index i = 0; i < n; ++i) {
      ux[i] = at_point(disc, d.ux, x[i]);
      uxx[i] = at_point(disc, d.uxx, x[i]);
    }
  } else {
    // Output nodes are uniform with spacing h / p.
    const VectorXd u = disc.output_values(s);
    const double dx = x[1] - x[0];
    for (Index i = 1; i + 1 < n; ++i) {
      ux[i] = (u[i + 1] - u[i - 1]) / (2 * dx);
      uxx[i] = (u[i + 1] - 2 * u[i] + u[i - 1]) / (dx * dx);
    }
    ux[0] = (u[1] - u[0]) / dx;
    ux[n - 1] = (u[n - 1] - u[n - 2]) / dx;
    uxx[0] = uxx[1];
    uxx[n - 1] = uxx[n - 2];
  }
  for (Index i = 0; i < n; ++i) {
    g.delta[i] = ux[i] / g.S[i];
    g.gamma[i] = (uxx[i] - ux[i]) / (g.S[i] * g.S[i]);
  }

  const double x0 = std::log(result.market.S0);
  const double S0 = result.market.S0;
  if (result.grid.formulation == Formulation::ultraweak) {
    const double uxs = at_point(disc, s.slopes, x0);
    g.delta_at_S0 = uxs / S0;
    g.gamma_at_S0 = (second_derivative_at(disc, s.slopes, x0) - uxs) / (S0 * S0);
  } else {
    // linear interpolation of the nodal Greeks
    const auto it = std::upper_bound(x.data(), x.data() + n, x0);
    const Index j = std::clamp<Index>(static_cast<Index>(it - x.data()) - 1, 0, n - 2);
    const double w = (x0 - x[j]) / (x[j + 1] - x[j]);
    const double uxs = (1 - w) * ux[j] + w * ux[j + 1];
    const double uxxs = (1 - w) * uxx[j] + w * uxx[j + 1];
    g.delta_at_S0 = uxs / S0;
    g.gamma_at_S0 = (uxxs - uxs) / (S0 * S0);
  }

  // S^2 Gamma = u_xx - u_x stays bounded over the whole log-price domain.
  const VectorXd dollar_gamma = uxx - ux;
  const double peak = dollar_gamma.cwiseAbs().maxCoeff();
  for (Index i = 0; i + 1 < n; ++i)
    if (std::abs(dollar_gamma[i + 1] - dollar_gamma[i]) > jump_fraction * peak) g.jumps.push_back(i);
  g.has_jump = !g.jumps.empty();
  return g;
}

SensitivityResult solve_sensitivity_pde(const PricingResult& base, Parameter alpha) {
  require_log_price(base);
  if (base.contract.style != Style::european)
    throw std::invalid_argument("solve_sensitivity_pde: European contracts only");
  const auto& disc = *base.disc;
  const auto& sol = base.solution;
  const auto coeffs = pde_coefficients(base.contract, base.market);
  const auto dcoeffs = pde_coefficient_derivatives(base.contract, base.market, alpha);
  const BoundaryValues bv0 = boundary_values(base.contract, base.market, base.transform, 0.0);
  ThetaStepper stepper(disc, coeffs, primal_norm_scale(base.contract, base.market), bv0.left.kind, bv0.right.kind);

  SensitivityResult out;
  out.parameter = alpha;
  DiscreteState state{VectorXd::Zero(disc.dof_map().n_dofs), VectorXd::Zero(disc.mesh().n_nodes())};
  out.solution.tau.push_back(sol.tau.front());
  out.solution.theta.push_back(0);
  out.solution.states.push_back(state);
  out.solution.eta.push_back(0);
  out.solution.lcp_iterations.push_back(0);
  out.solution.lcp_residual.push_back(0);
  for (Index k = 1; k <= sol.n_steps(); ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double tau = sol.tau[ku];
    const double dt = tau - sol.tau[ku - 1];
    const double theta = sol.theta[ku];
    auto loads = stepper.loads(state, dt, theta);
    stepper.add_operator_term(loads, dcoeffs, sol.states[ku], dt * theta);
    stepper.add_operator_term(loads, dcoeffs, sol.states[ku - 1], dt * (1 - theta));
    const auto bv = boundary_value_derivatives(base.contract, base.market, base.transform, tau, alpha);
    const StepSystem sys = stepper.assemble(std::move(loads), bv, dt, theta);
    state = stepper.finish(sys, sys.op->solve_reduced(sys.rhs));
    out.solution.tau.push_back(tau);
    out.solution.theta.push_back(theta);
    out.solution.states.push_back(state);
    out.solution.eta.push_back(0);
    out.solution.lcp_iterations.push_back(0);
    out.solution.lcp_residual.push_back(0);
  }
  out.value_at_S0 = disc.value(state, std::log(base.market.S0));
  out.grid_values = disc.output_values(state);
  return out;
}

}  // namespace dpgopt
