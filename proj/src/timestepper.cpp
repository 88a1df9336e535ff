#include "dpgopt/timestepper.hpp"

#include <algorithm>
#include <cmath>

namespace dpgopt {

std::vector<double> subdivided_grid(double T, const std::vector<double>& breaks, double dt_target) {
  if (!(T > 0 && dt_target > 0)) throw std::invalid_argument("subdivided_grid: T and dt must be positive");
  std::vector<double> points{0.0};
  for (double b : breaks)
    if (b > 1e-12 * T && b < T * (1 - 1e-12)) points.push_back(b);
  points.push_back(T);
  std::sort(points.begin(), points.end());
  std::vector<double> grid{0.0};
  for (std::size_t k = 1; k < points.size(); ++k) {
    const double a = points[k - 1];
    const double b = points[k];
    if (b - a <= 1e-12 * T) continue;
    const auto n = std::max<long>(1, static_cast<long>(std::ceil((b - a) / dt_target - 1e-9)));
    for (long i = 1; i < n; ++i) grid.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(n));
    grid.push_back(b);
  }
  return grid;
}

ThetaStepper::ThetaStepper(const Discretization& disc, OperatorCoefficients<double> coefficients,
                           double primal_norm_scale, EndKind left_kind, EndKind right_kind)
    : disc_(disc),
      coeffs_(coefficients),
      norm_scale_(primal_norm_scale),
      left_kind_(left_kind),
      right_kind_(right_kind) {
  if (!(primal_norm_scale > 0)) throw std::invalid_argument("ThetaStepper: norm scale must be positive");
}

std::vector<Constraint> ThetaStepper::constraint_structure() const {
  const auto& map = disc_.dof_map();
  const Index last = disc_.mesh().n_nodes() - 1;
  auto make = [&](EndKind kind, Index node, Index inward) {
    Constraint c;
    c.dof = map.vertex_value_dof(node);
    if (kind == EndKind::zero_curvature) {
      if (disc_.n_elements() < 2) throw std::invalid_argument("zero-curvature end needs at least two elements");
      c.masters = {{map.vertex_value_dof(node + inward), 2.0}, {map.vertex_value_dof(node + 2 * inward), -1.0}};
    }
    return c;
  };
  return {make(left_kind_, 0, 1), make(right_kind_, last, -1)};
}

VectorXd ThetaStepper::constraint_values(const BoundaryValues& bv) const {
  if (bv.left.kind != left_kind_ || bv.right.kind != right_kind_)
    throw std::invalid_argument("ThetaStepper: boundary kinds differ from the stepper setup");
  VectorXd v(2);
  v << (bv.left.kind == EndKind::dirichlet ? bv.left.value : 0.0),
      (bv.right.kind == EndKind::dirichlet ? bv.right.value : 0.0);
  return v;
}

const CondensedOperator& ThetaStepper::regime(double dt, double theta) {
  // Sub-grid step sizes differ from each other by rounding only.
  for (const auto& [k, op] : regimes_)
    if (k.second == theta && std::abs(k.first - dt) <= 1e-9 * dt) return *op;
  const auto key = std::make_pair(dt, theta);

  FormSpec<double> form{disc_.formulation(), coeffs_, dt, theta};
  form.validate();
  const NormSpec<double> norm = disc_.formulation() == Formulation::primal
                                    ? primal_energy_norm(dt, norm_scale_)
                                    : ultraweak_graph_norm(form, 1.0);
  const auto& ref = disc_.reference();
  std::vector<ElementSystem<double>> elements(static_cast<std::size_t>(disc_.n_elements()));
  for (Index e = 0; e < disc_.n_elements(); ++e) {
    const auto geom = disc_.geometry(e);
    MatrixXd G = assemble_gram(geom, norm, ref);
    MatrixXd B = assemble_element_matrix(geom, form, ref);
    VectorXd l = VectorXd::Zero(B.rows());
    elements[static_cast<std::size_t>(e)] = condense_element<double>(std::move(G), std::move(B), std::move(l));
  }
  auto op = std::make_unique<CondensedOperator>(std::move(elements), disc_.dof_map(), constraint_structure());
  return *regimes_.emplace(key, std::move(op)).first->second;
}

std::vector<VectorXd> ThetaStepper::loads(const DiscreteState& previous, double dt, double theta) const {
  const auto& ref = disc_.reference();
  std::vector<VectorXd> out;
  out.reserve(static_cast<std::size_t>(disc_.n_elements()));
  const double explicit_scale = dt * (1 - theta);
  for (Index e = 0; e < disc_.n_elements(); ++e) {
    const auto geom = disc_.geometry(e);
    const auto state = disc_.element_state(previous, e);
    VectorXd l = mass_load(geom, disc_.formulation(), ref, state.u);
    if (explicit_scale != 0) l -= explicit_scale * operator_load(geom, disc_.formulation(), coeffs_, ref, state);
    out.push_back(std::move(l));
  }
  return out;
}

std::vector<VectorXd> ThetaStepper::loads(const std::function<double(double)>& f, const std::vector<double>& breaks,
                                          const DiscreteState& previous, double dt, double theta) const {
  const auto& ref = disc_.reference();
  std::vector<VectorXd> out;
  out.reserve(static_cast<std::size_t>(disc_.n_elements()));
  const double explicit_scale = dt * (1 - theta);
  for (Index e = 0; e < disc_.n_elements(); ++e) {
    const auto geom = disc_.geometry(e);
    VectorXd l = function_mass_load(geom, disc_.formulation(), ref, f, breaks);
    if (explicit_scale != 0)
      l -= explicit_scale * operator_load(geom, disc_.formulation(), coeffs_, ref, disc_.element_state(previous, e));
    out.push_back(std::move(l));
  }
  return out;
}

void ThetaStepper::add_operator_term(std::vector<VectorXd>& loads, const OperatorCoefficients<double>& c,
                                     const DiscreteState& state, double scale) const {
  if (scale == 0 || c.is_zero()) return;
  const auto& ref = disc_.reference();
  for (Index e = 0; e < disc_.n_elements(); ++e)
    loads[static_cast<std::size_t>(e)] -=
        scale * operator_load(disc_.geometry(e), disc_.formulation(), c, ref, disc_.element_state(state, e));
}

StepSystem ThetaStepper::prepare(const DiscreteState& previous, const BoundaryValues& bv_next, double dt,
                                 double theta) {
  return assemble(loads(previous, dt, theta), bv_next, dt, theta);
}

StepSystem ThetaStepper::assemble(std::vector<VectorXd> element_loads, const BoundaryValues& bv_next, double dt,
                                  double theta) {
  StepSystem sys;
  sys.op = &regime(dt, theta);
  sys.dt = dt;
  sys.theta = theta;
  sys.loads = std::move(element_loads);
  sys.constraint_values = constraint_values(bv_next);
  sys.rhs = sys.op->reduced_rhs(sys.loads, sys.constraint_values);
  return sys;
}

DiscreteState ThetaStepper::finish(const StepSystem& sys, const VectorXd& reduced) const {
  DiscreteState next;
  next.dofs = sys.op->constraints().expand(reduced, sys.constraint_values);
  if (!next.dofs.allFinite()) throw NumericalFailure("time step produced non-finite values");
  next.slopes = disc_.recover_slopes(next.dofs, coeffs_.diffusion, sys.dt * sys.theta);
  return next;
}

DiscreteState ThetaStepper::step(const DiscreteState& previous, const BoundaryValues& bv_next, double dt,
                                 double theta) {
  const StepSystem sys = prepare(previous, bv_next, dt, theta);
  return finish(sys, sys.op->solve_reduced(sys.rhs));
}

double ThetaStepper::indicator(const StepSystem& sys, const DiscreteState& next) const {
  return sys.op->indicator(sys.loads, next.dofs).eta;
}

DiscreteState advance_theta(ThetaStepper& stepper, const DiscreteState& state, double theta, double dt,
                            const BoundaryValues& bv_next) {
  return stepper.step(state, bv_next, dt, theta);
}

}  // namespace dpgopt
