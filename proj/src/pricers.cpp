#include "dpgopt/pricers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>

namespace dpgopt {

void GridParams::validate() const {
  if (order < 1) throw std::invalid_argument("grid: order must be at least 1");
  if (enrichment < 1) throw std::invalid_argument("grid: enrichment must be at least 1");
  if (n_elements < 2) throw std::invalid_argument("grid: need at least two elements");
  if (n_steps < 1) throw std::invalid_argument("grid: need at least one time step");
  if (!(theta >= 0 && theta <= 1)) throw std::invalid_argument("grid: theta outside [0, 1]");
  if (startup_steps < 0) throw std::invalid_argument("grid: negative startup steps");
}

AmericanMode american_mode_from_string(std::string_view s) {
  if (s == "lcp") return AmericanMode::lcp;
  if (s == "free_boundary_projection") return AmericanMode::free_boundary_projection;
  throw std::invalid_argument("unknown American mode '" + std::string(s) + "'");
}

std::string_view to_string(AmericanMode m) {
  return m == AmericanMode::lcp ? "lcp" : "free_boundary_projection";
}

double PricingResult::value_at(double S, Index step) const {
  const auto& st = step < 0 ? solution.final_state() : solution.states[static_cast<std::size_t>(step)];
  if (transform.kind == TransformKind::asian_reduced) {
    const double x = asian_evaluation_point(transform, contract.K, S);
    return S * disc->value(st, x);
  }
  const double x = to_state(transform, S);
  if (!disc->mesh().contains(x)) throw std::out_of_range("value_at: S outside the truncated domain");
  return disc->value(st, x);
}

VectorXd PricingResult::grid_values(Index step) const {
  return disc->output_values(step < 0 ? solution.final_state() : solution.states[static_cast<std::size_t>(step)]);
}

namespace {

using Clock = std::chrono::steady_clock;

enum class Obstacle { none, lcp, projection };

struct MarchControl {
  Obstacle obstacle = Obstacle::none;
  LcpOptions lcp;
  std::vector<double> mask_taus;  // knock-out applied after reaching these tau
};

bool contains_tau(const std::vector<double>& taus, double tau) {
  return std::any_of(taus.begin(), taus.end(), [&](double t) { return std::abs(t - tau) <= 1e-10; });
}

void apply_mask(const Discretization& disc, const Contract& contract, DiscreteState& s) {
  const auto& dofs = disc.price_dofs();
  const auto& x = disc.price_coordinates();
  for (std::size_t k = 0; k < dofs.size(); ++k)
    s.dofs[dofs[k]] = barrier_mask(contract, x[static_cast<Index>(k)], s.dofs[dofs[k]]);
  disc.sync_gradient(s);
  s.slopes = disc.average_slopes(s.dofs);
}

/// Nodal contact multipliers lambda_j >= 0 entering the step as loads
/// lambda_j (phi_j, v) with hat functions phi_j; the price dofs respond
/// linearly, u_J = u0_J + W lambda.
struct MultiplierSystem {
  std::vector<Index> rows;    // reduced index of each multiplier node's value dof
  VectorXd obstacle;          // payoff at those nodes
  SparseMatrixd loads;        // reduced right-hand side per unit multiplier
  SparseMatrixd response;     // W
};

MultiplierSystem build_multipliers(const Discretization& disc, const CondensedOperator& op, const Contract& contract) {
  const auto& map = disc.dof_map();
  const auto& mesh = disc.mesh();
  const auto& cons = op.constraints();
  const VectorXd zero_values = VectorXd::Zero(cons.default_values().size());
  MultiplierSystem m;
  std::vector<Index> nodes;
  std::vector<double> psi;
  for (Index j = 1; j + 1 < mesh.n_nodes(); ++j) {
    const double h = payoff(contract, mesh.nodes()[j]);
    const Index i = cons.reduced_index(map.vertex_value_dof(j));
    if (h > 0 && i >= 0) {
      nodes.push_back(j);
      m.rows.push_back(i);
      psi.push_back(h);
    }
  }
  const auto n = static_cast<Index>(nodes.size());
  m.obstacle = Eigen::Map<const VectorXd>(psi.data(), n);

  const auto& ref = disc.reference();
  std::vector<VectorXd> loads(static_cast<std::size_t>(disc.n_elements()));
  std::vector<Eigen::Triplet<double>> dt, wt;
  for (Index k = 0; k < n; ++k) {
    const Index j = nodes[static_cast<std::size_t>(k)];
    for (auto& l : loads) l.resize(0);
    for (Index e : {j - 1, j}) {
      const auto geom = disc.geometry(e);
      const double x0 = mesh.left(e);
      const double x1 = mesh.right(e);
      const auto hat = [&](double x) { return e == j ? (x1 - x) / (x1 - x0) : (x - x0) / (x1 - x0); };
      loads[static_cast<std::size_t>(e)] = function_mass_load(geom, disc.formulation(), ref, hat, std::vector<double>{});
    }
    for (Index e = 0; e < disc.n_elements(); ++e)
      if (loads[static_cast<std::size_t>(e)].size() == 0)
        loads[static_cast<std::size_t>(e)] = VectorXd::Zero(op.elements()[static_cast<std::size_t>(e)].l.size());
    const VectorXd d = op.reduced_rhs(loads, zero_values);
    const VectorXd y = op.solve_reduced(d);
    const double scale = d.cwiseAbs().maxCoeff();
    for (Index i = 0; i < d.size(); ++i)
      if (std::abs(d[i]) > 1e-15 * scale) dt.emplace_back(i, k, d[i]);
    const double yscale = y.cwiseAbs().maxCoeff();
    for (Index r = 0; r < n; ++r) {
      const double w = y[m.rows[static_cast<std::size_t>(r)]];
      if (std::abs(w) > 1e-15 * yscale) wt.emplace_back(r, k, w);
    }
  }
  m.loads.resize(cons.n_free(), n);
  m.loads.setFromTriplets(dt.begin(), dt.end());
  m.response.resize(n, n);
  m.response.setFromTriplets(wt.begin(), wt.end());
  return m;
}

TransientSolution march(ThetaStepper& stepper, const Contract& contract, const MarketParams& market,
                        const StateTransform& transform, const GridParams& grid, const std::vector<double>& times,
                        const MarchControl& control) {
  const auto& disc = stepper.discretization();
  TransientSolution sol;
  const bool masked_at_zero = contains_tau(control.mask_taus, 0.0);
  const auto terminal = [&](double x) {
    const double h = payoff(contract, x);
    return masked_at_zero ? barrier_mask(contract, x, h) : h;
  };
  DiscreteState state = disc.interpolate(terminal);
  if (masked_at_zero) apply_mask(disc, contract, state);

  sol.tau.push_back(times.front());
  sol.theta.push_back(0);
  sol.states.push_back(state);
  sol.eta.push_back(0);
  sol.lcp_iterations.push_back(0);
  sol.lcp_residual.push_back(0);

  int implicit_left = grid.theta < 1 ? grid.startup_steps : 0;
  std::map<const CondensedOperator*, MultiplierSystem> multipliers;
  bool masked_previous = masked_at_zero;
  VectorXd lambda;
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double tau = times[k];
    const double dt = tau - times[k - 1];
    const double theta = implicit_left > 0 ? 1.0 : grid.theta;
    if (implicit_left > 0) --implicit_left;

    const BoundaryValues bv = boundary_values(contract, market, transform, tau);
    // The first step sees the exact terminal data rather than its interpolant.
    std::vector<VectorXd> loads = k == 1 ? stepper.loads(terminal, payoff_kinks(contract), state, dt, theta)
                                         : stepper.loads(state, dt, theta);
    // After a knock-out the data jumps at the barrier nodes; elements outside
    // the window carry no mass.
    if (masked_previous)
      for (Index e = 0; e < disc.n_elements(); ++e)
        if (barrier_mask(contract, disc.mesh().center(e), 1.0) == 0) loads[static_cast<std::size_t>(e)].setZero();
    const StepSystem sys = stepper.assemble(std::move(loads), bv, dt, theta);
    VectorXd z = sys.op->solve_reduced(sys.rhs);
    int iterations = 0;
    double residual = 0;
    bool overwritten = false;
    if (control.obstacle == Obstacle::lcp) {
      auto it = multipliers.find(sys.op);
      if (it == multipliers.end()) it = multipliers.emplace(sys.op, build_multipliers(disc, *sys.op, contract)).first;
      const MultiplierSystem& m = it->second;
      VectorXd gap(m.rows.size());
      for (std::size_t i = 0; i < m.rows.size(); ++i) gap[static_cast<Index>(i)] = z[m.rows[i]];
      gap -= m.obstacle;
      if (lambda.size() != gap.size()) lambda = VectorXd::Zero(gap.size());
      const auto lcp = solve_lcp_psor(m.response, -gap, VectorXd::Zero(gap.size()), lambda, control.lcp);
      if (!lcp.converged)
        throw NumericalFailure("PSOR did not converge at tau = " + std::to_string(tau) + " (residual " +
                               std::to_string(lcp.residual) + ")");
      lambda = lcp.z;
      if (lambda.any()) z = sys.op->solve_reduced(sys.rhs + m.loads * lambda);
      iterations = lcp.iterations;
      residual = lcp.residual;
    }
    DiscreteState next = stepper.finish(sys, z);
    const double eta = grid.compute_indicator ? stepper.indicator(sys, next) : 0.0;

    if (control.obstacle == Obstacle::projection) {
      const auto& dofs = disc.price_dofs();
      for (std::size_t i = 0; i < dofs.size(); ++i) {
        const double h = payoff(contract, disc.price_coordinates()[static_cast<Index>(i)]);
        next.dofs[dofs[i]] = std::max(h, next.dofs[dofs[i]]);
      }
      next.slopes = disc.average_slopes(next.dofs);
      overwritten = true;
    }
    masked_previous = contains_tau(control.mask_taus, tau);
    if (masked_previous) {
      apply_mask(disc, contract, next);
      overwritten = true;
    }
    if (overwritten && grid.theta < 1) implicit_left = std::max(implicit_left, std::max(grid.startup_steps, 1));

    state = std::move(next);
    sol.tau.push_back(tau);
    sol.theta.push_back(theta);
    sol.states.push_back(state);
    sol.eta.push_back(eta);
    sol.lcp_iterations.push_back(iterations);
    sol.lcp_residual.push_back(residual);
  }
  return sol;
}

std::vector<double> uniform_times(double T, Index n) {
  const TimeGrid g{T, n};
  std::vector<double> t(static_cast<std::size_t>(n) + 1);
  for (Index i = 0; i <= n; ++i) t[static_cast<std::size_t>(i)] = g.tau(i);
  return t;
}

struct Setup {
  std::shared_ptr<const Discretization> disc;
  std::unique_ptr<ThetaStepper> stepper;
};

Setup make_setup(const Contract& contract, const MarketParams& market, const StateTransform& transform,
                 const GridParams& grid, std::optional<Mesh> mesh = std::nullopt) {
  const int extra_quadrature = contract.style == Style::asian_fixed_strike ? 1 : 0;
  Setup s;
  s.disc = std::make_shared<const Discretization>(
      mesh ? *mesh : Mesh(transform.x_min, transform.x_max, grid.n_elements), grid.formulation, grid.order,
      grid.enrichment, extra_quadrature);
  const BoundaryValues bv = boundary_values(contract, market, transform, 0.0);
  s.stepper = std::make_unique<ThetaStepper>(*s.disc, pde_coefficients(contract, market),
                                             primal_norm_scale(contract, market), bv.left.kind, bv.right.kind);
  return s;
}

PricingResult finalize(PricingResult r, Setup& s, TransientSolution sol, Clock::time_point start) {
  r.disc = s.disc;
  r.solution = std::move(sol);
  r.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return r;
}

PricingResult base_result(const Contract& contract, const MarketParams& market, const StateTransform& transform,
                          const GridParams& grid, std::string method) {
  PricingResult r;
  r.contract = contract;
  r.market = market;
  r.transform = transform;
  r.grid = grid;
  r.method = std::move(method) + "/" + std::string(to_string(grid.formulation));
  return r;
}

void check_inputs(const Contract& contract, const MarketParams& market, const GridParams& grid, Style style) {
  market.validate();
  contract.validate(market);
  grid.validate();
  if (contract.style != style) throw std::invalid_argument("pricer called with a contract of another style");
}

}  // namespace

PricingResult price_european(const Contract& contract, const MarketParams& market, const GridParams& grid,
                             const std::optional<Mesh>& mesh) {
  const auto start = Clock::now();
  check_inputs(contract, market, grid, Style::european);
  StateTransform transform = default_transform(contract);
  if (mesh) {
    transform.x_min = mesh->x_min();
    transform.x_max = mesh->x_max();
  }
  const double x0 = to_state(transform, market.S0);
  if (!(x0 > transform.x_min && x0 < transform.x_max)) throw std::out_of_range("S0 outside the truncated domain");
  Setup s = make_setup(contract, market, transform, grid, mesh);
  auto sol = march(*s.stepper, contract, market, transform, grid, uniform_times(market.T, grid.n_steps), {});
  auto r = finalize(base_result(contract, market, transform, grid, "european"), s, std::move(sol), start);
  r.price = r.value_at(market.S0);
  return r;
}

FreeBoundary extract_exercise_boundary(const PricingResult& result) {
  const double tol = 1e-7 * std::max(1.0, result.contract.K);
  const VectorXd x = result.disc->output_coordinates();
  FreeBoundary fb;
  for (Index k = 0; k <= result.solution.n_steps(); ++k) {
    const VectorXd u = result.grid_values(k);
    std::vector<bool> exercise(static_cast<std::size_t>(x.size()));
    double boundary = -1;
    for (Index i = 0; i < x.size(); ++i) {
      const double h = payoff(result.contract, x[i]);
      const bool contact = h > 0 && std::abs(u[i] - h) <= tol;
      exercise[static_cast<std::size_t>(i)] = contact;
      if (contact) boundary = std::max(boundary, std::exp(x[i]));
    }
    if (boundary < 0)
      throw NumericalFailure("no contact set found at tau = " + std::to_string(result.solution.tau[k]));
    fb.tau.push_back(result.solution.tau[static_cast<std::size_t>(k)]);
    fb.boundary.push_back(boundary);
    fb.exercise.push_back(std::move(exercise));
  }
  return fb;
}

AmericanResult price_american(const Contract& contract, const MarketParams& market, const GridParams& grid,
                              AmericanMode mode, const LcpOptions& lcp) {
  const auto start = Clock::now();
  check_inputs(contract, market, grid, Style::american);
  const StateTransform transform = default_transform(contract);
  Setup s = make_setup(contract, market, transform, grid);
  MarchControl control;
  control.obstacle = mode == AmericanMode::lcp ? Obstacle::lcp : Obstacle::projection;
  control.lcp = lcp;
  auto sol = march(*s.stepper, contract, market, transform, grid, uniform_times(market.T, grid.n_steps), control);
  AmericanResult out;
  out.pricing = finalize(base_result(contract, market, transform, grid, "american-" + std::string(to_string(mode))),
                         s, std::move(sol), start);
  out.pricing.price = out.pricing.value_at(market.S0);
  out.free_boundary = extract_exercise_boundary(out.pricing);
  const auto& res = out.pricing.solution.lcp_residual;
  out.max_complementarity_residual = res.empty() ? 0.0 : *std::max_element(res.begin(), res.end());
  return out;
}

PricingResult price_asian(const Contract& contract, const MarketParams& market, const GridParams& grid) {
  const auto start = Clock::now();
  check_inputs(contract, market, grid, Style::asian_fixed_strike);
  const StateTransform transform = default_transform(contract);
  asian_evaluation_point(transform, contract.K, market.S0);
  Setup s = make_setup(contract, market, transform, grid);
  auto sol = march(*s.stepper, contract, market, transform, grid, uniform_times(market.T, grid.n_steps), {});
  auto r = finalize(base_result(contract, market, transform, grid, "asian"), s, std::move(sol), start);
  r.price = r.value_at(market.S0);
  return r;
}

PricingResult price_barrier(const Contract& contract, const MarketParams& market, const GridParams& grid) {
  const auto start = Clock::now();
  check_inputs(contract, market, grid, Style::double_barrier);
  const StateTransform base = default_transform(contract);
  const Barriers& b = *contract.barriers;
  const double width = std::log(b.upper) - std::log(b.lower);
  const auto window = std::max<Index>(
      1, static_cast<Index>(std::llround(static_cast<double>(grid.n_elements) * width / (base.x_max - base.x_min))));
  const Mesh mesh = barrier_aligned_mesh(b, window, base.x_min, base.x_max);
  StateTransform transform = base;
  transform.x_min = mesh.x_min();
  transform.x_max = mesh.x_max();

  MarchControl control;
  for (double t : contract.monitoring) control.mask_taus.push_back(std::max(0.0, market.T - t));
  std::vector<double> breaks = control.mask_taus;
  const auto times = subdivided_grid(market.T, breaks, market.T / static_cast<double>(grid.n_steps));

  Setup s = make_setup(contract, market, transform, grid, mesh);
  auto sol = march(*s.stepper, contract, market, transform, grid, times, control);
  auto r = finalize(base_result(contract, market, transform, grid, "barrier"), s, std::move(sol), start);
  const bool outside = market.S0 < b.lower || market.S0 > b.upper;
  r.price = outside && !contract.monitoring.empty() ? 0.0 : r.value_at(market.S0);
  return r;
}

PricingResult price(const Contract& contract, const MarketParams& market, const GridParams& grid) {
  switch (contract.style) {
    case Style::european: return price_european(contract, market, grid);
    case Style::american: return price_american(contract, market, grid).pricing;
    case Style::asian_fixed_strike: return price_asian(contract, market, grid);
    case Style::double_barrier: return price_barrier(contract, market, grid);
  }
  throw std::invalid_argument("unknown style");
}

}  // namespace dpgopt
