#pragma once

#include <functional>
#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "dpgopt/discretization.hpp"
#include "dpgopt/models.hpp"

namespace dpgopt {

struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Uniform grid tau_i = i * T / N.
struct TimeGrid {
  double T = 1;
  Index steps = 100;

  double dt() const { return T / static_cast<double>(steps); }
  double tau(Index i) const { return i == steps ? T : static_cast<double>(i) * dt(); }
};

/// Grid over [0, T] whose points include every given break point; each
/// interval between break points gets ceil(length / dt_target) equal steps.
std::vector<double> subdivided_grid(double T, const std::vector<double>& breaks, double dt_target);

struct TransientSolution {
  std::vector<double> tau;
  std::vector<double> theta;           // theta of the step ending at tau[i] (0 at tau = 0)
  std::vector<DiscreteState> states;
  std::vector<double> eta;             // error indicator per step (0 at tau = 0)
  std::vector<int> lcp_iterations;     // 0 when no obstacle was active
  std::vector<double> lcp_residual;

  Index n_steps() const { return static_cast<Index>(tau.size()) - 1; }
  const DiscreteState& final_state() const { return states.back(); }
};

/// Boundary data as a function of tau.
using BoundaryProvider = std::function<BoundaryValues(double tau)>;

/// Reduced linear system of one step, before any obstacle is applied.
struct StepSystem {
  const CondensedOperator* op = nullptr;
  std::vector<VectorXd> loads;
  VectorXd constraint_values;
  VectorXd rhs;  // reduced right-hand side
  double dt = 0;
  double theta = 1;
};

/// Theta-method marching of u_tau + L u = 0 with condensed DPG steps.
/// Condensed operators are cached per (dt, theta).
class ThetaStepper {
 public:
  ThetaStepper(const Discretization& disc, OperatorCoefficients<double> coefficients,
               double primal_norm_scale, EndKind left_kind, EndKind right_kind);

  const Discretization& discretization() const { return disc_; }
  const OperatorCoefficients<double>& coefficients() const { return coeffs_; }

  const CondensedOperator& regime(double dt, double theta);
  std::vector<Constraint> constraint_structure() const;
  VectorXd constraint_values(const BoundaryValues& bv) const;

  /// Element loads (u^n, v) - dt (1 - theta) L(u^n; v).
  std::vector<VectorXd> loads(const DiscreteState& previous, double dt, double theta) const;
  /// Same, with the mass term taken from a function integrated piecewise between breaks.
  std::vector<VectorXd> loads(const std::function<double(double)>& f, const std::vector<double>& breaks,
                              const DiscreteState& previous, double dt, double theta) const;
  /// Adds -scale * L_c(state; v) for the given coefficients to the loads.
  void add_operator_term(std::vector<VectorXd>& loads, const OperatorCoefficients<double>& c,
                         const DiscreteState& state, double scale) const;

  StepSystem prepare(const DiscreteState& previous, const BoundaryValues& bv_next, double dt, double theta);
  /// Step system for given element loads.
  StepSystem assemble(std::vector<VectorXd> loads, const BoundaryValues& bv_next, double dt, double theta);
  /// Full DOF vector from a reduced solution; recovers the skeleton slopes.
  DiscreteState finish(const StepSystem& sys, const VectorXd& reduced) const;
  /// Unconstrained step.
  DiscreteState step(const DiscreteState& previous, const BoundaryValues& bv_next, double dt, double theta);

  double indicator(const StepSystem& sys, const DiscreteState& next) const;

 private:
  const Discretization& disc_;
  OperatorCoefficients<double> coeffs_;
  double norm_scale_;
  EndKind left_kind_;
  EndKind right_kind_;
  std::map<std::pair<double, double>, std::unique_ptr<CondensedOperator>> regimes_;
};

/// advance_theta: one unconstrained theta-step.
DiscreteState advance_theta(ThetaStepper& stepper, const DiscreteState& state, double theta, double dt,
                            const BoundaryValues& bv_next);

}  // namespace dpgopt
