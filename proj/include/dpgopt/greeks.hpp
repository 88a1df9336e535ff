#pragma once

#include <vector>

#include "dpgopt/pricers.hpp"

namespace dpgopt {

struct GreekField {
  VectorXd S;       // underlying at the output nodes
  VectorXd delta;   // empty when not computed
  VectorXd gamma;
  double delta_at_S0 = 0;
  double gamma_at_S0 = 0;
  std::vector<Index> jumps;  // node i flagged when S^2 Gamma changes by more than a fraction of its peak
  bool has_jump = false;
};

/// Delta = u_x / S with u_x read off the ultraweak gradient trace; no solve.
GreekField delta_from_ultraweak(const PricingResult& result);

/// Gamma = (u_xx - u_x) / S^2; u_xx from differences of the gradient trace (ultraweak) or
/// second differences of the nodal values (primal). Also fills Delta.
GreekField gamma_from_solution(const PricingResult& result, double jump_fraction = 0.25);

struct SensitivityResult {
  Parameter parameter = Parameter::sigma;
  TransientSolution solution;
  double value_at_S0 = 0;
  VectorXd grid_values;  // final step, output nodes
};

/// Solves u_a,tau + L u_a = -L_a u on the base result's grid, with the
/// differentiated boundary data and zero initial data.
SensitivityResult solve_sensitivity_pde(const PricingResult& base, Parameter alpha);

}  // namespace dpgopt
