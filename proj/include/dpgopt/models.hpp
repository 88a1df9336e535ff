#pragma once

#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "dpgopt/forms.hpp"
#include "dpgopt/mesh.hpp"

namespace dpgopt {

struct MarketParams {
  double r = 0.05;
  double sigma = 0.2;
  double S0 = 100;
  double T = 1;

  void validate() const;
};

enum class Style { european, american, asian_fixed_strike, double_barrier };
enum class Right { call, put };

std::string_view to_string(Style s);
std::string_view to_string(Right r);
Style style_from_string(std::string_view s);
Right right_from_string(std::string_view s);

struct Barriers {
  double lower = 0;
  double upper = 0;
};

struct Contract {
  Style style = Style::european;
  Right right = Right::call;
  double K = 100;
  std::optional<Barriers> barriers;
  std::vector<double> monitoring;  // calendar dates t_1 < ... < t_N in (0, T]

  void validate(const MarketParams& market) const;
};

enum class TransformKind { log_price, asian_reduced };

/// State variable and truncated computational domain.
struct StateTransform {
  TransformKind kind = TransformKind::log_price;
  double x_min = -6;
  double x_max = 6;
};

StateTransform default_transform(const Contract& contract);

double to_state(const StateTransform& t, double S);
double from_state(const StateTransform& t, double x);
/// Point where the reduced Asian solution is evaluated, K / S0; throws if outside the domain.
double asian_evaluation_point(const StateTransform& t, double K, double S0);

/// Terminal data in the state variable (unmasked for barriers).
double payoff(const Contract& contract, double x);
/// Points where the terminal data is not smooth (strike, barriers).
std::vector<double> payoff_kinks(const Contract& contract);
/// Knock-out mask: zero outside [ln S_L, ln S_U]; identity without barriers.
double barrier_mask(const Contract& contract, double x, double value);

/// Coefficients of u_tau + L u = 0 in the state variable.
OperatorCoefficients<double> pde_coefficients(const Contract& contract, const MarketParams& market);

enum class Parameter { r, sigma };
Parameter parameter_from_string(std::string_view s);
/// d/d(alpha) of the coefficients above.
OperatorCoefficients<double> pde_coefficient_derivatives(const Contract& contract, const MarketParams& market,
                                                         Parameter alpha);

/// d in the primal test norm (1/dt)|v|^2 + (1/dt^2)|d v'|^2.
double primal_norm_scale(const Contract& contract, const MarketParams& market);

enum class EndKind { dirichlet, zero_curvature };

struct EndCondition {
  EndKind kind = EndKind::dirichlet;
  double value = 0;  // Dirichlet value, unused for zero curvature
};

struct BoundaryValues {
  EndCondition left;
  EndCondition right;
};

BoundaryValues boundary_values(const Contract& contract, const MarketParams& market,
                               const StateTransform& t, double tau);
/// d/d(alpha) of the Dirichlet data (zero-curvature ends stay zero-curvature).
BoundaryValues boundary_value_derivatives(const Contract& contract, const MarketParams& market,
                                          const StateTransform& t, double tau, Parameter alpha);

/// Monitoring dates i*dt, i = 1..N, with the last date at T.
std::vector<double> monitoring_schedule(double T, double dt);
std::vector<double> daily_schedule(double T);
std::vector<double> weekly_schedule(double T);

/// Uniform mesh on about [x_min, x_max] with ln S_L and ln S_U on nodes and
/// elements_in_window elements between them.
Mesh barrier_aligned_mesh(const Barriers& b, Eigen::Index elements_in_window, double x_min = -6, double x_max = 6);

}  // namespace dpgopt
