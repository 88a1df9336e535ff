#include "dpgopt/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dpgopt {

void MarketParams::validate() const {
  if (!(sigma > 0)) throw std::invalid_argument("market: sigma must be positive");
  if (!(T > 0)) throw std::invalid_argument("market: T must be positive");
  if (!(S0 > 0)) throw std::invalid_argument("market: S0 must be positive");
  if (!std::isfinite(r)) throw std::invalid_argument("market: r must be finite");
}

std::string_view to_string(Style s) {
  switch (s) {
    case Style::european: return "european";
    case Style::american: return "american";
    case Style::asian_fixed_strike: return "asian";
    case Style::double_barrier: return "barrier";
  }
  return "?";
}

std::string_view to_string(Right r) { return r == Right::call ? "call" : "put"; }

Style style_from_string(std::string_view s) {
  if (s == "european") return Style::european;
  if (s == "american") return Style::american;
  if (s == "asian") return Style::asian_fixed_strike;
  if (s == "barrier") return Style::double_barrier;
  throw std::invalid_argument("unknown option style '" + std::string(s) + "'");
}

Right right_from_string(std::string_view s) {
  if (s == "call") return Right::call;
  if (s == "put") return Right::put;
  throw std::invalid_argument("unknown option right '" + std::string(s) + "'");
}

void Contract::validate(const MarketParams& market) const {
  if (!(K > 0)) throw std::invalid_argument("contract: K must be positive");
  if (style == Style::american && right != Right::put)
    throw std::invalid_argument("contract: only American puts are supported");
  if (style == Style::asian_fixed_strike && right != Right::call)
    throw std::invalid_argument("contract: only fixed-strike Asian calls are supported");
  if (barriers) {
    if (!(barriers->lower > 0 && barriers->lower < barriers->upper))
      throw std::invalid_argument("contract: barriers need 0 < S_L < S_U");
  }
  if (style == Style::double_barrier && !barriers) throw std::invalid_argument("contract: barrier option without barriers");
  double prev = 0;
  for (double t : monitoring) {
    if (!(t > prev) || t > market.T * (1 + 1e-12))
      throw std::invalid_argument("contract: monitoring dates must increase strictly within (0, T]");
    prev = t;
  }
}

StateTransform default_transform(const Contract& contract) {
  if (contract.style == Style::asian_fixed_strike) return {TransformKind::asian_reduced, -2, 2};
  return {TransformKind::log_price, -6, 6};
}

double to_state(const StateTransform& t, double S) {
  if (!(S > 0)) throw std::invalid_argument("to_state: S must be positive");
  if (t.kind == TransformKind::asian_reduced) throw std::logic_error("to_state: reduced Asian variable is path dependent");
  return std::log(S);
}

double from_state(const StateTransform& t, double x) {
  if (t.kind == TransformKind::asian_reduced) throw std::logic_error("from_state: reduced Asian variable is path dependent");
  return std::exp(x);
}

double asian_evaluation_point(const StateTransform& t, double K, double S0) {
  const double x = K / S0;
  if (!(x > t.x_min && x < t.x_max)) throw std::out_of_range("Asian evaluation point K/S0 outside the domain");
  return x;
}

double payoff(const Contract& contract, double x) {
  if (contract.style == Style::asian_fixed_strike) return std::max(-x, 0.0);
  const double S = std::exp(x);
  return contract.right == Right::call ? std::max(S - contract.K, 0.0) : std::max(contract.K - S, 0.0);
}

std::vector<double> payoff_kinks(const Contract& contract) {
  if (contract.style == Style::asian_fixed_strike) return {0.0};
  std::vector<double> k{std::log(contract.K)};
  if (contract.barriers) {
    k.push_back(std::log(contract.barriers->lower));
    k.push_back(std::log(contract.barriers->upper));
  }
  return k;
}

double barrier_mask(const Contract& contract, double x, double value) {
  if (!contract.barriers) return value;
  // Nodes sit on ln S_L / ln S_U up to rounding; those count as inside.
  const double lo = std::log(contract.barriers->lower) - 1e-10;
  const double hi = std::log(contract.barriers->upper) + 1e-10;
  return (x < lo || x > hi) ? 0.0 : value;
}

OperatorCoefficients<double> pde_coefficients(const Contract& contract, const MarketParams& m) {
  const double s2 = m.sigma * m.sigma;
  OperatorCoefficients<double> c;
  if (contract.style == Style::asian_fixed_strike) {
    c.diffusion = {0, 0, 0.5 * s2};
    c.convection = {-1 / m.T, -m.r, 0};
    c.reaction = {0, 0, 0};
  } else {
    c.diffusion = {0.5 * s2, 0, 0};
    c.convection = {m.r - 0.5 * s2, 0, 0};
    c.reaction = {m.r, 0, 0};
  }
  return c;
}

Parameter parameter_from_string(std::string_view s) {
  if (s == "r") return Parameter::r;
  if (s == "sigma") return Parameter::sigma;
  throw std::invalid_argument("unknown sensitivity parameter '" + std::string(s) + "'");
}

OperatorCoefficients<double> pde_coefficient_derivatives(const Contract& contract, const MarketParams& m,
                                                         Parameter alpha) {
  OperatorCoefficients<double> d;
  if (contract.style == Style::asian_fixed_strike) {
    if (alpha == Parameter::sigma) d.diffusion = {0, 0, m.sigma};
    else d.convection = {0, -1, 0};
    return d;
  }
  if (alpha == Parameter::sigma) {
    d.diffusion = {m.sigma, 0, 0};
    d.convection = {-m.sigma, 0, 0};
  } else {
    d.convection = {1, 0, 0};
    d.reaction = {1, 0, 0};
  }
  return d;
}

double primal_norm_scale(const Contract& contract, const MarketParams& m) {
  const double s2 = m.sigma * m.sigma;
  return contract.style == Style::asian_fixed_strike ? s2 : 0.5 * s2;
}

namespace {

// Before its first knock-out in tau a barrier option is a vanilla.
bool vanilla_ends(const Contract& contract, const MarketParams& m, double tau) {
  if (contract.style == Style::european) return true;
  if (contract.style != Style::double_barrier) return false;
  double first = std::numeric_limits<double>::infinity();
  for (double t : contract.monitoring) first = std::min(first, m.T - t);
  return tau <= first + 1e-12 * m.T;
}

}  // namespace

BoundaryValues boundary_values(const Contract& contract, const MarketParams& m, const StateTransform& t,
                               double tau) {
  if (tau < -1e-12 || tau > m.T * (1 + 1e-12)) throw std::out_of_range("boundary_values: tau outside [0, T]");
  BoundaryValues bv;
  if (contract.style == Style::asian_fixed_strike) {
    bv.left = {EndKind::zero_curvature, 0};
    bv.right = {EndKind::dirichlet, 0};
  } else if (contract.style == Style::american) {
    bv.left = {EndKind::dirichlet, contract.K - std::exp(t.x_min)};
    bv.right = {EndKind::dirichlet, 0};
  } else if (vanilla_ends(contract, m, tau)) {
    const double df = contract.K * std::exp(-m.r * tau);
    if (contract.right == Right::call) {
      bv.left = {EndKind::dirichlet, 0};
      bv.right = {EndKind::dirichlet, std::exp(t.x_max) - df};
    } else {
      bv.left = {EndKind::dirichlet, df - std::exp(t.x_min)};
      bv.right = {EndKind::dirichlet, 0};
    }
  } else {
    bv.left = {EndKind::dirichlet, 0};
    bv.right = {EndKind::dirichlet, 0};
  }
  return bv;
}

BoundaryValues boundary_value_derivatives(const Contract& contract, const MarketParams& m, const StateTransform& t,
                                          double tau, Parameter alpha) {
  BoundaryValues bv = boundary_values(contract, m, t, tau);
  bv.left.value = 0;
  bv.right.value = 0;
  if (alpha == Parameter::r && vanilla_ends(contract, m, tau)) {
    const double d = contract.K * tau * std::exp(-m.r * tau);
    if (contract.right == Right::call) bv.right.value = d;
    else bv.left.value = -d;
  }
  return bv;
}

std::vector<double> monitoring_schedule(double T, double dt) {
  if (!(dt > 0 && T > 0)) throw std::invalid_argument("monitoring_schedule: dt and T must be positive");
  const auto n = static_cast<long>(std::llround(T / dt));
  if (n < 1 || std::abs(n * dt - T) > 1e-9 * T)
    throw std::invalid_argument("monitoring_schedule: T is not a multiple of dt");
  std::vector<double> dates;
  for (long i = 1; i < n; ++i) dates.push_back(static_cast<double>(i) * dt);
  dates.push_back(T);
  return dates;
}

// Daily: 250 dates over the contract life; weekly: 50.
std::vector<double> daily_schedule(double T) { return monitoring_schedule(T, 0.004 * T); }

std::vector<double> weekly_schedule(double T) { return monitoring_schedule(T, 0.02 * T); }

Mesh barrier_aligned_mesh(const Barriers& b, Eigen::Index elements_in_window, double x_min, double x_max) {
  if (elements_in_window < 1) throw std::invalid_argument("barrier_aligned_mesh: need at least one element");
  const double lo = std::log(b.lower);
  const double hi = std::log(b.upper);
  if (!(lo > x_min && hi < x_max)) throw std::invalid_argument("barrier_aligned_mesh: barriers outside the domain");
  const double h = (hi - lo) / static_cast<double>(elements_in_window);
  const auto left = static_cast<Eigen::Index>(std::llround((lo - x_min) / h));
  const auto right = static_cast<Eigen::Index>(std::llround((x_max - hi) / h));
  return Mesh(lo - static_cast<double>(left) * h, hi + static_cast<double>(right) * h, left + elements_in_window + right);
}

}  // namespace dpgopt
