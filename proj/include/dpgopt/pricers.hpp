#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dpgopt/lcp.hpp"
#include "dpgopt/timestepper.hpp"

namespace dpgopt {

struct GridParams {
  Formulation formulation = Formulation::ultraweak;
  int order = 1;
  int enrichment = 2;
  Index n_elements = 100;
  Index n_steps = 100;
  double theta = 1;
  /// Backward Euler steps taken before switching to theta < 1, and after
  /// every step that overwrites the solution (projection, knock-out).
  int startup_steps = 0;
  bool compute_indicator = true;

  void validate() const;
};

enum class AmericanMode { lcp, free_boundary_projection };
AmericanMode american_mode_from_string(std::string_view s);
std::string_view to_string(AmericanMode m);

struct PricingResult {
  Contract contract;
  MarketParams market;
  StateTransform transform;
  GridParams grid;
  std::shared_ptr<const Discretization> disc;
  TransientSolution solution;
  double price = 0;
  std::string method;
  double wall_seconds = 0;

  /// Price-space value at step (default: last) and underlying S.
  double value_at(double S, Index step = -1) const;
  /// Output-node values of a step (negative: last).
  VectorXd grid_values(Index step) const;
};

/// A given mesh replaces the uniform grid.n_elements mesh of the default domain.
PricingResult price_european(const Contract& contract, const MarketParams& market, const GridParams& grid,
                             const std::optional<Mesh>& mesh = std::nullopt);

struct FreeBoundary {
  std::vector<double> tau;
  std::vector<double> boundary;               // S_f(tau)
  std::vector<std::vector<bool>> exercise;    // per step, per output node
};

struct AmericanResult {
  PricingResult pricing;
  FreeBoundary free_boundary;
  double max_complementarity_residual = 0;
};

AmericanResult price_american(const Contract& contract, const MarketParams& market, const GridParams& grid,
                              AmericanMode mode = AmericanMode::lcp, const LcpOptions& lcp = {});

FreeBoundary extract_exercise_boundary(const PricingResult& result);

PricingResult price_asian(const Contract& contract, const MarketParams& market, const GridParams& grid);

/// For barrier options grid.n_elements is the element count over the whole
/// domain; the mesh is snapped so both barriers are nodes. The contract's
/// monitoring dates drive the knock-out.
PricingResult price_barrier(const Contract& contract, const MarketParams& market, const GridParams& grid);

/// Dispatch on contract style (American uses the LCP mode).
PricingResult price(const Contract& contract, const MarketParams& market, const GridParams& grid);

}  // namespace dpgopt
