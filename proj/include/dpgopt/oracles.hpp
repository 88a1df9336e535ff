#pragma once

#include <cstdint>
#include <vector>

#include "dpgopt/models.hpp"

namespace dpgopt {

/// Standard normal CDF via erfc.
double normal_cdf(double x);
double normal_pdf(double x);

struct D1D2 {
  double d1 = 0;
  double d2 = 0;
};
D1D2 bs_d1_d2(double S, double K, double r, double sigma, double T);

/// Closed-form European price; sigma = 0 gives the discounted intrinsic forward value.
double bs_closed_form(double S, double K, double r, double sigma, double T, Right right);
double bs_delta(double S, double K, double r, double sigma, double T, Right right);
double bs_gamma(double S, double K, double r, double sigma, double T);
double bs_vega(double S, double K, double r, double sigma, double T);

/// Cox-Ross-Rubinstein tree.
double binomial_price(double S, double K, double r, double sigma, double T, int n_steps, Style style, Right right);

struct McConfig {
  std::int64_t n_paths = 100000;
  int n_steps = 250;
  std::uint64_t seed = 20240601;
  bool antithetic = false;
  int n_batches = 16;
  int threads = 1;

  void validate() const;
};

struct McEstimate {
  double price = 0;
  double std_error = 0;
  std::vector<double> batch_means;
};

/// Fixed-strike arithmetic Asian call on a trapezoidal average over n_steps intervals.
McEstimate mc_asian(const MarketParams& market, double K, const McConfig& cfg);

/// Discretely monitored double-barrier option; paths are knocked out when S
/// leaves [S_L, S_U] at any monitoring date. Exact GBM steps between dates.
McEstimate mc_barrier(const MarketParams& market, double K, Right right, const Barriers& barriers,
                      const std::vector<double>& schedule, const McConfig& cfg);

}  // namespace dpgopt
