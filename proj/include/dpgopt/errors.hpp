#pragma once

#include <functional>
#include <vector>

namespace dpgopt {

/// Spot window of the error norms. Far out of the money the reference value
/// vanishes and pointwise relative errors carry no information.
struct ErrorWindow {
  double S_lo = 80;
  double S_hi = 120;
  int linf_points = 41;   // uniform in S
  int l2_points = 401;    // uniform in x = ln S, trapezoid rule
};

struct RelativeErrors {
  double l2 = 0;
  double linf = 0;
  double worst_S = 0;  // spot of the L-infinity error
};

/// Sample spots of the two norms, in evaluation order.
std::vector<double> linf_spots(const ErrorWindow& window);
std::vector<double> l2_spots(const ErrorWindow& window);

/// Norms of the pointwise relative error (approx - exact) / exact.
RelativeErrors relative_errors(const std::function<double(double)>& approx,
                               const std::function<double(double)>& exact, const ErrorWindow& window = {});

/// Observed order log2(e_coarse / e_fine) between successive halvings.
double observed_order(double coarse, double fine);

}  // namespace dpgopt
