#include "dpgopt/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace dpgopt {

namespace {

void check(const ErrorWindow& w) {
  if (!(w.S_lo > 0 && w.S_lo < w.S_hi) || w.linf_points < 2 || w.l2_points < 2)
    throw std::invalid_argument("relative_errors: bad window");
}

}  // namespace

std::vector<double> linf_spots(const ErrorWindow& w) {
  check(w);
  std::vector<double> S(static_cast<std::size_t>(w.linf_points));
  for (int i = 0; i < w.linf_points; ++i) S[static_cast<std::size_t>(i)] = w.S_lo + (w.S_hi - w.S_lo) * i / (w.linf_points - 1);
  return S;
}

std::vector<double> l2_spots(const ErrorWindow& w) {
  check(w);
  const double a = std::log(w.S_lo), dx = (std::log(w.S_hi) - a) / (w.l2_points - 1);
  std::vector<double> S(static_cast<std::size_t>(w.l2_points));
  for (int i = 0; i < w.l2_points; ++i) S[static_cast<std::size_t>(i)] = std::exp(a + dx * i);
  return S;
}

RelativeErrors relative_errors(const std::function<double(double)>& approx,
                               const std::function<double(double)>& exact, const ErrorWindow& w) {
  RelativeErrors e;
  for (double S : linf_spots(w)) {
    const double ref = exact(S);
    const double d = std::abs((approx(S) - ref) / ref);
    if (d > e.linf) {
      e.linf = d;
      e.worst_S = S;
    }
  }
  const auto spots = l2_spots(w);
  const double dx = (std::log(w.S_hi) - std::log(w.S_lo)) / (w.l2_points - 1);
  double sum = 0;
  for (std::size_t i = 0; i < spots.size(); ++i) {
    const double ref = exact(spots[i]);
    const double d = (approx(spots[i]) - ref) / ref;
    sum += (i == 0 || i + 1 == spots.size() ? 0.5 : 1.0) * d * d;
  }
  e.l2 = std::sqrt(sum * dx);
  return e;
}

double observed_order(double coarse, double fine) { return std::log2(coarse / fine); }

}  // namespace dpgopt
