#include "dpgopt/lcp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dpgopt {

namespace {

using RowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

double row_residual(double z, double lower, double scaled) {
  if (!std::isfinite(lower)) return std::abs(scaled);
  return std::abs(std::min(z - lower, scaled));
}

}  // namespace

double complementarity_residual(const SparseMatrixd& A, const VectorXd& b, const VectorXd& lower,
                                const VectorXd& z) {
  const VectorXd r = A * z - b;
  const VectorXd d = A.diagonal();
  double worst = 0;
  for (Index i = 0; i < z.size(); ++i) worst = std::max(worst, row_residual(z[i], lower[i], r[i] / d[i]));
  return worst;
}

LcpResult solve_lcp_psor(const SparseMatrixd& A, const VectorXd& b, const VectorXd& lower, const VectorXd& start,
                         const LcpOptions& options) {
  const Index n = A.rows();
  if (A.cols() != n || b.size() != n || lower.size() != n || start.size() != n)
    throw std::invalid_argument("solve_lcp_psor: dimension mismatch");
  if (!(options.omega > 0 && options.omega < 2)) throw std::invalid_argument("solve_lcp_psor: omega outside (0, 2)");

  const RowMatrix M(A);
  VectorXd diag(n);
  for (Index i = 0; i < n; ++i) {
    diag[i] = M.coeff(i, i);
    if (!(diag[i] > 0)) throw std::invalid_argument("solve_lcp_psor: non-positive diagonal");
  }

  LcpResult out;
  out.z = start.cwiseMax(lower);
  for (int it = 1; it <= options.max_iterations; ++it) {
    double worst = 0;
    for (Index i = 0; i < n; ++i) {
      double row = 0;
      for (RowMatrix::InnerIterator e(M, i); e; ++e) row += e.value() * out.z[e.col()];
      const double scaled = (row - b[i]) / diag[i];
      // residual of the iterate entering this row update
      worst = std::max(worst, row_residual(out.z[i], lower[i], scaled));
      out.z[i] = std::max(lower[i], out.z[i] - options.omega * scaled);
    }
    out.iterations = it;
    if (worst <= options.tolerance && complementarity_residual(A, b, lower, out.z) <= options.tolerance) break;
  }
  out.residual = complementarity_residual(A, b, lower, out.z);
  out.converged = out.residual <= options.tolerance;
  return out;
}

}  // namespace dpgopt
