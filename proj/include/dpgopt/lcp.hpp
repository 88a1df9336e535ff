#pragma once

#include <Eigen/SparseCore>

#include "dpgopt/dpg_system.hpp"

namespace dpgopt {

struct LcpOptions {
  double omega = 1.4;
  int max_iterations = 10000;
  double tolerance = 1e-10;
};

struct LcpResult {
  VectorXd z;
  int iterations = 0;
  double residual = 0;
  bool converged = false;
};

/// max_i |min(z_i - psi_i, (A z - b)_i / A_ii)|, with the plain scaled
/// residual on rows whose lower bound is -infinity.
double complementarity_residual(const SparseMatrixd& A, const VectorXd& b, const VectorXd& lower,
                                const VectorXd& z);

/// Projected SOR for z >= lower, A z - b >= 0, (z - lower)^T (A z - b) = 0.
/// A must be symmetric positive definite.
LcpResult solve_lcp_psor(const SparseMatrixd& A, const VectorXd& b, const VectorXd& lower, const VectorXd& start,
                         const LcpOptions& options = {});

}  // namespace dpgopt
