#include <gtest/gtest.h>

#include <cmath>

#include "dpgopt/pricers.hpp"
#include "dpgopt/timestepper.hpp"

using namespace dpgopt;

namespace {

BoundaryValues dirichlet(double left, double right) {
  return {{EndKind::dirichlet, left}, {EndKind::dirichlet, right}};
}

class Stepper : public ::testing::TestWithParam<Formulation> {};

}  // namespace

TEST(Grid, UniformSteps) {
  const TimeGrid g{1.0, 8};
  EXPECT_DOUBLE_EQ(g.dt(), 0.125);
  EXPECT_EQ(g.tau(8), 1.0);
}

TEST(Grid, SubdividedGridHitsBreaks) {
  const auto grid = subdivided_grid(0.5, {0.1, 0.25, 0.5}, 0.04);
  EXPECT_EQ(grid.front(), 0.0);
  EXPECT_EQ(grid.back(), 0.5);
  for (double b : {0.1, 0.25})
    EXPECT_TRUE(std::any_of(grid.begin(), grid.end(), [&](double t) { return t == b; })) << b;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    EXPECT_GT(grid[i], grid[i - 1]);
    EXPECT_LE(grid[i] - grid[i - 1], 0.04 * (1 + 1e-9));
  }
}

TEST_P(Stepper, ZeroOperatorIsIdentity) {
  const Discretization disc(build_uniform_mesh(-1.0, 1.0, 10), GetParam(), 1, 2);
  ThetaStepper stepper(disc, OperatorCoefficients<double>{}, 1.0, EndKind::dirichlet, EndKind::dirichlet);
  auto state = disc.interpolate([](double x) { return std::sin(3 * x) + x * x; });
  const VectorXd before = disc.output_values(state);
  for (double theta : {1.0, 0.5}) {
    state = advance_theta(stepper, state, theta, 0.1, dirichlet(before[0], before[before.size() - 1]));
    EXPECT_LT((disc.output_values(state) - before).lpNorm<Eigen::Infinity>(), 1e-11);
  }
}

TEST_P(Stepper, ConstantsArePreservedWithoutReaction) {
  const Discretization disc(build_uniform_mesh(-6.0, 6.0, 40), GetParam(), 1, 2);
  OperatorCoefficients<double> c{{0.045, 0, 0}, {0.005, 0, 0}, {0, 0, 0}};
  ThetaStepper stepper(disc, c, 0.045, EndKind::dirichlet, EndKind::dirichlet);
  auto state = disc.interpolate([](double) { return 7.0; });
  for (int k = 0; k < 5; ++k) state = stepper.step(state, dirichlet(7, 7), 0.05, 1.0);
  EXPECT_LT((disc.output_values(state).array() - 7.0).abs().maxCoeff(), 1e-9);
}

TEST_P(Stepper, OperatorIsReusedPerRegime) {
  const Discretization disc(build_uniform_mesh(-6.0, 6.0, 20), GetParam(), 1, 2);
  Contract c;
  const MarketParams m;
  ThetaStepper stepper(disc, pde_coefficients(c, m), primal_norm_scale(c, m), EndKind::dirichlet, EndKind::dirichlet);
  const CondensedOperator* a = &stepper.regime(0.01, 1.0);
  EXPECT_EQ(&stepper.regime(0.01, 1.0), a);
  EXPECT_EQ(&stepper.regime(0.01 * (1 + 1e-12), 1.0), a);
  EXPECT_NE(&stepper.regime(0.01, 0.5), a);
  EXPECT_NE(&stepper.regime(0.02, 1.0), a);
}

TEST_P(Stepper, StepMatricesArePositiveDefinite) {
  const Discretization disc(build_uniform_mesh(-6.0, 6.0, 24), GetParam(), 1, 2);
  Contract c;
  const MarketParams m{0.05, 0.3, 100, 1};
  ThetaStepper stepper(disc, pde_coefficients(c, m), primal_norm_scale(c, m), EndKind::dirichlet, EndKind::dirichlet);
  for (double theta : {1.0, 0.5}) {
    const MatrixXd A = MatrixXd(stepper.regime(0.01, theta).reduced_matrix());
    EXPECT_LT((A - A.transpose()).norm(), 1e-12 * A.norm());
    EXPECT_EQ(Eigen::LLT<MatrixXd>(A).info(), Eigen::Success);
  }
}

TEST_P(Stepper, BackwardEulerIsStable) {
  Contract put;
  put.right = Right::put;
  const MarketParams m{0.05, 0.3, 100, 1};
  for (Index steps : {1, 10, 100}) {
    GridParams g;
    g.formulation = GetParam();
    g.n_elements = 128;
    g.n_steps = steps;
    const auto r = price_european(put, m, g);
    for (Index k = 0; k <= steps; ++k)
      EXPECT_LE(r.grid_values(k).lpNorm<Eigen::Infinity>(), put.K * (1 + 1e-9)) << steps << " " << k;
  }
}

TEST_P(Stepper, TemporalOrderIsOne) {
  // Self-convergence on a fixed mesh isolates the time error; the ultraweak
  // scheme needs h small against dt for the first-order regime.
  Contract put;
  put.right = Right::put;
  const MarketParams m{0.05, 0.3, 100, 1};
  GridParams g;
  g.formulation = GetParam();
  g.n_elements = 800;
  auto at = [&](Index steps) {
    g.n_steps = steps;
    const auto r = price_european(put, m, g);
    VectorXd v(41);
    for (int i = 0; i <= 40; ++i) v[i] = r.value_at(80.0 + i);
    return v;
  };
  const VectorXd reference = at(1280);
  const double e1 = (at(20) - reference).norm();
  const double e2 = (at(40) - reference).norm();
  const double e3 = (at(80) - reference).norm();
  EXPECT_NEAR(std::log2(e1 / e2), 1.0, 0.2);
  EXPECT_NEAR(std::log2(e2 / e3), 1.0, 0.2);
}

TEST_P(Stepper, ThetaSchemesConverge) {
  Contract put;
  put.right = Right::put;
  const MarketParams m{0.05, 0.3, 100, 1};
  GridParams g;
  g.formulation = GetParam();
  g.n_elements = 128;
  auto gap = [&](Index steps) {
    g.n_steps = steps;
    g.theta = 1;
    const double be = price_european(put, m, g).price;
    g.theta = 0.5;
    g.startup_steps = 2;
    const double cn = price_european(put, m, g).price;
    g.startup_steps = 0;
    return std::abs(be - cn);
  };
  const double d1 = gap(25), d2 = gap(50), d3 = gap(100);
  EXPECT_LT(d2, d1);
  EXPECT_LT(d3, d2);
  EXPECT_GT(std::log2(d2 / d3), 0.8);
}

TEST_P(Stepper, RejectsBadTheta) {
  const Discretization disc(build_uniform_mesh(-1.0, 1.0, 4), GetParam(), 1, 2);
  ThetaStepper stepper(disc, OperatorCoefficients<double>{{1, 0, 0}, {}, {}}, 1.0, EndKind::dirichlet,
                       EndKind::dirichlet);
  EXPECT_THROW(stepper.regime(0.1, 1.5), std::invalid_argument);
  EXPECT_THROW(stepper.regime(-0.1, 1.0), std::invalid_argument);
}

INSTANTIATE_TEST_SUITE_P(Formulations, Stepper, ::testing::Values(Formulation::primal, Formulation::ultraweak),
                         [](const auto& info) { return std::string(to_string(info.param)); });
