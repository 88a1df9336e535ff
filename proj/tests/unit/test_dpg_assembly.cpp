#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "dpgopt/discretization.hpp"
#include "dpgopt/dpg_system.hpp"
#include "dpgopt/models.hpp"

using namespace dpgopt;

namespace {

struct StepProblem {
  std::shared_ptr<Discretization> disc;
  std::vector<ElementSystem<double>> elements;
  std::vector<Constraint> constraints;
};

// One backward Euler step of the European call from the exact payoff.
StepProblem european_step(Formulation f, Index n, double dt = 0.01, double x_min = -6, double x_max = 6) {
  const Contract contract;
  const MarketParams market;
  StepProblem p;
  p.disc = std::make_shared<Discretization>(build_uniform_mesh(x_min, x_max, n), f, 1, 2);
  const FormSpec<double> form{f, pde_coefficients(contract, market), dt, 1.0};
  const auto norm = f == Formulation::primal ? primal_energy_norm(dt, primal_norm_scale(contract, market))
                                             : ultraweak_graph_norm(form, 1.0);
  const auto& ref = p.disc->reference();
  const auto kinks = payoff_kinks(contract);
  for (Index e = 0; e < n; ++e) {
    const auto geom = p.disc->geometry(e);
    auto l = function_mass_load(geom, f, ref, [&](double x) { return payoff(contract, x); }, kinks);
    p.elements.push_back(
        condense_element<double>(assemble_gram(geom, norm, ref), assemble_element_matrix(geom, form, ref), l));
  }
  const auto& map = p.disc->dof_map();
  p.constraints = {{map.vertex_value_dof(0), {}, payoff(contract, x_min)},
                   {map.vertex_value_dof(n), {}, payoff(contract, x_max)}};
  return p;
}

double relative_difference(const VectorXd& a, const VectorXd& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST(Gram, ConstantTestFunctionMass) {
  const ReferenceElement<double> ref(0, 0, 3);
  NormSpec<double> norm;
  const MatrixXd G = assemble_gram(ElementGeometry<double>{0.5, 0.8}, norm, ref);
  ASSERT_EQ(G.rows(), 1);
  EXPECT_NEAR(G(0, 0), 0.3, 1e-14);
}

TEST(Gram, PrimalNormIsMassPlusStiffness) {
  const ReferenceElement<double> ref(1, 1, 4);
  const double sigma = std::sqrt(2.0);
  const MatrixXd G = assemble_gram(ElementGeometry<double>{0, 1}, primal_energy_norm(1.0, 0.5 * sigma * sigma), ref);
  MatrixXd expected(2, 2);
  expected << 1.0 / 3 + 1, 1.0 / 6 - 1, 1.0 / 6 - 1, 1.0 / 3 + 1;
  EXPECT_LT((G - expected).norm(), 1e-13);
}

TEST(Gram, BlocksAreLocal) {
  Contract asian;
  asian.style = Style::asian_fixed_strike;
  const MarketParams market{0.09, 0.3, 100, 1};
  const FormSpec<double> form{Formulation::ultraweak, pde_coefficients(asian, market), 0.01, 1.0};
  const auto norm = ultraweak_graph_norm(form, 1.0);
  const Discretization disc(build_uniform_mesh(-2.0, 2.0, 8), Formulation::ultraweak, 1, 2);
  for (Index e = 0; e < 8; ++e) {
    const Discretization single(build_uniform_mesh(disc.mesh().left(e), disc.mesh().right(e), 1),
                                Formulation::ultraweak, 1, 2);
    const MatrixXd on_mesh = assemble_gram(disc.geometry(e), norm, disc.reference());
    const MatrixXd alone = assemble_gram(single.geometry(0), norm, single.reference());
    EXPECT_LT((on_mesh - alone).norm(), 1e-13 * alone.norm());
    EXPECT_LT((on_mesh - on_mesh.transpose()).norm(), 1e-13 * on_mesh.norm());
  }
}

TEST(FormMatrix, PrimalFieldBlockMatchesDenseIntegration) {
  const double a = 0.02, b = 0.03, c = 0.05, dt = 0.1, theta = 0.7;
  OperatorCoefficients<double> coeffs{{a, 0, 0}, {b, 0, 0}, {c, 0, 0}};
  const FormSpec<double> form{Formulation::primal, coeffs, dt, theta};
  const ReferenceElement<double> ref(1, 3, 5);
  const ElementGeometry<double> geom{0.2, 0.7};
  const MatrixXd B = assemble_element_matrix(geom, form, ref);

  const LagrangeBasis<double> trial(1, BasisKind::trial);
  const LagrangeBasis<double> test(3, BasisKind::enriched_test);
  const auto quad = gauss_rule<double>(12);
  const double jac = geom.jacobian();
  MatrixXd M = MatrixXd::Zero(4, 2), K = M, C = M;
  for (Index q = 0; q < quad.size(); ++q) {
    const auto u = trial.eval(quad.points[q]);
    const auto v = test.eval(quad.points[q]);
    const double w = quad.weights[q] * jac;
    M += w * v.values * u.values.transpose();
    K += w * (v.derivatives / jac) * (u.derivatives / jac).transpose();
    C += w * v.values * (u.derivatives / jac).transpose();
  }
  // L u = -a u'' - b u' + c u, integrated by parts
  const MatrixXd expected = M + dt * theta * (a * K - b * C + c * M);
  EXPECT_LT((B.leftCols(2) - expected).norm(), 1e-13 * expected.norm());
}

TEST(FormMatrix, FluxColumnsCarryOutwardNormal) {
  const ReferenceElement<double> ref(1, 3, 5);
  const FormSpec<double> form{Formulation::primal, {{0.02, 0, 0}, {0, 0, 0}, {0, 0, 0}}, 0.1, 1.0};
  const MatrixXd B = assemble_element_matrix(ElementGeometry<double>{0, 1}, form, ref);
  const auto blocks = column_blocks(Formulation::primal, ref);
  EXPECT_LT((B.col(blocks.flux_begin) + ref.test_left()).norm(), 1e-15);
  EXPECT_LT((B.col(blocks.flux_begin + 1) - ref.test_right()).norm(), 1e-15);
  EXPECT_NEAR(ref.test_left()[0], 1.0, 1e-15);
  EXPECT_NEAR(ref.test_right()[3], 1.0, 1e-15);
}

TEST(Condense, IdentityGram) {
  std::mt19937 gen(7);
  std::normal_distribution<double> N;
  MatrixXd B(6, 4);
  for (Index i = 0; i < B.size(); ++i) B.data()[i] = N(gen);
  const auto sys = condense_element<double>(MatrixXd::Identity(6, 6), B, VectorXd::Ones(6));
  EXPECT_LT((sys.A - B.transpose() * B).norm(), 1e-12);
  EXPECT_LT((sys.b - B.transpose() * VectorXd::Ones(6)).norm(), 1e-12);
}

TEST(Condense, ConsistentLoadIsReproduced) {
  std::mt19937 gen(11);
  std::normal_distribution<double> N;
  MatrixXd B = MatrixXd::Identity(5, 5) * 3;
  MatrixXd R(5, 5);
  for (Index i = 0; i < R.size(); ++i) R.data()[i] = N(gen);
  B += 0.3 * R;
  const MatrixXd G = R * R.transpose() + MatrixXd::Identity(5, 5);
  const VectorXd w = VectorXd::LinSpaced(5, -1, 2);
  const auto sys = condense_element<double>(G, B, B * w);
  EXPECT_LT((sys.A.ldlt().solve(sys.b) - w).norm(), 1e-10);
}

TEST(Condense, NormalMatrixIsPositiveSemidefinite) {
  std::mt19937 gen(3);
  std::normal_distribution<double> N;
  for (int trial = 0; trial < 20; ++trial) {
    MatrixXd R(8, 8), B(8, 5);
    for (Index i = 0; i < R.size(); ++i) R.data()[i] = N(gen);
    for (Index i = 0; i < B.size(); ++i) B.data()[i] = N(gen);
    const auto sys = condense_element<double>(R * R.transpose() + 0.5 * MatrixXd::Identity(8, 8), B, VectorXd::Zero(8));
    EXPECT_LT((sys.A - sys.A.transpose()).norm(), 1e-12 * sys.A.norm());
    const VectorXd ev = Eigen::SelfAdjointEigenSolver<MatrixXd>(sys.A).eigenvalues();
    EXPECT_GE(ev.minCoeff(), -1e-10 * sys.A.norm());
  }
}

TEST(Condense, RejectsIndefiniteGram) {
  MatrixXd G = MatrixXd::Identity(2, 2);
  G(1, 1) = -1;
  EXPECT_THROW(condense_element<double>(G, MatrixXd::Ones(2, 2), VectorXd::Ones(2)), CholeskyFailure);
}

class BothFormulations : public ::testing::TestWithParam<Formulation> {};

TEST_P(BothFormulations, LinearDataReproducedExactly) {
  // u - s u'' = x on [0, 1], u(0) = 0, u(1) = 1 has the solution u = x.
  const Formulation f = GetParam();
  for (Index n : {1, 3, 7}) {
    const Discretization disc(build_uniform_mesh(0.0, 1.0, n), f, 1, 2);
    const FormSpec<double> form{f, {{1, 0, 0}, {0, 0, 0}, {0, 0, 0}}, 0.05, 1.0};
    const auto norm = f == Formulation::primal ? primal_energy_norm(0.05, 1.0) : ultraweak_graph_norm(form, 1.0);
    std::vector<ElementSystem<double>> elements;
    for (Index e = 0; e < n; ++e) {
      const auto geom = disc.geometry(e);
      VectorXd nodal(2);
      nodal << geom.left, geom.right;
      elements.push_back(condense_element<double>(assemble_gram(geom, norm, disc.reference()),
                                                  assemble_element_matrix(geom, form, disc.reference()),
                                                  mass_load(geom, f, disc.reference(), nodal)));
    }
    const auto& map = disc.dof_map();
    const VectorXd u = solve_dpg_system(elements, map, {{map.vertex_value_dof(0), {}, 0.0}, {map.vertex_value_dof(n), {}, 1.0}});
    for (Index e = 0; e < n; ++e)
      for (int j = 0; j <= 1; ++j) {
        EXPECT_NEAR(u[map.field_dof(e, j)], disc.node_coordinate(e, j), 1e-9);
        if (f == Formulation::ultraweak) EXPECT_NEAR(u[map.gradient_dof(e, j)], 1.0, 1e-9);
      }
  }
}

TEST_P(BothFormulations, SingleElementMatchesLocalSolve) {
  const auto p = european_step(GetParam(), 1, 0.01, 4.0, 5.0);
  const auto& map = p.disc->dof_map();
  const VectorXd u = solve_dpg_system(p.elements, map, p.constraints);
  const auto& el = p.elements[0];
  // Dense elimination of the two Dirichlet unknowns.
  std::vector<Index> fixed = {p.constraints[0].dof, p.constraints[1].dof};
  VectorXd local_fixed = VectorXd::Zero(map.n_dofs);
  local_fixed[fixed[0]] = p.constraints[0].value;
  local_fixed[fixed[1]] = p.constraints[1].value;
  std::vector<Index> free;
  for (Index i = 0; i < map.n_dofs; ++i)
    if (i != fixed[0] && i != fixed[1]) free.push_back(i);
  // single element: local columns are the global dofs in element order
  MatrixXd A = MatrixXd::Zero(map.n_dofs, map.n_dofs);
  VectorXd b = VectorXd::Zero(map.n_dofs);
  const auto& cols = map.element_dofs[0];
  for (std::size_t i = 0; i < cols.size(); ++i) {
    b[cols[i]] += el.b[static_cast<Index>(i)];
    for (std::size_t j = 0; j < cols.size(); ++j) A(cols[i], cols[j]) += el.A(static_cast<Index>(i), static_cast<Index>(j));
  }
  const VectorXd rhs = b - A * local_fixed;
  MatrixXd Aff(free.size(), free.size());
  VectorXd bf(free.size());
  for (std::size_t i = 0; i < free.size(); ++i) {
    bf[static_cast<Index>(i)] = rhs[free[i]];
    for (std::size_t j = 0; j < free.size(); ++j) Aff(static_cast<Index>(i), static_cast<Index>(j)) = A(free[i], free[j]);
  }
  const VectorXd uf = Aff.ldlt().solve(bf);
  for (std::size_t i = 0; i < free.size(); ++i) EXPECT_NEAR(u[free[i]], uf[static_cast<Index>(i)], 1e-9 * (1 + uf.norm()));
}

TEST_P(BothFormulations, GlobalMatrixMatchesDenseScatter) {
  const auto p = european_step(GetParam(), 2);
  const auto& map = p.disc->dof_map();
  const MatrixXd global = MatrixXd(assemble_global_matrix(p.elements, map));
  MatrixXd dense = MatrixXd::Zero(map.n_dofs, map.n_dofs);
  for (Index e = 0; e < 2; ++e) {
    const auto& cols = map.element_dofs[static_cast<std::size_t>(e)];
    for (std::size_t i = 0; i < cols.size(); ++i)
      for (std::size_t j = 0; j < cols.size(); ++j)
        dense(cols[i], cols[j]) += p.elements[static_cast<std::size_t>(e)].A(static_cast<Index>(i), static_cast<Index>(j));
  }
  EXPECT_LT((global - dense).norm(), 1e-14 * dense.norm());
  EXPECT_LT((global - global.transpose()).norm(), 1e-14 * global.norm());
  // the interface trace is shared: it appears in both element column lists
  const Index shared = map.vertex_value_dof(1);
  int count = 0;
  for (const auto& cols : map.element_dofs) count += static_cast<int>(std::count(cols.begin(), cols.end(), shared));
  EXPECT_EQ(count, 2);
}

TEST_P(BothFormulations, DofMapCoversEveryColumn) {
  const auto p = european_step(GetParam(), 5);
  const auto& map = p.disc->dof_map();
  std::vector<int> seen(static_cast<std::size_t>(map.n_dofs), 0);
  for (const auto& cols : map.element_dofs)
    for (Index d : cols) ++seen[static_cast<std::size_t>(d)];
  for (int s : seen) EXPECT_GE(s, 1);
}

TEST_P(BothFormulations, MixedReferenceAgrees) {
  for (Index n : {8, 32}) {
    const auto p = european_step(GetParam(), n);
    const auto& map = p.disc->dof_map();
    const VectorXd u = solve_dpg_system(p.elements, map, p.constraints);
    const auto mixed = solve_mixed_reference(p.elements, map, p.constraints);
    EXPECT_LT(relative_difference(mixed.u, u), 1e-8) << n;

    const auto ind = error_indicator(p.elements, map, u);
    EXPECT_NEAR(mixed.epsilon_norm, ind.eta, 1e-8 * std::max(1.0, ind.eta));
    for (Index e = 0; e < n; ++e) {
      const auto& el = p.elements[static_cast<std::size_t>(e)];
      const VectorXd r = el.l - el.B * gather(u, map, e);
      const VectorXd eps = el.gram_factor.solve(r);
      EXPECT_LT((mixed.epsilon[static_cast<std::size_t>(e)] - eps).norm(), 1e-8 * std::max(1.0, eps.norm()));
    }
  }
}

TEST_P(BothFormulations, ZeroDataGivesZero) {
  auto p = european_step(GetParam(), 6);
  for (auto& el : p.elements) el = condense_element<double>(el.G, el.B, VectorXd::Zero(el.l.size()));
  for (auto& c : p.constraints) c.value = 0;
  const auto& map = p.disc->dof_map();
  EXPECT_LT(solve_dpg_system(p.elements, map, p.constraints).norm(), 1e-14);
  const auto mixed = solve_mixed_reference(p.elements, map, p.constraints);
  EXPECT_LT(mixed.u.norm(), 1e-14);
  EXPECT_LT(mixed.epsilon_norm, 1e-14);
}

TEST_P(BothFormulations, IndicatorVanishesForConsistentLoads) {
  auto p = european_step(GetParam(), 16);
  const auto& map = p.disc->dof_map();
  const auto state = p.disc->interpolate([](double x) { return std::max(std::exp(x) - 100, 0.0); });
  double l_norm = 0;
  for (Index e = 0; e < 16; ++e) {
    auto& el = p.elements[static_cast<std::size_t>(e)];
    el = condense_element<double>(el.G, el.B, el.B * gather(state.dofs, map, e));
    l_norm += el.l.squaredNorm();
  }
  p.constraints[0].value = state.dofs[p.constraints[0].dof];
  p.constraints[1].value = state.dofs[p.constraints[1].dof];
  const VectorXd u = solve_dpg_system(p.elements, map, p.constraints);
  EXPECT_LE(error_indicator(p.elements, map, u).eta, 1e-8 * std::sqrt(l_norm));
}

TEST_P(BothFormulations, PerturbationIncreasesIndicator) {
  const auto p = european_step(GetParam(), 32);
  const auto& map = p.disc->dof_map();
  const VectorXd u = solve_dpg_system(p.elements, map, p.constraints);
  const double eta = error_indicator(p.elements, map, u).eta;
  for (Index e : {3, 16, 30}) {
    VectorXd v = u;
    v[map.field_dof(e, 0)] += 1e-3;
    EXPECT_GT(error_indicator(p.elements, map, v).eta, eta);
  }
}

TEST_P(BothFormulations, RefinementDoesNotIncreaseIndicator) {
  double previous = std::numeric_limits<double>::infinity();
  for (Index n : {16, 32, 64, 128, 256}) {
    const auto p = european_step(GetParam(), n);
    const auto& map = p.disc->dof_map();
    const double eta = error_indicator(p.elements, map, solve_dpg_system(p.elements, map, p.constraints)).eta;
    EXPECT_LE(eta, previous * (1 + 1e-12)) << n;
    previous = eta;
  }
}

TEST_P(BothFormulations, MissingBoundaryConditionIsSingular) {
  auto p = european_step(GetParam(), 4, 0.01, 4.0, 5.0);
  p.elements[0] = condense_element<double>(MatrixXd::Identity(p.elements[0].G.rows(), p.elements[0].G.rows()),
                                           MatrixXd::Zero(p.elements[0].B.rows(), p.elements[0].B.cols()),
                                           p.elements[0].l);
  EXPECT_THROW(solve_dpg_system(p.elements, p.disc->dof_map(), p.constraints), SingularSystem);
}

INSTANTIATE_TEST_SUITE_P(Formulations, BothFormulations,
                         ::testing::Values(Formulation::primal, Formulation::ultraweak),
                         [](const auto& info) { return std::string(to_string(info.param)); });
