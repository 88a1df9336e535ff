#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dpgopt/errors.hpp"
#include "dpgopt/models.hpp"
#include "dpgopt/oracles.hpp"

using namespace dpgopt;

TEST(ClosedForm, AtTheMoneyD1D2) {
  const auto d = bs_d1_d2(100, 100, 0.05, 0.2, 1);
  EXPECT_NEAR(d.d1, 0.35, 1e-15);
  EXPECT_NEAR(d.d2, 0.15, 1e-15);
  EXPECT_NEAR(bs_closed_form(100, 100, 0.05, 0.2, 1, Right::call), 10.450583572185565, 1e-12);
}

TEST(ClosedForm, DeterministicLimit) {
  EXPECT_NEAR(bs_closed_form(120, 100, 0, 0, 1, Right::call), 20, 1e-14);
  EXPECT_NEAR(bs_closed_form(120, 100, 0, 1e-12, 1, Right::call), 20, 1e-10);
  EXPECT_NEAR(bs_closed_form(80, 100, 0.05, 0, 1, Right::put), 100 * std::exp(-0.05) - 80, 1e-12);
}

TEST(ClosedForm, PutCallParity) {
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> U(0, 1);
  for (int i = 0; i < 200; ++i) {
    const double S = 20 + 200 * U(gen), K = 20 + 200 * U(gen), r = 0.2 * U(gen), sigma = 0.05 + U(gen),
                 T = 0.05 + 3 * U(gen);
    const double c = bs_closed_form(S, K, r, sigma, T, Right::call);
    const double p = bs_closed_form(S, K, r, sigma, T, Right::put);
    EXPECT_NEAR(c - p, S - K * std::exp(-r * T), 1e-10 * (S + K));
  }
}

TEST(ClosedForm, NormalCdfAccuracy) {
  EXPECT_NEAR(normal_cdf(0), 0.5, 1e-16);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-15);
  EXPECT_NEAR(normal_cdf(-8), 6.22096057427178e-16, 1e-28);
  for (double x = -5; x <= 5; x += 0.25) EXPECT_NEAR(normal_cdf(x) + normal_cdf(-x), 1.0, 1e-15);
}

TEST(ClosedForm, GreeksMatchFiniteDifferences) {
  const double S = 95, K = 100, r = 0.05, sigma = 0.25, T = 0.7, h = 1e-3;
  auto c = [&](double s, double v) { return bs_closed_form(s, K, r, v, T, Right::call); };
  EXPECT_NEAR(bs_delta(S, K, r, sigma, T, Right::call), (c(S + h, sigma) - c(S - h, sigma)) / (2 * h), 1e-8);
  EXPECT_NEAR(bs_delta(S, K, r, sigma, T, Right::put), bs_delta(S, K, r, sigma, T, Right::call) - 1, 1e-14);
  EXPECT_NEAR(bs_gamma(S, K, r, sigma, T), (c(S + h, sigma) - 2 * c(S, sigma) + c(S - h, sigma)) / (h * h), 1e-5);
  EXPECT_NEAR(bs_vega(S, K, r, sigma, T), (c(S, sigma + h) - c(S, sigma - h)) / (2 * h), 1e-5);
  EXPECT_NEAR(bs_gamma(100, 100, 0.05, 0.2, 1), 0.018762017345846895, 1e-12);
}

TEST(Binomial, OneStepByHand) {
  const double u = std::exp(0.2), d = 1 / u, p = (1 - d) / (u - d);
  const double expected = p * (100 * u - 100);
  EXPECT_NEAR(binomial_price(100, 100, 0, 0.2, 1, 1, Style::european, Right::call), expected, 1e-12);
  EXPECT_NEAR(expected, 9.966, 1e-3);
}

TEST(Binomial, ConvergesToClosedForm) {
  for (Right right : {Right::call, Right::put}) {
    const double exact = bs_closed_form(100, 100, 0.05, 0.2, 1, right);
    EXPECT_NEAR(binomial_price(100, 100, 0.05, 0.2, 1, 10000, Style::european, right), exact, 5e-3);
  }
}

TEST(Binomial, FirstOrderInSteps) {
  const double exact = bs_closed_form(100, 100, 0.05, 0.2, 1, Right::put);
  const double e1 = std::abs(binomial_price(100, 100, 0.05, 0.2, 1, 200, Style::european, Right::put) - exact);
  const double e2 = std::abs(binomial_price(100, 100, 0.05, 0.2, 1, 400, Style::european, Right::put) - exact);
  const double e3 = std::abs(binomial_price(100, 100, 0.05, 0.2, 1, 800, Style::european, Right::put) - exact);
  EXPECT_NEAR(std::log2(e1 / e2), 1.0, 0.3);
  EXPECT_NEAR(std::log2(e2 / e3), 1.0, 0.3);
}

TEST(Binomial, AmericanDominatesEuropean) {
  for (int n = 1; n <= 60; ++n) {
    const double a = binomial_price(100, 100, 0.05, 0.2, 1, n, Style::american, Right::put);
    const double e = binomial_price(100, 100, 0.05, 0.2, 1, n, Style::european, Right::put);
    EXPECT_GE(a, e) << n;
  }
}

TEST(Binomial, RejectsNegativeProbability) {
  EXPECT_THROW(binomial_price(100, 100, 2.0, 0.05, 1, 1, Style::european, Right::call), std::invalid_argument);
  EXPECT_THROW(binomial_price(100, 100, 0.05, 0.2, 1, 0, Style::european, Right::call), std::invalid_argument);
}

TEST(MonteCarlo, AsianDeterministicPath) {
  const MarketParams m{0.1, 1e-10, 100, 1};
  McConfig cfg;
  cfg.n_paths = 64;
  cfg.n_steps = 500;
  const double average = 100 * (std::exp(0.1) - 1) / 0.1;
  const auto est = mc_asian(m, 90, cfg);
  EXPECT_NEAR(est.price, std::exp(-0.1) * (average - 90), 1e-4);
  EXPECT_LT(est.std_error, 1e-6);
}

TEST(MonteCarlo, AsianReferenceValue) {
  const MarketParams m{0.15, 0.3, 100, 1};
  McConfig cfg;
  cfg.n_paths = 200000;
  cfg.antithetic = true;
  const auto est = mc_asian(m, 100, cfg);
  EXPECT_NEAR(est.price, 10.210, 3 * est.std_error);
}

TEST(MonteCarlo, ErrorShrinksWithSquareRootOfPaths) {
  const MarketParams m{0.05, 0.2, 100, 1};
  McConfig cfg;
  cfg.n_steps = 50;
  cfg.n_paths = 40000;
  const double se1 = mc_asian(m, 100, cfg).std_error;
  cfg.n_paths = 80000;
  const double se2 = mc_asian(m, 100, cfg).std_error;
  EXPECT_NEAR(se2 / se1, 1 / std::sqrt(2.0), 0.05);
}

TEST(MonteCarlo, ReproducibleAndThreadIndependent) {
  const MarketParams m{0.1, 0.2, 100, 0.5};
  McConfig cfg;
  cfg.n_paths = 20000;
  cfg.n_steps = 20;
  const auto a = mc_barrier(m, 100, Right::call, Barriers{95, 125}, weekly_schedule(0.5), cfg);
  const auto b = mc_barrier(m, 100, Right::call, Barriers{95, 125}, weekly_schedule(0.5), cfg);
  cfg.threads = 4;
  const auto c = mc_barrier(m, 100, Right::call, Barriers{95, 125}, weekly_schedule(0.5), cfg);
  EXPECT_EQ(a.price, b.price);
  EXPECT_EQ(a.price, c.price);
  EXPECT_EQ(a.std_error, c.std_error);
  cfg.seed += 1;
  EXPECT_NE(mc_barrier(m, 100, Right::call, Barriers{95, 125}, weekly_schedule(0.5), cfg).price, a.price);
}

TEST(MonteCarlo, BarrierWithoutMonitoringIsEuropean) {
  const MarketParams m{0.1, 0.2, 100, 0.5};
  McConfig cfg;
  cfg.n_paths = 200000;
  const double exact = bs_closed_form(100, 100, 0.1, 0.2, 0.5, Right::call);
  const auto none = mc_barrier(m, 100, Right::call, Barriers{95, 125}, {}, cfg);
  EXPECT_NEAR(none.price, exact, 3 * none.std_error);
  const auto wide = mc_barrier(m, 100, Right::call, Barriers{1e-300, 1e300}, daily_schedule(0.5), cfg);
  EXPECT_NEAR(wide.price, exact, 3 * wide.std_error);
}

TEST(MonteCarlo, BarrierOrdering) {
  const MarketParams m{0.1, 0.2, 100, 0.5};
  McConfig cfg;
  cfg.n_paths = 100000;
  cfg.antithetic = true;
  const auto daily = mc_barrier(m, 100, Right::call, Barriers{95, 125}, daily_schedule(0.5), cfg);
  const auto weekly = mc_barrier(m, 100, Right::call, Barriers{95, 125}, weekly_schedule(0.5), cfg);
  EXPECT_GT(weekly.price, daily.price);
  EXPECT_LT(weekly.price, bs_closed_form(100, 100, 0.1, 0.2, 0.5, Right::call));
}

TEST(MonteCarlo, BatchMeansAgreeWithPooledMean) {
  const MarketParams m{0.1, 0.2, 100, 0.5};
  McConfig cfg;
  cfg.n_paths = 160000;
  cfg.n_batches = 16;
  const auto est = mc_barrier(m, 100, Right::call, Barriers{95, 125}, weekly_schedule(0.5), cfg);
  ASSERT_EQ(est.batch_means.size(), 16u);
  const double per_batch_se = est.std_error * std::sqrt(16.0);
  int outside = 0;
  for (double b : est.batch_means)
    if (std::abs(b - est.price) / per_batch_se > 2.576) ++outside;
  EXPECT_LE(outside, 2);
}

TEST(MonteCarlo, RejectsBadConfig) {
  McConfig cfg;
  cfg.n_paths = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.threads = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(ErrorNorms, ConstantRelativeError) {
  auto exact = [](double S) { return 0.01 * S * S; };
  const auto e = relative_errors([&](double S) { return 1.01 * exact(S); }, exact);
  EXPECT_NEAR(e.linf, 0.01, 1e-14);
  EXPECT_NEAR(e.l2, 0.01 * std::sqrt(std::log(120.0 / 80.0)), 1e-14);
  EXPECT_EQ(relative_errors(exact, exact).l2, 0.0);
}

TEST(ErrorNorms, SpotsAndWorstPoint) {
  const ErrorWindow w;
  const auto linf = linf_spots(w), l2 = l2_spots(w);
  ASSERT_EQ(linf.size(), 41u);
  ASSERT_EQ(l2.size(), 401u);
  EXPECT_EQ(linf.front(), 80.0);
  EXPECT_EQ(linf[20], 100.0);
  EXPECT_NEAR(l2.back(), 120.0, 1e-12);
  const auto e = relative_errors([](double S) { return S == 97.0 ? 2.0 : 1.0; }, [](double) { return 1.0; });
  EXPECT_EQ(e.worst_S, 97.0);
  EXPECT_EQ(e.linf, 1.0);
}

TEST(ErrorNorms, ObservedOrderAndBadWindow) {
  EXPECT_DOUBLE_EQ(observed_order(4e-3, 1e-3), 2.0);
  ErrorWindow w;
  w.S_hi = 50;
  EXPECT_THROW(linf_spots(w), std::invalid_argument);
  w = {};
  w.l2_points = 1;
  EXPECT_THROW(relative_errors([](double) { return 1.0; }, [](double) { return 1.0; }, w), std::invalid_argument);
}
