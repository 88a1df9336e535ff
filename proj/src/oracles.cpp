#include "dpgopt/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

namespace dpgopt {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi); }

D1D2 bs_d1_d2(double S, double K, double r, double sigma, double T) {
  const double sq = sigma * std::sqrt(T);
  const double d1 = (std::log(S / K) + (r + 0.5 * sigma * sigma) * T) / sq;
  return {d1, d1 - sq};
}

namespace {

void check_positive(double S, double K, double T) {
  if (!(S > 0 && K > 0 && T > 0)) throw std::invalid_argument("oracle: S, K and T must be positive");
}

}  // namespace

double bs_closed_form(double S, double K, double r, double sigma, double T, Right right) {
  check_positive(S, K, T);
  if (sigma < 0) throw std::invalid_argument("bs_closed_form: negative sigma");
  const double df = K * std::exp(-r * T);
  if (sigma == 0) return right == Right::call ? std::max(S - df, 0.0) : std::max(df - S, 0.0);
  const auto [d1, d2] = bs_d1_d2(S, K, r, sigma, T);
  if (right == Right::call) return S * normal_cdf(d1) - df * normal_cdf(d2);
  return df * normal_cdf(-d2) - S * normal_cdf(-d1);
}

double bs_delta(double S, double K, double r, double sigma, double T, Right right) {
  check_positive(S, K, T);
  const double n1 = normal_cdf(bs_d1_d2(S, K, r, sigma, T).d1);
  return right == Right::call ? n1 : n1 - 1;
}

double bs_gamma(double S, double K, double r, double sigma, double T) {
  check_positive(S, K, T);
  return normal_pdf(bs_d1_d2(S, K, r, sigma, T).d1) / (S * sigma * std::sqrt(T));
}

double bs_vega(double S, double K, double r, double sigma, double T) {
  check_positive(S, K, T);
  return S * normal_pdf(bs_d1_d2(S, K, r, sigma, T).d1) * std::sqrt(T);
}

double binomial_price(double S, double K, double r, double sigma, double T, int n_steps, Style style, Right right) {
  check_positive(S, K, T);
  if (n_steps < 1) throw std::invalid_argument("binomial_price: need at least one step");
  if (style != Style::european && style != Style::american)
    throw std::invalid_argument("binomial_price: only European and American exercise");
  const double dt = T / n_steps;
  const double u = std::exp(sigma * std::sqrt(dt));
  const double d = 1 / u;
  const double growth = std::exp(r * dt);
  const double p = (growth - d) / (u - d);
  if (!(p > 0 && p < 1)) throw std::invalid_argument("binomial_price: risk-neutral probability outside (0, 1)");
  const double disc = 1 / growth;
  auto intrinsic = [&](double s) { return right == Right::call ? std::max(s - K, 0.0) : std::max(K - s, 0.0); };

  std::vector<double> v(static_cast<std::size_t>(n_steps) + 1);
  for (int j = 0; j <= n_steps; ++j) v[j] = intrinsic(S * std::pow(u, 2 * j - n_steps));
  for (int i = n_steps - 1; i >= 0; --i) {
    for (int j = 0; j <= i; ++j) {
      v[j] = disc * (p * v[j + 1] + (1 - p) * v[j]);
      if (style == Style::american) v[j] = std::max(v[j], intrinsic(S * std::pow(u, 2 * j - i)));
    }
  }
  return v[0];
}

void McConfig::validate() const {
  if (n_paths < 1) throw std::invalid_argument("McConfig: n_paths must be at least 1");
  if (n_steps < 1) throw std::invalid_argument("McConfig: n_steps must be at least 1");
  if (n_batches < 1) throw std::invalid_argument("McConfig: n_batches must be at least 1");
  if (threads < 1) throw std::invalid_argument("McConfig: threads must be at least 1");
}

namespace {

struct KahanSum {
  double sum = 0;
  double c = 0;
  void add(double x) {
    const double y = x - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

struct BatchTotals {
  KahanSum sum;
  KahanSum sum_sq;
  std::int64_t count = 0;
};

/// Runs path_payoff(rng_normal, sign) over batches with independent
/// substreams seeded from (seed, batch). Antithetic pairs are averaged into
/// one sample.
template <typename PathPayoff>
McEstimate run_batches(const McConfig& cfg, PathPayoff path_payoff) {
  cfg.validate();
  const int nb = cfg.n_batches;
  std::vector<BatchTotals> totals(static_cast<std::size_t>(nb));

  auto run_batch = [&](int batch) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(batch), 0x9e3779b9u};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;
    const std::int64_t begin = cfg.n_paths * batch / nb;
    const std::int64_t end = cfg.n_paths * (batch + 1) / nb;
    auto& t = totals[static_cast<std::size_t>(batch)];
    std::vector<double> z;
    for (std::int64_t path = begin; path < end; ++path) {
      z.clear();
      double x = path_payoff([&] {
        z.push_back(normal(rng));
        return z.back();
      });
      if (cfg.antithetic) {
        std::size_t k = 0;
        x = 0.5 * (x + path_payoff([&] { return -z[k++]; }));
      }
      t.sum.add(x);
      t.sum_sq.add(x * x);
      ++t.count;
    }
  };

  const int threads = std::min(cfg.threads, nb);
  if (threads <= 1) {
    for (int b = 0; b < nb; ++b) run_batch(b);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (int b = w; b < nb; b += threads) run_batch(b);
      });
    for (auto& th : pool) th.join();
  }

  // Reduction in batch order, independent of thread interleaving.
  KahanSum sum, sum_sq;
  std::int64_t count = 0;
  McEstimate est;
  for (const auto& t : totals) {
    sum.add(t.sum.sum);
    sum_sq.add(t.sum_sq.sum);
    count += t.count;
    if (t.count > 0) est.batch_means.push_back(t.sum.sum / static_cast<double>(t.count));
  }
  const double n = static_cast<double>(count);
  est.price = sum.sum / n;
  const double var = count > 1 ? std::max(0.0, (sum_sq.sum - n * est.price * est.price) / (n - 1)) : 0.0;
  est.std_error = std::sqrt(var / n);
  return est;
}

}  // namespace

McEstimate mc_asian(const MarketParams& m, double K, const McConfig& cfg) {
  m.validate();
  const double dt = m.T / cfg.n_steps;
  const double drift = (m.r - 0.5 * m.sigma * m.sigma) * dt;
  const double vol = m.sigma * std::sqrt(dt);
  const double disc = std::exp(-m.r * m.T);
  return run_batches(cfg, [&](auto&& next_normal) {
    double s = m.S0;
    double area = 0.5 * s;
    for (int i = 1; i <= cfg.n_steps; ++i) {
      s *= std::exp(drift + vol * next_normal());
      area += (i == cfg.n_steps ? 0.5 : 1.0) * s;
    }
    const double average = area / cfg.n_steps;
    return disc * std::max(average - K, 0.0);
  });
}

McEstimate mc_barrier(const MarketParams& m, double K, Right right, const Barriers& barriers,
                      const std::vector<double>& schedule, const McConfig& cfg) {
  m.validate();
  std::vector<double> dates;
  for (double t : schedule) {
    if (!(t > 0 && t <= m.T * (1 + 1e-12))) throw std::invalid_argument("mc_barrier: schedule outside (0, T]");
    if (!dates.empty() && !(t > dates.back())) throw std::invalid_argument("mc_barrier: schedule not increasing");
    dates.push_back(t);
  }
  const bool monitored_at_T = !dates.empty() && std::abs(dates.back() - m.T) <= 1e-12 * m.T;
  if (!monitored_at_T) dates.push_back(m.T);
  const std::size_t n_checks = monitored_at_T ? dates.size() : dates.size() - 1;

  std::vector<double> drift(dates.size()), vol(dates.size());
  double prev = 0;
  for (std::size_t k = 0; k < dates.size(); ++k) {
    const double dt = dates[k] - prev;
    drift[k] = (m.r - 0.5 * m.sigma * m.sigma) * dt;
    vol[k] = m.sigma * std::sqrt(dt);
    prev = dates[k];
  }
  const double disc = std::exp(-m.r * m.T);
  return run_batches(cfg, [&](auto&& next_normal) {
    double log_s = std::log(m.S0);
    bool alive = true;
    for (std::size_t k = 0; k < dates.size(); ++k) {
      log_s += drift[k] + vol[k] * next_normal();
      if (k < n_checks) {
        const double s = std::exp(log_s);
        if (s < barriers.lower || s > barriers.upper) alive = false;
      }
    }
    if (!alive) return 0.0;
    const double s = std::exp(log_s);
    return disc * (right == Right::call ? std::max(s - K, 0.0) : std::max(K - s, 0.0));
  });
}

}  // namespace dpgopt
