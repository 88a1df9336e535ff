#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <thread>

#include "dpgopt/errors.hpp"
#include "dpgopt/greeks.hpp"

namespace dpgopt::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

/// Runs body(i) for i < n on up to `threads` workers; rethrows the first failure.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  const auto workers = static_cast<std::size_t>(std::max(1, std::min<int>(threads, static_cast<int>(n))));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

PricingResult solve(const RunConfig& c, const Contract& contract, const GridParams& grid) {
  if (contract.style == Style::american) return price_american(contract, c.market, grid, c.american_mode).pricing;
  return price(contract, c.market, grid);
}

double final_eta(const PricingResult& r) { return r.solution.eta.empty() ? 0.0 : r.solution.eta.back(); }

double max_eta(const PricingResult& r) {
  double m = 0;
  for (double e : r.solution.eta) m = std::max(m, e);
  return m;
}

Outcome run_price(const RunConfig& c) {
  const auto t0 = Clock::now();
  const PricingResult r = solve(c, c.contract, c.grid);
  Table t{"price", {"style", "right", "formulation", "n_elements", "n_steps", "theta", "S0", "K", "price"}, {}};
  std::vector<Cell> row = {std::string(to_string(c.contract.style)), std::string(to_string(c.contract.right)),
                           std::string(to_string(c.grid.formulation)), std::int64_t{c.grid.n_elements},
                           std::int64_t{c.grid.n_steps}, c.grid.theta, c.market.S0, c.contract.K, r.price};
  const auto& g = c.greeks;
  if (g.requested && (g.delta || g.gamma)) {
    const GreekField f = gamma_from_solution(r);
    if (g.delta) {
      t.columns.push_back("delta");
      row.push_back(f.delta_at_S0);
    }
    if (g.gamma) {
      t.columns.push_back("gamma");
      row.push_back(f.gamma_at_S0);
    }
  }
  if (g.requested && g.vega) {
    t.columns.push_back("vega");
    row.push_back(solve_sensitivity_pde(r, Parameter::sigma).value_at_S0);
  }
  if (g.requested && g.rho) {
    t.columns.push_back("rho");
    row.push_back(solve_sensitivity_pde(r, Parameter::r).value_at_S0);
  }
  t.columns.insert(t.columns.end(), {"eta_final", "eta_max"});
  row.insert(row.end(), {final_eta(r), max_eta(r)});
  t.add(std::move(row));
  return {std::move(t), "price " + fmt("%.10g", r.price) + ", solve " + fmt("%.3f s", r.wall_seconds) + ", total " +
                            fmt("%.3f s", seconds_since(t0))};
}

Outcome run_converge(const RunConfig& c, int threads) {
  const auto t0 = Clock::now();
  const auto& cv = c.converge;
  const auto& m = c.market;
  const ErrorWindow window;

  std::map<double, double> tree;
  if (c.contract.style == Style::american) {
    std::vector<double> spots = linf_spots(window);
    const auto l2 = l2_spots(window);
    spots.insert(spots.end(), l2.begin(), l2.end());
    std::vector<double> values(spots.size());
    parallel_for(spots.size(), threads, [&](std::size_t i) {
      values[i] = binomial_price(spots[i], c.contract.K, m.r, m.sigma, m.T, cv.binomial_steps, Style::american,
                                 c.contract.right);
    });
    for (std::size_t i = 0; i < spots.size(); ++i) tree[spots[i]] = values[i];
  }
  auto exact = [&](double S) {
    if (c.contract.style == Style::american) return tree.at(S);
    return bs_closed_form(S, c.contract.K, m.r, m.sigma, m.T, c.contract.right);
  };

  const auto levels = static_cast<std::size_t>(cv.levels);
  std::vector<GridParams> grids(levels, c.grid);
  for (std::size_t i = 0; i < levels; ++i)
    (cv.sweep == Sweep::space ? grids[i].n_elements : grids[i].n_steps) = cv.start << i;
  std::vector<RelativeErrors> errors(levels);
  std::vector<double> h(levels);
  parallel_for(levels, threads, [&](std::size_t i) {
    const PricingResult r = solve(c, c.contract, grids[i]);
    h[i] = r.disc->mesh().h();
    errors[i] = relative_errors([&](double S) { return r.value_at(S); }, exact, window);
  });

  Table t{"converge", {"level", "n_elements", "n_steps", "h", "dt", "l2", "linf", "order_l2", "order_linf"}, {}};
  for (std::size_t i = 0; i < levels; ++i) {
    Cell order_l2 = std::string(), order_linf = std::string();
    if (i > 0) {
      order_l2 = observed_order(errors[i - 1].l2, errors[i].l2);
      order_linf = observed_order(errors[i - 1].linf, errors[i].linf);
    }
    t.add({static_cast<std::int64_t>(i), std::int64_t{grids[i].n_elements}, std::int64_t{grids[i].n_steps}, h[i],
           m.T / static_cast<double>(grids[i].n_steps), errors[i].l2, errors[i].linf, order_l2, order_linf});
  }
  return {std::move(t), std::to_string(levels) + " levels, " + fmt("%.3f s", seconds_since(t0))};
}

Outcome run_greeks(const RunConfig& c) {
  const auto t0 = Clock::now();
  const PricingResult r = solve(c, c.contract, c.grid);
  const auto& g = c.greeks;
  const GreekField f = gamma_from_solution(r);
  VectorXd vega, rho;
  if (g.vega) vega = solve_sensitivity_pde(r, Parameter::sigma).grid_values;
  if (g.rho) rho = solve_sensitivity_pde(r, Parameter::r).grid_values;
  const VectorXd u = r.grid_values(-1);
  const bool closed_form = c.contract.style == Style::european;
  const auto& m = c.market;

  Table t{"greeks", {"S", "value"}, {}};
  if (g.delta) t.columns.push_back("delta");
  if (g.gamma) t.columns.push_back("gamma");
  if (g.vega) t.columns.push_back("vega");
  if (g.rho) t.columns.push_back("rho");
  if (closed_form) {
    if (g.delta) t.columns.push_back("delta_exact");
    if (g.gamma) t.columns.push_back("gamma_exact");
  }
  const double lo = c.contract.K / std::exp(1.0), hi = c.contract.K * std::exp(1.0);
  for (Index i = 0; i < f.S.size(); ++i) {
    const double S = f.S[i];
    if (S < lo || S > hi) continue;
    std::vector<Cell> row = {S, u[i]};
    if (g.delta) row.push_back(f.delta[i]);
    if (g.gamma) row.push_back(f.gamma[i]);
    if (g.vega) row.push_back(vega[i]);
    if (g.rho) row.push_back(rho[i]);
    if (closed_form) {
      if (g.delta) row.push_back(bs_delta(S, c.contract.K, m.r, m.sigma, m.T, c.contract.right));
      if (g.gamma) row.push_back(bs_gamma(S, c.contract.K, m.r, m.sigma, m.T));
    }
    t.add(std::move(row));
  }
  std::string summary = "delta(S0) " + fmt("%.8g", f.delta_at_S0) + ", gamma(S0) " + fmt("%.8g", f.gamma_at_S0);
  if (f.has_jump) summary += ", gamma jump flagged at " + std::to_string(f.jumps.size()) + " nodes";
  return {std::move(t), summary + ", " + fmt("%.3f s", seconds_since(t0))};
}

Outcome run_compare(const RunConfig& c, int threads) {
  const auto t0 = Clock::now();
  const std::vector<double> strikes = c.compare.strikes.empty() ? std::vector<double>{c.contract.K} : c.compare.strikes;
  const std::vector<double> spots = c.compare.spots.empty() ? std::vector<double>{c.market.S0} : c.compare.spots;

  std::vector<PricingResult> results(strikes.size());
  parallel_for(strikes.size(), threads, [&](std::size_t k) {
    Contract contract = c.contract;
    contract.K = strikes[k];
    results[k] = solve(c, contract, c.grid);
  });

  McConfig mc = c.mc;
  mc.threads = threads;
  const auto style = c.contract.style;
  const char* oracle = style == Style::european   ? "closed_form"
                       : style == Style::american ? "binomial"
                                                  : "monte_carlo";
  Table t{"compare", {"K", "S", "dpg", "oracle", "oracle_value", "oracle_std_error", "abs_dev", "rel_dev"}, {}};
  for (std::size_t k = 0; k < strikes.size(); ++k)
    for (double S : spots) {
      const double K = strikes[k];
      MarketParams m = c.market;
      m.S0 = S;
      double ref = 0, se = 0;
      if (style == Style::european) {
        ref = bs_closed_form(S, K, m.r, m.sigma, m.T, c.contract.right);
      } else if (style == Style::american) {
        ref = binomial_price(S, K, m.r, m.sigma, m.T, c.compare.binomial_steps, Style::american, c.contract.right);
      } else {
        const McEstimate e = style == Style::asian_fixed_strike
                                 ? mc_asian(m, K, mc)
                                 : mc_barrier(m, K, c.contract.right, *c.contract.barriers, c.contract.monitoring, mc);
        ref = e.price;
        se = e.std_error;
      }
      const double v = results[k].value_at(S);
      t.add({K, S, v, std::string(oracle), ref, se, v - ref, ref != 0 ? (v - ref) / ref : 0.0});
    }
  std::string summary = std::to_string(t.rows.size()) + " comparisons, " + fmt("%.3f s", seconds_since(t0));
  return {std::move(t), summary};
}

Outcome run_surface(const RunConfig& c) {
  const auto t0 = Clock::now();
  const PricingResult r = solve(c, c.contract, c.grid);
  const VectorXd x = r.disc->output_coordinates();
  Table t{"surface", {"step", "tau", "x", "u"}, {}};
  const auto& taus = r.solution.tau;
  for (std::size_t k = 0; k < taus.size(); ++k) {
    const VectorXd u = r.grid_values(static_cast<Index>(k));
    for (Index i = 0; i < x.size(); ++i) t.add({static_cast<std::int64_t>(k), taus[k], x[i], u[i]});
  }
  std::string summary =
      std::to_string(x.size()) + " nodes x " + std::to_string(taus.size()) + " levels, " + fmt("%.3f s", seconds_since(t0));
  return {std::move(t), summary};
}

}  // namespace

Outcome run(const RunConfig& config, int threads) {
  switch (config.command) {
    case Command::price: return run_price(config);
    case Command::converge: return run_converge(config, threads);
    case Command::greeks: return run_greeks(config);
    case Command::compare: return run_compare(config, threads);
    case Command::surface: return run_surface(config);
  }
  throw std::logic_error("unknown command");
}

}  // namespace dpgopt::cli
