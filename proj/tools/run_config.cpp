#include "run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

namespace dpgopt::cli {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

double number(const json& j, const std::string& where, const std::string& key, double fallback, double lo, double hi) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x) || x < lo || x > hi)
    throw ConfigError(where + "." + key + ": " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  return x;
}

std::int64_t integer(const json& j, const std::string& where, const std::string& key, std::int64_t fallback,
                     std::int64_t lo, std::int64_t hi) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < lo || x > hi)
    throw ConfigError(where + "." + key + ": " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  return x;
}

std::string text(const json& j, const std::string& where, const std::string& key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) throw ConfigError(where + "." + key + ": expected a string");
  return j.at(key).get<std::string>();
}

bool flag(const json& j, const std::string& where, const std::string& key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw ConfigError(where + "." + key + ": expected true or false");
  return j.at(key).get<bool>();
}

std::vector<double> numbers(const json& j, const std::string& where, const std::string& key, double lo, double hi) {
  std::vector<double> out;
  if (!j.contains(key)) return out;
  if (!j.at(key).is_array()) throw ConfigError(where + "." + key + ": expected an array");
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected numbers");
    const double x = v.get<double>();
    if (!std::isfinite(x) || x < lo || x > hi) throw ConfigError(where + "." + key + ": value out of range");
    out.push_back(x);
  }
  return out;
}

template <class F>
auto parse_enum(const std::string& where, const std::string& value, F from_string) {
  try {
    return from_string(value);
  } catch (const std::exception&) {
    throw ConfigError(where + ": unknown value '" + value + "'");
  }
}

void parse_market(const json& j, MarketParams& m) {
  check_keys(j, "market", {"r", "sigma", "S0", "T"});
  m.r = number(j, "market", "r", m.r, -1, 1);
  m.sigma = number(j, "market", "sigma", m.sigma, 1e-3, 5);
  m.S0 = number(j, "market", "S0", m.S0, 1e-6, 1e6);
  m.T = number(j, "market", "T", m.T, 1e-4, 50);
}

void parse_contract(const json& j, const MarketParams& m, Contract& c) {
  check_keys(j, "contract", {"style", "right", "K", "barriers", "monitoring"});
  c.style = parse_enum("contract.style", text(j, "contract", "style", "european"), style_from_string);
  c.right = parse_enum("contract.right", text(j, "contract", "right", "call"), right_from_string);
  c.K = number(j, "contract", "K", c.K, 1e-6, 1e6);
  if (j.contains("barriers")) {
    const json& b = j.at("barriers");
    check_keys(b, "contract.barriers", {"lower", "upper"});
    if (!b.contains("lower") || !b.contains("upper")) throw ConfigError("contract.barriers: lower and upper required");
    c.barriers = Barriers{number(b, "contract.barriers", "lower", 0, 1e-6, 1e6),
                          number(b, "contract.barriers", "upper", 0, 1e-6, 1e6)};
  }
  if (j.contains("monitoring")) {
    const json& s = j.at("monitoring");
    if (s.is_string()) {
      const auto name = s.get<std::string>();
      if (name == "daily")
        c.monitoring = daily_schedule(m.T);
      else if (name == "weekly")
        c.monitoring = weekly_schedule(m.T);
      else
        throw ConfigError("contract.monitoring: expected daily, weekly or an array of dates");
    } else {
      c.monitoring = numbers(j, "contract", "monitoring", 0, m.T);
    }
  }
  if (c.style == Style::double_barrier && !c.barriers) throw ConfigError("contract.barriers: required for barrier");
  if (c.style != Style::double_barrier && (c.barriers || !c.monitoring.empty()))
    throw ConfigError("contract: barriers and monitoring apply to barrier only");
}

void parse_grid(const json& j, GridParams& g) {
  check_keys(j, "discretization", {"formulation", "p", "delta_p", "n_elements", "n_steps", "theta", "startup_steps"});
  g.formulation = parse_enum("discretization.formulation", text(j, "discretization", "formulation", "ultraweak"),
                             formulation_from_string);
  g.order = static_cast<int>(integer(j, "discretization", "p", g.order, 1, 1));
  g.enrichment = static_cast<int>(integer(j, "discretization", "delta_p", g.enrichment, 1, 4));
  g.n_elements = integer(j, "discretization", "n_elements", g.n_elements, 2, 100000);
  g.n_steps = integer(j, "discretization", "n_steps", g.n_steps, 1, 1000000);
  g.theta = number(j, "discretization", "theta", g.theta, 0.5, 1);
  g.startup_steps = static_cast<int>(integer(j, "discretization", "startup_steps", g.startup_steps, 0, 100));
}

void parse_mc(const json& j, McConfig& mc) {
  check_keys(j, "monte_carlo", {"paths", "steps", "seed", "antithetic", "batches"});
  mc.n_paths = integer(j, "monte_carlo", "paths", mc.n_paths, 2, std::int64_t{1} << 40);
  mc.n_steps = static_cast<int>(integer(j, "monte_carlo", "steps", mc.n_steps, 1, 100000));
  mc.seed = static_cast<std::uint64_t>(integer(j, "monte_carlo", "seed", static_cast<std::int64_t>(mc.seed), 0,
                                               std::numeric_limits<std::int64_t>::max()));
  mc.antithetic = flag(j, "monte_carlo", "antithetic", mc.antithetic);
  mc.n_batches = static_cast<int>(integer(j, "monte_carlo", "batches", mc.n_batches, 1, 1024));
}

// Pricing inputs the library would reject later, reported as configuration errors.
void validate_domain(const RunConfig& c) {
  const StateTransform t = default_transform(c.contract);
  auto inside = [&](double S) {
    if (c.contract.style == Style::asian_fixed_strike) {
      asian_evaluation_point(t, c.contract.K, S);
    } else {
      const double x = to_state(t, S);
      if (x < t.x_min || x > t.x_max) throw std::out_of_range("spot outside the truncated domain");
    }
  };
  try {
    inside(c.market.S0);
    for (double S : c.compare.spots) inside(S);
    for (double K : c.compare.strikes) {
      Contract k = c.contract;
      k.K = K;
      if (k.style == Style::asian_fixed_strike) asian_evaluation_point(t, K, c.market.S0);
      k.validate(c.market);
    }
  } catch (const std::exception& e) {
    throw ConfigError(std::string("domain: ") + e.what());
  }
}

}  // namespace

Command command_from_string(const std::string& s) {
  if (s == "price") return Command::price;
  if (s == "converge") return Command::converge;
  if (s == "greeks") return Command::greeks;
  if (s == "compare") return Command::compare;
  if (s == "surface") return Command::surface;
  throw ConfigError("unknown command '" + s + "'");
}

std::string to_string(Command c) {
  switch (c) {
    case Command::price: return "price";
    case Command::converge: return "converge";
    case Command::greeks: return "greeks";
    case Command::compare: return "compare";
    case Command::surface: return "surface";
  }
  return "";
}

RunConfig load_config(const std::filesystem::path& file, Command command) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config '" + file.string() + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "config",
             {"$schema", "command", "contract", "market", "discretization", "american", "greeks", "converge", "compare",
              "monte_carlo", "output"});

  RunConfig c;
  c.command = command;
  if (j.contains("command") && command_from_string(text(j, "config", "command", "")) != command)
    throw ConfigError("config.command does not match the command line");
  if (j.contains("market")) parse_market(j.at("market"), c.market);
  if (j.contains("contract")) parse_contract(j.at("contract"), c.market, c.contract);
  if (j.contains("discretization")) parse_grid(j.at("discretization"), c.grid);
  if (j.contains("american")) {
    const json& a = j.at("american");
    check_keys(a, "american", {"mode"});
    c.american_mode = parse_enum("american.mode", text(a, "american", "mode", "lcp"), american_mode_from_string);
  }
  if (j.contains("greeks")) {
    const json& g = j.at("greeks");
    check_keys(g, "greeks", {"delta", "gamma", "vega", "rho"});
    c.greeks = {true, flag(g, "greeks", "delta", true), flag(g, "greeks", "gamma", true), flag(g, "greeks", "vega", false),
                flag(g, "greeks", "rho", false)};
  }
  if (j.contains("converge")) {
    const json& v = j.at("converge");
    check_keys(v, "converge", {"sweep", "levels", "start", "binomial_steps"});
    const auto sweep = text(v, "converge", "sweep", "space");
    if (sweep != "space" && sweep != "time") throw ConfigError("converge.sweep: expected space or time");
    c.converge.sweep = sweep == "space" ? Sweep::space : Sweep::time;
    c.converge.levels = static_cast<int>(integer(v, "converge", "levels", c.converge.levels, 2, 12));
    c.converge.start = integer(v, "converge", "start", c.converge.start, 2, 100000);
    c.converge.binomial_steps = static_cast<int>(integer(v, "converge", "binomial_steps", 5000, 1, 100000));
  }
  if (j.contains("compare")) {
    const json& v = j.at("compare");
    check_keys(v, "compare", {"strikes", "spots", "binomial_steps"});
    c.compare.strikes = numbers(v, "compare", "strikes", 1e-6, 1e6);
    c.compare.spots = numbers(v, "compare", "spots", 1e-6, 1e6);
    c.compare.binomial_steps = static_cast<int>(integer(v, "compare", "binomial_steps", 5000, 1, 100000));
  }
  if (j.contains("monte_carlo")) parse_mc(j.at("monte_carlo"), c.mc);
  if (j.contains("output")) {
    const json& o = j.at("output");
    check_keys(o, "output", {"format", "path", "precision"});
    const auto format = text(o, "output", "format", "csv");
    if (format != "csv" && format != "json") throw ConfigError("output.format: expected csv or json");
    c.format = format == "csv" ? Format::csv : Format::json;
    c.out_dir = text(o, "output", "path", ".");
    c.precision = static_cast<int>(integer(o, "output", "precision", 17, 1, 17));
  }

  try {
    c.market.validate();
    c.contract.validate(c.market);
    c.grid.validate();
    c.mc.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  validate_domain(c);

  const bool european = c.contract.style == Style::european;
  const bool american = c.contract.style == Style::american;
  if (command == Command::converge && !european && !american)
    throw ConfigError("converge: needs a european or american contract");
  if (command == Command::converge && c.converge.sweep == Sweep::space &&
      (c.converge.start << (c.converge.levels - 1)) > 100000)
    throw ConfigError("converge: finest level exceeds 100000 elements");
  if (command == Command::greeks) c.greeks.requested = true;
  if (c.greeks.requested && c.contract.style == Style::asian_fixed_strike)
    throw ConfigError("greeks: not available for asian contracts");
  if (c.greeks.requested && (c.greeks.vega || c.greeks.rho) && !european)
    throw ConfigError("greeks: vega and rho need a european contract");
  if (command == Command::greeks && !c.greeks.delta && !c.greeks.gamma && !c.greeks.vega && !c.greeks.rho)
    throw ConfigError("greeks: nothing requested");
  return c;
}

}  // namespace dpgopt::cli
