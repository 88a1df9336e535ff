#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpgopt/oracles.hpp"
#include "dpgopt/pricers.hpp"

namespace dpgopt::cli {

enum class Command { price, converge, greeks, compare, surface };
enum class Format { csv, json };
enum class Sweep { space, time };

Command command_from_string(const std::string& s);
std::string to_string(Command c);

/// Malformed or out-of-range configuration; exit status 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GreekRequest {
  bool requested = false;  // price reports Greeks only when asked
  bool delta = true;
  bool gamma = true;
  bool vega = false;
  bool rho = false;
};

struct ConvergeConfig {
  Sweep sweep = Sweep::space;
  int levels = 5;
  Index start = 32;  // elements or steps of the coarsest level
  int binomial_steps = 5000;
};

struct CompareConfig {
  std::vector<double> strikes;  // empty: the contract strike
  std::vector<double> spots;    // empty: S0
  int binomial_steps = 5000;
};

struct RunConfig {
  Command command = Command::price;
  Contract contract;
  MarketParams market;
  GridParams grid;
  AmericanMode american_mode = AmericanMode::lcp;
  GreekRequest greeks;
  ConvergeConfig converge;
  CompareConfig compare;
  McConfig mc;
  Format format = Format::csv;
  std::filesystem::path out_dir = ".";
  int precision = 17;
};

/// Parses and validates the whole configuration; throws ConfigError.
RunConfig load_config(const std::filesystem::path& file, Command command);

}  // namespace dpgopt::cli
