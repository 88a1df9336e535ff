#pragma once

#include <string>

#include "report.hpp"
#include "run_config.hpp"

namespace dpgopt::cli {

struct Outcome {
  Table table;
  std::string summary;  // stdout only; carries timings
};

/// Runs a validated configuration; numerical failures propagate as exceptions.
Outcome run(const RunConfig& config, int threads);

}  // namespace dpgopt::cli
