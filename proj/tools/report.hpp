#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "run_config.hpp"

namespace dpgopt::cli {

using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

/// Output failure; exit status 2.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Header row plus one line per row; doubles with `precision` significant digits.
std::string render_csv(const Table& t, int precision);
/// {"table": name, "columns": [...], "rows": [{column: value}, ...]} with the CSV's rounded values.
std::string render_json(const Table& t, int precision);

/// Writes <dir>/<name>.<csv|json> through a temporary file and rename; returns the path.
std::filesystem::path write_report(const Table& t, Format format, const std::filesystem::path& dir, int precision);

}  // namespace dpgopt::cli
