#include "report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>

namespace dpgopt::cli {

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw std::logic_error("Table::add: row width mismatch");
  rows.push_back(std::move(row));
}

namespace {

std::string format_double(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

}  // namespace

std::string render_csv(const Table& t, int precision) {
  std::ostringstream out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << csv_field(t.columns[i]);
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      if (const auto* d = std::get_if<double>(&row[i]))
        out << format_double(*d, precision);
      else if (const auto* n = std::get_if<std::int64_t>(&row[i]))
        out << *n;
      else
        out << csv_field(std::get<std::string>(row[i]));
    }
    out << '\n';
  }
  return out.str();
}

std::string render_json(const Table& t, int precision) {
  nlohmann::ordered_json j;
  j["table"] = t.name;
  j["columns"] = t.columns;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json r = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (const auto* d = std::get_if<double>(&row[i])) {
        if (std::isfinite(*d))
          r[t.columns[i]] = std::strtod(format_double(*d, precision).c_str(), nullptr);
        else
          r[t.columns[i]] = nullptr;
      } else if (const auto* n = std::get_if<std::int64_t>(&row[i])) {
        r[t.columns[i]] = *n;
      } else {
        r[t.columns[i]] = std::get<std::string>(row[i]);
      }
    }
    j["rows"].push_back(std::move(r));
  }
  return j.dump(2) + "\n";
}

std::filesystem::path write_report(const Table& t, Format format, const std::filesystem::path& dir, int precision) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  const fs::path target = dir / (t.name + (format == Format::csv ? ".csv" : ".json"));
  const fs::path tmp = dir / ("." + target.filename().string() + ".tmp");
  const std::string body = format == Format::csv ? render_csv(t, precision) : render_json(t, precision);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << body;
    out.flush();
    if (!out) {
      fs::remove(tmp, ec);
      throw IoError("cannot write '" + tmp.string() + "'");
    }
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move report to '" + target.string() + "'");
  }
  return target;
}

}  // namespace dpgopt::cli
