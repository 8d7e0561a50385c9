#pragma once

// Tabular results with run metadata, rendered as CSV (`#` metadata lines,
// header row, 12 significant digits) or JSON, and written atomically.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ffqkd/config.hpp"

namespace ffqkd::cli {

inline constexpr const char* kGenerator = "ffqkd 1.0.0";

using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
  std::string command;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  /// Derived scalars (crossovers, contours) reported alongside the rows.
  std::vector<std::pair<std::string, std::string>> annotations;

  void add_row(std::vector<Cell> row);
};

/// %.11e; nan and inf spelled out.
std::string format_value(double value);

/// The metadata carries every config key except `output`, so feeding an
/// emitted file back as a config reproduces the run.
std::string render_csv(const Table& table, const RunConfig& config);
std::string render_json(const Table& table, const RunConfig& config);
std::string render(const Table& table, const RunConfig& config);

/// Writes to a temporary sibling and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace ffqkd::cli
