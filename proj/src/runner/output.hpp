#pragma once
// Internal output helpers shared by the commands.

#include <filesystem>
#include <string>
#include <vector>

#include "diracloc/runner.hpp"

namespace diracloc::runner::detail {

// Comma-separated, '#' header lines (version, command, config hash), %.17g
// numbers, LF endings. The body is byte-identical for identical inputs.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  CsvTable& row();
  CsvTable& add(double x);
  CsvTable& add(long long x);
  CsvTable& add(int x) { return add(static_cast<long long>(x)); }
  CsvTable& add(const std::string& s);

  std::size_t rows() const noexcept { return body_.empty() ? 0 : n_rows_; }
  // Writes <dir>/<name>; returns the name for the outputs list.
  std::string write(const RunContext& ctx, const std::string& command, const std::string& name,
                    const std::vector<std::string>& notes = {}) const;

 private:
  void sep();
  std::vector<std::string> columns_;
  std::string body_;
  std::size_t n_rows_ = 0;
  std::size_t n_cells_ = 0;
};

std::string format_double(double x);

// Writes a JSON document with a "config_hash" member merged in.
std::string write_json(const RunContext& ctx, const std::string& name, const std::string& json_text);

// Reads the hash recorded in an output file (header comment or JSON member);
// empty when none is found.
std::string recorded_hash(const std::filesystem::path& file);

}  // namespace diracloc::runner::detail
