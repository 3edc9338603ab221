#pragma once

// CSV datasets: header row, feature columns x0..x{d-1}, `a`, `y`, and an
// optional real score column. Other columns are ignored.

#include <filesystem>
#include <string>
#include <vector>

#include "eqodds/core.h"

namespace eqodds::io {

// Throws ParseError (with the 1-based line) for malformed rows and
// SchemaError for a missing `a`, `y` or gap in x0..x{d-1}. The score column is
// read when present under `score_column`.
Dataset load_csv(const std::filesystem::path& path, const std::string& score_column = "score");
Dataset parse_csv(const std::string& text, const std::string& score_column = "score");

// Shortest round-trip formatting, so load(write(d)) reproduces d bit for bit.
std::string format_csv(const Dataset& data);
void write_csv(const Dataset& data, const std::filesystem::path& path);

// Plain numeric table (header plus real-valued rows), used for files whose
// labels or protected attribute are not binary.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  // Throws SchemaError when the column is absent.
  std::size_t column(const std::string& name) const;
};
Table parse_table(const std::string& text);
Table load_table(const std::filesystem::path& path);
std::string format_table(const Table& table);

// Writes to a sibling temporary file, then renames over the target.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace eqodds::io
