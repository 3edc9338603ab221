#include "eqodds/csv_io.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "eqodds/errors.h"

namespace eqodds::io {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_real(std::string_view field, const std::string& column, std::size_t line) {
  double v = 0.0;
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw ParseError("column '" + column + "': cannot parse '" + std::string(field) + "' as a real", line);
  }
  return v;
}

int parse_bit(std::string_view field, const std::string& column, std::size_t line) {
  if (field == "0") return 0;
  if (field == "1") return 1;
  throw ParseError("column '" + column + "' must be 0 or 1, got '" + std::string(field) + "'", line);
}

void append_real(std::string& out, double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

Dataset parse_csv(const std::string& text, const std::string& score_column) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;

  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    for (auto f : split_fields(line)) header.emplace_back(f);
    break;
  }
  if (header.empty()) throw ParseError("missing header row", line_no == 0 ? 1 : line_no);

  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!col.emplace(header[i], i).second) {
      throw ParseError("duplicate column '" + header[i] + "'", line_no);
    }
  }
  if (!col.count("a")) throw SchemaError("a");
  if (!col.count("y")) throw SchemaError("y");

  std::size_t d = 0;
  for (const auto& [name, idx] : col) {
    if (name.size() > 1 && name[0] == 'x' &&
        name.find_first_not_of("0123456789", 1) == std::string::npos) {
      d = std::max<std::size_t>(d, std::stoul(name.substr(1)) + 1);
    }
  }
  std::vector<std::size_t> feature_cols(d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto it = col.find("x" + std::to_string(j));
    if (it == col.end()) throw SchemaError("x" + std::to_string(j));
    feature_cols[j] = it->second;
  }
  const std::size_t a_col = col.at("a");
  const std::size_t y_col = col.at("y");
  const auto score_it = col.find(score_column);
  const bool has_score = score_it != col.end();

  std::vector<LabeledSample> rows;
  std::vector<double> scores;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    }
    LabeledSample s;
    s.x.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      s.x[j] = parse_real(fields[feature_cols[j]], header[feature_cols[j]], line_no);
    }
    s.a = parse_bit(fields[a_col], "a", line_no);
    s.y = parse_bit(fields[y_col], "y", line_no);
    if (has_score) scores.push_back(parse_real(fields[score_it->second], score_column, line_no));
    rows.push_back(std::move(s));
  }
  if (rows.empty()) throw ParseError("no data rows", line_no + 1);
  if (has_score) return Dataset(std::move(rows), std::move(scores));
  return Dataset(std::move(rows));
}

std::size_t Table::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw SchemaError(name);
  return static_cast<std::size_t>(it - header.begin());
}

Table parse_table(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  Table t;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (t.header.empty()) {
      for (auto f : fields) t.header.emplace_back(f);
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw ParseError("expected " + std::to_string(t.header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    }
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) row[j] = parse_real(fields[j], t.header[j], line_no);
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw ParseError("missing header row", line_no == 0 ? 1 : line_no);
  if (t.rows.empty()) throw ParseError("no data rows", line_no + 1);
  return t;
}

Table load_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_table(buf.str());
}

std::string format_table(const Table& table) {
  std::string out;
  for (std::size_t j = 0; j < table.header.size(); ++j) out += (j ? "," : "") + table.header[j];
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      append_real(out, row[j]);
    }
    out += '\n';
  }
  return out;
}

Dataset load_csv(const std::filesystem::path& path, const std::string& score_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), score_column);
}

std::string format_csv(const Dataset& data) {
  std::string out;
  for (std::size_t j = 0; j < data.dim(); ++j) out += "x" + std::to_string(j) + ",";
  out += "a,y";
  if (data.has_scores()) out += ",score";
  out += '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data[i];
    for (double v : s.x) {
      append_real(out, v);
      out += ',';
    }
    out += std::to_string(s.a) + "," + std::to_string(s.y);
    if (data.has_scores()) {
      out += ',';
      append_real(out, data.scores()[i]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  write_text_atomic(path, format_csv(data));
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw ConfigError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw ConfigError("cannot rename onto '" + path.string() + "': " + ec.message());
  }
}

}  // namespace eqodds::io
