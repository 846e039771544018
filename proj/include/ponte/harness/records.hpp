#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ponte/error.hpp"

namespace ponte {

enum class Split { Unspecified, Validation, Test };

inline std::string_view to_string(Split split) {
  switch (split) {
    case Split::Validation: return "validation";
    case Split::Test: return "test";
    case Split::Unspecified: break;
  }
  return "";
}

inline std::optional<Split> parse_split(std::string_view s) {
  if (s.empty()) return Split::Unspecified;
  if (s == "validation" || s == "val" || s == "dev") return Split::Validation;
  if (s == "test") return Split::Test;
  return std::nullopt;
}

enum class DataFormat { Csv, Jsonl };

inline DataFormat parse_format(std::string_view s) {
  if (s == "csv") return DataFormat::Csv;
  if (s == "jsonl") return DataFormat::Jsonl;
  fail(ErrorCode::InvalidArgument, "unknown format '" + std::string(s) + "' (expected csv or jsonl)");
}

inline DataFormat format_for_path(const std::filesystem::path &path) {
  const auto ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".json") return DataFormat::Jsonl;
  return DataFormat::Csv;
}

struct CstsRecord {
  std::string text1;
  std::string text2;
  std::string condition;
  double gold = 0.0;
  Split split = Split::Unspecified;
};

struct ClusterRecord {
  std::string text;
  std::string label;
  Split split = Split::Unspecified;
};

/// RFC 4180 reader: quoted fields may hold commas, doubled quotes and
/// newlines.
class CsvReader {
 public:
  explicit CsvReader(std::istream &in) : in_(in) {}

  bool next(std::vector<std::string> &fields) {
    fields.clear();
    if (in_.peek() == std::char_traits<char>::eof()) return false;
    std::string field;
    bool quoted = false;
    char c;
    while (in_.get(c)) {
      if (quoted) {
        if (c == '"') {
          if (in_.peek() == '"') {
            field += static_cast<char>(in_.get());
          } else {
            quoted = false;
          }
        } else {
          field += c;
        }
      } else if (c == '"' && field.empty()) {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else if (c == '\n') {
        break;
      } else if (c == '\r' && in_.peek() == '\n') {
        continue;
      } else {
        field += c;
      }
    }
    if (quoted) fail(ErrorCode::ParseError, "unterminated quoted field");
    fields.push_back(std::move(field));
    return true;
  }

 private:
  std::istream &in_;
};

namespace detail {

/// Rows as column-name -> value maps, with 1-based data row numbers.
struct Table {
  std::vector<std::map<std::string, std::string>> rows;
  std::vector<std::size_t> row_numbers;
};

inline Table read_table(std::istream &in, DataFormat format, const std::vector<std::string> &required,
                        const std::vector<std::string> &optional_columns) {
  Table table;
  if (format == DataFormat::Csv) {
    CsvReader reader(in);
    std::vector<std::string> header, fields;
    if (!reader.next(header)) fail(ErrorCode::MissingColumn, "file is empty; expected a header row");
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < header.size(); ++i) index[header[i]] = i;
    for (const auto &col : required) {
      if (!index.contains(col)) fail(ErrorCode::MissingColumn, "missing column '" + col + "'");
    }
    std::size_t row_no = 0;
    while (reader.next(fields)) {
      ++row_no;
      if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
      if (fields.size() != header.size()) {
        fail(ErrorCode::ParseError, "row " + std::to_string(row_no) + ": expected " + std::to_string(header.size()) +
                                        " fields, found " + std::to_string(fields.size()));
      }
      std::map<std::string, std::string> row;
      for (const auto &col : required) row[col] = fields[index[col]];
      for (const auto &col : optional_columns) {
        if (index.contains(col)) row[col] = fields[index[col]];
      }
      table.rows.push_back(std::move(row));
      table.row_numbers.push_back(row_no);
    }
    return table;
  }

  std::string line;
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error &) {
      fail(ErrorCode::ParseError, "row " + std::to_string(row_no) + ": invalid JSON");
    }
    if (!j.is_object()) fail(ErrorCode::ParseError, "row " + std::to_string(row_no) + ": expected a JSON object");
    std::map<std::string, std::string> row;
    auto take = [&](const std::string &col, bool needed) {
      if (!j.contains(col)) {
        if (needed) fail(ErrorCode::MissingColumn, "row " + std::to_string(row_no) + ": missing key '" + col + "'");
        return;
      }
      const auto &v = j.at(col);
      if (v.is_string()) {
        row[col] = v.get<std::string>();
      } else if (v.is_number()) {
        row[col] = v.dump();
      } else {
        fail(ErrorCode::ParseError, "row " + std::to_string(row_no) + ": '" + col + "' must be a string or number");
      }
    };
    for (const auto &col : required) take(col, true);
    for (const auto &col : optional_columns) take(col, false);
    table.rows.push_back(std::move(row));
    table.row_numbers.push_back(row_no);
  }
  return table;
}

inline double parse_real(const std::string &s, std::size_t row_no, const char *column) {
  double value = 0.0;
  const auto *begin = s.data();
  const auto *end = s.data() + s.size();
  while (begin != end && *begin == ' ') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  while (ptr != end && *ptr == ' ') ++ptr;
  if (ec != std::errc() || ptr != end || begin == end || !std::isfinite(value)) {
    fail(ErrorCode::ParseError,
         "row " + std::to_string(row_no) + ": " + column + " '" + s + "' is not a number");
  }
  return value;
}

inline Split split_of(const std::map<std::string, std::string> &row, std::size_t row_no) {
  const auto it = row.find("split");
  if (it == row.end()) return Split::Unspecified;
  const auto split = parse_split(it->second);
  if (!split) fail(ErrorCode::ParseError, "row " + std::to_string(row_no) + ": unknown split '" + it->second + "'");
  return *split;
}

inline std::ifstream open_dataset(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open dataset " + path.string());
  return in;
}

}  // namespace detail

/// Columns text1, text2, condition, score and optionally split. Scores lie in
/// [1, 5].
inline std::vector<CstsRecord> parse_csts(std::istream &in, DataFormat format) {
  const auto table = detail::read_table(in, format, {"text1", "text2", "condition", "score"}, {"split"});
  std::vector<CstsRecord> records;
  records.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto &row = table.rows[i];
    const auto row_no = table.row_numbers[i];
    CstsRecord r;
    r.text1 = row.at("text1");
    r.text2 = row.at("text2");
    r.condition = row.at("condition");
    r.gold = detail::parse_real(row.at("score"), row_no, "score");
    if (r.gold < 1.0 || r.gold > 5.0) {
      fail(ErrorCode::ParseError, "row " + std::to_string(row_no) + ": score " + row.at("score") + " outside [1, 5]");
    }
    if (r.text1.empty() || r.text2.empty()) fail(ErrorCode::ParseError, "row " + std::to_string(row_no) + ": empty text");
    r.split = detail::split_of(row, row_no);
    records.push_back(std::move(r));
  }
  return records;
}

inline std::vector<CstsRecord> load_csts(const std::filesystem::path &path, DataFormat format) {
  auto in = detail::open_dataset(path);
  return parse_csts(in, format);
}

/// Columns text, label and optionally split.
inline std::vector<ClusterRecord> parse_cluster_corpus(std::istream &in, DataFormat format) {
  const auto table = detail::read_table(in, format, {"text", "label"}, {"split"});
  std::vector<ClusterRecord> records;
  records.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto &row = table.rows[i];
    const auto row_no = table.row_numbers[i];
    ClusterRecord r;
    r.text = row.at("text");
    r.label = row.at("label");
    if (r.text.empty()) fail(ErrorCode::ParseError, "row " + std::to_string(row_no) + ": empty text");
    if (r.label.empty()) fail(ErrorCode::ParseError, "row " + std::to_string(row_no) + ": empty label");
    r.split = detail::split_of(row, row_no);
    records.push_back(std::move(r));
  }
  return records;
}

inline std::vector<ClusterRecord> load_cluster_corpus(const std::filesystem::path &path, DataFormat format) {
  auto in = detail::open_dataset(path);
  return parse_cluster_corpus(in, format);
}

/// Keeps records of `split`; Split::Unspecified keeps everything.
template <typename Record>
std::vector<Record> filter_split(const std::vector<Record> &records, Split split) {
  if (split == Split::Unspecified) return records;
  std::vector<Record> out;
  for (const auto &r : records) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

inline std::size_t label_count(const std::vector<ClusterRecord> &records) {
  std::set<std::string> labels;
  for (const auto &r : records) labels.insert(r.label);
  return labels.size();
}

}  // namespace ponte
