#include "skillscape/csv.hpp"

#include <charconv>
#include <cmath>

#include "skillscape/error.hpp"

namespace skillscape {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string csv_escape(std::string_view field) {
  const bool needs_quote =
      field.find_first_of(",\"\n\r") != std::string_view::npos;
  if (!needs_quote) return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), width_(header.size()), path_(path) {
  if (!out_) throw IoError("cannot open for writing: " + path);
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) {
    throw DataError("csv row width mismatch in " + path_);
  }
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_.put(',');
    out_ << csv_escape(fields[i]);
  }
  out_.put('\n');
  if (!out_) throw IoError("write failed: " + path_);
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c == '\r') {
      // tolerate CRLF
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

CsvReader::CsvReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
  if (!in_) throw IoError("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in_, line)) throw DataError("empty csv: " + path);
  header_ = split_csv_line(line);
}

std::optional<std::vector<std::string>> CsvReader::next() {
  std::string line;
  if (!std::getline(in_, line)) return std::nullopt;
  if (line.empty()) return next();
  return split_csv_line(line);
}

std::size_t CsvReader::col(const std::string& name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  throw DataError("csv column '" + name + "' missing in " + path_);
}

}  // namespace skillscape
