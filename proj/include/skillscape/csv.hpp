#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace skillscape {

// Shortest round-trip decimal form of a double (std::to_chars), so CSV and
// text artifacts are byte-stable across runs.
std::string format_double(double v);

std::string csv_escape(std::string_view field);

// RFC-4180-ish writer. Fields are escaped only when needed.
class CsvWriter {
 public:
  // Throws IoError when the file cannot be opened.
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  void row(const std::vector<std::string>& fields);

  // Convenience cell formatters.
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(long long v) { return std::to_string(v); }
  static std::string cell(unsigned long long v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(unsigned long v) { return std::to_string(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(unsigned v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "1" : "0"; }

 private:
  std::ofstream out_;
  std::size_t width_;
  std::string path_;
};

// Minimal CSV reader used to load artifacts back; handles quoted fields.
class CsvReader {
 public:
  explicit CsvReader(const std::string& path);

  const std::vector<std::string>& header() const { return header_; }
  std::optional<std::vector<std::string>> next();
  // Column index for a header name; throws DataError when absent.
  std::size_t col(const std::string& name) const;

 private:
  std::ifstream in_;
  std::vector<std::string> header_;
  std::string path_;
};

std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace skillscape
