#pragma once

#include <istream>
#include <string>

namespace skillscape {

// Source of text lines for the ingestion path.
class LineSource {
 public:
  virtual ~LineSource() = default;
  // Returns false at end of input. Strips the trailing newline (and CR).
  virtual bool next(std::string& line) = 0;
};

class IstreamLineSource final : public LineSource {
 public:
  explicit IstreamLineSource(std::istream& in) : in_(in) {}
  bool next(std::string& line) override;

 private:
  std::istream& in_;
};

// Reads a file through zlib, which transparently handles both plain text and
// gzip-compressed input. Throws IoError on open/read failure.
class FileLineSource final : public LineSource {
 public:
  explicit FileLineSource(const std::string& path);
  ~FileLineSource() override;
  FileLineSource(const FileLineSource&) = delete;
  FileLineSource& operator=(const FileLineSource&) = delete;

  bool next(std::string& line) override;

 private:
  void* gz_ = nullptr;  // gzFile
  std::string path_;
  std::string pending_;
  bool eof_ = false;
};

}  // namespace skillscape
