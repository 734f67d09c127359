#include "skillscape/lines.hpp"

#include <zlib.h>

#include "skillscape/error.hpp"

namespace skillscape {

bool IstreamLineSource::next(std::string& line) {
  if (!std::getline(in_, line)) {
    if (in_.bad()) throw IoError("stream read failure");
    return false;
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

FileLineSource::FileLineSource(const std::string& path) : path_(path) {
  gz_ = gzopen(path.c_str(), "rb");
  if (!gz_) throw IoError("cannot open input: " + path);
  gzbuffer(static_cast<gzFile>(gz_), 1 << 16);
}

FileLineSource::~FileLineSource() {
  if (gz_) gzclose(static_cast<gzFile>(gz_));
}

bool FileLineSource::next(std::string& line) {
  auto gz = static_cast<gzFile>(gz_);
  line.clear();
  while (true) {
    const auto nl = pending_.find('\n');
    if (nl != std::string::npos) {
      line.assign(pending_, 0, nl);
      pending_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
    if (eof_) {
      if (pending_.empty()) return false;
      line.swap(pending_);
      pending_.clear();
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
    char buf[1 << 15];
    const int n = gzread(gz, buf, sizeof(buf));
    if (n < 0) {
      int errnum = 0;
      const char* msg = gzerror(gz, &errnum);
      throw IoError("read failure on " + path_ + ": " + (msg ? msg : ""));
    }
    if (n == 0) {
      eof_ = true;
    } else {
      pending_.append(buf, static_cast<std::size_t>(n));
    }
  }
}

}  // namespace skillscape
