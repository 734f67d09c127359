#pragma once

// Internal helpers for the little-endian float32 matrix files used by the
// embedding and atom-dictionary artifacts.

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "skillscape/error.hpp"

namespace skillscape::binio {

inline void write_f32_file(const std::string& path, const std::vector<float>& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (float v : values) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    const char bytes[4] = {char(bits & 0xFF), char((bits >> 8) & 0xFF),
                           char((bits >> 16) & 0xFF), char((bits >> 24) & 0xFF)};
    out.write(bytes, 4);
  }
  if (!out) throw IoError("write failed: " + path);
}

inline std::vector<float> read_f32_file(const std::string& path, std::size_t count) {
  if (!std::filesystem::exists(path)) {
    throw MissingArtifactError("matrix file missing: " + path);
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::vector<float> values(count);
  std::vector<unsigned char> raw(count * 4);
  in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
  if (std::size_t(in.gcount()) != raw.size()) {
    throw DataError("matrix file truncated: " + path);
  }
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t bits = std::uint32_t(raw[i * 4]) |
                               (std::uint32_t(raw[i * 4 + 1]) << 8) |
                               (std::uint32_t(raw[i * 4 + 2]) << 16) |
                               (std::uint32_t(raw[i * 4 + 3]) << 24);
    values[i] = std::bit_cast<float>(bits);
  }
  return values;
}

}  // namespace skillscape::binio
