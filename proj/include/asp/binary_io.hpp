// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace asp::io {

/// Little-endian byte sink.
class ByteWriter {
 public:
  void bytes(const void* data, std::size_t n);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  const std::vector<char>& buffer() const { return buf_; }

 private:
  std::vector<char> buf_;
};

/// Little-endian byte source with bounds checks.
class ByteReader {
 public:
  ByteReader(std::vector<char> data, std::string source);
  void bytes(void* out, std::size_t n);
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  bool at_end() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::vector<char> data_;
  std::string source_;
  std::size_t pos_ = 0;
};

std::vector<char> read_file(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::vector<char>& data);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace asp::io
