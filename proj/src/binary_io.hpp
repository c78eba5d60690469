// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Little-endian binary encoding shared by the dataset and checkpoint formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "tfcl/error.hpp"

namespace tfcl::binio {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void f64(double v) { bytes(&v, 8); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void f64s(const double* p, std::size_t n) { bytes(p, n * sizeof(double)); }
  void vec(const std::vector<double>& v) {
    u64(v.size());
    f64s(v.data(), v.size());
  }

  // Writes to a temporary sibling and renames it into place.
  void save(const std::filesystem::path& path) const {
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
      out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
      if (!out) throw IoError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename '" + tmp.string() + "': " + ec.message());
  }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  static Reader open(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return Reader(std::move(data), path.string());
  }

  void bytes(void* p, std::size_t n) {
    if (n > buf_.size() - pos_) throw FormatError(name_ + ": truncated file");
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8() { std::uint8_t v; bytes(&v, 1); return v; }
  std::uint32_t u32() { std::uint32_t v; bytes(&v, 4); return v; }
  std::uint64_t u64() { std::uint64_t v; bytes(&v, 8); return v; }
  double f64() { double v; bytes(&v, 8); return v; }
  std::string str() {
    const auto n = u32();
    check_remaining(n);
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  void f64s(double* p, std::size_t n) {
    check_remaining(n, sizeof(double));
    bytes(p, n * sizeof(double));
  }
  std::vector<double> vec() {
    const auto n = u64();
    check_remaining(n, sizeof(double));
    std::vector<double> v(n);
    f64s(v.data(), n);
    return v;
  }

  void check_remaining(std::uint64_t count, std::uint64_t size = 1) const {
    if (count > (buf_.size() - pos_) / size) throw FormatError(name_ + ": truncated file");
  }
  bool at_end() const { return pos_ == buf_.size(); }
  const std::string& name() const { return name_; }

 private:
  Reader(std::vector<char> data, std::string name) : buf_(std::move(data)), name_(std::move(name)) {}
  std::vector<char> buf_;
  std::size_t pos_ = 0;
  std::string name_;
};

}  // namespace tfcl::binio
