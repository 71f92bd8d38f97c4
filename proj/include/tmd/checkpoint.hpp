// Little-endian binary serialization for checkpoint/restart files.
// Byte layout is documented in docs/formats.md; readers bounds-check every
// access and fail with IoError on truncated or corrupted input.
#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "tmd/error.hpp"

namespace tmd {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void i64(std::int64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void str(const std::string& s) {
    u64(s.size());
    buf_.append(s);
  }
  template <typename T>
  void f64_vec(const std::vector<T>& v) {
    u64(v.size());
    for (const auto& x : v) f64(x);
  }
  void bytes(const void* p, std::size_t n) { raw(p, n); }

  const std::string& data() const { return buf_; }

 private:
  void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string data) : data_(std::move(data)) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, 8);
    return v;
  }
  std::int64_t i64() {
    std::int64_t v;
    raw(&v, 8);
    return v;
  }
  double f64() {
    double v;
    raw(&v, 8);
    return v;
  }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  template <typename T>
  std::vector<T> f64_vec() {
    const std::uint64_t n = u64();
    need(8 * n);
    std::vector<T> v(n);
    for (auto& x : v) x = static_cast<T>(f64());
    return v;
  }
  void bytes(void* p, std::size_t n) { raw(p, n); }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (pos_ + n > data_.size() || pos_ + n < pos_)
      throw IoError("checkpoint: truncated or corrupted data (need " + std::to_string(n) +
                    " bytes at offset " + std::to_string(pos_) + ")");
  }
  void raw(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }

  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace tmd
