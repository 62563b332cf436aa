/*
 * Copyright 2026 The Latte Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace latte {

// Little-endian binary buffer writer. All on-disk formats go through this
// so the byte layout does not depend on host endianness.
class BinWriter {
 public:
  void put_u8(uint8_t v) { buf_.push_back(char(v)); }
  void put_u16(uint16_t v) { put_le(v); }
  void put_u32(uint32_t v) { put_le(v); }
  void put_u64(uint64_t v) { put_le(v); }

  void put_f32(float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(bits);
  }

  void put_f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(bits);
  }

  void put_bytes(const void* data, size_t n) {
    buf_.append(static_cast<const char*>(data), n);
  }

  // u16 length prefix + UTF-8 bytes.
  void put_str16(std::string_view s) {
    if (s.size() > 0xffff) throw Error(ErrorCode::Input, "string too long for u16 length prefix");
    put_u16(uint16_t(s.size()));
    put_bytes(s.data(), s.size());
  }

  const std::string& buffer() const { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  template <typename T>
  void put_le(T v) {
    for (size_t i = 0; i < sizeof(T); ++i) buf_.push_back(char((v >> (8 * i)) & 0xff));
  }

  std::string buf_;
};

// Bounds-checked little-endian reader over an in-memory buffer.
class BinReader {
 public:
  explicit BinReader(std::string_view data) : data_(data) {}

  uint8_t get_u8() { return uint8_t(take(1)[0]); }
  uint16_t get_u16() { return get_le<uint16_t>(); }
  uint32_t get_u32() { return get_le<uint32_t>(); }
  uint64_t get_u64() { return get_le<uint64_t>(); }

  float get_f32() {
    uint32_t bits = get_u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  double get_f64() {
    uint64_t bits = get_u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

  std::string get_str16() {
    uint16_t n = get_u16();
    std::string_view s = take(n);
    return std::string(s);
  }

  std::string_view take(size_t n) {
    if (n > data_.size() - pos_) throw Error(ErrorCode::Corrupt, "truncated data");
    std::string_view s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  // Guards count-driven allocations: `count` elements of at least
  // `elem_size` bytes each must still fit in the buffer. Call before any
  // resize() sized from an untrusted count.
  void require_payload(uint64_t count, size_t elem_size) const {
    if (elem_size == 0 || count > remaining() / elem_size)
      throw Error(ErrorCode::Corrupt, "element count exceeds the file size");
  }

  size_t remaining() const { return data_.size() - pos_; }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  template <typename T>
  T get_le() {
    std::string_view s = take(sizeof(T));
    T v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= T(uint8_t(s[i])) << (8 * i);
    return v;
  }

  std::string_view data_;
  size_t pos_ = 0;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace latte
