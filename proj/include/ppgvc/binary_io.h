// include/ppgvc/binary_io.h

// Copyright 2026  The ppgvc Authors

// See ../../COPYING for clarification regarding multiple authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Little-endian primitives shared by every on-disk format.

#ifndef PPGVC_BINARY_IO_H_
#define PPGVC_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>

namespace ppgvc {

class ByteWriter {
 public:
  void PutBytes(std::string_view s) { buf_.append(s); }
  void PutU8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void PutU16(std::uint16_t v) { PutLe(v, 2); }
  void PutU32(std::uint32_t v) { PutLe(v, 4); }
  void PutU64(std::uint64_t v) { PutLe(v, 8); }
  void PutF32(float v) { PutU32(std::bit_cast<std::uint32_t>(v)); }
  void PutF64(double v) { PutU64(std::bit_cast<std::uint64_t>(v)); }
  // u32 length prefix + raw bytes.
  void PutString(std::string_view s) {
    PutU32(static_cast<std::uint32_t>(s.size()));
    PutBytes(s);
  }

  const std::string &bytes() const { return buf_; }

 private:
  void PutLe(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }

  std::string buf_;
};

/// Bounds-checked reader; overruns throw Error(kParseError) naming `what`.
class ByteReader {
 public:
  ByteReader(std::string_view data, std::string what)
      : data_(data), what_(std::move(what)) {}

  std::string_view GetBytes(std::size_t n);
  std::uint8_t GetU8() { return static_cast<std::uint8_t>(GetLe(1)); }
  std::uint16_t GetU16() { return static_cast<std::uint16_t>(GetLe(2)); }
  std::uint32_t GetU32() { return static_cast<std::uint32_t>(GetLe(4)); }
  std::uint64_t GetU64() { return GetLe(8); }
  float GetF32() { return std::bit_cast<float>(GetU32()); }
  double GetF64() { return std::bit_cast<double>(GetU64()); }
  std::string GetString();

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  std::uint64_t GetLe(int n);

  std::string_view data_;
  std::size_t pos_ = 0;
  std::string what_;
};

std::string ReadFileBytes(const std::filesystem::path &path);
void WriteFileBytes(const std::filesystem::path &path, std::string_view bytes);

}  // namespace ppgvc

#endif  // PPGVC_BINARY_IO_H_
