// src/common.cc

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

#include <fstream>
#include <iterator>

#include "ppgvc/binary_io.h"
#include "ppgvc/error.h"

namespace ppgvc {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kFrameCountMismatch: return "FrameCountMismatch";
    case ErrorCode::kInvalidF0: return "InvalidF0";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kInvalidValue: return "InvalidValue";
    case ErrorCode::kLanguageMismatch: return "LanguageMismatch";
    case ErrorCode::kDuplicateLanguage: return "DuplicateLanguage";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kDivergenceDetected: return "DivergenceDetected";
    case ErrorCode::kMissingPpg: return "MissingPpg";
    case ErrorCode::kMissingReference: return "MissingReference";
    case ErrorCode::kIoError: return "IoError";
  }
  return "UnknownError";
}

std::string_view ByteReader::GetBytes(std::size_t n) {
  if (n > remaining())
    Fail(ErrorCode::kParseError, what_ + ": truncated data");
  std::string_view out = data_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::uint64_t ByteReader::GetLe(int n) {
  std::string_view b = GetBytes(static_cast<std::size_t>(n));
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

std::string ByteReader::GetString() {
  const std::uint32_t n = GetU32();
  return std::string(GetBytes(n));
}

std::string ReadFileBytes(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIoError, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void WriteFileBytes(const std::filesystem::path &path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorCode::kIoError, "short write to " + path.string());
}

}  // namespace ppgvc
