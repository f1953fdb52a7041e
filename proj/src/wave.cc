// src/wave.cc

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

#include "ppgvc/wave.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ppgvc/binary_io.h"
#include "ppgvc/error.h"

namespace ppgvc {

Waveform DecodeWav(std::string_view bytes, const std::string &what) {
  ByteReader r(bytes, what);
  if (r.GetBytes(4) != "RIFF") Fail(ErrorCode::kParseError, what + ": not a RIFF file");
  r.GetU32();
  if (r.GetBytes(4) != "WAVE") Fail(ErrorCode::kParseError, what + ": not a WAVE file");

  bool have_fmt = false;
  int channels = 0, bits = 0;
  std::uint32_t rate = 0;
  while (r.remaining() >= 8) {
    std::string_view id = r.GetBytes(4);
    std::uint32_t size = r.GetU32();
    if (id == "fmt ") {
      ByteReader f(r.GetBytes(size), what);
      const std::uint16_t format = f.GetU16();
      channels = f.GetU16();
      rate = f.GetU32();
      f.GetU32();  // byte rate
      f.GetU16();  // block align
      bits = f.GetU16();
      if (format != 1) Fail(ErrorCode::kParseError, what + ": only PCM is supported");
      if (channels != 1) Fail(ErrorCode::kParseError, what + ": only mono is supported");
      if (bits != 16) Fail(ErrorCode::kParseError, what + ": only 16-bit samples are supported");
      if (rate == 0) Fail(ErrorCode::kParseError, what + ": zero sample rate");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) Fail(ErrorCode::kParseError, what + ": data chunk before fmt chunk");
      if (size % 2 != 0) Fail(ErrorCode::kParseError, what + ": odd PCM16 data size");
      ByteReader d(r.GetBytes(size), what);
      Waveform wave;
      wave.sample_rate = static_cast<int>(rate);
      wave.samples.resize(size / 2);
      for (Eigen::Index i = 0; i < wave.samples.size(); ++i)
        wave.samples[i] = static_cast<std::int16_t>(d.GetU16()) / 32768.0;
      return wave;
    } else {
      r.GetBytes(size + (size & 1));
    }
  }
  Fail(ErrorCode::kParseError, what + ": no data chunk");
}

std::string EncodeWav(const Waveform &wave) {
  const auto n = static_cast<std::uint32_t>(wave.samples.size());
  ByteWriter w;
  w.PutBytes("RIFF");
  w.PutU32(36 + 2 * n);
  w.PutBytes("WAVE");
  w.PutBytes("fmt ");
  w.PutU32(16);
  w.PutU16(1);
  w.PutU16(1);
  w.PutU32(static_cast<std::uint32_t>(wave.sample_rate));
  w.PutU32(static_cast<std::uint32_t>(wave.sample_rate) * 2);
  w.PutU16(2);
  w.PutU16(16);
  w.PutBytes("data");
  w.PutU32(2 * n);
  for (double s : wave.samples) {
    const long q = std::clamp(std::lround(std::clamp(s, -1.0, 1.0) * 32768.0), -32768L, 32767L);
    w.PutU16(static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  return w.bytes();
}

Waveform ReadWav(const std::filesystem::path &path) {
  return DecodeWav(ReadFileBytes(path), path.string());
}

void WriteWav(const std::filesystem::path &path, const Waveform &wave) {
  WriteFileBytes(path, EncodeWav(wave));
}

double RmsDbfs(const Waveform &wave) {
  if (wave.empty()) return -std::numeric_limits<double>::infinity();
  const double ms = wave.samples.squaredNorm() / static_cast<double>(wave.size());
  if (ms <= 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(ms);
}

}  // namespace ppgvc
