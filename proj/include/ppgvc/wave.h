// include/ppgvc/wave.h

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

#ifndef PPGVC_WAVE_H_
#define PPGVC_WAVE_H_

#include <filesystem>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace ppgvc {

/// Mono audio in [-1, 1].
struct Waveform {
  Eigen::VectorXd samples;
  int sample_rate = 16000;

  Eigen::Index size() const { return samples.size(); }
  bool empty() const { return samples.size() == 0; }
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// RIFF/WAVE PCM16 mono only. Anything else is a kParseError.
Waveform DecodeWav(std::string_view bytes, const std::string &what = "wav");
std::string EncodeWav(const Waveform &wave);

Waveform ReadWav(const std::filesystem::path &path);
void WriteWav(const std::filesystem::path &path, const Waveform &wave);

// Root mean square level in dB relative to full scale; -inf for silence.
double RmsDbfs(const Waveform &wave);

}  // namespace ppgvc

#endif  // PPGVC_WAVE_H_
