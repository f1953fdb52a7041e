// include/ppgvc/vocoder.h

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

#ifndef PPGVC_VOCODER_H_
#define PPGVC_VOCODER_H_

#include <cstdint>

#include <Eigen/Core>

#include "ppgvc/analysis.h"
#include "ppgvc/wave.h"

namespace ppgvc {

struct SynthesisConfig {
  int sample_rate = 16000;
  double frame_shift_ms = 10.0;
  double frame_length_ms = 25.0;
  int fft_size = 1024;
  double warp_alpha = 0.42;
  double spectral_floor = 1e-10;
  std::uint64_t noise_seed = 1;

  void Validate() const;
  int shift_samples() const;
};

/// Per-frame source description. Bin weights are amplitude weights on the
/// fft_size / 2 + 1 bins; `noise` holds the spectrum of each frame's own
/// block of white Gaussian noise.
struct Excitation {
  Eigen::VectorXd f0;               // Hz, 0 on unvoiced frames
  Eigen::MatrixXd periodic_weight;  // T x bins
  Eigen::MatrixXd noise_weight;     // T x bins
  Eigen::MatrixXcd noise;           // T x bins

  Eigen::Index frames() const { return f0.size(); }
};

// Voiced frames mix the pulse train with noise at amplitude 10^(bap / 20)
// per band; unvoiced frames are noise only.
Excitation GenerateExcitation(const Eigen::Ref<const Eigen::VectorXd> &lf0, const VuvVector &vuv,
                              const Eigen::Ref<const Eigen::MatrixXd> &bap,
                              const SynthesisConfig &cfg);

// Seeded white-noise block spectra, identical to Excitation::noise for the
// same seed and frame count.
Eigen::MatrixXcd NoiseSpectra(Eigen::Index frames, const SynthesisConfig &cfg);

/// Linear-frequency amplitude envelope (fft_size / 2 + 1 bins) of one
/// mel-cepstral row, floored at the spectral floor.
Eigen::VectorXd McepToSpectrum(const Eigen::Ref<const Eigen::VectorXd> &mcep,
                               const SynthesisConfig &cfg);

struct SynthesisInfo {
  bool peak_normalized = false;
  double gain = 1.0;
};

/// Renders params into T * shift samples. The output is scaled to a 0.99
/// peak only when it would otherwise clip.
Waveform Synthesize(const SpeechParams &params, const SynthesisConfig &cfg,
                    SynthesisInfo *info = nullptr);

}  // namespace ppgvc

#endif  // PPGVC_VOCODER_H_
