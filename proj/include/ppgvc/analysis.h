// include/ppgvc/analysis.h

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

#ifndef PPGVC_ANALYSIS_H_
#define PPGVC_ANALYSIS_H_

#include <span>

#include <Eigen/Core>

#include "ppgvc/wave.h"

namespace ppgvc {

using VuvVector = Eigen::Array<bool, Eigen::Dynamic, 1>;

struct AnalysisConfig {
  int sample_rate = 16000;
  double frame_shift_ms = 10.0;
  double frame_length_ms = 25.0;
  int mcep_order = 39;
  double warp_alpha = 0.42;
  double f0_floor = 60.0;
  double f0_ceil = 500.0;
  int bap_bands = 1;
  double voicing_threshold = 0.3;
  int median_length = 5;
  // Applied to the amplitude envelope before the log.
  double spectral_floor = 1e-10;

  /// Throws Error(kInvalidConfig) on an unusable configuration.
  void Validate() const;

  int shift_samples() const;
  int frame_samples() const;
  // Smallest power of two holding two analysis frames.
  int fft_size() const;
};

/// The three predicted streams on a common 10 ms grid. Log-F0 is continuous
/// (interpolated through unvoiced frames); voicing is carried separately.
struct SpeechParams {
  Eigen::MatrixXd mcep;  // T x (order + 1), log-amplitude mel-cepstrum
  Eigen::VectorXd lf0;   // T, natural log Hz
  VuvVector vuv;         // T
  Eigen::MatrixXd bap;   // T x bands, dB <= 0
  double frame_shift_ms = 10.0;

  Eigen::Index frames() const { return lf0.size(); }
  // Throws kFrameCountMismatch / kInvalidValue when the invariants fail.
  void Validate() const;
  SpeechParams Head(Eigen::Index frames) const;
};

struct F0Track {
  Eigen::VectorXd f0;  // Hz, 0 where unvoiced
  VuvVector vuv;
};

/// Frame count for `num_samples` samples: floor(len / shift), but at least
/// one frame for any non-empty input.
Eigen::Index NumFrames(Eigen::Index num_samples, const AnalysisConfig &cfg);

/// Hann-windowed frames, one per row; frame t is centred on sample
/// t * shift + shift / 2 and zero-padded past either end of the signal.
Eigen::MatrixXd FrameSignal(const Waveform &wave, const AnalysisConfig &cfg);

/// Normalised cross-correlation pitch tracker with a fixed voicing threshold
/// and median smoothing of the voiced contour.
F0Track EstimateF0(const Waveform &wave, const AnalysisConfig &cfg);

/// Mel-cepstra of the pitch-adaptive smoothed power spectrum. When `f0` is
/// empty the pitch track is estimated internally.
Eigen::MatrixXd ExtractMcep(const Waveform &wave, const AnalysisConfig &cfg,
                            std::span<const double> f0 = {});

/// Band aperiodicity in dB: aperiodic-to-total energy per band, 0 dB on
/// unvoiced frames.
Eigen::MatrixXd ExtractBap(const Waveform &wave, const F0Track &track,
                           const AnalysisConfig &cfg);

/// ln f0 on voiced frames, linearly interpolated across unvoiced gaps and
/// held at the nearest voiced value at the edges. With no voiced frame at
/// all the contour is ln(f0_floor).
Eigen::VectorXd EncodeLf0(const F0Track &track, double f0_floor = 60.0);

SpeechParams Analyze(const Waveform &wave, const AnalysisConfig &cfg);

// Frequency warping of the first-order all-pass used by mel-cepstra.
double WarpFrequency(double omega, double alpha);

/// Warped cosine basis evaluated on the fft_size / 2 + 1 linear-frequency
/// bins. Fitting is a least-squares projection onto the basis, so a fit of
/// an evaluated cepstrum returns the same cepstrum.
class MelCepstrumBasis {
 public:
  MelCepstrumBasis(int fft_size, int order, double alpha);

  // Rows are frames in both directions.
  Eigen::MatrixXd Fit(const Eigen::Ref<const Eigen::MatrixXd> &log_amplitude) const;
  Eigen::MatrixXd Evaluate(const Eigen::Ref<const Eigen::MatrixXd> &mcep) const;

  int num_bins() const { return static_cast<int>(basis_.rows()); }
  int num_coefficients() const { return static_cast<int>(basis_.cols()); }

 private:
  Eigen::MatrixXd basis_;   // bins x coefficients
  Eigen::MatrixXd solver_;  // coefficients x bins
};

// Process-wide memoised basis; safe to call from several threads.
const MelCepstrumBasis &SharedMelCepstrumBasis(int fft_size, int order, double alpha);

/// Power spectrum of each frame normalised by the window energy, so white
/// noise of variance s^2 has expected value s^2 in every bin.
Eigen::MatrixXd FramePowerSpectra(const Eigen::MatrixXd &frames, int fft_size);

/// Boxcar smoothing over `width_bins` (fractional) with mirror extension at
/// DC and Nyquist.
Eigen::VectorXd SmoothSpectrum(const Eigen::Ref<const Eigen::VectorXd> &power, double width_bins);

}  // namespace ppgvc

#endif  // PPGVC_ANALYSIS_H_
