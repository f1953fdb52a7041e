// src/vocoder.cc

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

#include "ppgvc/vocoder.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "fft.h"
#include "ppgvc/error.h"
#include "ppgvc/rng.h"

namespace ppgvc {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Piecewise-constant band weights spread over the linear bins.
template <typename Bap, typename Out>
void BandToBins(const Eigen::MatrixBase<Bap> &bap_db, int bins, Eigen::MatrixBase<Out> &noise_w,
                Eigen::MatrixBase<Out> &periodic_w) {
  const int bands = static_cast<int>(bap_db.size());
  for (int k = 0; k < bins; ++k) {
    const int b = std::min(bands - 1, static_cast<int>(static_cast<double>(k) * bands / (bins - 1)));
    const double ratio = std::pow(10.0, std::min(bap_db[b], 0.0) / 10.0);
    noise_w[k] = std::sqrt(ratio);
    periodic_w[k] = std::sqrt(std::max(0.0, 1.0 - ratio));
  }
}

}  // namespace

void SynthesisConfig::Validate() const {
  if (sample_rate <= 0 || frame_shift_ms <= 0.0)
    Fail(ErrorCode::kInvalidConfig, "sample rate and frame shift must be positive");
  if (fft_size < 4 || (fft_size & (fft_size - 1)) != 0)
    Fail(ErrorCode::kInvalidConfig, "fft_size must be a power of two");
  const double frame = frame_length_ms * sample_rate / 1000.0;
  if (fft_size < 2.0 * frame)
    Fail(ErrorCode::kInvalidConfig, "fft_size must hold two analysis frames");
  if (!(warp_alpha > 0.0 && warp_alpha < 1.0))
    Fail(ErrorCode::kInvalidConfig, "warp_alpha must lie in (0, 1)");
  if (!(spectral_floor > 0.0)) Fail(ErrorCode::kInvalidConfig, "spectral_floor must be positive");
  if (shift_samples() < 1 || shift_samples() >= fft_size / 2)
    Fail(ErrorCode::kInvalidConfig, "frame shift must be shorter than half the FFT");
}

int SynthesisConfig::shift_samples() const {
  return static_cast<int>(std::lround(frame_shift_ms * sample_rate / 1000.0));
}

Eigen::MatrixXcd NoiseSpectra(Eigen::Index frames, const SynthesisConfig &cfg) {
  cfg.Validate();
  const int k_fft = cfg.fft_size;
  const int bins = k_fft / 2 + 1;
  const int shift = cfg.shift_samples();
  const int offset = k_fft / 2 - shift / 2;
  Rng rng(cfg.noise_seed);
  auto &fft = internal::RealFft::ThreadLocal();
  std::vector<double> buf(k_fft);
  std::vector<std::complex<double>> spec;
  Eigen::MatrixXcd out(frames, bins);
  for (Eigen::Index t = 0; t < frames; ++t) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (int i = 0; i < shift; ++i) buf[offset + i] = rng.Normal();
    fft.Forward(buf, &spec);
    for (int k = 0; k < bins; ++k) out(t, k) = spec[k];
  }
  return out;
}

Excitation GenerateExcitation(const Eigen::Ref<const Eigen::VectorXd> &lf0, const VuvVector &vuv,
                              const Eigen::Ref<const Eigen::MatrixXd> &bap,
                              const SynthesisConfig &cfg) {
  cfg.Validate();
  const Eigen::Index t_count = lf0.size();
  if (vuv.size() != t_count || bap.rows() != t_count)
    Fail(ErrorCode::kFrameCountMismatch, "lf0, vuv and bap streams differ in length");
  if (t_count > 0 && bap.cols() < 1) Fail(ErrorCode::kDimensionMismatch, "bap needs at least one band");
  const int bins = cfg.fft_size / 2 + 1;

  Excitation ex;
  ex.f0 = Eigen::VectorXd::Zero(t_count);
  ex.periodic_weight = Eigen::MatrixXd::Zero(t_count, bins);
  ex.noise_weight = Eigen::MatrixXd::Ones(t_count, bins);
  ex.noise = NoiseSpectra(t_count, cfg);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    if (!vuv[t]) continue;
    ex.f0[t] = std::exp(lf0[t]);
    auto noise_row = ex.noise_weight.row(t);
    auto periodic_row = ex.periodic_weight.row(t);
    BandToBins(bap.row(t), bins, noise_row, periodic_row);
  }
  return ex;
}

Eigen::VectorXd McepToSpectrum(const Eigen::Ref<const Eigen::VectorXd> &mcep,
                               const SynthesisConfig &cfg) {
  const auto &basis = SharedMelCepstrumBasis(cfg.fft_size, static_cast<int>(mcep.size()) - 1,
                                             cfg.warp_alpha);
  const Eigen::RowVectorXd log_amp = basis.Evaluate(mcep.transpose());
  return log_amp.transpose().array().exp().max(cfg.spectral_floor);
}

Waveform Synthesize(const SpeechParams &params, const SynthesisConfig &cfg, SynthesisInfo *info) {
  cfg.Validate();
  params.Validate();
  const Eigen::Index t_count = params.frames();
  const int shift = cfg.shift_samples();
  const int k_fft = cfg.fft_size;
  const int bins = k_fft / 2 + 1;
  const double fs = cfg.sample_rate;

  Waveform out;
  out.sample_rate = cfg.sample_rate;
  if (info) *info = {};
  if (t_count == 0) return out;

  const Excitation ex = GenerateExcitation(params.lf0, params.vuv, params.bap, cfg);
  const auto &basis = SharedMelCepstrumBasis(k_fft, static_cast<int>(params.mcep.cols()) - 1,
                                             cfg.warp_alpha);
  const Eigen::MatrixXd envelope =
      basis.Evaluate(params.mcep).array().exp().max(cfg.spectral_floor).matrix();

  const Eigen::Index length = t_count * shift;
  // Rendering buffer with one FFT of margin on each side.
  std::vector<double> y(static_cast<std::size_t>(length + 2 * k_fft), 0.0);
  auto add_at = [&](Eigen::Index pos, double v) { y[static_cast<std::size_t>(pos + k_fft)] += v; };

  auto &fft = internal::RealFft::ThreadLocal();
  std::vector<std::complex<double>> spec(bins);
  std::vector<double> time;

  // Aperiodic part: each frame filters its own noise block by a zero-phase
  // response, so the blocks tile the timeline with the target PSD.
  const Eigen::Index noise_offset = k_fft / 2 - shift / 2;
  for (Eigen::Index t = 0; t < t_count; ++t) {
    for (int k = 0; k < bins; ++k)
      spec[k] = ex.noise(t, k) * (envelope(t, k) * ex.noise_weight(t, k));
    fft.Inverse(spec, k_fft, &time);
    const Eigen::Index base = t * shift - noise_offset;
    for (int i = 0; i < k_fft; ++i) add_at(base + i, time[i]);
  }

  // Periodic part: zero-phase pulses placed on the integrated F0 phase.
  // A pulse train with period P and response |H| = A * sqrt(P) has the
  // smoothed power A^2 that the analysis measures.
  const VuvVector &vuv = params.vuv;
  auto frame_of = [&](double pos) {
    const auto t = static_cast<Eigen::Index>(std::floor(pos / shift));
    return std::clamp<Eigen::Index>(t, 0, t_count - 1);
  };
  auto f0_at = [&](double pos) {
    const double u = (pos - shift / 2.0) / shift;
    const auto t0 = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(u)), 0, t_count - 1);
    const Eigen::Index t1 = std::min<Eigen::Index>(t0 + 1, t_count - 1);
    const double w = std::clamp(u - static_cast<double>(t0), 0.0, 1.0);
    return std::exp((1.0 - w) * params.lf0[t0] + w * params.lf0[t1]);
  };
  double phase = 0.0;
  for (Eigen::Index n = 0; n < length; ++n) {
    const Eigen::Index t = n / shift;
    const double f0 = f0_at(static_cast<double>(n));
    const double step = kTwoPi * f0 / fs;
    const double next = phase + step;
    if (next < kTwoPi) {
      phase = next;
      continue;
    }
    phase = next - kTwoPi;
    if (!vuv[t]) continue;
    const double pulse_pos = static_cast<double>(n) + (1.0 - phase / step);
    const Eigen::Index pt = frame_of(pulse_pos);
    if (!vuv[pt]) continue;
    const auto whole = static_cast<Eigen::Index>(std::floor(pulse_pos));
    const double frac = pulse_pos - static_cast<double>(whole);
    const double gain = std::sqrt(fs / f0);
    for (int k = 0; k < bins; ++k) {
      const double mag = envelope(pt, k) * ex.periodic_weight(pt, k) * gain;
      spec[k] = std::polar(mag, -kTwoPi * k * frac / k_fft);
    }
    fft.Inverse(spec, k_fft, &time);
    for (int i = -k_fft / 2; i < k_fft / 2; ++i)
      add_at(whole + i, time[static_cast<std::size_t>((i + k_fft) % k_fft)]);
  }

  out.samples = Eigen::Map<const Eigen::VectorXd>(y.data() + k_fft, length);
  const double peak = out.samples.cwiseAbs().maxCoeff();
  if (peak > 1.0) {
    const double g = 0.99 / peak;
    out.samples *= g;
    if (info) *info = {true, g};
  }
  return out;
}

}  // namespace ppgvc
