// src/analysis.cc

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

#include "ppgvc/analysis.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>
#include <vector>

#include <Eigen/QR>

#include "fft.h"
#include "ppgvc/error.h"

namespace ppgvc {
namespace {

// Smoothing width used on frames without a pitch estimate.
constexpr double kUnvoicedSmoothingHz = 200.0;
// Octave correction accepts a sub-multiple lag whose correlation is at least
// this fraction of the best peak.
constexpr double kOctaveRatio = 0.9;
constexpr double kSilenceMeanSquare = 1e-12;
constexpr double kMinAperiodicity = 1e-6;  // -60 dB

double ParabolicOffset(double left, double mid, double right) {
  const double denom = left - 2.0 * mid + right;
  if (denom >= 0.0) return 0.0;
  return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

// Signal with enough zero padding on both sides that every analysis window
// can be read without bounds checks.
class PaddedSignal {
 public:
  PaddedSignal(const Eigen::VectorXd &x, Eigen::Index pad)
      : pad_(pad), data_(Eigen::VectorXd::Zero(x.size() + 2 * pad)) {
    data_.segment(pad, x.size()) = x;
    energy_.resize(data_.size() + 1);
    energy_[0] = 0.0;
    for (Eigen::Index i = 0; i < data_.size(); ++i)
      energy_[i + 1] = energy_[i] + data_[i] * data_[i];
  }

  // Segment starting at signal index `start` (may be negative).
  auto Segment(Eigen::Index start, Eigen::Index n) const {
    return data_.segment(start + pad_, n);
  }
  double Energy(Eigen::Index start, Eigen::Index n) const {
    return energy_[start + pad_ + n] - energy_[start + pad_];
  }

 private:
  Eigen::Index pad_;
  Eigen::VectorXd data_;
  std::vector<double> energy_;
};

// Normalised cross-correlation between the two halves of a window straddling
// `centre`, for one integer lag.
double Nccf(const PaddedSignal &sig, Eigen::Index centre, Eigen::Index n, int lag) {
  const Eigen::Index a = centre - n / 2 - lag / 2;
  const Eigen::Index b = a + lag;
  const double e = sig.Energy(a, n) * sig.Energy(b, n);
  if (e <= 0.0) return 0.0;
  return sig.Segment(a, n).dot(sig.Segment(b, n)) / std::sqrt(e);
}

struct PitchCandidate {
  double lag = 0.0;
  double score = 0.0;
};

PitchCandidate PickPitch(const PaddedSignal &sig, Eigen::Index centre, Eigen::Index n,
                         int lag_min, int lag_max) {
  std::vector<double> r(lag_max - lag_min + 3);
  for (int lag = lag_min - 1; lag <= lag_max + 1; ++lag)
    r[lag - lag_min + 1] = Nccf(sig, centre, n, lag);
  auto at = [&](int lag) { return r[lag - lag_min + 1]; };

  std::vector<int> peaks;
  for (int lag = lag_min; lag <= lag_max; ++lag)
    if (at(lag) >= at(lag - 1) && at(lag) > at(lag + 1)) peaks.push_back(lag);
  if (peaks.empty()) return {};

  int best = *std::max_element(peaks.begin(), peaks.end(),
                               [&](int x, int y) { return at(x) < at(y); });
  // Octave correction: prefer the shortest sub-multiple of the best lag whose
  // correlation is nearly as strong.
  for (int lag : peaks) {
    if (lag >= best) break;
    if (at(lag) < kOctaveRatio * at(best)) continue;
    const double tol = std::max(2.0, 0.04 * best);
    bool submultiple = false;
    for (int k = 2; k <= 4; ++k)
      if (std::abs(lag * k - best) <= tol) submultiple = true;
    if (submultiple) {
      best = lag;
      break;
    }
  }
  const double off = ParabolicOffset(at(best - 1), at(best), at(best + 1));
  const double peak = at(best) - 0.25 * (at(best - 1) - at(best + 1)) * off;
  return {best + off, peak};
}

}  // namespace

void AnalysisConfig::Validate() const {
  if (sample_rate <= 0) Fail(ErrorCode::kInvalidConfig, "sample_rate must be positive");
  if (frame_shift_ms <= 0.0 || frame_length_ms <= 0.0)
    Fail(ErrorCode::kInvalidConfig, "frame shift and length must be positive");
  if (shift_samples() < 1) Fail(ErrorCode::kInvalidConfig, "frame shift below one sample");
  if (mcep_order < 0) Fail(ErrorCode::kInvalidConfig, "mcep_order must be >= 0");
  if (!(warp_alpha > 0.0 && warp_alpha < 1.0))
    Fail(ErrorCode::kInvalidConfig, "warp_alpha must lie in (0, 1)");
  if (!(f0_floor > 0.0 && f0_floor < f0_ceil))
    Fail(ErrorCode::kInvalidConfig, "need 0 < f0_floor < f0_ceil");
  if (f0_ceil >= sample_rate / 4.0) Fail(ErrorCode::kInvalidConfig, "f0_ceil too high for sample rate");
  if (bap_bands < 1) Fail(ErrorCode::kInvalidConfig, "bap_bands must be >= 1");
  if (median_length < 1 || median_length % 2 == 0)
    Fail(ErrorCode::kInvalidConfig, "median_length must be odd and positive");
  if (!(spectral_floor > 0.0)) Fail(ErrorCode::kInvalidConfig, "spectral_floor must be positive");
}

int AnalysisConfig::shift_samples() const {
  return static_cast<int>(std::lround(frame_shift_ms * sample_rate / 1000.0));
}

int AnalysisConfig::frame_samples() const {
  return static_cast<int>(std::lround(frame_length_ms * sample_rate / 1000.0));
}

int AnalysisConfig::fft_size() const { return internal::NextPowerOfTwo(2 * frame_samples()); }

void SpeechParams::Validate() const {
  const Eigen::Index t = frames();
  if (mcep.rows() != t || vuv.size() != t || bap.rows() != t)
    Fail(ErrorCode::kFrameCountMismatch, "speech parameter streams differ in length");
  if (!mcep.allFinite() || !lf0.allFinite() || !bap.allFinite())
    Fail(ErrorCode::kInvalidValue, "non-finite speech parameter");
  if (t > 0 && bap.size() > 0 && bap.maxCoeff() > 0.0)
    Fail(ErrorCode::kInvalidValue, "band aperiodicity above 0 dB");
}

SpeechParams SpeechParams::Head(Eigen::Index n) const {
  SpeechParams out;
  out.mcep = mcep.topRows(n);
  out.lf0 = lf0.head(n);
  out.vuv = vuv.head(n);
  out.bap = bap.topRows(n);
  out.frame_shift_ms = frame_shift_ms;
  return out;
}

Eigen::Index NumFrames(Eigen::Index num_samples, const AnalysisConfig &cfg) {
  if (num_samples <= 0) return 0;
  return std::max<Eigen::Index>(1, num_samples / cfg.shift_samples());
}

Eigen::MatrixXd FrameSignal(const Waveform &wave, const AnalysisConfig &cfg) {
  cfg.Validate();
  if (wave.empty()) Fail(ErrorCode::kEmptyInput, "empty waveform");
  const Eigen::Index t_count = NumFrames(wave.size(), cfg);
  const int n = cfg.frame_samples();
  const int shift = cfg.shift_samples();
  Eigen::VectorXd window(n);
  for (int i = 0; i < n; ++i)
    window[i] = n == 1 ? 1.0 : 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (n - 1));

  PaddedSignal sig(wave.samples, n + shift);
  Eigen::MatrixXd frames(t_count, n);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    const Eigen::Index centre = t * shift + shift / 2;
    frames.row(t) = sig.Segment(centre - n / 2, n).cwiseProduct(window).transpose();
  }
  return frames;
}

F0Track EstimateF0(const Waveform &wave, const AnalysisConfig &cfg) {
  cfg.Validate();
  if (wave.empty()) Fail(ErrorCode::kEmptyInput, "empty waveform");
  const Eigen::Index t_count = NumFrames(wave.size(), cfg);
  const int n = cfg.frame_samples();
  const int shift = cfg.shift_samples();
  const double fs = wave.sample_rate;
  const int lag_min = std::max(2, static_cast<int>(std::floor(fs / cfg.f0_ceil)));
  const int lag_max = static_cast<int>(std::ceil(fs / cfg.f0_floor));
  PaddedSignal sig(wave.samples, n + lag_max + shift + 4);

  F0Track raw;
  raw.f0 = Eigen::VectorXd::Zero(t_count);
  raw.vuv = VuvVector::Constant(t_count, false);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    const Eigen::Index centre = t * shift + shift / 2;
    if (sig.Energy(centre - n / 2, n) / n < kSilenceMeanSquare) continue;
    const PitchCandidate c = PickPitch(sig, centre, n, lag_min, lag_max);
    if (c.lag <= 0.0 || c.score < cfg.voicing_threshold) continue;
    const double f0 = fs / c.lag;
    if (f0 < cfg.f0_floor * 0.97 || f0 > cfg.f0_ceil * 1.03) continue;
    raw.f0[t] = std::clamp(f0, cfg.f0_floor, cfg.f0_ceil);
    raw.vuv[t] = true;
  }

  // Median smoothing over voiced neighbours removes isolated octave jumps.
  F0Track out = raw;
  const int half = cfg.median_length / 2;
  std::vector<double> window;
  for (Eigen::Index t = 0; t < t_count; ++t) {
    if (!raw.vuv[t]) continue;
    window.clear();
    for (Eigen::Index k = std::max<Eigen::Index>(0, t - half);
         k <= std::min<Eigen::Index>(t_count - 1, t + half); ++k)
      if (raw.vuv[k]) window.push_back(raw.f0[k]);
    auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
    std::nth_element(window.begin(), mid, window.end());
    double med = *mid;
    if (window.size() % 2 == 0) {
      const double lower = *std::max_element(window.begin(), mid);
      med = 0.5 * (med + lower);
    }
    out.f0[t] = med;
  }
  return out;
}

double WarpFrequency(double omega, double alpha) {
  return omega + 2.0 * std::atan(alpha * std::sin(omega) / (1.0 - alpha * std::cos(omega)));
}

MelCepstrumBasis::MelCepstrumBasis(int fft_size, int order, double alpha) {
  const int bins = fft_size / 2 + 1;
  basis_.resize(bins, order + 1);
  for (int k = 0; k < bins; ++k) {
    const double warped = WarpFrequency(std::numbers::pi * k / (bins - 1), alpha);
    basis_(k, 0) = 1.0;
    for (int m = 1; m <= order; ++m) basis_(k, m) = 2.0 * std::cos(m * warped);
  }
  solver_ = basis_.completeOrthogonalDecomposition().pseudoInverse();
}

Eigen::MatrixXd MelCepstrumBasis::Fit(const Eigen::Ref<const Eigen::MatrixXd> &log_amplitude) const {
  if (log_amplitude.cols() != basis_.rows())
    Fail(ErrorCode::kDimensionMismatch, "log spectrum width does not match basis");
  return log_amplitude * solver_.transpose();
}

Eigen::MatrixXd MelCepstrumBasis::Evaluate(const Eigen::Ref<const Eigen::MatrixXd> &mcep) const {
  if (mcep.cols() != basis_.cols())
    Fail(ErrorCode::kDimensionMismatch, "mel-cepstrum width does not match basis");
  return mcep * basis_.transpose();
}

const MelCepstrumBasis &SharedMelCepstrumBasis(int fft_size, int order, double alpha) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, double>, std::unique_ptr<MelCepstrumBasis>> cache;
  std::lock_guard lock(mu);
  auto &slot = cache[{fft_size, order, alpha}];
  if (!slot) slot = std::make_unique<MelCepstrumBasis>(fft_size, order, alpha);
  return *slot;
}

Eigen::MatrixXd FramePowerSpectra(const Eigen::MatrixXd &frames, int fft_size) {
  const int bins = fft_size / 2 + 1;
  Eigen::MatrixXd power(frames.rows(), bins);
  auto &fft = internal::RealFft::ThreadLocal();
  std::vector<double> buf(fft_size);
  std::vector<std::complex<double>> spec;
  // Window energy of a Hann window of the frame length.
  const Eigen::Index n = frames.cols();
  double wsum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = n == 1 ? 1.0 : 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
    wsum += w * w;
  }
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) buf[i] = frames(t, i);
    fft.Forward(buf, &spec);
    for (int k = 0; k < bins; ++k) power(t, k) = std::norm(spec[k]) / wsum;
  }
  return power;
}

Eigen::VectorXd SmoothSpectrum(const Eigen::Ref<const Eigen::VectorXd> &power, double width_bins) {
  const Eigen::Index bins = power.size();
  if (width_bins <= 1.0 || bins < 2) return power;
  const Eigen::Index nyq = bins - 1;
  const Eigen::Index margin = static_cast<Eigen::Index>(std::ceil(width_bins / 2.0)) + 2;
  // Mirror so that index i of `ext` is bin i - margin of the periodic,
  // even-symmetric spectrum.
  auto mirrored = [&](Eigen::Index k) {
    const Eigen::Index period = 2 * nyq;
    k %= period;
    if (k < 0) k += period;
    return power[k <= nyq ? k : period - k];
  };
  const Eigen::Index ext_len = bins + 2 * margin;
  // cum[i] = sum of ext cells [0, i); cell i spans [i - 0.5, i + 0.5) in bins.
  std::vector<double> cum(ext_len + 1, 0.0);
  for (Eigen::Index i = 0; i < ext_len; ++i) cum[i + 1] = cum[i] + mirrored(i - margin);
  // Integral of the piecewise-constant spectrum from -inf to position x.
  auto integral = [&](double x) {
    const double pos = x + margin + 0.5;  // cell-edge coordinate
    const auto i = static_cast<Eigen::Index>(std::floor(pos));
    const double frac = pos - i;
    return cum[i] + frac * (cum[i + 1] - cum[i]);
  };
  Eigen::VectorXd out(bins);
  const double half = width_bins / 2.0;
  for (Eigen::Index k = 0; k < bins; ++k)
    out[k] = (integral(k + half) - integral(k - half)) / width_bins;
  return out;
}

Eigen::MatrixXd ExtractMcep(const Waveform &wave, const AnalysisConfig &cfg, std::span<const double> f0) {
  const Eigen::MatrixXd frames = FrameSignal(wave, cfg);
  std::vector<double> own_f0;
  if (f0.empty()) {
    const F0Track track = EstimateF0(wave, cfg);
    own_f0.assign(track.f0.data(), track.f0.data() + track.f0.size());
    f0 = own_f0;
  }
  if (static_cast<Eigen::Index>(f0.size()) != frames.rows())
    Fail(ErrorCode::kFrameCountMismatch, "f0 track length differs from frame count");

  const int fft_size = cfg.fft_size();
  const Eigen::MatrixXd power = FramePowerSpectra(frames, fft_size);
  const double bins_per_hz = static_cast<double>(fft_size) / wave.sample_rate;
  const double floor_power = cfg.spectral_floor * cfg.spectral_floor;
  Eigen::MatrixXd log_amp(power.rows(), power.cols());
  for (Eigen::Index t = 0; t < power.rows(); ++t) {
    const double width_hz = f0[t] > 0.0 ? f0[t] : kUnvoicedSmoothingHz;
    const Eigen::VectorXd smooth = SmoothSpectrum(power.row(t).transpose(), width_hz * bins_per_hz);
    log_amp.row(t) = (0.5 * smooth.array().max(floor_power).log()).transpose();
  }
  return SharedMelCepstrumBasis(fft_size, cfg.mcep_order, cfg.warp_alpha).Fit(log_amp);
}

Eigen::MatrixXd ExtractBap(const Waveform &wave, const F0Track &track, const AnalysisConfig &cfg) {
  cfg.Validate();
  if (wave.empty()) Fail(ErrorCode::kEmptyInput, "empty waveform");
  const Eigen::Index t_count = NumFrames(wave.size(), cfg);
  if (track.f0.size() != t_count || track.vuv.size() != t_count)
    Fail(ErrorCode::kFrameCountMismatch,
         "f0/vuv length " + std::to_string(track.f0.size()) + " vs frame count " +
             std::to_string(t_count));

  const int n = cfg.frame_samples();
  const int shift = cfg.shift_samples();
  const double fs = wave.sample_rate;
  const int lag_max = static_cast<int>(std::ceil(fs / cfg.f0_floor)) + 4;
  PaddedSignal sig(wave.samples, n + lag_max + shift + 4);
  Eigen::MatrixXd bap = Eigen::MatrixXd::Zero(t_count, cfg.bap_bands);

  auto &fft = internal::RealFft::ThreadLocal();
  std::vector<double> buf;
  std::vector<std::complex<double>> spec;
  for (Eigen::Index t = 0; t < t_count; ++t) {
    if (!track.vuv[t] || track.f0[t] <= 0.0) continue;
    const double lag0 = fs / track.f0[t];
    const Eigen::Index centre = t * shift + shift / 2;
    const int reach = static_cast<int>(std::ceil(lag0)) + 3;
    // Local excerpt covering every window the correlation below touches.
    const Eigen::Index start = centre - n / 2 - reach;
    const Eigen::Index len = n + 2 * reach;
    const int fft_size = internal::NextPowerOfTwo(static_cast<int>(len));
    for (int b = 0; b < cfg.bap_bands; ++b) {
      Eigen::VectorXd excerpt = sig.Segment(start, len);
      if (cfg.bap_bands > 1) {
        buf.assign(fft_size, 0.0);
        for (Eigen::Index i = 0; i < len; ++i) buf[i] = excerpt[i];
        fft.Forward(buf, &spec);
        const int bins = fft_size / 2 + 1;
        const double lo = static_cast<double>(b) / cfg.bap_bands * (bins - 1);
        const double hi = static_cast<double>(b + 1) / cfg.bap_bands * (bins - 1);
        for (int k = 0; k < bins; ++k) {
          const bool inside = k >= lo && (k < hi || (b == cfg.bap_bands - 1 && k <= hi));
          if (!inside) spec[k] = 0.0;
        }
        fft.Inverse(spec, fft_size, &buf);
        for (Eigen::Index i = 0; i < len; ++i) excerpt[i] = buf[i];
      }
      PaddedSignal local(excerpt, 0);
      const Eigen::Index local_centre = centre - start;
      const int lo_lag = std::max(2, static_cast<int>(std::floor(lag0)) - 1);
      const int hi_lag = static_cast<int>(std::ceil(lag0)) + 1;
      std::vector<double> r;
      for (int lag = lo_lag - 1; lag <= hi_lag + 1; ++lag)
        r.push_back(Nccf(local, local_centre, n, lag));
      double best = -1.0;
      for (std::size_t i = 1; i + 1 < r.size(); ++i) {
        const double off = ParabolicOffset(r[i - 1], r[i], r[i + 1]);
        const double peak = r[i] - 0.25 * (r[i - 1] - r[i + 1]) * off;
        best = std::max(best, std::min(peak, 1.0));
      }
      const double aperiodic = std::clamp(1.0 - std::max(best, 0.0), kMinAperiodicity, 1.0);
      bap(t, b) = 10.0 * std::log10(aperiodic);
    }
  }
  return bap;
}

Eigen::VectorXd EncodeLf0(const F0Track &track, double f0_floor) {
  const Eigen::Index t_count = track.f0.size();
  if (track.vuv.size() != t_count)
    Fail(ErrorCode::kFrameCountMismatch, "f0 and vuv lengths differ");
  std::vector<Eigen::Index> voiced;
  for (Eigen::Index t = 0; t < t_count; ++t) {
    if (!track.vuv[t]) continue;
    if (!(track.f0[t] > 0.0) || !std::isfinite(track.f0[t]))
      Fail(ErrorCode::kInvalidF0, "non-positive f0 on voiced frame " + std::to_string(t));
    voiced.push_back(t);
  }
  Eigen::VectorXd lf0(t_count);
  if (voiced.empty()) {
    lf0.setConstant(std::log(f0_floor));
    return lf0;
  }
  for (Eigen::Index t = 0; t <= voiced.front(); ++t) lf0[t] = std::log(track.f0[voiced.front()]);
  for (std::size_t i = 0; i + 1 < voiced.size(); ++i) {
    const Eigen::Index a = voiced[i], b = voiced[i + 1];
    const double la = std::log(track.f0[a]), lb = std::log(track.f0[b]);
    for (Eigen::Index t = a; t < b; ++t)
      lf0[t] = la + (lb - la) * static_cast<double>(t - a) / static_cast<double>(b - a);
  }
  for (Eigen::Index t = voiced.back(); t < t_count; ++t) lf0[t] = std::log(track.f0[voiced.back()]);
  return lf0;
}

SpeechParams Analyze(const Waveform &wave, const AnalysisConfig &cfg) {
  cfg.Validate();
  if (wave.sample_rate != cfg.sample_rate)
    Fail(ErrorCode::kInvalidValue, "sample rate " + std::to_string(wave.sample_rate) +
                                       " Hz does not match configured " +
                                       std::to_string(cfg.sample_rate) + " Hz");
  const F0Track track = EstimateF0(wave, cfg);
  SpeechParams p;
  p.frame_shift_ms = cfg.frame_shift_ms;
  p.mcep = ExtractMcep(wave, cfg, std::span<const double>(track.f0.data(), track.f0.size()));
  p.bap = ExtractBap(wave, track, cfg);
  p.lf0 = EncodeLf0(track, cfg.f0_floor);
  p.vuv = track.vuv;
  return p;
}

}  // namespace ppgvc
