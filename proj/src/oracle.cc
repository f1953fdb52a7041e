// src/oracle.cc

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

#include "ppgvc/oracle.h"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include "ppgvc/binary_io.h"
#include "ppgvc/error.h"
#include "ppgvc/eval.h"
#include "ppgvc/rng.h"

namespace ppgvc {
namespace {

namespace fs = std::filesystem;

struct StateTarget {
  std::vector<double> formants, bandwidths;
  double log_gain = 0.0;
  double lf0 = 0.0;
  bool voiced = true;
  double bap = 0.0;
};

// The inventory depends only on the corpus seed.
std::vector<StateTarget> Inventory(const OracleCorpusSpec &spec) {
  std::vector<StateTarget> out;
  for (int p = 0; p < spec.phones; ++p) {
    Rng rng(MixSeed(spec.seed, 1000 + static_cast<std::uint64_t>(p)));
    const bool voiced = p < spec.phones - spec.unvoiced_phones;
    StateTarget base;
    base.voiced = voiced;
    if (voiced) {
      base.formants = {rng.Uniform(300, 850), rng.Uniform(900, 2200), rng.Uniform(2400, 3300)};
      base.bandwidths = {rng.Uniform(80, 140), rng.Uniform(90, 160), rng.Uniform(120, 220)};
      base.log_gain = rng.Uniform(-3.8, -3.0);
      base.lf0 = std::log(140.0) + rng.Uniform(-0.18, 0.18);
      base.bap = rng.Uniform(-30.0, -22.0);
    } else {
      base.formants = {rng.Uniform(2300, 3000), rng.Uniform(3800, 4800), rng.Uniform(5500, 6800)};
      base.bandwidths = {rng.Uniform(400, 700), rng.Uniform(500, 900), rng.Uniform(700, 1200)};
      base.log_gain = rng.Uniform(-4.6, -4.0);
      base.lf0 = std::log(140.0);
      base.bap = 0.0;
    }
    for (int k = 0; k < 3; ++k) {
      StateTarget s = base;
      const double shift = 1.0 + 0.04 * (k - 1) * (voiced ? 1.0 : 0.5);
      for (double &f : s.formants) f *= shift;
      s.lf0 += 0.03 * (k - 1);
      s.log_gain += 0.1 * (k == 1);
      out.push_back(s);
    }
  }
  return out;
}

// 5-tap [1 2 3 2 1] / 9 average with clamped edges.
Eigen::MatrixXd SmoothRows(const Eigen::MatrixXd &m) {
  static constexpr double kTaps[] = {1, 2, 3, 2, 1};
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.rows(), m.cols());
  for (Eigen::Index t = 0; t < m.rows(); ++t)
    for (int k = -2; k <= 2; ++k)
      out.row(t) += kTaps[k + 2] / 9.0 * m.row(std::clamp<Eigen::Index>(t + k, 0, m.rows() - 1));
  return out;
}

}  // namespace

Eigen::VectorXd FormantLogAmplitude(std::span<const double> formants,
                                    std::span<const double> bandwidths, double log_gain,
                                    int fft_size, int sample_rate) {
  if (formants.size() != bandwidths.size())
    Fail(ErrorCode::kDimensionMismatch, "formants and bandwidths differ in count");
  const int bins = fft_size / 2 + 1;
  Eigen::VectorXd out = Eigen::VectorXd::Constant(bins, log_gain);
  for (int k = 0; k < bins; ++k) {
    const double f = static_cast<double>(k) * sample_rate / fft_size;
    for (std::size_t i = 0; i < formants.size(); ++i) {
      const double d = (f - formants[i]) / (0.5 * bandwidths[i]);
      // Peak gain grows with F/B like a second-order resonator.
      out[k] += std::log(formants[i] / bandwidths[i]) - 0.5 * std::log1p(d * d);
    }
  }
  return out;
}

Waveform FormantVowel(double f0, double seconds, std::span<const double> formants,
                      std::span<const double> bandwidths, double peak, int sample_rate) {
  Waveform w;
  w.sample_rate = sample_rate;
  const auto n = static_cast<Eigen::Index>(std::llround(seconds * sample_rate));
  w.samples = Eigen::VectorXd::Zero(n);
  const Eigen::ArrayXd t = Eigen::ArrayXd::LinSpaced(n, 0.0, static_cast<double>(n - 1)) / sample_rate;
  for (int h = 1; h * f0 < 0.49 * sample_rate; ++h) {
    const double f = h * f0;
    double log_amp = 0.0;
    for (std::size_t i = 0; i < formants.size(); ++i) {
      const double d = (f - formants[i]) / (0.5 * bandwidths[i]);
      log_amp += std::log(formants[i] / bandwidths[i]) - 0.5 * std::log1p(d * d);
    }
    w.samples.array() += std::exp(log_amp) * (2.0 * std::numbers::pi * f * t + 0.3 * h * h).cos();
  }
  const double m = w.samples.cwiseAbs().maxCoeff();
  if (m > 0.0) w.samples *= peak / m;
  return w;
}

void OracleCorpusSpec::Validate() const {
  if (utterances < 0) Fail(ErrorCode::kInvalidConfig, "utterance count must be >= 0");
  if (dims.empty()) Fail(ErrorCode::kInvalidConfig, "oracle corpus needs at least one language");
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (dims[i].second <= 0) Fail(ErrorCode::kInvalidConfig, "PPG dimensions must be positive");
    for (std::size_t j = 0; j < i; ++j)
      if (dims[j].first == dims[i].first)
        Fail(ErrorCode::kDuplicateLanguage, "language given twice in oracle dims");
  }
  if (!(sharpness > 0.0)) Fail(ErrorCode::kInvalidConfig, "sharpness must be positive");
  if (phones < 1 || unvoiced_phones < 0 || unvoiced_phones >= phones)
    Fail(ErrorCode::kInvalidConfig, "need at least one voiced phone");
  if (min_phones < 1 || max_phones < min_phones || min_state_frames < 1 ||
      max_state_frames < min_state_frames)
    Fail(ErrorCode::kInvalidConfig, "bad oracle duration ranges");
  analysis.Validate();
  synth.Validate();
}

std::string OracleId(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "utt%04d", index);
  return buf;
}

std::vector<int> LanguageStates(std::span<const int> states, Language lang, Eigen::Index dim,
                                std::uint64_t seed) {
  int max_state = 0;
  for (int s : states) max_state = std::max(max_state, s);
  const Eigen::Index n = std::max<Eigen::Index>(dim, 1);
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(MixSeed(seed, 500 + static_cast<std::uint64_t>(CanonicalRank(lang))));
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.Index(i)]);
  std::vector<int> out;
  out.reserve(states.size());
  for (int s : states) out.push_back(perm[static_cast<std::size_t>(s % n)]);
  return out;
}

OracleUtterance MakeOracleUtterance(const OracleCorpusSpec &spec, int index) {
  spec.Validate();
  const std::vector<StateTarget> inventory = Inventory(spec);
  Rng rng(MixSeed(spec.seed, 2000 + static_cast<std::uint64_t>(index)));
  OracleUtterance u;
  u.id = OracleId(index);
  const int count = spec.min_phones + static_cast<int>(rng.Index(spec.max_phones - spec.min_phones + 1));
  int prev = -1;
  for (int i = 0; i < count; ++i) {
    int p;
    do {
      p = static_cast<int>(rng.Index(static_cast<std::uint64_t>(spec.phones)));
    } while (p == prev);
    prev = p;
    for (int k = 0; k < 3; ++k) {
      const int frames = spec.min_state_frames +
                         static_cast<int>(rng.Index(spec.max_state_frames - spec.min_state_frames + 1));
      for (int f = 0; f < frames; ++f) u.states.push_back(3 * p + k);
    }
  }

  const AnalysisConfig &ac = spec.analysis;
  const MelCepstrumBasis &basis = SharedMelCepstrumBasis(spec.synth.fft_size, ac.mcep_order, ac.warp_alpha);
  std::vector<Eigen::RowVectorXd> state_mcep(inventory.size());
  const auto t_count = static_cast<Eigen::Index>(u.states.size());
  Eigen::MatrixXd mcep(t_count, ac.mcep_order + 1);
  Eigen::MatrixXd lf0(t_count, 1);
  u.truth.vuv.resize(t_count);
  u.truth.bap.resize(t_count, ac.bap_bands);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    const auto s = static_cast<std::size_t>(u.states[static_cast<std::size_t>(t)]);
    const StateTarget &st = inventory[s];
    if (state_mcep[s].size() == 0) {
      const Eigen::VectorXd la = FormantLogAmplitude(st.formants, st.bandwidths, st.log_gain,
                                                     spec.synth.fft_size, spec.synth.sample_rate);
      state_mcep[s] = basis.Fit(la.transpose());
    }
    mcep.row(t) = state_mcep[s];
    lf0(t, 0) = st.lf0;
    u.truth.vuv[t] = st.voiced;
    u.truth.bap.row(t).setConstant(st.bap);
  }
  u.truth.mcep = SmoothRows(mcep);
  u.truth.lf0 = SmoothRows(lf0).col(0);
  u.truth.frame_shift_ms = ac.frame_shift_ms;

  SynthesisConfig sc = spec.synth;
  sc.noise_seed = MixSeed(spec.seed, 4000 + static_cast<std::uint64_t>(index));
  u.wave = Synthesize(u.truth, sc);

  for (const auto &[lang, dim] : spec.dims) {
    const std::vector<int> cols = LanguageStates(u.states, lang, dim, spec.seed);
    u.ppgs[lang] = OraclePpg(cols, dim, spec.sharpness,
                             MixSeed(spec.seed, 3000 + static_cast<std::uint64_t>(CanonicalRank(lang))),
                             lang);
  }
  return u;
}

CorpusManifest MakeOracleCorpus(const OracleCorpusSpec &spec, const fs::path &out_dir) {
  spec.Validate();
  std::error_code ec;
  for (const char *sub : {"wav", "ppg", "truth"}) {
    fs::create_directories(out_dir / sub, ec);
    if (ec) Fail(ErrorCode::kIoError, "cannot create " + (out_dir / sub).string() + ": " + ec.message());
  }
  CorpusManifest m;
  m.corpus_id = "oracle-" + std::to_string(spec.seed);
  m.speaker_id = spec.speaker;
  std::vector<Language> langs;
  for (const auto &[lang, dim] : spec.dims) langs.push_back(lang);
  m.language = FormatLanguageList(langs);
  for (int i = 0; i < spec.utterances; ++i) {
    const OracleUtterance u = MakeOracleUtterance(spec, i);
    UtteranceRecord r;
    r.id = u.id;
    r.wav_path = fs::absolute(out_dir / "wav" / (u.id + ".wav"));
    const std::string wav = EncodeWav(u.wave);
    WriteFileBytes(*r.wav_path, wav);
    for (const auto &[lang, ppg] : u.ppgs) {
      const fs::path p =
          fs::absolute(out_dir / "ppg" / (u.id + "." + std::string(LanguageTag(lang)) + ".ppg"));
      WritePpg(p, ppg);
      r.ppg_paths[lang] = p;
    }
    if (spec.write_truth) {
      r.params_path = fs::absolute(out_dir / "truth" / (u.id + ".prm"));
      WriteParams(*r.params_path, u.truth, AnalysisHash(wav, spec.analysis));
    }
    m.entries.push_back(std::move(r));
  }
  WriteManifest(out_dir / "manifest.tsv", m);
  return m;
}

TtsSurrogate MakeTtsSurrogate(const OracleCorpusSpec &spec, const OracleUtterance &utt, double d_ref) {
  if (!(d_ref > 0.0)) Fail(ErrorCode::kInvalidConfig, "d_ref must be positive");
  const SpeechParams clean = Analyze(utt.wave, spec.analysis);
  SynthesisConfig sc = spec.synth;
  sc.noise_seed = MixSeed(spec.seed, 6000 + Fnv1a(utt.id));
  TtsSurrogate out;
  out.wave = Synthesize(clean, sc);
  const SpeechParams resynth = Analyze(out.wave, spec.analysis);
  const Eigen::Index n = std::min(clean.frames(), resynth.frames());
  out.distortion.resize(n);
  for (Eigen::Index t = 0; t < n; ++t)
    out.distortion[t] = Mcd(clean.mcep.row(t), resynth.mcep.row(t));

  std::vector<int> states(utt.states.begin(), utt.states.begin() + std::min<Eigen::Index>(n, utt.states.size()));
  std::vector<double> sharp(states.size());
  for (std::size_t t = 0; t < states.size(); ++t)
    sharp[t] = spec.sharpness / (1.0 + out.distortion[static_cast<Eigen::Index>(t)] / d_ref);
  for (const auto &[lang, dim] : spec.dims) {
    const std::vector<int> cols = LanguageStates(states, lang, dim, spec.seed);
    out.ppgs[lang] = OraclePpg(cols, dim, sharp,
                               MixSeed(spec.seed, 3000 + static_cast<std::uint64_t>(CanonicalRank(lang))),
                               lang);
  }
  return out;
}

}  // namespace ppgvc
