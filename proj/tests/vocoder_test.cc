// tests/vocoder_test.cc

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <cmath>
#include <vector>

#include "ppgvc/analysis.h"
#include "ppgvc/eval.h"
#include "ppgvc/oracle.h"
#include "ppgvc/vocoder.h"
#include "ppgvc/wave.h"
#include "test_util.h"

using namespace ppgvc;

namespace {

const std::vector<double> kFormants = {700.0, 1200.0, 2600.0};
const std::vector<double> kBandwidths = {80.0, 90.0, 120.0};

SpeechParams Flat(Eigen::Index t, double c0, bool voiced, double f0 = 150.0, double bap = -30.0) {
  SpeechParams p;
  p.mcep = Eigen::MatrixXd::Zero(t, 40);
  p.mcep.col(0).setConstant(c0);
  p.lf0 = Eigen::VectorXd::Constant(t, std::log(f0));
  p.vuv = VuvVector::Constant(t, voiced);
  p.bap = Eigen::MatrixXd::Constant(t, 1, voiced ? bap : 0.0);
  return p;
}

double MaxNormalizedAutocorrelation(const Eigen::VectorXd &x, int lag_min, int lag_max) {
  double best = -1.0;
  for (int lag = lag_min; lag <= lag_max; ++lag) {
    const Eigen::Index n = x.size() - lag;
    const double num = x.head(n).dot(x.tail(n));
    const double den = std::sqrt(x.head(n).squaredNorm() * x.tail(n).squaredNorm());
    if (den > 0) best = std::max(best, num / den);
  }
  return best;
}

}  // namespace

TEST_CASE("unvoiced excitation is the seeded noise") {
  SynthesisConfig cfg;
  const Eigen::VectorXd lf0 = Eigen::VectorXd::Constant(12, std::log(120.0));
  const VuvVector vuv = VuvVector::Constant(12, false);
  const Eigen::MatrixXd bap = Eigen::MatrixXd::Constant(12, 1, -10.0);
  const Excitation ex = GenerateExcitation(lf0, vuv, bap, cfg);
  CHECK(ex.noise == NoiseSpectra(12, cfg));
  CHECK(ex.periodic_weight.isZero());
  CHECK((ex.noise_weight.array() == 1.0).all());
  CHECK(ex.f0.isZero());
}

TEST_CASE("aperiodicity sets the voiced noise weight") {
  SynthesisConfig cfg;
  const Eigen::VectorXd lf0 = Eigen::VectorXd::Constant(2, std::log(200.0));
  const VuvVector vuv = VuvVector::Constant(2, true);
  Eigen::MatrixXd bap(2, 1);
  bap << 0.0, -20.0;
  const Excitation ex = GenerateExcitation(lf0, vuv, bap, cfg);
  CHECK(ex.f0[0] == doctest::Approx(200.0));
  CHECK(ex.noise_weight.row(0).minCoeff() == doctest::Approx(1.0));
  CHECK(ex.noise_weight.row(0).maxCoeff() == doctest::Approx(1.0));
  CHECK(ex.noise_weight.row(1).minCoeff() == doctest::Approx(0.1));
  CHECK(ex.noise_weight.row(1).maxCoeff() == doctest::Approx(0.1));
}

TEST_CASE("excitation rejects misaligned streams") {
  SynthesisConfig cfg;
  CHECK_THROWS_AS_CODE(GenerateExcitation(Eigen::VectorXd::Zero(3), VuvVector::Constant(2, false),
                                          Eigen::MatrixXd::Zero(3, 1), cfg),
                       ErrorCode::kFrameCountMismatch);
  CHECK_THROWS_AS_CODE(GenerateExcitation(Eigen::VectorXd::Zero(3), VuvVector::Constant(3, false),
                                          Eigen::MatrixXd::Zero(4, 1), cfg),
                       ErrorCode::kFrameCountMismatch);
}

TEST_CASE("a c0-only cepstrum is a flat envelope") {
  SynthesisConfig cfg;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(40);
  c[0] = -2.3;
  const Eigen::VectorXd env = McepToSpectrum(c, cfg);
  CHECK(env.size() == cfg.fft_size / 2 + 1);
  CHECK((env.array() - std::exp(-2.3)).abs().maxCoeff() < 1e-12);
  c[0] = std::log(cfg.spectral_floor);
  const Eigen::VectorXd floor_env = McepToSpectrum(c, cfg);
  CHECK((floor_env.array() / cfg.spectral_floor - 1.0).abs().maxCoeff() < 1e-9);
  CHECK(floor_env.minCoeff() > 0.0);
}

TEST_CASE("smooth envelopes survive the cepstral round trip") {
  SynthesisConfig cfg;
  AnalysisConfig ac;
  const MelCepstrumBasis &basis = SharedMelCepstrumBasis(cfg.fft_size, ac.mcep_order, cfg.warp_alpha);
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<double> f = {rng.Uniform(300, 900), rng.Uniform(1000, 2000), rng.Uniform(2200, 3500)};
    const std::vector<double> b = {rng.Uniform(60, 150), rng.Uniform(70, 160), rng.Uniform(90, 200)};
    const Eigen::VectorXd log_amp = FormantLogAmplitude(f, b, rng.Uniform(-4, -1), cfg.fft_size, cfg.sample_rate);
    const Eigen::VectorXd mcep = basis.Fit(log_amp.transpose()).transpose();
    const Eigen::VectorXd env = McepToSpectrum(mcep, cfg);
    const double mean_abs = (env.array().log() - log_amp.array()).abs().mean();
    INFO("trial " << trial << " mean |log diff| " << mean_abs);
    CHECK(mean_abs < 0.12);
  }
}

TEST_CASE("empty parameters render an empty wave") {
  SynthesisConfig cfg;
  const Waveform w = Synthesize(Flat(0, -3.0, false), cfg);
  CHECK(w.empty());
  CHECK(w.sample_rate == cfg.sample_rate);
}

TEST_CASE("output length is frames times shift") {
  SynthesisConfig cfg;
  for (Eigen::Index t : {1, 2, 7, 100, 333}) CHECK(Synthesize(Flat(t, -3.0, t % 2 == 0), cfg).size() == t * 160);
  cfg.frame_shift_ms = 5.0;
  CHECK(Synthesize(Flat(10, -3.0, true), cfg).size() == 10 * 80);
}

TEST_CASE("synthesis is deterministic under a seed") {
  SynthesisConfig cfg;
  const SpeechParams p = Flat(50, -3.0, true, 180.0, -12.0);
  CHECK(Synthesize(p, cfg).samples == Synthesize(p, cfg).samples);
  SynthesisConfig other = cfg;
  other.noise_seed = 99;
  CHECK(Synthesize(p, cfg).samples != Synthesize(p, other).samples);
}

TEST_CASE("silence in, silence out") {
  SynthesisConfig cfg;
  const Waveform w = Synthesize(Flat(100, std::log(cfg.spectral_floor), false), cfg);
  CHECK(RmsDbfs(w) < -60.0);
}

TEST_CASE("unvoiced noise has no pitch peak") {
  SynthesisConfig cfg;
  AnalysisConfig ac;
  const Waveform w = Synthesize(Flat(100, -3.0, false), cfg);
  const int lag_min = static_cast<int>(std::floor(cfg.sample_rate / ac.f0_ceil));
  const int lag_max = static_cast<int>(std::ceil(cfg.sample_rate / ac.f0_floor));
  const double peak = MaxNormalizedAutocorrelation(w.samples, lag_min, lag_max);
  INFO("max autocorrelation " << peak);
  CHECK(peak < 0.3);
}

TEST_CASE("loud parameters are peak-normalised instead of clipping") {
  SynthesisConfig cfg;
  SynthesisInfo info;
  const Waveform w = Synthesize(Flat(40, 2.0, true, 120.0, -40.0), cfg, &info);
  CHECK(info.peak_normalized);
  CHECK(info.gain < 1.0);
  CHECK(w.samples.cwiseAbs().maxCoeff() == doctest::Approx(0.99));
  SynthesisInfo quiet;
  Synthesize(Flat(40, -4.0, true), cfg, &quiet);
  CHECK_FALSE(quiet.peak_normalized);
  CHECK(quiet.gain == 1.0);
}

TEST_CASE("a 220 Hz vowel survives analysis and resynthesis") {
  AnalysisConfig ac;
  SynthesisConfig sc;
  const Waveform vowel = FormantVowel(220.0, 1.0, kFormants, kBandwidths);
  const SpeechParams a = Analyze(vowel, ac);
  const SpeechParams b = Analyze(Synthesize(a, sc), ac);
  REQUIRE(a.frames() == b.frames());
  const F0Error f0 = F0Rmse(a, b);
  const double mcd = Mcd(a.mcep, b.mcep);
  INFO("f0 rmse " << f0.rmse << " mcd " << mcd);
  CHECK(f0.compared > a.frames() / 2);
  CHECK(f0.rmse < 5.0);
  CHECK(mcd < 2.5);
}

TEST_CASE("repeated resynthesis approaches a fixed point") {
  AnalysisConfig ac;
  SynthesisConfig sc;
  const Waveform vowel = FormantVowel(160.0, 0.8, kFormants, kBandwidths);
  const SpeechParams p1 = Analyze(Synthesize(Analyze(vowel, ac), sc), ac);
  const SpeechParams p2 = Analyze(Synthesize(p1, sc), ac);
  const Waveform w1 = Synthesize(p1, sc);
  const Waveform w2 = Synthesize(p2, sc);
  const double mcd = Mcd(Analyze(w1, ac).mcep, Analyze(w2, ac).mcep);
  INFO("mcd between successive resyntheses " << mcd);
  CHECK(mcd < 1.0);
}

TEST_CASE("synthesis runs well inside real time") {
  AnalysisConfig ac;
  SynthesisConfig sc;
  const SpeechParams p = Analyze(FormantVowel(200.0, 2.0, kFormants, kBandwidths), ac);
  Synthesize(p, sc);
  const auto t0 = std::chrono::steady_clock::now();
  const Waveform w = Synthesize(p, sc);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double rtf = secs / w.duration_seconds();
  INFO("real-time factor " << rtf);
  CHECK(rtf < 0.1);
}

TEST_CASE("synthesis configs are validated") {
  SynthesisConfig c;
  c.fft_size = 1000;
  CHECK_THROWS_AS_CODE(c.Validate(), ErrorCode::kInvalidConfig);
  c = {};
  c.fft_size = 512;
  CHECK_THROWS_AS_CODE(c.Validate(), ErrorCode::kInvalidConfig);
  c = {};
  c.sample_rate = 0;
  CHECK_THROWS_AS_CODE(c.Validate(), ErrorCode::kInvalidConfig);
}
