// include/ppgvc/oracle.h

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

#ifndef PPGVC_ORACLE_H_
#define PPGVC_ORACLE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ppgvc/analysis.h"
#include "ppgvc/corpus.h"
#include "ppgvc/ppg.h"
#include "ppgvc/vocoder.h"
#include "ppgvc/wave.h"

namespace ppgvc {

/// Log amplitude of a cascade of resonances, sampled on fft_size/2+1 bins.
Eigen::VectorXd FormantLogAmplitude(std::span<const double> formants,
                                    std::span<const double> bandwidths, double log_gain,
                                    int fft_size, int sample_rate);

/// Sum of harmonics of f0 shaped by the same resonances; the test vowel for
/// analysis/synthesis round trips.
Waveform FormantVowel(double f0, double seconds, std::span<const double> formants,
                      std::span<const double> bandwidths, double peak = 0.5,
                      int sample_rate = 16000);

/// Desk-scale corpus whose speech parameters are a fixed smooth function of
/// a phone-state sequence, so a perfect predictor exists.
struct OracleCorpusSpec {
  int utterances = 20;
  std::vector<std::pair<Language, Eigen::Index>> dims = {
      {Language::kJapanese, 64}, {Language::kChinese, 64}, {Language::kEnglish, 64}};
  std::uint64_t seed = 1;
  double sharpness = 8.0;
  int phones = 20;  // each with begin / middle / end substates
  int unvoiced_phones = 4;
  int min_phones = 8, max_phones = 14;
  int min_state_frames = 3, max_state_frames = 7;
  std::string speaker = "oracle";
  bool write_truth = true;
  AnalysisConfig analysis;
  SynthesisConfig synth;

  void Validate() const;
  int num_states() const { return 3 * phones; }
};

struct OracleUtterance {
  std::string id;
  std::vector<int> states;  // phone-state per frame
  SpeechParams truth;
  Waveform wave;
  std::map<Language, PpgMatrix> ppgs;
};

std::string OracleId(int index);

// Phone-state -> column of one language's posteriorgram, via a seeded
// permutation (modulo the dimension when it is smaller than the inventory).
std::vector<int> LanguageStates(std::span<const int> states, Language lang, Eigen::Index dim,
                                std::uint64_t seed);

OracleUtterance MakeOracleUtterance(const OracleCorpusSpec &spec, int index);

/// Writes wav/, ppg/<id>.<lang>.ppg, truth/<id>.prm and manifest.tsv. With
/// write_truth each record's params column points at its ground truth, so
/// training and evaluation see the exact generating parameters.
CorpusManifest MakeOracleCorpus(const OracleCorpusSpec &spec, const std::filesystem::path &out_dir);

/// Stand-in for TTS output fed to conversion: the clean wave re-synthesised
/// from its own analysis, with posteriors whose per-frame sharpness drops as
/// S / (1 + d_t / d_ref), d_t being the frame's mel-cepstral distortion (dB)
/// between the clean and re-synthesised analyses.
struct TtsSurrogate {
  Waveform wave;
  std::map<Language, PpgMatrix> ppgs;
  Eigen::VectorXd distortion;
};

TtsSurrogate MakeTtsSurrogate(const OracleCorpusSpec &spec, const OracleUtterance &utt,
                              double d_ref = 1.0);

}  // namespace ppgvc

#endif  // PPGVC_ORACLE_H_
