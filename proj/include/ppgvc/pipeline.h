// include/ppgvc/pipeline.h

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

#ifndef PPGVC_PIPELINE_H_
#define PPGVC_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ppgvc/adversarial.h"
#include "ppgvc/analysis.h"
#include "ppgvc/corpus.h"
#include "ppgvc/neural.h"
#include "ppgvc/ppg.h"
#include "ppgvc/vocoder.h"
#include "ppgvc/wave.h"

namespace ppgvc {

struct VcSettings {
  AnalysisConfig analysis;
  std::vector<Language> languages = {Language::kJapanese, Language::kChinese, Language::kEnglish};
  NetworkKind kind = NetworkKind::kFeedForward;
  std::vector<Eigen::Index> hidden;  // empty: the architecture default
  std::uint64_t net_seed = 1;
  TrainHyper hyper;
  Eigen::Index context_width = -1;  // -1: 2 for feed-forward, 0 for recurrent
  double valid_fraction = 0.1;      // trailing share of records held for validation
  std::optional<std::filesystem::path> cache_dir;
  std::string speaker_id;           // empty: the manifest's speaker

  Eigen::Index EffectiveContext() const;
  void Validate() const;
};

/// A trained converter: checkpoint plus the settings needed to apply it.
struct VcModel {
  Checkpoint checkpoint;
  std::vector<Language> languages;  // canonical order
  std::vector<Eigen::Index> ppg_dims;
  Eigen::Index context_width = 0;
  std::string speaker_id;
  AnalysisConfig analysis;

  Checkpoint ToCheckpoint() const;
  static VcModel FromCheckpoint(Checkpoint c);
};

void SaveModel(const std::filesystem::path &path, const VcModel &m);
VcModel LoadModel(const std::filesystem::path &path);

struct TrainReport {
  std::vector<double> valid_history, train_history;
  int best_epoch = 0;
  std::size_t train_utterances = 0, valid_utterances = 0;
  Eigen::Index train_frames = 0;
  std::vector<GanEpoch> gan_history;  // adversarial runs only
};

/// Deterministic split: the last ceil(fraction * n) records validate, but
/// at least one record always trains.
std::pair<std::size_t, std::size_t> SplitCounts(std::size_t n, double valid_fraction);

/// analyze -> merge -> context-stack -> align -> train. Statistics come
/// from the training split only.
VcModel TrainVc(const CorpusManifest &manifest, const VcSettings &settings,
                TrainReport *report = nullptr);

/// Adversarial variant: the generator trains on `gen` manifests with the adversarial
/// term; the discriminator sees `target` parameters. Which corpus is the
/// target is the only difference between the two discriminator variants.
VcModel BuildGanModel(std::span<const CorpusManifest> gen, const CorpusManifest &target,
                      const VcSettings &settings, const GanHyper &gan, TrainReport *report = nullptr,
                      Discriminator *discriminator = nullptr);

struct Conversion {
  SpeechParams params;
  Waveform wave;
  std::string note;  // provenance remark, empty for ordinary conversion
};

/// The one conversion path: merge -> stack -> predict -> vocode. When the
/// source wave is given its frame count must agree with the posteriorgrams.
Conversion ConvertPpgs(const VcModel &model, const std::map<Language, PpgMatrix> &ppgs,
                       const Waveform *source, const SynthesisConfig &synth);

/// Loads the record's posteriorgrams (and wav, when listed) and converts.
Conversion ConvertUtterance(const VcModel &model, const UtteranceRecord &record,
                            const SynthesisConfig &synth);

/// Converts synthesised (TTS) speech; identical machinery, plus a note
/// about the recorded-vs-synthesised mismatch.
Conversion PostprocessTts(const VcModel &model, const Waveform &tts_wave,
                          const std::map<Language, std::filesystem::path> &ppg_paths,
                          const SynthesisConfig &synth);
Conversion PostprocessTts(const VcModel &model, const Waveform &tts_wave,
                          const std::map<Language, PpgMatrix> &ppgs, const SynthesisConfig &synth);

extern const char kTtsMismatchNote[];

struct CorpusConversion {
  CorpusManifest manifest;  // converted records in source order
  std::vector<std::pair<std::string, std::string>> failures;  // id, message
};

/// Converts every record on `jobs` threads, writing wav/,
/// params/ and manifest.tsv under out_dir. A failing record is listed, not
/// fatal.
CorpusConversion ConvertCorpus(const CorpusManifest &source, const VcModel &model,
                               const std::filesystem::path &out_dir, const SynthesisConfig &synth,
                               int jobs = 1);

}  // namespace ppgvc

#endif  // PPGVC_PIPELINE_H_
