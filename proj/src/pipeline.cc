// src/pipeline.cc

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

#include "ppgvc/pipeline.h"

#include <atomic>
#include <cmath>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "ppgvc/binary_io.h"
#include "ppgvc/error.h"
#include "ppgvc/rng.h"

namespace ppgvc {
namespace {

namespace fs = std::filesystem;

std::vector<Language> Canonical(std::vector<Language> langs) {
  if (langs.empty()) Fail(ErrorCode::kInvalidConfig, "no languages requested");
  std::sort(langs.begin(), langs.end(),
            [](Language a, Language b) { return CanonicalRank(a) < CanonicalRank(b); });
  for (std::size_t i = 1; i < langs.size(); ++i)
    if (langs[i] == langs[i - 1])
      Fail(ErrorCode::kDuplicateLanguage,
           "language '" + std::string(LanguageTag(langs[i])) + "' requested twice");
  return langs;
}

std::string JoinDims(const std::vector<Eigen::Index> &dims) {
  std::string out;
  for (Eigen::Index d : dims) out += (out.empty() ? "" : ",") + std::to_string(d);
  return out;
}

std::vector<Eigen::Index> ParseDims(const std::string &s) {
  std::vector<Eigen::Index> out;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) out.push_back(std::stol(tok));
  return out;
}

AnalysisConfig ParseAnalysis(const std::string &text) {
  AnalysisConfig c;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ';')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) continue;
    const std::string k = item.substr(0, eq), v = item.substr(eq + 1);
    if (k == "sample_rate") c.sample_rate = std::stoi(v);
    else if (k == "frame_shift_ms") c.frame_shift_ms = std::stod(v);
    else if (k == "frame_length_ms") c.frame_length_ms = std::stod(v);
    else if (k == "mcep_order") c.mcep_order = std::stoi(v);
    else if (k == "warp_alpha") c.warp_alpha = std::stod(v);
    else if (k == "f0_floor") c.f0_floor = std::stod(v);
    else if (k == "f0_ceil") c.f0_ceil = std::stod(v);
    else if (k == "bap_bands") c.bap_bands = std::stoi(v);
    else if (k == "voicing_threshold") c.voicing_threshold = std::stod(v);
    else if (k == "median_length") c.median_length = std::stoi(v);
    else if (k == "spectral_floor") c.spectral_floor = std::stod(v);
  }
  return c;
}

struct Prepared {
  std::vector<Example> examples;
  std::vector<Eigen::Index> dims;
  Eigen::Index frames = 0;
};

Prepared Prepare(std::span<const UtteranceRecord *const> records, const std::vector<Language> &langs,
                 const VcSettings &s, const OutputLayout &layout) {
  Prepared out;
  const Eigen::Index width = s.EffectiveContext();
  for (const UtteranceRecord *r : records) {
    try {
      std::vector<PpgMatrix> ppgs;
      for (Language l : langs) {
        const auto it = r->ppg_paths.find(l);
        if (it == r->ppg_paths.end())
          Fail(ErrorCode::kMissingPpg, "no '" + std::string(LanguageTag(l)) + "' posteriorgram");
        ppgs.push_back(LoadPpg(it->second, l));
      }
      const MultiPpg merged = MergeMultilingual(ppgs);
      std::vector<Eigen::Index> dims;
      for (const auto &seg : merged.segments) dims.push_back(seg.dim);
      if (out.dims.empty()) out.dims = dims;
      if (dims != out.dims)
        Fail(ErrorCode::kDimensionMismatch, "posteriorgram dimensions " + JoinDims(dims) +
                                                " differ from earlier records (" + JoinDims(out.dims) + ")");
      const SpeechParams params = RecordParams(*r, s.analysis, s.cache_dir).params;
      const auto [m, p] = AlignToParams(merged, params);
      out.examples.push_back({PpgFeatures(m, width), ParamsToTargets(p, layout)});
      out.frames += m.frames();
    } catch (const Error &e) {
      if (e.detail().rfind("utterance '", 0) == 0) throw;
      throw e.WithContext("utterance '" + r->id + "'");
    }
  }
  return out;
}

VcModel MakeModel(const VcSettings &s, const std::vector<Language> &langs, const Prepared &data,
                  const Network &net, const FeatureStats &stats, const OutputLayout &layout,
                  const std::string &speaker) {
  VcModel m;
  m.checkpoint.kind_tag = s.kind == NetworkKind::kFeedForward ? "ff" : "birnn";
  m.checkpoint.net = net;
  m.checkpoint.stats = stats;
  m.checkpoint.layout = layout;
  m.languages = langs;
  m.ppg_dims = data.dims;
  m.context_width = s.EffectiveContext();
  m.speaker_id = s.speaker_id.empty() ? (speaker.empty() ? "target" : speaker) : s.speaker_id;
  m.analysis = s.analysis;
  return m;
}

struct Setup {
  std::vector<Language> langs;
  OutputLayout layout;
  Prepared data;
  std::size_t n_train = 0, n_valid = 0;
  FeatureStats stats;
  Network init;
};

Setup SetUp(std::span<const UtteranceRecord *const> records, const VcSettings &s) {
  s.Validate();
  if (records.empty()) Fail(ErrorCode::kEmptyInput, "training manifest is empty");
  Setup u;
  u.langs = Canonical(s.languages);
  u.layout = OutputLayout::FromAnalysis(s.analysis);
  u.data = Prepare(records, u.langs, s, u.layout);
  std::tie(u.n_train, u.n_valid) = SplitCounts(u.data.examples.size(), s.valid_fraction);
  u.stats = ComputeStats(std::span<const Example>(u.data.examples).first(u.n_train));
  Eigen::Index in = 0;
  for (Eigen::Index d : u.data.dims) in += d;
  in *= 2 * s.EffectiveContext() + 1;
  NetworkConfig cfg = s.kind == NetworkKind::kFeedForward
                          ? NetworkConfig::FeedForward(in, u.layout.total())
                          : NetworkConfig::BiRecurrent(in, u.layout.total());
  if (!s.hidden.empty()) cfg.hidden = s.hidden;
  cfg.seed = s.net_seed;
  u.init = InitNetwork(cfg);
  return u;
}

void Fill(TrainReport *report, const TrainResult &r, const Setup &u) {
  if (!report) return;
  report->valid_history = r.valid_history;
  report->train_history = r.train_history;
  report->best_epoch = r.best_epoch;
  report->train_utterances = u.n_train;
  report->valid_utterances = u.n_valid;
  report->train_frames = 0;
  for (std::size_t i = 0; i < u.n_train; ++i) report->train_frames += u.data.examples[i].inputs.rows();
}

std::map<Language, PpgMatrix> LoadRecordPpgs(const VcModel &model, const UtteranceRecord &r) {
  if (r.ppg_paths.empty()) Fail(ErrorCode::kMissingPpg, "record lists no posteriorgrams");
  std::set<Language> have;
  for (const auto &[l, p] : r.ppg_paths) have.insert(l);
  const std::set<Language> want(model.languages.begin(), model.languages.end());
  if (have != want) {
    std::vector<Language> h(have.begin(), have.end());
    Fail(ErrorCode::kLanguageMismatch, "record has " + FormatLanguageList(h) + " posteriorgrams, model expects " +
                                           FormatLanguageList(model.languages));
  }
  std::map<Language, PpgMatrix> out;
  for (const auto &[l, p] : r.ppg_paths) out[l] = LoadPpg(p, l);
  return out;
}

}  // namespace

const char kTtsMismatchNote[] =
    "input is synthesised speech while the model was trained on recorded speech; "
    "expect degraded conversion from the train/test mismatch";

Eigen::Index VcSettings::EffectiveContext() const {
  if (context_width >= 0) return context_width;
  return kind == NetworkKind::kFeedForward ? 2 : 0;
}

void VcSettings::Validate() const {
  analysis.Validate();
  hyper.Validate();
  if (!(valid_fraction >= 0.0 && valid_fraction < 1.0))
    Fail(ErrorCode::kInvalidConfig, "valid_fraction must be in [0, 1)");
  for (Eigen::Index h : hidden)
    if (h <= 0) Fail(ErrorCode::kInvalidConfig, "hidden layer sizes must be positive");
}

std::pair<std::size_t, std::size_t> SplitCounts(std::size_t n, double valid_fraction) {
  if (n == 0) return {0, 0};
  auto valid = static_cast<std::size_t>(std::ceil(valid_fraction * static_cast<double>(n) - 1e-9));
  valid = std::min(valid, n - 1);
  return {n - valid, valid};
}

Checkpoint VcModel::ToCheckpoint() const {
  Checkpoint c = checkpoint;
  c.meta["languages"] = FormatLanguageList(languages);
  c.meta["ppg_dims"] = JoinDims(ppg_dims);
  c.meta["context_width"] = std::to_string(context_width);
  c.meta["speaker"] = speaker_id;
  c.meta["analysis"] = DescribeAnalysis(analysis);
  return c;
}

VcModel VcModel::FromCheckpoint(Checkpoint c) {
  if (c.kind_tag != "ff" && c.kind_tag != "birnn")
    Fail(ErrorCode::kInvalidConfig, "checkpoint kind '" + c.kind_tag + "' is not a conversion model");
  for (const char *key : {"languages", "ppg_dims", "context_width", "speaker", "analysis"})
    if (!c.meta.count(key)) Fail(ErrorCode::kParseError, std::string("checkpoint lacks '") + key + "'");
  VcModel m;
  m.languages = ParseLanguageList(c.meta.at("languages"));
  m.ppg_dims = ParseDims(c.meta.at("ppg_dims"));
  m.context_width = std::stol(c.meta.at("context_width"));
  m.speaker_id = c.meta.at("speaker");
  m.analysis = ParseAnalysis(c.meta.at("analysis"));
  if (m.languages.size() != m.ppg_dims.size())
    Fail(ErrorCode::kParseError, "checkpoint languages and dims disagree");
  Eigen::Index in = 0;
  for (Eigen::Index d : m.ppg_dims) in += d;
  if (in * (2 * m.context_width + 1) != c.net.config().input_dim)
    Fail(ErrorCode::kDimensionMismatch, "checkpoint input width does not match its posteriorgram layout");
  m.checkpoint = std::move(c);
  return m;
}

void SaveModel(const fs::path &path, const VcModel &m) { SaveCheckpoint(path, m.ToCheckpoint()); }

VcModel LoadModel(const fs::path &path) {
  try {
    return VcModel::FromCheckpoint(LoadCheckpoint(path));
  } catch (const std::invalid_argument &) {
    Fail(ErrorCode::kParseError, path.string() + ": malformed checkpoint metadata");
  } catch (const std::out_of_range &) {
    Fail(ErrorCode::kParseError, path.string() + ": malformed checkpoint metadata");
  }
}

VcModel TrainVc(const CorpusManifest &manifest, const VcSettings &settings, TrainReport *report) {
  std::vector<const UtteranceRecord *> records;
  for (const auto &r : manifest.entries) records.push_back(&r);
  const Setup u = SetUp(records, settings);
  const std::span<const Example> all(u.data.examples);
  const TrainResult r = Train(u.init, all.first(u.n_train), all.subspan(u.n_train), settings.hyper, u.stats);
  Fill(report, r, u);
  return MakeModel(settings, u.langs, u.data, r.net, u.stats, u.layout, manifest.speaker_id);
}

VcModel BuildGanModel(std::span<const CorpusManifest> gen, const CorpusManifest &target,
                      const VcSettings &settings, const GanHyper &gan, TrainReport *report,
                      Discriminator *discriminator) {
  std::vector<const UtteranceRecord *> records;
  std::string speaker;
  for (const auto &m : gen) {
    if (speaker.empty()) speaker = m.speaker_id;
    for (const auto &r : m.entries) records.push_back(&r);
  }
  if (target.entries.empty()) Fail(ErrorCode::kEmptyInput, "discriminator target manifest is empty");
  const Setup u = SetUp(records, settings);
  std::vector<Eigen::MatrixXd> real;
  for (const auto &r : target.entries) {
    const SpeechParams p = RecordParams(r, settings.analysis, settings.cache_dir).params;
    real.push_back(ParamsToTargets(p, u.layout));
  }
  GanHyper h = gan;
  h.base = settings.hyper;
  const std::span<const Example> all(u.data.examples);
  GanResult g = GanTrain(u.init, all.first(u.n_train), all.subspan(u.n_train), real, u.stats, h);
  Fill(report, g.generator, u);
  if (report) report->gan_history = g.history;
  if (discriminator) *discriminator = std::move(g.discriminator);
  return MakeModel(settings, u.langs, u.data, g.generator.net, u.stats, u.layout, speaker);
}

Conversion ConvertPpgs(const VcModel &model, const std::map<Language, PpgMatrix> &ppgs,
                       const Waveform *source, const SynthesisConfig &synth) {
  if (ppgs.empty()) Fail(ErrorCode::kMissingPpg, "no posteriorgrams given");
  std::vector<PpgMatrix> list;
  for (std::size_t i = 0; i < model.languages.size(); ++i) {
    const Language l = model.languages[i];
    const auto it = ppgs.find(l);
    if (it == ppgs.end() || ppgs.size() != model.languages.size()) {
      std::vector<Language> have;
      for (const auto &[k, v] : ppgs) have.push_back(k);
      Fail(ErrorCode::kLanguageMismatch, "posteriorgrams for " + FormatLanguageList(have) +
                                             ", model expects " + FormatLanguageList(model.languages));
    }
    if (it->second.dim() != model.ppg_dims[i])
      Fail(ErrorCode::kDimensionMismatch, "'" + std::string(LanguageTag(l)) + "' posteriorgram has " +
                                              std::to_string(it->second.dim()) + " columns, model expects " +
                                              std::to_string(model.ppg_dims[i]));
    list.push_back(it->second);
  }
  const MultiPpg merged = MergeMultilingual(list);
  if (source && !source->empty()) {
    if (source->sample_rate != model.analysis.sample_rate)
      Fail(ErrorCode::kInvalidValue, "source wave is " + std::to_string(source->sample_rate) +
                                         " Hz, model expects " + std::to_string(model.analysis.sample_rate));
    const Eigen::Index wav_frames = NumFrames(source->size(), model.analysis);
    if (std::abs(wav_frames - merged.frames()) > 2)
      Fail(ErrorCode::kFrameCountMismatch, "source wave has " + std::to_string(wav_frames) +
                                               " frames, posteriorgrams " + std::to_string(merged.frames()));
  }
  Conversion out;
  out.params = PredictParams(model.checkpoint.net, merged, model.checkpoint.stats, model.checkpoint.layout,
                             model.context_width);
  SynthesisConfig cfg = synth;
  cfg.sample_rate = model.analysis.sample_rate;
  cfg.frame_shift_ms = model.analysis.frame_shift_ms;
  cfg.warp_alpha = model.analysis.warp_alpha;
  cfg.spectral_floor = model.analysis.spectral_floor;
  out.wave = Synthesize(out.params, cfg);
  return out;
}

Conversion ConvertUtterance(const VcModel &model, const UtteranceRecord &record,
                            const SynthesisConfig &synth) {
  try {
    const std::map<Language, PpgMatrix> ppgs = LoadRecordPpgs(model, record);
    std::optional<Waveform> source;
    if (record.wav_path) source = ReadWav(*record.wav_path);
    SynthesisConfig cfg = synth;
    cfg.noise_seed = MixSeed(synth.noise_seed, Fnv1a(record.id));
    return ConvertPpgs(model, ppgs, source ? &*source : nullptr, cfg);
  } catch (const Error &e) {
    throw e.WithContext("utterance '" + record.id + "'");
  }
}

Conversion PostprocessTts(const VcModel &model, const Waveform &tts_wave,
                          const std::map<Language, PpgMatrix> &ppgs, const SynthesisConfig &synth) {
  Conversion c = ConvertPpgs(model, ppgs, &tts_wave, synth);
  c.note = kTtsMismatchNote;
  return c;
}

Conversion PostprocessTts(const VcModel &model, const Waveform &tts_wave,
                          const std::map<Language, fs::path> &ppg_paths, const SynthesisConfig &synth) {
  if (ppg_paths.empty()) Fail(ErrorCode::kMissingPpg, "no posteriorgrams given for the synthesised input");
  std::map<Language, PpgMatrix> ppgs;
  for (const auto &[l, p] : ppg_paths) ppgs[l] = LoadPpg(p, l);
  return PostprocessTts(model, tts_wave, ppgs, synth);
}

CorpusConversion ConvertCorpus(const CorpusManifest &source, const VcModel &model, const fs::path &out_dir,
                               const SynthesisConfig &synth, int jobs) {
  if (source.entries.empty()) Fail(ErrorCode::kEmptyInput, "source manifest is empty");
  if (jobs < 1) Fail(ErrorCode::kInvalidConfig, "jobs must be >= 1");
  std::error_code ec;
  for (const char *sub : {"wav", "params"}) {
    fs::create_directories(out_dir / sub, ec);
    if (ec) Fail(ErrorCode::kIoError, "cannot create " + (out_dir / sub).string() + ": " + ec.message());
  }
  const std::size_t n = source.entries.size();
  std::vector<std::optional<UtteranceRecord>> done(n);
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      const UtteranceRecord &r = source.entries[i];
      try {
        const Conversion c = ConvertUtterance(model, r, synth);
        UtteranceRecord out;
        out.id = r.id;
        out.wav_path = fs::absolute(out_dir / "wav" / (r.id + ".wav"));
        out.params_path = fs::absolute(out_dir / "params" / (r.id + ".prm"));
        out.ppg_paths = r.ppg_paths;
        const std::string wav = EncodeWav(c.wave);
        WriteFileBytes(*out.wav_path, wav);
        WriteParams(*out.params_path, c.params, AnalysisHash(wav, model.analysis));
        done[i] = std::move(out);
      } catch (const std::exception &e) {
        errors[i] = e.what();
      }
    }
  };
  const int threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), n));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto &t : pool) t.join();

  CorpusConversion result;
  result.manifest.corpus_id = (source.corpus_id.empty() ? std::string("corpus") : source.corpus_id) + "-vc";
  result.manifest.speaker_id = model.speaker_id;
  result.manifest.language = source.language;
  std::string failures;
  for (std::size_t i = 0; i < n; ++i) {
    if (done[i]) {
      result.manifest.entries.push_back(std::move(*done[i]));
    } else {
      result.failures.emplace_back(source.entries[i].id, errors[i]);
      failures += source.entries[i].id + "\t" + errors[i] + "\n";
    }
  }
  WriteManifest(out_dir / "manifest.tsv", result.manifest);
  WriteFileBytes(out_dir / "failures.tsv", failures);
  return result;
}

}  // namespace ppgvc
