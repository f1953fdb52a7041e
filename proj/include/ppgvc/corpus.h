// include/ppgvc/corpus.h

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

#ifndef PPGVC_CORPUS_H_
#define PPGVC_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ppgvc/analysis.h"
#include "ppgvc/ppg.h"
#include "ppgvc/wave.h"

namespace ppgvc {

/// One utterance: audio, per-language posteriorgrams and optionally cached
/// parameters. Paths are absolute once loaded.
struct UtteranceRecord {
  std::string id;
  std::optional<std::filesystem::path> wav_path;
  std::map<Language, std::filesystem::path> ppg_paths;
  std::optional<std::filesystem::path> params_path;
};

/// Tab-separated, one record per line:
///   id  wav|-  lang=path[,lang=path...]|-  [params=path]
/// with "# corpus_id:", "# speaker:" and "# language:" header comments.
/// Relative paths resolve against the manifest's directory.
struct CorpusManifest {
  std::string corpus_id;
  std::string speaker_id;
  std::string language;
  std::vector<UtteranceRecord> entries;

  const UtteranceRecord *Find(const std::string &id) const;
};

CorpusManifest ParseManifest(std::string_view text, const std::filesystem::path &base_dir,
                             const std::string &what);
// Checks unique ids and that every referenced file exists.
CorpusManifest LoadManifest(const std::filesystem::path &path);
// Paths under the manifest's directory are written relative to it.
std::string FormatManifest(const CorpusManifest &m, const std::filesystem::path &base_dir);
void WriteManifest(const std::filesystem::path &path, const CorpusManifest &m);

/// Cached parameter file "PPGVCPRM": version, content hash, T, layout, then
/// float32 streams.
std::string EncodeParams(const SpeechParams &p, std::uint64_t content_hash);
SpeechParams DecodeParams(std::string_view bytes, const std::string &what,
                          std::uint64_t *content_hash = nullptr);
void WriteParams(const std::filesystem::path &path, const SpeechParams &p, std::uint64_t content_hash = 0);
SpeechParams ReadParams(const std::filesystem::path &path, std::uint64_t *content_hash = nullptr);

// Stable text form of every field that affects analysis output.
std::string DescribeAnalysis(const AnalysisConfig &cfg);
std::uint64_t AnalysisHash(std::string_view wav_bytes, const AnalysisConfig &cfg);

struct ParamsSource {
  SpeechParams params;
  bool computed = false;  // false when served from a cache or params file
};

/// Parameters for a record: its params file when given, else a cache entry
/// in `cache_dir` whose hash matches the wav and config, else fresh analysis
/// (written back to the cache). Errors name the utterance id.
ParamsSource RecordParams(const UtteranceRecord &r, const AnalysisConfig &cfg,
                          const std::optional<std::filesystem::path> &cache_dir = std::nullopt);

std::filesystem::path CachePath(const std::filesystem::path &cache_dir, const std::string &id);

}  // namespace ppgvc

#endif  // PPGVC_CORPUS_H_
