// src/corpus.cc

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

#include "ppgvc/corpus.h"

#include <set>
#include <sstream>

#include "ppgvc/binary_io.h"
#include "ppgvc/error.h"
#include "ppgvc/rng.h"

namespace ppgvc {
namespace {

namespace fs = std::filesystem;

constexpr std::string_view kParamsMagic = "PPGVCPRM";
constexpr std::uint32_t kParamsVersion = 1;

std::vector<std::string_view> Split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = s.find(sep, start);
    out.push_back(s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

fs::path Resolve(const fs::path &base, std::string_view p) {
  const fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal();
}

std::string Relative(const fs::path &p, const fs::path &base) {
  const fs::path abs_base = fs::absolute(base).lexically_normal();
  const fs::path abs = fs::absolute(p).lexically_normal();
  const fs::path rel = abs.lexically_relative(abs_base);
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return abs.generic_string();
}

}  // namespace

const UtteranceRecord *CorpusManifest::Find(const std::string &id) const {
  for (const auto &e : entries)
    if (e.id == id) return &e;
  return nullptr;
}

CorpusManifest ParseManifest(std::string_view text, const fs::path &base_dir, const std::string &what) {
  CorpusManifest m;
  std::set<std::string> seen;
  int line_no = 0;
  for (std::string_view raw : Split(text, '\n')) {
    ++line_no;
    const std::string_view line = Trim(raw);
    const std::string where = what + ":" + std::to_string(line_no);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::string_view body = Trim(line.substr(1));
      const auto colon = body.find(':');
      if (colon == std::string_view::npos) continue;
      const std::string_view key = Trim(body.substr(0, colon));
      const std::string value(Trim(body.substr(colon + 1)));
      if (key == "corpus_id") m.corpus_id = value;
      else if (key == "speaker") m.speaker_id = value;
      else if (key == "language") m.language = value;
      continue;
    }
    const auto fields = Split(line, '\t');
    if (fields.size() < 3 || fields.size() > 4)
      Fail(ErrorCode::kParseError, where + ": expected 3 or 4 tab-separated fields");
    UtteranceRecord r;
    r.id = std::string(Trim(fields[0]));
    if (r.id.empty()) Fail(ErrorCode::kParseError, where + ": empty utterance id");
    if (!seen.insert(r.id).second)
      Fail(ErrorCode::kParseError, where + ": duplicate utterance id '" + r.id + "'");
    const std::string_view wav = Trim(fields[1]);
    if (wav.empty()) Fail(ErrorCode::kParseError, where + ": empty wav field (use '-')");
    if (wav != "-") r.wav_path = Resolve(base_dir, wav);
    const std::string_view ppgs = Trim(fields[2]);
    if (ppgs != "-") {
      for (std::string_view item : Split(ppgs, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string_view::npos || eq == 0 || eq + 1 == item.size())
          Fail(ErrorCode::kParseError, where + ": PPG entry must be lang=path");
        const Language lang = ParseLanguage(Trim(item.substr(0, eq)));
        if (r.ppg_paths.count(lang))
          Fail(ErrorCode::kDuplicateLanguage, where + ": language given twice");
        r.ppg_paths[lang] = Resolve(base_dir, Trim(item.substr(eq + 1)));
      }
    }
    if (fields.size() == 4) {
      const std::string_view f = Trim(fields[3]);
      if (f.substr(0, 7) != "params=" || f.size() == 7)
        Fail(ErrorCode::kParseError, where + ": fourth field must be params=path");
      r.params_path = Resolve(base_dir, f.substr(7));
    }
    m.entries.push_back(std::move(r));
  }
  return m;
}

CorpusManifest LoadManifest(const fs::path &path) {
  const std::string text = ReadFileBytes(path);
  CorpusManifest m = ParseManifest(text, fs::absolute(path).parent_path(), path.string());
  auto check = [&](const std::string &id, const fs::path &p) {
    if (!fs::exists(p))
      Fail(ErrorCode::kIoError, path.string() + ": utterance '" + id + "' references missing file " +
                                    p.string());
  };
  for (const auto &r : m.entries) {
    if (r.wav_path) check(r.id, *r.wav_path);
    for (const auto &[lang, p] : r.ppg_paths) check(r.id, p);
    if (r.params_path) check(r.id, *r.params_path);
  }
  return m;
}

std::string FormatManifest(const CorpusManifest &m, const fs::path &base_dir) {
  std::ostringstream out;
  if (!m.corpus_id.empty()) out << "# corpus_id: " << m.corpus_id << '\n';
  if (!m.speaker_id.empty()) out << "# speaker: " << m.speaker_id << '\n';
  if (!m.language.empty()) out << "# language: " << m.language << '\n';
  for (const auto &r : m.entries) {
    out << r.id << '\t' << (r.wav_path ? Relative(*r.wav_path, base_dir) : "-") << '\t';
    if (r.ppg_paths.empty()) {
      out << '-';
    } else {
      bool first = true;
      for (const auto &[lang, p] : r.ppg_paths) {
        out << (first ? "" : ",") << LanguageTag(lang) << '=' << Relative(p, base_dir);
        first = false;
      }
    }
    if (r.params_path) out << "\tparams=" << Relative(*r.params_path, base_dir);
    out << '\n';
  }
  return out.str();
}

void WriteManifest(const fs::path &path, const CorpusManifest &m) {
  WriteFileBytes(path, FormatManifest(m, fs::absolute(path).parent_path()));
}

std::string EncodeParams(const SpeechParams &p, std::uint64_t content_hash) {
  p.Validate();
  ByteWriter w;
  w.PutBytes(kParamsMagic);
  w.PutU32(kParamsVersion);
  w.PutU64(content_hash);
  w.PutU32(static_cast<std::uint32_t>(p.frames()));
  w.PutU32(static_cast<std::uint32_t>(p.mcep.cols()));
  w.PutU32(static_cast<std::uint32_t>(p.bap.cols()));
  w.PutF64(p.frame_shift_ms);
  for (Eigen::Index t = 0; t < p.frames(); ++t)
    for (Eigen::Index d = 0; d < p.mcep.cols(); ++d) w.PutF32(static_cast<float>(p.mcep(t, d)));
  for (Eigen::Index t = 0; t < p.frames(); ++t) w.PutF32(static_cast<float>(p.lf0[t]));
  for (Eigen::Index t = 0; t < p.frames(); ++t) w.PutU8(p.vuv[t] ? 1 : 0);
  for (Eigen::Index t = 0; t < p.frames(); ++t)
    for (Eigen::Index d = 0; d < p.bap.cols(); ++d) w.PutF32(static_cast<float>(p.bap(t, d)));
  return w.bytes();
}

SpeechParams DecodeParams(std::string_view bytes, const std::string &what, std::uint64_t *content_hash) {
  ByteReader r(bytes, what);
  if (r.GetBytes(kParamsMagic.size()) != kParamsMagic)
    Fail(ErrorCode::kParseError, what + ": not a parameter file");
  const std::uint32_t version = r.GetU32();
  if (version != kParamsVersion)
    Fail(ErrorCode::kParseError, what + ": unsupported parameter file version " + std::to_string(version));
  const std::uint64_t hash = r.GetU64();
  if (content_hash) *content_hash = hash;
  const Eigen::Index t_count = r.GetU32(), mcep_dim = r.GetU32(), bap_dim = r.GetU32();
  SpeechParams p;
  p.frame_shift_ms = r.GetF64();
  p.mcep.resize(t_count, mcep_dim);
  p.lf0.resize(t_count);
  p.vuv.resize(t_count);
  p.bap.resize(t_count, bap_dim);
  for (Eigen::Index t = 0; t < t_count; ++t)
    for (Eigen::Index d = 0; d < mcep_dim; ++d) p.mcep(t, d) = r.GetF32();
  for (Eigen::Index t = 0; t < t_count; ++t) p.lf0[t] = r.GetF32();
  for (Eigen::Index t = 0; t < t_count; ++t) {
    const std::uint8_t v = r.GetU8();
    if (v > 1) Fail(ErrorCode::kParseError, what + ": voicing flag must be 0 or 1");
    p.vuv[t] = v == 1;
  }
  for (Eigen::Index t = 0; t < t_count; ++t)
    for (Eigen::Index d = 0; d < bap_dim; ++d) p.bap(t, d) = r.GetF32();
  if (r.remaining() != 0) Fail(ErrorCode::kParseError, what + ": trailing bytes");
  try {
    p.Validate();
  } catch (const Error &e) {
    throw e.WithContext(what);
  }
  return p;
}

void WriteParams(const fs::path &path, const SpeechParams &p, std::uint64_t content_hash) {
  WriteFileBytes(path, EncodeParams(p, content_hash));
}

SpeechParams ReadParams(const fs::path &path, std::uint64_t *content_hash) {
  return DecodeParams(ReadFileBytes(path), path.string(), content_hash);
}

std::string DescribeAnalysis(const AnalysisConfig &c) {
  std::ostringstream out;
  out.precision(17);
  out << "sample_rate=" << c.sample_rate << ";frame_shift_ms=" << c.frame_shift_ms
      << ";frame_length_ms=" << c.frame_length_ms << ";mcep_order=" << c.mcep_order
      << ";warp_alpha=" << c.warp_alpha << ";f0_floor=" << c.f0_floor << ";f0_ceil=" << c.f0_ceil
      << ";bap_bands=" << c.bap_bands << ";voicing_threshold=" << c.voicing_threshold
      << ";median_length=" << c.median_length << ";spectral_floor=" << c.spectral_floor;
  return out.str();
}

std::uint64_t AnalysisHash(std::string_view wav_bytes, const AnalysisConfig &cfg) {
  return Fnv1a(wav_bytes, Fnv1a(DescribeAnalysis(cfg)));
}

fs::path CachePath(const fs::path &cache_dir, const std::string &id) { return cache_dir / (id + ".prm"); }

ParamsSource RecordParams(const UtteranceRecord &r, const AnalysisConfig &cfg,
                          const std::optional<fs::path> &cache_dir) {
  try {
    if (r.params_path) return {ReadParams(*r.params_path), false};
    if (!r.wav_path) Fail(ErrorCode::kIoError, "record has neither a wav nor a params file");
    const std::string bytes = ReadFileBytes(*r.wav_path);
    const std::uint64_t hash = AnalysisHash(bytes, cfg);
    if (cache_dir) {
      const fs::path cached = CachePath(*cache_dir, r.id);
      if (fs::exists(cached)) {
        std::uint64_t stored = 0;
        SpeechParams p = ReadParams(cached, &stored);
        if (stored == hash) return {std::move(p), false};
      }
    }
    SpeechParams p = Analyze(DecodeWav(bytes, r.wav_path->string()), cfg);
    if (cache_dir) {
      fs::create_directories(*cache_dir);
      WriteParams(CachePath(*cache_dir, r.id), p, hash);
    }
    return {std::move(p), true};
  } catch (const Error &e) {
    throw e.WithContext("utterance '" + r.id + "'");
  } catch (const fs::filesystem_error &e) {
    throw Error(ErrorCode::kIoError, "utterance '" + r.id + "': " + e.what());
  }
}

}  // namespace ppgvc
