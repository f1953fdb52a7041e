// src/ppg.cc

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

#include "ppgvc/ppg.h"

#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "ppgvc/binary_io.h"
#include "ppgvc/error.h"
#include "ppgvc/rng.h"

namespace ppgvc {
namespace {

constexpr std::string_view kPpgMagic = "PPGF";
constexpr std::uint32_t kPpgVersion = 1;

void CheckFinite(const PpgValues &v, const std::string &what) {
  if (!v.allFinite()) Fail(ErrorCode::kInvalidValue, what + ": non-finite posterior value");
}

void CheckLanguage(Language got, Language expected, const std::string &what) {
  if (got != expected)
    Fail(ErrorCode::kLanguageMismatch, what + ": file holds '" + std::string(LanguageTag(got)) +
                                           "' posteriors, expected '" +
                                           std::string(LanguageTag(expected)) + "'");
}

std::string_view NextToken(std::string_view line, std::size_t *pos) {
  while (*pos < line.size() && std::isspace(static_cast<unsigned char>(line[*pos]))) ++*pos;
  const std::size_t start = *pos;
  while (*pos < line.size() && !std::isspace(static_cast<unsigned char>(line[*pos]))) ++*pos;
  return line.substr(start, *pos - start);
}

template <typename T>
T ParseNumber(std::string_view tok, const std::string &what) {
  T v{};
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    Fail(ErrorCode::kParseError, what + ": bad number '" + std::string(tok) + "'");
  return v;
}

PpgMatrix DecodeText(std::string_view text, Language expected, const std::string &what) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) lines.push_back(line);
    start = end + 1;
  }
  if (lines.empty()) Fail(ErrorCode::kParseError, what + ": empty file");

  std::size_t pos = 0;
  const auto t = ParseNumber<long>(NextToken(lines[0], &pos), what);
  const auto d = ParseNumber<long>(NextToken(lines[0], &pos), what);
  const std::string_view tag = NextToken(lines[0], &pos);
  if (t < 0 || d <= 0 || tag.empty() || !NextToken(lines[0], &pos).empty())
    Fail(ErrorCode::kParseError, what + ": header must be 'T D language'");
  if (static_cast<long>(lines.size()) - 1 != t)
    Fail(ErrorCode::kParseError, what + ": header declares " + std::to_string(t) + " rows, found " +
                                     std::to_string(lines.size() - 1));
  PpgMatrix m;
  m.language = ParseLanguage(tag);
  CheckLanguage(m.language, expected, what);
  m.values.resize(t, d);
  for (long r = 0; r < t; ++r) {
    pos = 0;
    const std::string_view line = lines[r + 1];
    for (long c = 0; c < d; ++c) {
      const std::string_view tok = NextToken(line, &pos);
      if (tok.empty())
        Fail(ErrorCode::kParseError, what + ": row " + std::to_string(r) + " is too short");
      m.values(r, c) = ParseNumber<float>(tok, what);
    }
    if (!NextToken(line, &pos).empty())
      Fail(ErrorCode::kParseError, what + ": row " + std::to_string(r) + " is too long");
  }
  CheckFinite(m.values, what);
  return m;
}

}  // namespace

std::string_view LanguageTag(Language lang) {
  switch (lang) {
    case Language::kJapanese: return "ja";
    case Language::kChinese: return "zh";
    case Language::kEnglish: return "en";
    case Language::kSynthetic: return "synthetic";
  }
  return "?";
}

Language ParseLanguage(std::string_view tag) {
  for (Language l : kCanonicalOrder)
    if (LanguageTag(l) == tag) return l;
  Fail(ErrorCode::kParseError, "unknown language tag '" + std::string(tag) + "'");
}

int CanonicalRank(Language lang) { return static_cast<int>(lang); }

std::vector<Language> ParseLanguageList(std::string_view csv) {
  std::vector<Language> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    std::size_t end = csv.find(',', start);
    if (end == std::string_view::npos) end = csv.size();
    std::string_view tok = csv.substr(start, end - start);
    if (!tok.empty()) out.push_back(ParseLanguage(tok));
    start = end + 1;
  }
  return out;
}

std::string FormatLanguageList(std::span<const Language> langs) {
  std::string out;
  for (Language l : langs) {
    if (!out.empty()) out += ',';
    out += LanguageTag(l);
  }
  return out;
}

std::vector<Language> MultiPpg::languages() const {
  std::vector<Language> out;
  for (const auto &s : segments) out.push_back(s.language);
  return out;
}

PpgMatrix MultiPpg::Segment(Language lang) const {
  Eigen::Index offset = 0;
  for (const auto &s : segments) {
    if (s.language == lang) {
      PpgMatrix m;
      m.language = lang;
      m.values = values.middleCols(offset, s.dim);
      m.source_model_id = "segment";
      return m;
    }
    offset += s.dim;
  }
  Fail(ErrorCode::kLanguageMismatch, "no '" + std::string(LanguageTag(lang)) + "' segment");
}

std::string EncodePpg(const PpgMatrix &m) {
  ByteWriter w;
  w.PutBytes(kPpgMagic);
  w.PutU32(kPpgVersion);
  const std::string_view tag = LanguageTag(m.language);
  w.PutU8(static_cast<std::uint8_t>(tag.size()));
  w.PutBytes(tag);
  w.PutU32(static_cast<std::uint32_t>(m.frames()));
  w.PutU32(static_cast<std::uint32_t>(m.dim()));
  for (Eigen::Index r = 0; r < m.frames(); ++r)
    for (Eigen::Index c = 0; c < m.dim(); ++c) w.PutF32(m.values(r, c));
  return w.bytes();
}

void WritePpg(const std::filesystem::path &path, const PpgMatrix &m) {
  WriteFileBytes(path, EncodePpg(m));
}

void WritePpgText(const std::filesystem::path &path, const PpgMatrix &m) {
  std::ostringstream out;
  out.precision(9);
  out << m.frames() << ' ' << m.dim() << ' ' << LanguageTag(m.language) << '\n';
  for (Eigen::Index r = 0; r < m.frames(); ++r) {
    for (Eigen::Index c = 0; c < m.dim(); ++c) out << (c ? " " : "") << m.values(r, c);
    out << '\n';
  }
  WriteFileBytes(path, out.str());
}

PpgMatrix DecodePpg(std::string_view bytes, Language expected, const std::string &what) {
  if (bytes.substr(0, 4) != kPpgMagic) {
    PpgMatrix m = DecodeText(bytes, expected, what);
    m.source_model_id = what;
    return m;
  }
  ByteReader r(bytes, what);
  r.GetBytes(4);
  const std::uint32_t version = r.GetU32();
  if (version != kPpgVersion)
    Fail(ErrorCode::kParseError, what + ": unsupported version " + std::to_string(version));
  const std::uint8_t tag_len = r.GetU8();
  PpgMatrix m;
  m.language = ParseLanguage(r.GetBytes(tag_len));
  CheckLanguage(m.language, expected, what);
  const std::uint32_t t = r.GetU32();
  const std::uint32_t d = r.GetU32();
  if (d == 0) Fail(ErrorCode::kParseError, what + ": zero dimension");
  if (r.remaining() != static_cast<std::size_t>(t) * d * 4)
    Fail(ErrorCode::kParseError, what + ": payload size does not match T x D");
  m.values.resize(t, d);
  for (std::uint32_t i = 0; i < t; ++i)
    for (std::uint32_t j = 0; j < d; ++j) m.values(i, j) = r.GetF32();
  CheckFinite(m.values, what);
  m.source_model_id = what;
  return m;
}

PpgMatrix LoadPpg(const std::filesystem::path &path, Language expected) {
  return DecodePpg(ReadFileBytes(path), expected, path.string());
}

MultiPpg MergeMultilingual(std::span<const PpgMatrix> ppgs, Eigen::Index alignment_slack) {
  if (ppgs.empty()) Fail(ErrorCode::kEmptyInput, "no posteriorgrams to merge");
  std::vector<const PpgMatrix *> sorted;
  for (const auto &p : ppgs) {
    for (const auto *q : sorted)
      if (q->language == p.language)
        Fail(ErrorCode::kDuplicateLanguage,
             "language '" + std::string(LanguageTag(p.language)) + "' given twice");
    if (p.dim() <= 0) Fail(ErrorCode::kDimensionMismatch, "posteriorgram with zero dimension");
    sorted.push_back(&p);
  }
  std::sort(sorted.begin(), sorted.end(), [](const PpgMatrix *a, const PpgMatrix *b) {
    return CanonicalRank(a->language) < CanonicalRank(b->language);
  });
  Eigen::Index t_min = sorted.front()->frames(), t_max = t_min, total = 0;
  for (const auto *p : sorted) {
    t_min = std::min(t_min, p->frames());
    t_max = std::max(t_max, p->frames());
    total += p->dim();
  }
  if (t_max - t_min > alignment_slack)
    Fail(ErrorCode::kFrameCountMismatch, "posteriorgram lengths differ by " +
                                             std::to_string(t_max - t_min) + " frames (slack " +
                                             std::to_string(alignment_slack) + ")");
  MultiPpg out;
  out.values.resize(t_min, total);
  Eigen::Index offset = 0;
  for (const auto *p : sorted) {
    out.values.middleCols(offset, p->dim()) = p->values.topRows(t_min);
    out.segments.push_back({p->language, p->dim()});
    offset += p->dim();
  }
  return out;
}

PpgMatrix OraclePpg(std::span<const int> states, Eigen::Index dim, double sharpness,
                    std::uint64_t seed, Language lang) {
  std::vector<double> sharp(states.size(), sharpness);
  return OraclePpg(states, dim, sharp, seed, lang);
}

PpgMatrix OraclePpg(std::span<const int> states, Eigen::Index dim,
                    std::span<const double> sharpness, std::uint64_t seed, Language lang) {
  if (dim <= 0) Fail(ErrorCode::kInvalidConfig, "oracle dimension must be positive");
  if (sharpness.size() != states.size())
    Fail(ErrorCode::kFrameCountMismatch, "sharpness and state sequences differ in length");
  std::map<int, Eigen::VectorXd> embeddings;
  for (int s : states) {
    if (s < 0 || s >= dim)
      Fail(ErrorCode::kIndexOutOfRange,
           "state " + std::to_string(s) + " outside [0, " + std::to_string(dim) + ")");
    if (embeddings.count(s)) continue;
    Rng rng(MixSeed(seed, static_cast<std::uint64_t>(s)));
    Eigen::VectorXd e(dim);
    for (Eigen::Index j = 0; j < dim; ++j) e[j] = rng.Uniform(0.0, kOracleEmbeddingMax);
    e[s] = 1.0;
    embeddings.emplace(s, std::move(e));
  }
  PpgMatrix m;
  m.language = lang;
  m.source_model_id = "oracle:" + std::to_string(seed);
  m.values.resize(static_cast<Eigen::Index>(states.size()), dim);
  for (std::size_t t = 0; t < states.size(); ++t) {
    if (!(sharpness[t] > 0.0)) Fail(ErrorCode::kInvalidConfig, "sharpness must be positive");
    const Eigen::VectorXd &e = embeddings.at(states[t]);
    // The own-state entry is the maximum logit.
    const Eigen::ArrayXd p = (sharpness[t] * (e.array() - 1.0)).exp();
    m.values.row(static_cast<Eigen::Index>(t)) = (p / p.sum()).cast<float>().transpose();
  }
  return m;
}

std::pair<MultiPpg, SpeechParams> AlignToParams(const MultiPpg &ppg, const SpeechParams &params,
                                                Eigen::Index slack) {
  const Eigen::Index a = ppg.frames(), b = params.frames();
  if (std::abs(a - b) > slack)
    Fail(ErrorCode::kFrameCountMismatch, "posteriorgram has " + std::to_string(a) +
                                             " frames, parameters " + std::to_string(b) +
                                             " (slack " + std::to_string(slack) + ")");
  const Eigen::Index n = std::min(a, b);
  MultiPpg p = ppg;
  p.values.conservativeResize(n, Eigen::NoChange);
  return {std::move(p), params.Head(n)};
}

}  // namespace ppgvc
