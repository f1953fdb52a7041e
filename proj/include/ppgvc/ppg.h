// include/ppgvc/ppg.h

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

#ifndef PPGVC_PPG_H_
#define PPGVC_PPG_H_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ppgvc/analysis.h"
#include "ppgvc/error.h"

namespace ppgvc {

enum class Language { kJapanese, kChinese, kEnglish, kSynthetic };

// Canonical column order of a multilingual posteriorgram.
inline constexpr Language kCanonicalOrder[] = {Language::kJapanese, Language::kChinese,
                                               Language::kEnglish, Language::kSynthetic};

std::string_view LanguageTag(Language lang);      // "ja", "zh", "en", "synthetic"
Language ParseLanguage(std::string_view tag);     // throws kParseError
int CanonicalRank(Language lang);
std::vector<Language> ParseLanguageList(std::string_view csv);
std::string FormatLanguageList(std::span<const Language> langs);

using PpgValues = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Posteriorgram of one recogniser: one row per 10 ms frame. Loaded values
/// are any finite reals; only oracle rows are guaranteed to be on the simplex.
struct PpgMatrix {
  PpgValues values;
  Language language = Language::kSynthetic;
  std::string source_model_id;
  double frame_shift_ms = 10.0;

  Eigen::Index frames() const { return values.rows(); }
  Eigen::Index dim() const { return values.cols(); }
};

struct PpgSegment {
  Language language;
  Eigen::Index dim;
};

/// Frame-wise concatenation of per-language posteriorgrams.
struct MultiPpg {
  PpgValues values;
  std::vector<PpgSegment> segments;

  Eigen::Index frames() const { return values.rows(); }
  Eigen::Index dim() const { return values.cols(); }
  std::vector<Language> languages() const;
  // Columns of one language; throws kLanguageMismatch when absent.
  PpgMatrix Segment(Language lang) const;
};

// Binary "PPGF" format, version 1.
std::string EncodePpg(const PpgMatrix &m);
void WritePpg(const std::filesystem::path &path, const PpgMatrix &m);
// Text variant: "T D language" header then T rows.
void WritePpgText(const std::filesystem::path &path, const PpgMatrix &m);

/// Reads binary or text posteriorgrams. Malformed data is a kParseError,
/// NaN/Inf a kInvalidValue, and a tag other than `expected` a
/// kLanguageMismatch.
PpgMatrix LoadPpg(const std::filesystem::path &path, Language expected);
PpgMatrix DecodePpg(std::string_view bytes, Language expected, const std::string &what);

/// Concatenates columns in canonical (ja, zh, en) order whatever the argument
/// order, truncating to the shortest input.
MultiPpg MergeMultilingual(std::span<const PpgMatrix> ppgs, Eigen::Index alignment_slack = 2);

inline constexpr std::uint64_t kOracleSeed = 0x5eed0f0a;

/// Deterministic stand-in for recogniser posteriors. Each state owns a
/// seeded embedding with 1 at its own index and values in [0, 0.6]
/// elsewhere; row t is softmax(sharpness * embedding[state[t]]).
PpgMatrix OraclePpg(std::span<const int> states, Eigen::Index dim, double sharpness,
                    std::uint64_t seed = kOracleSeed, Language lang = Language::kSynthetic);
// Per-frame sharpness variant.
PpgMatrix OraclePpg(std::span<const int> states, Eigen::Index dim,
                    std::span<const double> sharpness, std::uint64_t seed = kOracleSeed,
                    Language lang = Language::kSynthetic);

inline constexpr double kOracleEmbeddingMax = 0.6;

/// Row t of the result is frames t - width ... t + width side by side, with
/// indices clamped to the first and last frame.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
ContextStack(const Eigen::MatrixBase<Derived> &m, Eigen::Index width) {
  using Out = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (width < 0) Fail(ErrorCode::kInvalidConfig, "context width must be >= 0");
  const Eigen::Index t_count = m.rows(), d = m.cols();
  Out out(t_count, d * (2 * width + 1));
  for (Eigen::Index t = 0; t < t_count; ++t) {
    for (Eigen::Index k = -width; k <= width; ++k) {
      const Eigen::Index src = std::clamp<Eigen::Index>(t + k, 0, t_count - 1);
      out.block(t, (k + width) * d, 1, d) = m.row(src);
    }
  }
  return out;
}

/// Truncates both streams to their common length; a difference over
/// `slack` frames is a kFrameCountMismatch.
std::pair<MultiPpg, SpeechParams> AlignToParams(const MultiPpg &ppg, const SpeechParams &params,
                                                Eigen::Index slack = 2);

}  // namespace ppgvc

#endif  // PPGVC_PPG_H_
