// include/ppgvc/eval.h

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

#ifndef PPGVC_EVAL_H_
#define PPGVC_EVAL_H_

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ppgvc/analysis.h"
#include "ppgvc/corpus.h"

namespace ppgvc {

/// Mean over frames of (10 / ln 10) * sqrt(2 * sum_{d >= 1} (a_d - b_d)^2);
/// c0 does not take part.
template <typename A, typename B>
double Mcd(const Eigen::MatrixBase<A> &a, const Eigen::MatrixBase<B> &b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    Fail(ErrorCode::kDimensionMismatch, "mel-cepstra differ in shape");
  if (a.rows() == 0 || a.cols() < 2) return 0.0;
  const double k = 10.0 / std::log(10.0) * std::sqrt(2.0);
  const Eigen::Index d = a.cols() - 1;
  return k * (a.rightCols(d) - b.rightCols(d)).rowwise().norm().mean();
}

struct F0Error {
  double rmse = 0.0;          // Hz
  Eigen::Index compared = 0;  // frames voiced in both
  bool no_common_voiced = false;
};

F0Error F0Rmse(const SpeechParams &a, const SpeechParams &b);
double VuvError(const SpeechParams &a, const SpeechParams &b);

struct UtteranceScores {
  std::string id;
  Eigen::Index frames = 0;
  double mcd = 0.0;
  F0Error f0;
  double vuv_error = 0.0;
};

struct EvalReport {
  std::vector<UtteranceScores> utterances;  // sorted by id
  Eigen::Index frames = 0;
  Eigen::Index voiced_compared = 0;
  double mcd = 0.0;        // frame-weighted mean
  double f0_rmse = 0.0;    // pooled over frames voiced in both
  bool no_common_voiced = false;
  double vuv_error = 0.0;  // pooled
  // var(pred) / var(ref) per mel-cepstral dimension over all frames.
  Eigen::VectorXd gv_ratio;
};

/// Pairs are matched by id; a prediction without a reference is a
/// kMissingReference. Each pair is truncated to the shorter stream when the
/// lengths differ by at most `slack` frames.
EvalReport EvaluateParams(const std::vector<std::pair<std::string, SpeechParams>> &pred,
                          const std::vector<std::pair<std::string, SpeechParams>> &ref,
                          Eigen::Index slack = 2);

/// Parameters come from each record's params file, else analysis of its wav.
EvalReport EvaluateCorpus(const CorpusManifest &pred, const CorpusManifest &ref,
                          const AnalysisConfig &cfg,
                          const std::optional<std::filesystem::path> &cache_dir = std::nullopt);

std::string FormatReportText(const EvalReport &r);
// One JSON object per utterance, then a "corpus" record.
std::string FormatReportJsonLines(const EvalReport &r);
// Writes `path` (text table) and `path` + ".jsonl".
void WriteReport(const std::filesystem::path &path, const EvalReport &r);

}  // namespace ppgvc

#endif  // PPGVC_EVAL_H_
