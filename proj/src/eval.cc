// src/eval.cc

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

#include "ppgvc/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "json.hpp"
#include "ppgvc/binary_io.h"
#include "ppgvc/error.h"

namespace ppgvc {
namespace {

void CheckSameLength(const SpeechParams &a, const SpeechParams &b) {
  if (a.frames() != b.frames())
    Fail(ErrorCode::kFrameCountMismatch, "parameter streams have " + std::to_string(a.frames()) +
                                             " and " + std::to_string(b.frames()) + " frames");
}

struct Sums {
  double f0_se = 0.0;
  Eigen::Index f0_n = 0;
};

Sums F0Sums(const SpeechParams &a, const SpeechParams &b) {
  Sums s;
  for (Eigen::Index t = 0; t < a.frames(); ++t) {
    if (!(a.vuv[t] && b.vuv[t])) continue;
    const double d = std::exp(a.lf0[t]) - std::exp(b.lf0[t]);
    s.f0_se += d * d;
    ++s.f0_n;
  }
  return s;
}

}  // namespace

F0Error F0Rmse(const SpeechParams &a, const SpeechParams &b) {
  CheckSameLength(a, b);
  const Sums s = F0Sums(a, b);
  F0Error e;
  e.compared = s.f0_n;
  e.no_common_voiced = s.f0_n == 0;
  e.rmse = s.f0_n ? std::sqrt(s.f0_se / static_cast<double>(s.f0_n)) : 0.0;
  return e;
}

double VuvError(const SpeechParams &a, const SpeechParams &b) {
  CheckSameLength(a, b);
  if (a.frames() == 0) return 0.0;
  return static_cast<double>((a.vuv != b.vuv).count()) / static_cast<double>(a.frames());
}

EvalReport EvaluateParams(const std::vector<std::pair<std::string, SpeechParams>> &pred,
                          const std::vector<std::pair<std::string, SpeechParams>> &ref,
                          Eigen::Index slack) {
  if (pred.empty()) Fail(ErrorCode::kEmptyInput, "no predictions to evaluate");
  std::map<std::string, const SpeechParams *> refs;
  for (const auto &[id, p] : ref) refs[id] = &p;
  std::map<std::string, const SpeechParams *> preds;
  for (const auto &[id, p] : pred) {
    if (!refs.count(id)) Fail(ErrorCode::kMissingReference, "no reference for utterance '" + id + "'");
    if (!preds.emplace(id, &p).second)
      Fail(ErrorCode::kInvalidValue, "utterance '" + id + "' predicted twice");
  }

  EvalReport r;
  double mcd_sum = 0.0, f0_se = 0.0;
  Eigen::Index vuv_diff = 0;
  Eigen::VectorXd ps, pss, rs, rss;
  for (const auto &[id, pp] : preds) {  // id order
    const SpeechParams &rp = *refs.at(id);
    const Eigen::Index n = std::min(pp->frames(), rp.frames());
    if (std::abs(pp->frames() - rp.frames()) > slack)
      Fail(ErrorCode::kFrameCountMismatch, "utterance '" + id + "': " + std::to_string(pp->frames()) +
                                               " predicted vs " + std::to_string(rp.frames()) +
                                               " reference frames");
    const SpeechParams a = pp->Head(n), b = rp.Head(n);
    if (a.mcep.cols() != b.mcep.cols())
      Fail(ErrorCode::kDimensionMismatch, "utterance '" + id + "': mel-cepstral orders differ");
    UtteranceScores s;
    s.id = id;
    s.frames = n;
    s.mcd = Mcd(a.mcep, b.mcep);
    s.f0 = F0Rmse(a, b);
    s.vuv_error = VuvError(a, b);
    r.utterances.push_back(s);

    r.frames += n;
    mcd_sum += s.mcd * static_cast<double>(n);
    const Sums f = F0Sums(a, b);
    f0_se += f.f0_se;
    r.voiced_compared += f.f0_n;
    vuv_diff += (a.vuv != b.vuv).count();
    if (ps.size() == 0) {
      ps = pss = rs = rss = Eigen::VectorXd::Zero(a.mcep.cols());
    }
    ps += a.mcep.colwise().sum().transpose();
    pss += a.mcep.array().square().colwise().sum().matrix().transpose();
    rs += b.mcep.colwise().sum().transpose();
    rss += b.mcep.array().square().colwise().sum().matrix().transpose();
  }
  if (r.frames > 0) {
    const double n = static_cast<double>(r.frames);
    r.mcd = mcd_sum / n;
    r.vuv_error = static_cast<double>(vuv_diff) / n;
    const Eigen::ArrayXd pv = (pss.array() / n - (ps.array() / n).square()).max(0.0);
    const Eigen::ArrayXd rv = (rss.array() / n - (rs.array() / n).square()).max(0.0);
    r.gv_ratio = (pv / rv.max(1e-12)).matrix();
  }
  r.no_common_voiced = r.voiced_compared == 0;
  r.f0_rmse = r.voiced_compared ? std::sqrt(f0_se / static_cast<double>(r.voiced_compared)) : 0.0;
  return r;
}

EvalReport EvaluateCorpus(const CorpusManifest &pred, const CorpusManifest &ref,
                          const AnalysisConfig &cfg,
                          const std::optional<std::filesystem::path> &cache_dir) {
  if (pred.entries.empty()) Fail(ErrorCode::kEmptyInput, "prediction manifest is empty");
  std::vector<std::pair<std::string, SpeechParams>> p, q;
  for (const auto &r : pred.entries) {
    const UtteranceRecord *match = ref.Find(r.id);
    if (!match) Fail(ErrorCode::kMissingReference, "no reference for utterance '" + r.id + "'");
    p.emplace_back(r.id, RecordParams(r, cfg).params);
    q.emplace_back(r.id, RecordParams(*match, cfg, cache_dir).params);
  }
  return EvaluateParams(p, q);
}

std::string FormatReportText(const EvalReport &r) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %8s %10s %10s %8s\n", "utterance", "frames", "mcd_db",
                "f0_rmse_hz", "vuv_err");
  out << line;
  for (const auto &u : r.utterances) {
    std::snprintf(line, sizeof line, "%-24s %8ld %10.4f %10.4f %8.4f%s\n", u.id.c_str(),
                  static_cast<long>(u.frames), u.mcd, u.f0.rmse, u.vuv_error,
                  u.f0.no_common_voiced ? "  (no common voiced frames)" : "");
    out << line;
  }
  std::snprintf(line, sizeof line, "%-24s %8ld %10.4f %10.4f %8.4f%s\n", "corpus",
                static_cast<long>(r.frames), r.mcd, r.f0_rmse, r.vuv_error,
                r.no_common_voiced ? "  (no common voiced frames)" : "");
  out << line;
  if (r.gv_ratio.size()) {
    out << "gv_ratio";
    for (Eigen::Index d = 0; d < r.gv_ratio.size(); ++d) {
      std::snprintf(line, sizeof line, " %.4f", r.gv_ratio[d]);
      out << line;
    }
    out << '\n';
  }
  return out.str();
}

std::string FormatReportJsonLines(const EvalReport &r) {
  std::string out;
  for (const auto &u : r.utterances) {
    nlohmann::ordered_json j;
    j["id"] = u.id;
    j["frames"] = u.frames;
    j["mcd_db"] = u.mcd;
    j["f0_rmse_hz"] = u.f0.rmse;
    j["f0_compared_frames"] = u.f0.compared;
    j["no_common_voiced"] = u.f0.no_common_voiced;
    j["vuv_error"] = u.vuv_error;
    out += j.dump() + "\n";
  }
  nlohmann::ordered_json c;
  c["id"] = "corpus";
  c["utterances"] = r.utterances.size();
  c["frames"] = r.frames;
  c["mcd_db"] = r.mcd;
  c["f0_rmse_hz"] = r.f0_rmse;
  c["f0_compared_frames"] = r.voiced_compared;
  c["no_common_voiced"] = r.no_common_voiced;
  c["vuv_error"] = r.vuv_error;
  c["gv_ratio"] = std::vector<double>(r.gv_ratio.data(), r.gv_ratio.data() + r.gv_ratio.size());
  out += c.dump() + "\n";
  return out;
}

void WriteReport(const std::filesystem::path &path, const EvalReport &r) {
  WriteFileBytes(path, FormatReportText(r));
  WriteFileBytes(path.string() + ".jsonl", FormatReportJsonLines(r));
}

}  // namespace ppgvc
