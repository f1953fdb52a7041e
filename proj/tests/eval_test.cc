// tests/eval_test.cc

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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ppgvc/binary_io.h"
#include "ppgvc/eval.h"
#include "ppgvc/rng.h"
#include "test_util.h"

using namespace ppgvc;
using Pairs = std::vector<std::pair<std::string, SpeechParams>>;

namespace {

SpeechParams RandomParams(Eigen::Index t, std::uint64_t seed) {
  Rng rng(seed);
  SpeechParams p;
  p.mcep = testing::RandomMatrix(t, 40, seed, 0.3);
  p.lf0.resize(t);
  p.vuv.resize(t);
  for (Eigen::Index i = 0; i < t; ++i) {
    p.lf0[i] = std::log(rng.Uniform(90.0, 260.0));
    p.vuv[i] = rng.Uniform() < 0.7;
  }
  p.bap = -rng.Uniform(0, 30) * Eigen::MatrixXd::Ones(t, 1);
  return p;
}

SpeechParams Constant(Eigen::Index t, double hz, bool voiced) {
  SpeechParams p;
  p.mcep = Eigen::MatrixXd::Zero(t, 40);
  p.lf0 = Eigen::VectorXd::Constant(t, std::log(hz));
  p.vuv = VuvVector::Constant(t, voiced);
  p.bap = Eigen::MatrixXd::Zero(t, 1);
  return p;
}

}  // namespace

TEST_CASE("distortion of identical cepstra is zero") {
  const Eigen::MatrixXd a = testing::RandomMatrix(9, 40, 1);
  CHECK(Mcd(a, a) == 0.0);
}

TEST_CASE("single coefficient difference has the closed form") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(1, 40), b = a;
  const double delta = 0.37;
  b(0, 5) = delta;
  CHECK(Mcd(a, b) == doctest::Approx(10.0 / std::log(10.0) * std::sqrt(2.0) * delta).epsilon(1e-12));
}

TEST_CASE("c0 is excluded") {
  Eigen::MatrixXd a = testing::RandomMatrix(5, 40, 2), b = a;
  b.col(0).array() += 3.0;
  CHECK(Mcd(a, b) == 0.0);
  CHECK_THROWS_AS_CODE(Mcd(a, Eigen::MatrixXd::Zero(5, 39)), ErrorCode::kDimensionMismatch);
  CHECK_THROWS_AS_CODE(Mcd(a, Eigen::MatrixXd::Zero(4, 40)), ErrorCode::kDimensionMismatch);
}

TEST_CASE("single-frame distortion is a metric on the compared coefficients") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::MatrixXd x = testing::RandomMatrix(1, 40, 100 + trial);
    const Eigen::MatrixXd y = testing::RandomMatrix(1, 40, 500 + trial);
    const Eigen::MatrixXd z = testing::RandomMatrix(1, 40, 900 + trial);
    CHECK(Mcd(x, y) >= 0.0);
    CHECK(Mcd(x, y) == Mcd(y, x));
    CHECK(Mcd(x, z) <= Mcd(x, y) + Mcd(y, z) + 1e-12);
    Eigen::MatrixXd w = x;
    w(0, 1 + rng.Index(39)) += 1e-3;
    CHECK(Mcd(x, w) > 0.0);
  }
}

TEST_CASE("f0 error over commonly voiced frames") {
  const SpeechParams a = Constant(50, 200.0, true), b = Constant(50, 210.0, true);
  CHECK(F0Rmse(a, a).rmse == 0.0);
  const F0Error e = F0Rmse(a, b);
  CHECK(e.rmse == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(e.compared == 50);
  CHECK_FALSE(e.no_common_voiced);
  const F0Error none = F0Rmse(a, Constant(50, 210.0, false));
  CHECK(none.rmse == 0.0);
  CHECK(none.no_common_voiced);
  CHECK(none.compared == 0);
  CHECK_THROWS_AS_CODE(F0Rmse(a, Constant(49, 200.0, true)), ErrorCode::kFrameCountMismatch);
}

TEST_CASE("voicing error counts disagreeing frames") {
  SpeechParams a = Constant(10, 150.0, true);
  CHECK(VuvError(a, a) == 0.0);
  CHECK(VuvError(a, Constant(10, 150.0, false)) == 1.0);
  SpeechParams half = a;
  half.vuv.head(5).setConstant(false);
  CHECK(VuvError(a, half) == 0.5);
  CHECK_THROWS_AS_CODE(VuvError(a, Constant(11, 150.0, true)), ErrorCode::kFrameCountMismatch);
}

TEST_CASE("identical sets score zero") {
  const Pairs p = {{"a", RandomParams(30, 1)}, {"b", RandomParams(44, 2)}};
  const EvalReport r = EvaluateParams(p, p);
  CHECK(r.mcd == 0.0);
  CHECK(r.f0_rmse == 0.0);
  CHECK(r.vuv_error == 0.0);
  CHECK(r.frames == 74);
  CHECK(r.utterances.size() == 2);
  CHECK((r.gv_ratio.array() == 1.0).all());
}

TEST_CASE("metrics ignore utterance order and pool by frames") {
  Pairs pred, ref;
  for (int i = 0; i < 6; ++i) {
    const std::string id = "u" + std::to_string(i);
    pred.push_back({id, RandomParams(20 + 7 * i, 10 + i)});
    ref.push_back({id, RandomParams(20 + 7 * i, 40 + i)});
  }
  const EvalReport a = EvaluateParams(pred, ref);
  Pairs pred_r(pred.rbegin(), pred.rend()), ref_s = ref;
  std::rotate(ref_s.begin(), ref_s.begin() + 2, ref_s.end());
  const EvalReport b = EvaluateParams(pred_r, ref_s);
  CHECK(a.mcd == b.mcd);
  CHECK(a.f0_rmse == b.f0_rmse);
  CHECK(a.vuv_error == b.vuv_error);
  CHECK(a.gv_ratio == b.gv_ratio);
  CHECK(a.utterances.front().id == "u0");

  double weighted = 0.0;
  Eigen::Index frames = 0, voiced = 0;
  for (const auto &u : a.utterances) {
    weighted += u.mcd * u.frames;
    frames += u.frames;
    voiced += u.f0.compared;
  }
  CHECK(a.frames == frames);
  CHECK(a.voiced_compared == voiced);
  CHECK(a.mcd == doctest::Approx(weighted / frames).epsilon(1e-12));
  CHECK(a.mcd >= 0.0);
  CHECK(a.vuv_error >= 0.0);
  CHECK(a.vuv_error <= 1.0);
}

TEST_CASE("lengths within slack are truncated; beyond slack they fail") {
  const SpeechParams r = RandomParams(40, 7);
  const Pairs ref = {{"x", r}};
  const EvalReport e = EvaluateParams({{"x", r.Head(38)}}, ref);
  CHECK(e.frames == 38);
  CHECK(e.mcd == 0.0);
  CHECK_THROWS_AS_CODE(EvaluateParams({{"x", r.Head(37)}}, ref), ErrorCode::kFrameCountMismatch);
}

TEST_CASE("an unmatched prediction is a missing reference") {
  const Pairs ref = {{"x", RandomParams(10, 1)}};
  CHECK_THROWS_AS_CODE(EvaluateParams({{"y", RandomParams(10, 1)}}, ref), ErrorCode::kMissingReference);
  CHECK_THROWS_AS_CODE(EvaluateParams({}, ref), ErrorCode::kEmptyInput);
}

TEST_CASE("global variance ratio reflects over-smoothing") {
  SpeechParams r = RandomParams(200, 3), p = r;
  p.mcep *= 0.5;
  const EvalReport e = EvaluateParams({{"x", p}}, {{"x", r}});
  for (Eigen::Index d = 1; d < e.gv_ratio.size(); ++d) CHECK(e.gv_ratio[d] == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("manifest evaluation and report files") {
  testing::ScratchDir dir("eval");
  CorpusManifest m;
  m.corpus_id = "c";
  for (int i = 0; i < 3; ++i) {
    UtteranceRecord r;
    r.id = "utt" + std::to_string(i);
    r.params_path = dir.path() / (r.id + ".prm");
    WriteParams(*r.params_path, RandomParams(25 + i, 60 + i));
    m.entries.push_back(r);
  }
  const EvalReport same = EvaluateCorpus(m, m, AnalysisConfig{});
  CHECK(same.mcd == 0.0);
  CHECK(same.f0_rmse == 0.0);
  CHECK(same.vuv_error == 0.0);

  CorpusManifest extra = m;
  extra.entries.push_back(m.entries[0]);
  extra.entries.back().id = "stray";
  CHECK_THROWS_AS_CODE(EvaluateCorpus(extra, m, AnalysisConfig{}), ErrorCode::kMissingReference);

  WriteReport(dir.path() / "report.txt", same);
  const std::string text = ReadFileBytes(dir.path() / "report.txt");
  CHECK(text.find("utt2") != std::string::npos);
  std::istringstream jl(ReadFileBytes(dir.path() / "report.txt.jsonl"));
  std::string line;
  std::vector<nlohmann::json> rows;
  while (std::getline(jl, line)) rows.push_back(nlohmann::json::parse(line));
  REQUIRE(rows.size() == 4);
  CHECK(rows[0]["id"] == "utt0");
  CHECK(rows[3]["id"] == "corpus");
  CHECK(rows[3]["mcd_db"] == 0.0);
  CHECK(rows[3]["frames"] == 25 + 26 + 27);
}
