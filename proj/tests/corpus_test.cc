// tests/corpus_test.cc

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

#include <cmath>
#include <filesystem>

#include "ppgvc/binary_io.h"
#include "ppgvc/corpus.h"
#include "ppgvc/oracle.h"
#include "ppgvc/wave.h"
#include "test_util.h"

using namespace ppgvc;
namespace fs = std::filesystem;

namespace {

SpeechParams Sample(Eigen::Index t, int bands = 1) {
  SpeechParams p;
  p.mcep = testing::RandomMatrix(t, 40, 3, 0.5);
  p.lf0 = Eigen::VectorXd::LinSpaced(t, std::log(100.0), std::log(180.0));
  p.vuv = VuvVector(t);
  for (Eigen::Index i = 0; i < t; ++i) p.vuv[i] = i % 3 != 0;
  p.bap = -testing::RandomMatrix(t, bands, 4).cwiseAbs();
  return p;
}

Waveform Tone(double hz, double secs) {
  Waveform w;
  w.samples.resize(static_cast<Eigen::Index>(secs * 16000));
  for (Eigen::Index i = 0; i < w.size(); ++i) w.samples[i] = 0.3 * std::sin(2 * M_PI * hz * i / 16000.0);
  return w;
}

}  // namespace

TEST_CASE("manifest lines parse with headers, placeholders and relative paths") {
  const std::string text =
      "# corpus_id: corpus01\n# speaker: spk01\n# language: ja\n# free comment\n\n"
      "u1\twav/u1.wav\tja=ppg/u1.ja.ppg,en=/abs/u1.en.ppg\n"
      "u2\t-\tzh=ppg/u2.zh.ppg\tparams=p/u2.prm\n"
      "u3\tu3.wav\t-\n";
  const CorpusManifest m = ParseManifest(text, "/data/c", "m");
  CHECK(m.corpus_id == "corpus01");
  CHECK(m.speaker_id == "spk01");
  CHECK(m.language == "ja");
  REQUIRE(m.entries.size() == 3);
  CHECK(*m.entries[0].wav_path == fs::path("/data/c/wav/u1.wav"));
  CHECK(m.entries[0].ppg_paths.at(Language::kJapanese) == fs::path("/data/c/ppg/u1.ja.ppg"));
  CHECK(m.entries[0].ppg_paths.at(Language::kEnglish) == fs::path("/abs/u1.en.ppg"));
  CHECK_FALSE(m.entries[1].wav_path.has_value());
  CHECK(*m.entries[1].params_path == fs::path("/data/c/p/u2.prm"));
  CHECK(m.entries[2].ppg_paths.empty());
  CHECK(m.Find("u2") == &m.entries[1]);
  CHECK(m.Find("zz") == nullptr);

  const CorpusManifest again = ParseManifest(FormatManifest(m, "/data/c"), "/data/c", "m2");
  CHECK(FormatManifest(again, "/data/c") == FormatManifest(m, "/data/c"));
  CHECK(FormatManifest(m, "/data/c").find("wav/u1.wav") != std::string::npos);
}

TEST_CASE("malformed manifests are parse errors") {
  auto code = [](const std::string &text) {
    return testing::ThrownCode([&] { ParseManifest(text, "/b", "m"); });
  };
  CHECK(code("u1\ta.wav\n") == ErrorCode::kParseError);
  CHECK(code("u1\ta.wav\tja=a\tparams=x\textra\n") == ErrorCode::kParseError);
  CHECK(code("u1\ta.wav\tja=a\nu1\tb.wav\tja=b\n") == ErrorCode::kParseError);
  CHECK(code("u1\ta.wav\tja\n") == ErrorCode::kParseError);
  CHECK(code("u1\ta.wav\tfr=a\n") == ErrorCode::kParseError);
  CHECK(code("u1\ta.wav\tja=a,ja=b\n") == ErrorCode::kDuplicateLanguage);
  CHECK(code("u1\ta.wav\tja=a\tcache=x\n") == ErrorCode::kParseError);
  CHECK(code("\t\ta.wav\tja=a\n") == ErrorCode::kParseError);
}

TEST_CASE("loading checks that referenced files exist") {
  testing::ScratchDir dir("manifest_load");
  WriteWav(dir.path() / "a.wav", Tone(200, 0.1));
  WriteFileBytes(dir.path() / "m.tsv", "a\ta.wav\t-\n");
  CHECK(LoadManifest(dir.path() / "m.tsv").entries.size() == 1);
  WriteFileBytes(dir.path() / "m.tsv", "a\ta.wav\tja=missing.ppg\n");
  CHECK_THROWS_AS_CODE(LoadManifest(dir.path() / "m.tsv"), ErrorCode::kIoError);
  CHECK_THROWS_AS_CODE(LoadManifest(dir.path() / "absent.tsv"), ErrorCode::kIoError);
}

TEST_CASE("parameter files round trip at float32 precision") {
  const SpeechParams p = Sample(57, 5);
  std::uint64_t hash = 0;
  const SpeechParams r = DecodeParams(EncodeParams(p, 0xabcdef0123ull), "p", &hash);
  CHECK(hash == 0xabcdef0123ull);
  CHECK(r.frames() == 57);
  CHECK(r.bap.cols() == 5);
  CHECK((r.mcep - p.mcep.cast<float>().cast<double>()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((r.vuv == p.vuv).all());
  CHECK(r.frame_shift_ms == p.frame_shift_ms);
  CHECK(EncodeParams(r, 0xabcdef0123ull) == EncodeParams(p, 0xabcdef0123ull));
}

TEST_CASE("corrupt parameter files are rejected") {
  const std::string bytes = EncodeParams(Sample(4), 1);
  CHECK_THROWS_AS_CODE(DecodeParams(bytes.substr(0, bytes.size() - 2), "p"), ErrorCode::kParseError);
  CHECK_THROWS_AS_CODE(DecodeParams(bytes + "x", "p"), ErrorCode::kParseError);
  std::string magic = bytes;
  magic[1] = 'x';
  CHECK_THROWS_AS_CODE(DecodeParams(magic, "p"), ErrorCode::kParseError);
  std::string version = bytes;
  version[8] = 9;
  CHECK_THROWS_AS_CODE(DecodeParams(version, "p"), ErrorCode::kParseError);
}

TEST_CASE("analysis cache hits on a matching hash and misses otherwise") {
  testing::ScratchDir dir("cache");
  WriteWav(dir.path() / "a.wav", Tone(180, 0.3));
  UtteranceRecord r;
  r.id = "a";
  r.wav_path = dir.path() / "a.wav";
  const fs::path cache = dir.path() / "cache";
  AnalysisConfig cfg;

  const ParamsSource first = RecordParams(r, cfg, cache);
  CHECK(first.computed);
  CHECK(fs::exists(CachePath(cache, "a")));
  const ParamsSource second = RecordParams(r, cfg, cache);
  CHECK_FALSE(second.computed);
  CHECK(second.params.frames() == first.params.frames());

  AnalysisConfig other = cfg;
  other.voicing_threshold = 0.35;
  CHECK(AnalysisHash("x", cfg) != AnalysisHash("x", other));
  CHECK(RecordParams(r, other, cache).computed);
  CHECK_FALSE(RecordParams(r, other, cache).computed);

  WriteWav(dir.path() / "a.wav", Tone(190, 0.3));
  CHECK(RecordParams(r, other, cache).computed);

  CHECK(RecordParams(r, cfg).computed);
}

TEST_CASE("a params file is used as given") {
  testing::ScratchDir dir("params_given");
  const SpeechParams p = Sample(12);
  WriteParams(dir.path() / "p.prm", p);
  UtteranceRecord r;
  r.id = "x";
  r.params_path = dir.path() / "p.prm";
  const ParamsSource s = RecordParams(r, AnalysisConfig{});
  CHECK_FALSE(s.computed);
  CHECK(s.params.frames() == 12);

  UtteranceRecord none;
  none.id = "lonely";
  try {
    RecordParams(none, AnalysisConfig{});
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(std::string(e.what()).find("lonely") != std::string::npos);
  }
}

TEST_CASE("analysis errors name the utterance") {
  testing::ScratchDir dir("bad_rate");
  Waveform w = Tone(200, 0.2);
  w.sample_rate = 8000;
  WriteWav(dir.path() / "b.wav", w);
  UtteranceRecord r;
  r.id = "wrong_rate";
  r.wav_path = dir.path() / "b.wav";
  try {
    RecordParams(r, AnalysisConfig{});
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kInvalidValue);
    CHECK(std::string(e.what()).find("wrong_rate") != std::string::npos);
  }
}

TEST_CASE("oracle corpora are written deterministically") {
  testing::ScratchDir a("oracle_a"), b("oracle_b");
  OracleCorpusSpec spec;
  spec.utterances = 3;
  const CorpusManifest ma = MakeOracleCorpus(spec, a.path());
  MakeOracleCorpus(spec, b.path());
  REQUIRE(ma.entries.size() == 3);
  for (const auto &r : ma.entries) CHECK(r.ppg_paths.size() == 3);
  for (const auto &entry : fs::recursive_directory_iterator(a.path())) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a.path());
    CHECK(ReadFileBytes(entry.path()) == ReadFileBytes(b.path() / rel));
  }
  const CorpusManifest loaded = LoadManifest(a.path() / "manifest.tsv");
  CHECK(loaded.corpus_id == "oracle-1");
  CHECK(loaded.entries[1].id == "utt0001");
}

TEST_CASE("oracle params files carry the wav hash") {
  testing::ScratchDir dir("oracle_hash");
  OracleCorpusSpec spec;
  spec.utterances = 2;
  const CorpusManifest m = MakeOracleCorpus(spec, dir.path());
  for (const auto &r : m.entries) {
    REQUIRE(r.params_path.has_value());
    std::uint64_t hash = 0;
    ReadParams(*r.params_path, &hash);
    CHECK(hash == AnalysisHash(ReadFileBytes(*r.wav_path), spec.analysis));
  }
}
