// tests/cli_test.cc

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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "json.hpp"
#include "ppgvc/binary_io.h"
#include "ppgvc/ppg.h"
#include "ppgvc/wave.h"
#include "test_util.h"

namespace fs = std::filesystem;
using namespace ppgvc;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

Run Cli(const std::string &args, const fs::path &cwd, const std::string &env = "") {
  const fs::path out = cwd / ".stdout", err = cwd / ".stderr";
  const std::string cmd = "cd '" + cwd.string() + "' && " + env + (env.empty() ? "" : " ") + PPGVC_CLI + " " +
                          args + " >'" + out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = ReadFileBytes(out);
  r.err = ReadFileBytes(err);
  fs::remove(out);
  fs::remove(err);
  return r;
}

std::map<fs::path, std::string> Snapshot(const fs::path &root) {
  std::map<fs::path, std::string> out;
  for (const auto &e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root)] = ReadFileBytes(e.path());
  return out;
}

nlohmann::json CorpusRecord(const fs::path &report) {
  std::istringstream in(ReadFileBytes(report.string() + ".jsonl"));
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  return nlohmann::json::parse(last);
}

const char kSmall[] = "[network]\nhidden = 16\n[train]\nepochs = 2\n[gan]\nwindow_frames = 8\ndisc_hidden = 8\n";

}  // namespace

TEST_CASE("usage errors exit 2") {
  testing::ScratchDir dir("cli_usage");
  CHECK(Cli("", dir.path()).code == 2);
  CHECK(Cli("oracle-gen", dir.path()).code == 2);
  CHECK(Cli("oracle-gen --out x --utts zero", dir.path()).code == 2);
  CHECK(Cli("frobnicate", dir.path()).code == 2);
  CHECK(Cli("oracle-gen --out x --dims 64,64", dir.path()).code == 2);
  CHECK(Cli("--help", dir.path()).code == 0);
  const Run help = Cli("train --help", dir.path());
  CHECK(help.code == 0);
  CHECK(help.out.find("--manifest") != std::string::npos);
}

TEST_CASE("oracle generation writes one file per utterance and language") {
  testing::ScratchDir dir("cli_oracle");
  const Run r = Cli("oracle-gen --out c --utts 20 --dims 64,64,64 --seed 7", dir.path());
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir.path() / "c" / "manifest.tsv"));
  CHECK(fs::exists(dir.path() / "c" / "config.ini"));
  int ppgs = 0;
  for (const auto &e : fs::directory_iterator(dir.path() / "c" / "ppg")) ppgs += e.is_regular_file();
  CHECK(ppgs == 60);
  const auto first = Snapshot(dir.path() / "c");
  REQUIRE(Cli("oracle-gen --out c --utts 20 --dims 64,64,64 --seed 7", dir.path()).code == 0);
  CHECK(Snapshot(dir.path() / "c") == first);
  REQUIRE(Cli("oracle-gen --out d --utts 20", dir.path(), "PPGVC_SEED=7").code == 0);
  CHECK(ReadFileBytes(dir.path() / "d" / "ppg" / "utt0003.zh.ppg") ==
        ReadFileBytes(dir.path() / "c" / "ppg" / "utt0003.zh.ppg"));
  CHECK(Cli("oracle-gen --out e --utts 2", dir.path(), "PPGVC_SEED=x7").code == 2);
}

TEST_CASE("full-size posteriorgram corpora") {
  testing::ScratchDir dir("cli_fullsize");
  REQUIRE(Cli("oracle-gen --out p --utts 1 --dims 5383,5996,5871", dir.path()).code == 0);
  CHECK(LoadPpg(dir.path() / "p" / "ppg" / "utt0000.ja.ppg", Language::kJapanese).dim() == 5383);
  CHECK(LoadPpg(dir.path() / "p" / "ppg" / "utt0000.zh.ppg", Language::kChinese).dim() == 5996);
  CHECK(LoadPpg(dir.path() / "p" / "ppg" / "utt0000.en.ppg", Language::kEnglish).dim() == 5871);
  REQUIRE(Cli("oracle-gen --out j --utts 2 --languages ja --dims 32", dir.path()).code == 0);
  CHECK(ReadFileBytes(dir.path() / "j" / "manifest.tsv").find("zh=") == std::string::npos);
}

TEST_CASE("extraction caches per utterance and names failing ones") {
  testing::ScratchDir dir("cli_extract");
  REQUIRE(Cli("oracle-gen --out c --utts 4", dir.path()).code == 0);
  const Run first = Cli("extract --manifest c/manifest.tsv --cache k", dir.path());
  REQUIRE(first.code == 0);
  CHECK(first.out.find("4 analysed") != std::string::npos);
  for (int i = 0; i < 4; ++i) CHECK(fs::exists(dir.path() / "k" / ("utt000" + std::to_string(i) + ".prm")));
  const Run warm = Cli("extract --manifest c/manifest.tsv --cache k --jobs 2", dir.path());
  CHECK(warm.code == 0);
  CHECK(warm.out.find("0 analysed, 4 up to date") != std::string::npos);

  Waveform w = ReadWav(dir.path() / "c" / "wav" / "utt0002.wav");
  w.sample_rate = 22050;
  WriteWav(dir.path() / "c" / "wav" / "utt0002.wav", w);
  const Run bad = Cli("extract --manifest c/manifest.tsv --cache k", dir.path());
  CHECK(bad.code == 1);
  CHECK(bad.err.find("utt0002") != std::string::npos);
}

TEST_CASE("bad config keys exit 2 naming the key") {
  testing::ScratchDir dir("cli_config");
  REQUIRE(Cli("oracle-gen --out c --utts 2", dir.path()).code == 0);
  std::ofstream(dir.path() / "bad.ini") << "[train]\nepochz = 3\n";
  const Run r = Cli("train --manifest c/manifest.tsv --config bad.ini --out m.ckpt", dir.path());
  CHECK(r.code == 2);
  CHECK(r.err.find("train.epochz") != std::string::npos);
  const Run s = Cli("train --manifest c/manifest.tsv --set network.depth=3 --out m.ckpt", dir.path());
  CHECK(s.code == 2);
  CHECK(s.err.find("network.depth") != std::string::npos);
  CHECK_FALSE(fs::exists(dir.path() / "m.ckpt"));
}

TEST_CASE("every workflow reruns to identical bytes") {
  testing::ScratchDir dir("cli_workflows");
  const fs::path d = dir.path();
  std::ofstream(d / "small.ini") << kSmall;
  auto chain = [&](const std::string &tag) {
    const std::string o = "o" + tag;
    REQUIRE(Cli("oracle-gen --out " + o + "/c --utts 6 --seed 3", d).code == 0);
    REQUIRE(Cli("extract --manifest " + o + "/c/manifest.tsv --cache " + o + "/k", d).code == 0);
    REQUIRE(Cli("train --manifest " + o + "/c/manifest.tsv --config small.ini --out " + o + "/m.ckpt", d).code == 0);
    REQUIRE(Cli("train-gan --gen " + o + "/c/manifest.tsv --target " + o + "/c/manifest.tsv --config small.ini --out " +
                    o + "/g.ckpt --disc-out " + o + "/d.ckpt",
                d)
                .code == 0);
    REQUIRE(Cli("convert --ckpt " + o + "/m.ckpt --manifest " + o + "/c/manifest.tsv --out " + o + "/v --jobs 2", d)
                .code == 0);
    REQUIRE(Cli("convert --tts --ckpt " + o + "/g.ckpt --manifest " + o + "/c/manifest.tsv --out " + o + "/t", d)
                .code == 0);
    REQUIRE(Cli("synth --params " + o + "/v/params/utt0001.prm --out " + o + "/s.wav", d).code == 0);
    REQUIRE(Cli("eval --pred " + o + "/v/manifest.tsv --ref " + o + "/c/manifest.tsv --out " + o + "/report.txt", d)
                .code == 0);
  };
  chain("1");
  const auto first = Snapshot(d / "o1");
  CHECK(fs::exists(d / "o1" / "m.ckpt.history.tsv"));
  CHECK(fs::exists(d / "o1" / "m.ckpt.config.ini"));
  CHECK(fs::exists(d / "o1" / "v" / "config.ini"));
  CHECK(fs::exists(d / "o1" / "t" / "NOTE.txt"));
  fs::rename(d / "o1", d / "o1.first");
  chain("1");
  CHECK(Snapshot(d / "o1") == first);
}

TEST_CASE("conversion with mismatched languages exits 1") {
  testing::ScratchDir dir("cli_mismatch");
  const fs::path d = dir.path();
  std::ofstream(d / "small.ini") << kSmall;
  REQUIRE(Cli("oracle-gen --out c --utts 4", d).code == 0);
  REQUIRE(Cli("oracle-gen --out e --utts 2 --languages en --dims 64 --seed 5", d).code == 0);
  REQUIRE(Cli("train --manifest c/manifest.tsv --config small.ini --out m.ckpt", d).code == 0);
  const Run r = Cli("convert --ckpt m.ckpt --manifest e/manifest.tsv --out v", d);
  CHECK(r.code == 1);
  CHECK(r.err.find("LanguageMismatch") != std::string::npos);
}

TEST_CASE("evaluating a corpus against itself reports zeros") {
  testing::ScratchDir dir("cli_eval_self");
  REQUIRE(Cli("oracle-gen --out c --utts 3", dir.path()).code == 0);
  REQUIRE(Cli("eval --pred c/manifest.tsv --ref c/manifest.tsv --out r.txt", dir.path()).code == 0);
  const nlohmann::json corpus = CorpusRecord(dir.path() / "r.txt");
  CHECK(corpus["mcd_db"] == 0.0);
  CHECK(corpus["f0_rmse_hz"] == 0.0);
  CHECK(corpus["vuv_error"] == 0.0);
}

TEST_CASE("the oracle chain converts below 1.5 dB") {
  testing::ScratchDir dir("cli_chain");
  const fs::path d = dir.path();
  std::ofstream(d / "run.ini") << "[network]\nhidden = 128,128,128,128,128,128\n[train]\nepochs = 30\nbatch_frames = 128\n";
  REQUIRE(Cli("oracle-gen --out c --utts 20 --seed 1", d).code == 0);
  REQUIRE(Cli("extract --manifest c/manifest.tsv --cache k", d).code == 0);
  REQUIRE(Cli("train --manifest c/manifest.tsv --config run.ini --cache k --out m.ckpt", d).code == 0);
  REQUIRE(Cli("convert --ckpt m.ckpt --manifest c/manifest.tsv --out v", d).code == 0);
  const Run e = Cli("eval --pred v/manifest.tsv --ref c/manifest.tsv --out report.txt", d);
  REQUIRE(e.code == 0);
  const double mcd = CorpusRecord(d / "report.txt")["mcd_db"];
  INFO(e.out);
  CHECK(mcd < 1.5);
}
