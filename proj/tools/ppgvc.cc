// tools/ppgvc.cc

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

#include <atomic>
#include <cstdio>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "ppgvc/binary_io.h"
#include "ppgvc/config.h"
#include "ppgvc/corpus.h"
#include "ppgvc/error.h"
#include "ppgvc/eval.h"
#include "ppgvc/oracle.h"
#include "ppgvc/pipeline.h"
#include "ppgvc/vocoder.h"
#include "ppgvc/wave.h"

namespace fs = std::filesystem;
using namespace ppgvc;

namespace {

constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
};

void AddCommon(CLI::App *cmd, Common *c) {
  cmd->add_option("--config", c->config, "INI run config ([analysis] [data] [network] [train] [gan] [synthesis] [run])")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", c->sets, "override one config key, e.g. --set train.epochs=20");
  cmd->add_option("--seed", c->seed, "global seed for every seed key not set explicitly (default: PPGVC_SEED)");
}

RunConfig Config(const Common &c) {
  std::vector<std::pair<std::string, std::string>> overrides;
  for (const std::string &s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) Fail(ErrorCode::kInvalidConfig, "--set expects key=value, got '" + s + "'");
    overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  if (c.seed) overrides.emplace_back("run.seed", std::to_string(*c.seed));
  return LoadRunConfig(c.config.empty() ? std::nullopt : std::optional<fs::path>(c.config), overrides,
                       SeedFromEnvironment());
}

void EchoConfig(const fs::path &path, const RunConfig &cfg) { WriteFileBytes(path, cfg.ToIni()); }

std::string Fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void WriteHistory(const fs::path &path, const TrainReport &r) {
  std::string out = r.gan_history.empty() ? "epoch\ttrain\tvalid\n" : "epoch\ttrain\tvalid\tmse\tadversarial\tdisc_accuracy\n";
  for (std::size_t e = 0; e < r.valid_history.size(); ++e) {
    out += std::to_string(e) + "\t" + Fixed(r.train_history[e]) + "\t" + Fixed(r.valid_history[e]);
    if (e < r.gan_history.size())
      out += "\t" + Fixed(r.gan_history[e].mse) + "\t" + Fixed(r.gan_history[e].adversarial) + "\t" +
             Fixed(r.gan_history[e].disc_accuracy);
    out += "\n";
  }
  WriteFileBytes(path, out);
}

void PrintTraining(const TrainReport &r, const fs::path &out) {
  std::printf("trained on %zu utterances (%ld frames), validated on %zu; best epoch %d of %zu, valid %.6f\n",
              r.train_utterances, static_cast<long>(r.train_frames), r.valid_utterances, r.best_epoch,
              r.valid_history.size(), r.valid_history.empty() ? 0.0 : r.valid_history[r.best_epoch]);
  std::printf("wrote %s\n", out.string().c_str());
}

std::vector<std::uint64_t> ParseSizes(const std::string &csv) {
  std::vector<std::uint64_t> out;
  std::stringstream in(csv);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(tok, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used == 0 || used != tok.size() || v == 0)
      Fail(ErrorCode::kInvalidConfig, "--dims expects positive integers, got '" + csv + "'");
    out.push_back(v);
  }
  return out;
}

int OracleGen(const fs::path &out, int utts, const std::string &dims, const std::string &langs,
              const Common &common) {
  RunConfig cfg = Config(common);
  OracleCorpusSpec spec;
  spec.utterances = utts;
  spec.seed = cfg.seed.value_or(1);
  spec.analysis = cfg.vc.analysis;
  spec.synth = cfg.synth;
  const std::vector<Language> ls = ParseLanguageList(langs);
  const std::vector<std::uint64_t> ds = ParseSizes(dims);
  if (ds.size() != ls.size())
    Fail(ErrorCode::kInvalidConfig, "--dims lists " + std::to_string(ds.size()) + " sizes for " +
                                        std::to_string(ls.size()) + " languages");
  spec.dims.clear();
  for (std::size_t i = 0; i < ls.size(); ++i) spec.dims.emplace_back(ls[i], static_cast<Eigen::Index>(ds[i]));
  spec.Validate();
  const CorpusManifest m = MakeOracleCorpus(spec, out);
  EchoConfig(out / "config.ini", cfg);
  std::printf("wrote %zu utterances to %s\n", m.entries.size(), (out / "manifest.tsv").string().c_str());
  return 0;
}

int Extract(const fs::path &manifest_path, const fs::path &cache, int jobs, const Common &common) {
  const RunConfig cfg = Config(common);
  const CorpusManifest m = LoadManifest(manifest_path);
  if (m.entries.empty()) Fail(ErrorCode::kEmptyInput, manifest_path.string() + " lists no utterances");
  const std::size_t n = m.entries.size();
  std::vector<int> status(n, 0);  // 1 computed, 2 cached, 3 no wav
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      UtteranceRecord r = m.entries[i];
      if (!r.wav_path) {
        status[i] = 3;
        continue;
      }
      r.params_path.reset();
      try {
        status[i] = RecordParams(r, cfg.vc.analysis, cache).computed ? 1 : 2;
      } catch (const std::exception &e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::min<int>(jobs, static_cast<int>(n)); ++t) pool.emplace_back(worker);
  worker();
  for (auto &t : pool) t.join();
  int computed = 0, cached = 0, skipped = 0, failed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      std::fprintf(stderr, "error: %s\n", errors[i].c_str());
      ++failed;
    }
    computed += status[i] == 1;
    cached += status[i] == 2;
    skipped += status[i] == 3;
  }
  fs::create_directories(cache);
  EchoConfig(cache / "config.ini", cfg);
  std::printf("%d analysed, %d up to date, %d without wav, %d failed\n", computed, cached, skipped, failed);
  return failed ? kExitDomain : 0;
}

int TrainCmd(const fs::path &manifest_path, const fs::path &out, const std::string &cache, const Common &common) {
  RunConfig cfg = Config(common);
  if (!cache.empty()) cfg.vc.cache_dir = cache;
  const CorpusManifest m = LoadManifest(manifest_path);
  TrainReport report;
  const VcModel model = TrainVc(m, cfg.vc, &report);
  SaveModel(out, model);
  WriteHistory(out.string() + ".history.tsv", report);
  EchoConfig(out.string() + ".config.ini", cfg);
  PrintTraining(report, out);
  return 0;
}

int TrainGan(const std::vector<std::string> &gen, const fs::path &target, const fs::path &out,
             const std::string &disc_out, const std::string &cache, const Common &common) {
  RunConfig cfg = Config(common);
  if (!cache.empty()) cfg.vc.cache_dir = cache;
  std::vector<CorpusManifest> gens;
  for (const std::string &g : gen) gens.push_back(LoadManifest(g));
  const CorpusManifest t = LoadManifest(target);
  TrainReport report;
  Discriminator disc;
  const VcModel model = BuildGanModel(gens, t, cfg.vc, cfg.gan, &report, &disc);
  SaveModel(out, model);
  if (!disc_out.empty()) SaveCheckpoint(disc_out, DiscriminatorCheckpoint(disc, model.checkpoint.layout));
  WriteHistory(out.string() + ".history.tsv", report);
  EchoConfig(out.string() + ".config.ini", cfg);
  PrintTraining(report, out);
  if (!report.gan_history.empty())
    std::printf("final discriminator accuracy %.3f\n", report.gan_history.back().disc_accuracy);
  return 0;
}

int Convert(const fs::path &ckpt, const fs::path &manifest_path, const fs::path &out, int jobs, bool tts,
            const Common &common) {
  const RunConfig cfg = Config(common);
  const VcModel model = LoadModel(ckpt);
  const CorpusManifest m = LoadManifest(manifest_path);
  const CorpusConversion c = ConvertCorpus(m, model, out, cfg.synth, jobs);
  EchoConfig(out / "config.ini", cfg);
  if (tts) {
    WriteFileBytes(out / "NOTE.txt", std::string(kTtsMismatchNote) + "\n");
    std::printf("note: %s\n", kTtsMismatchNote);
  }
  for (const auto &[id, msg] : c.failures) std::fprintf(stderr, "failed: %s\n", msg.c_str());
  std::printf("converted %zu of %zu utterances to speaker '%s' in %s\n", c.manifest.entries.size(),
              m.entries.size(), model.speaker_id.c_str(), out.string().c_str());
  return c.failures.empty() ? 0 : kExitDomain;
}

int Synth(const fs::path &params, const fs::path &out, const Common &common) {
  const RunConfig cfg = Config(common);
  const SpeechParams p = ReadParams(params);
  SynthesisConfig sc = cfg.synth;
  sc.frame_shift_ms = p.frame_shift_ms;
  WriteWav(out, Synthesize(p, sc));
  std::printf("wrote %s (%ld frames)\n", out.string().c_str(), static_cast<long>(p.frames()));
  return 0;
}

int Eval(const fs::path &pred, const fs::path &ref, const fs::path &out, const std::string &cache,
         const Common &common) {
  const RunConfig cfg = Config(common);
  const EvalReport r = EvaluateCorpus(LoadManifest(pred), LoadManifest(ref), cfg.vc.analysis,
                                      cache.empty() ? std::nullopt : std::optional<fs::path>(cache));
  WriteReport(out, r);
  std::printf("%zu utterances: MCD %.3f dB, F0 RMSE %.2f Hz, VUV error %.4f\n", r.utterances.size(), r.mcd,
              r.f0_rmse, r.vuv_error);
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Posteriorgram-based cross-lingual voice conversion"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "ppgvc 0.1.0");

  Common common;
  int jobs = 1;

  auto *og = app.add_subcommand("oracle-gen", "generate a seeded synthetic corpus with known parameters");
  std::string og_out, og_dims = "64,64,64", og_langs = "ja,zh,en";
  int og_utts = 20;
  og->add_option("--out", og_out, "output directory")->required();
  og->add_option("--utts", og_utts, "number of utterances")->check(CLI::PositiveNumber);
  og->add_option("--dims", og_dims, "posteriorgram width per language");
  og->add_option("--languages", og_langs, "languages, in the order of --dims");
  AddCommon(og, &common);

  auto *ex = app.add_subcommand("extract", "analyse every wav of a manifest into a parameter cache");
  std::string ex_manifest, ex_cache;
  ex->add_option("--manifest", ex_manifest, "corpus manifest")->required()->check(CLI::ExistingFile);
  ex->add_option("--cache", ex_cache, "cache directory")->required();
  ex->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  AddCommon(ex, &common);

  auto *tr = app.add_subcommand("train", "train a posteriorgram-to-parameter model");
  std::string tr_manifest, tr_out, tr_cache;
  tr->add_option("--manifest", tr_manifest, "training manifest")->required()->check(CLI::ExistingFile);
  tr->add_option("--out", tr_out, "checkpoint path")->required();
  tr->add_option("--cache", tr_cache, "parameter cache directory");
  AddCommon(tr, &common);

  auto *tg = app.add_subcommand("train-gan", "train with an adversarial discriminator");
  std::vector<std::string> tg_gen;
  std::string tg_target, tg_out, tg_disc, tg_cache;
  tg->add_option("--gen", tg_gen, "generator training manifest (repeatable)")->required()->check(CLI::ExistingFile);
  tg->add_option("--target", tg_target, "manifest of real speech for the discriminator")
      ->required()
      ->check(CLI::ExistingFile);
  tg->add_option("--out", tg_out, "checkpoint path")->required();
  tg->add_option("--disc-out", tg_disc, "also save the discriminator");
  tg->add_option("--cache", tg_cache, "parameter cache directory");
  AddCommon(tg, &common);

  auto *cv = app.add_subcommand("convert", "convert every utterance of a manifest");
  std::string cv_ckpt, cv_manifest, cv_out;
  bool cv_tts = false;
  cv->add_option("--ckpt", cv_ckpt, "model checkpoint")->required()->check(CLI::ExistingFile);
  cv->add_option("--manifest", cv_manifest, "source manifest")->required()->check(CLI::ExistingFile);
  cv->add_option("--out", cv_out, "output directory")->required();
  cv->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  cv->add_flag("--tts", cv_tts, "inputs are synthesised speech; records the mismatch note");
  AddCommon(cv, &common);

  auto *sy = app.add_subcommand("synth", "vocode a parameter file");
  std::string sy_params, sy_out;
  sy->add_option("--params", sy_params, "PPGVCPRM parameter file")->required()->check(CLI::ExistingFile);
  sy->add_option("--out", sy_out, "output wav")->required();
  AddCommon(sy, &common);

  auto *ev = app.add_subcommand("eval", "objective scores of converted against reference speech");
  std::string ev_pred, ev_ref, ev_out, ev_cache;
  ev->add_option("--pred", ev_pred, "converted manifest")->required()->check(CLI::ExistingFile);
  ev->add_option("--ref", ev_ref, "reference manifest")->required()->check(CLI::ExistingFile);
  ev->add_option("--out", ev_out, "report path (text; JSON lines go to <out>.jsonl)")->required();
  ev->add_option("--cache", ev_cache, "parameter cache directory");
  AddCommon(ev, &common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*og) return OracleGen(og_out, og_utts, og_dims, og_langs, common);
    if (*ex) return Extract(ex_manifest, ex_cache, jobs, common);
    if (*tr) return TrainCmd(tr_manifest, tr_out, tr_cache, common);
    if (*tg) return TrainGan(tg_gen, tg_target, tg_out, tg_disc, tg_cache, common);
    if (*cv) return Convert(cv_ckpt, cv_manifest, cv_out, jobs, cv_tts, common);
    if (*sy) return Synth(sy_params, sy_out, common);
    if (*ev) return Eval(ev_pred, ev_ref, ev_out, ev_cache, common);
  } catch (const Error &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code() == ErrorCode::kInvalidConfig ? kExitUsage : kExitDomain;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDomain;
  }
  return kExitUsage;
}
