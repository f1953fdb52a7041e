// src/config.cc

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

#include "ppgvc/config.h"

#include <charconv>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "CLI11.hpp"
#include "ppgvc/binary_io.h"
#include "ppgvc/error.h"

namespace ppgvc {
namespace {

[[noreturn]] void Bad(std::string_view key, std::string_view value, std::string_view want) {
  Fail(ErrorCode::kInvalidConfig,
       "config key '" + std::string(key) + "': '" + std::string(value) + "' is not " + std::string(want));
}

std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T Number(std::string_view key, std::string_view raw) {
  const std::string v = Trim(raw);
  T out{};
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || end != v.data() + v.size())
    Bad(key, raw, std::is_floating_point_v<T> ? "a number" : "an integer");
  return out;
}

std::vector<Eigen::Index> Sizes(std::string_view key, std::string_view raw) {
  std::vector<Eigen::Index> out;
  std::stringstream in{std::string(raw)};
  std::string tok;
  while (std::getline(in, tok, ',')) out.push_back(Number<Eigen::Index>(key, tok));
  return out;
}

std::string Str(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}
template <typename T>
std::string Str(T v) requires std::is_integral_v<T> {
  return std::to_string(v);
}
std::string Str(const std::vector<Eigen::Index> &v) {
  std::string out;
  for (Eigen::Index x : v) out += (out.empty() ? "" : ",") + std::to_string(x);
  return out;
}

struct Field {
  std::string key;
  std::function<void(RunConfig &, std::string_view key, std::string_view value)> set;
  std::function<std::string(const RunConfig &)> get;
};

#define PPGVC_NUM(k, member)                                                                  \
  Field {                                                                                     \
    k, [](RunConfig &c, std::string_view key, std::string_view v) {                           \
      c.member = Number<std::decay_t<decltype(c.member)>>(key, v);                            \
    },                                                                                        \
        [](const RunConfig &c) { return Str(c.member); }                                      \
  }

const std::vector<Field> &Fields() {
  static const std::vector<Field> fields = {
      PPGVC_NUM("analysis.sample_rate", vc.analysis.sample_rate),
      PPGVC_NUM("analysis.frame_shift_ms", vc.analysis.frame_shift_ms),
      PPGVC_NUM("analysis.frame_length_ms", vc.analysis.frame_length_ms),
      PPGVC_NUM("analysis.mcep_order", vc.analysis.mcep_order),
      PPGVC_NUM("analysis.warp_alpha", vc.analysis.warp_alpha),
      PPGVC_NUM("analysis.f0_floor", vc.analysis.f0_floor),
      PPGVC_NUM("analysis.f0_ceil", vc.analysis.f0_ceil),
      PPGVC_NUM("analysis.bap_bands", vc.analysis.bap_bands),
      PPGVC_NUM("analysis.voicing_threshold", vc.analysis.voicing_threshold),
      PPGVC_NUM("analysis.median_length", vc.analysis.median_length),
      PPGVC_NUM("analysis.spectral_floor", vc.analysis.spectral_floor),
      {"data.languages",
       [](RunConfig &c, std::string_view, std::string_view v) { c.vc.languages = ParseLanguageList(Trim(v)); },
       [](const RunConfig &c) { return FormatLanguageList(c.vc.languages); }},
      {"data.speaker", [](RunConfig &c, std::string_view, std::string_view v) { c.vc.speaker_id = Trim(v); },
       [](const RunConfig &c) { return c.vc.speaker_id; }},
      {"network.kind",
       [](RunConfig &c, std::string_view, std::string_view v) { c.vc.kind = ParseNetworkKind(Trim(v)); },
       [](const RunConfig &c) { return std::string(NetworkKindName(c.vc.kind)); }},
      {"network.hidden",
       [](RunConfig &c, std::string_view k, std::string_view v) { c.vc.hidden = Sizes(k, v); },
       [](const RunConfig &c) { return Str(c.vc.hidden); }},
      PPGVC_NUM("network.context_width", vc.context_width),
      PPGVC_NUM("network.seed", vc.net_seed),
      PPGVC_NUM("train.learning_rate", vc.hyper.learning_rate),
      PPGVC_NUM("train.batch_frames", vc.hyper.batch_frames),
      PPGVC_NUM("train.epochs", vc.hyper.epochs),
      PPGVC_NUM("train.patience", vc.hyper.patience),
      PPGVC_NUM("train.beta1", vc.hyper.adam.beta1),
      PPGVC_NUM("train.beta2", vc.hyper.adam.beta2),
      PPGVC_NUM("train.epsilon", vc.hyper.adam.epsilon),
      PPGVC_NUM("train.valid_fraction", vc.valid_fraction),
      PPGVC_NUM("train.seed", vc.hyper.seed),
      PPGVC_NUM("gan.adversarial_weight", gan.adversarial_weight),
      PPGVC_NUM("gan.window_frames", gan.window_frames),
      PPGVC_NUM("gan.disc_steps", gan.disc_steps),
      PPGVC_NUM("gan.disc_batch", gan.disc_batch),
      {"gan.disc_hidden",
       [](RunConfig &c, std::string_view k, std::string_view v) { c.gan.disc_hidden = Sizes(k, v); },
       [](const RunConfig &c) { return Str(c.gan.disc_hidden); }},
      PPGVC_NUM("gan.disc_learning_rate", gan.disc.learning_rate),
      PPGVC_NUM("gan.eval_windows", gan.eval_windows),
      PPGVC_NUM("gan.disc_seed", gan.disc.seed),
      PPGVC_NUM("synthesis.fft_size", synth.fft_size),
      PPGVC_NUM("synthesis.noise_seed", synth.noise_seed),
      {"run.seed",
       [](RunConfig &c, std::string_view k, std::string_view v) { c.seed = Number<std::uint64_t>(k, v); },
       [](const RunConfig &c) { return c.seed ? Str(*c.seed) : std::string(); }},
  };
  return fields;
}

#undef PPGVC_NUM

const Field *FindField(std::string_view key) {
  for (const Field &f : Fields())
    if (f.key == key) return &f;
  return nullptr;
}

}  // namespace

const std::vector<std::string> &RunConfig::Keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const Field &f : Fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

void RunConfig::Set(std::string_view key, std::string_view value) {
  const Field *f = FindField(key);
  if (!f) Fail(ErrorCode::kInvalidConfig, "unknown config key '" + std::string(key) + "'");
  try {
    f->set(*this, key, value);
  } catch (const Error &e) {
    if (e.code() == ErrorCode::kInvalidConfig && e.detail().rfind("config key", 0) == 0) throw;
    Fail(ErrorCode::kInvalidConfig, "config key '" + std::string(key) + "': " + e.detail());
  }
  explicit_.insert(std::string(key));
}

void RunConfig::Finalize(std::optional<std::uint64_t> env_seed) {
  if (!seed) seed = env_seed;
  if (seed) {
    if (!IsSet("network.seed")) vc.net_seed = *seed;
    if (!IsSet("train.seed")) vc.hyper.seed = *seed;
    if (!IsSet("gan.disc_seed")) gan.disc.seed = *seed + 1;
    if (!IsSet("synthesis.noise_seed")) synth.noise_seed = *seed;
  }
  synth.sample_rate = vc.analysis.sample_rate;
  synth.frame_shift_ms = vc.analysis.frame_shift_ms;
  synth.frame_length_ms = vc.analysis.frame_length_ms;
  synth.warp_alpha = vc.analysis.warp_alpha;
  synth.spectral_floor = vc.analysis.spectral_floor;
  gan.base = vc.hyper;
  vc.Validate();
  synth.Validate();
  gan.Validate();
}

std::string RunConfig::ToIni() const {
  std::string out, section;
  for (const Field &f : Fields()) {
    const auto dot = f.key.find('.');
    const std::string sec = f.key.substr(0, dot);
    const std::string value = f.get(*this);
    if (f.key == "run.seed" && value.empty()) continue;
    if (sec != section) {
      out += (section.empty() ? "" : "\n") + std::string("[") + sec + "]\n";
      section = sec;
    }
    out += f.key.substr(dot + 1) + " = " + value + "\n";
  }
  return out;
}

void ApplyIni(std::string_view text, RunConfig *cfg) {
  std::istringstream in{std::string(text)};
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::Error &e) {
    Fail(ErrorCode::kInvalidConfig, std::string("config file: ") + e.what());
  }
  for (const CLI::ConfigItem &item : items) {
    if (item.name == "++" || item.name == "--") continue;
    std::string value;
    for (const std::string &v : item.inputs) value += (value.empty() ? "" : ",") + v;
    cfg->Set(item.fullname(), value);
  }
}

RunConfig LoadRunConfig(const std::optional<std::filesystem::path> &file,
                        const std::vector<std::pair<std::string, std::string>> &overrides,
                        std::optional<std::uint64_t> env_seed) {
  RunConfig cfg;
  if (file) {
    const std::string text = [&] {
      try {
        return ReadFileBytes(*file);
      } catch (const Error &e) {
        Fail(ErrorCode::kInvalidConfig, e.detail());
      }
    }();
    try {
      ApplyIni(text, &cfg);
    } catch (const Error &e) {
      throw e.WithContext(file->string());
    }
  }
  for (const auto &[k, v] : overrides) cfg.Set(k, v);
  cfg.Finalize(env_seed);
  return cfg;
}

std::optional<std::uint64_t> SeedFromEnvironment() {
  const char *v = std::getenv("PPGVC_SEED");
  if (!v || !*v) return std::nullopt;
  return Number<std::uint64_t>("PPGVC_SEED", v);
}

}  // namespace ppgvc
