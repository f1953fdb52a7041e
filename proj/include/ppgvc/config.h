// include/ppgvc/config.h

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

#ifndef PPGVC_CONFIG_H_
#define PPGVC_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ppgvc/adversarial.h"
#include "ppgvc/pipeline.h"
#include "ppgvc/vocoder.h"

namespace ppgvc {

/// Everything a workflow reads from the INI-style run config. Keys are
/// "section.name"; see Keys() for the full list.
struct RunConfig {
  VcSettings vc;
  GanHyper gan;
  // Sample rate, framing, warp and floor always follow vc.analysis.
  SynthesisConfig synth;
  // [run] seed: fills every seed that was not set explicitly.
  std::optional<std::uint64_t> seed;

  /// Throws Error(kInvalidConfig) naming the key when it is unknown or the
  /// value does not parse.
  void Set(std::string_view key, std::string_view value);
  bool IsSet(std::string_view key) const { return explicit_.count(std::string(key)) > 0; }

  /// Applies the global seed (falling back to `env_seed`), syncs the
  /// synthesis framing to the analysis and validates.
  void Finalize(std::optional<std::uint64_t> env_seed = std::nullopt);

  // Effective values of every key, as a loadable config file.
  std::string ToIni() const;

  static const std::vector<std::string> &Keys();

 private:
  std::set<std::string> explicit_;
};

/// Parses INI text ("[section]" headers, "key = value", '#' / ';' comments).
void ApplyIni(std::string_view text, RunConfig *cfg);

/// File (optional) then overrides, then Finalize.
RunConfig LoadRunConfig(const std::optional<std::filesystem::path> &file,
                        const std::vector<std::pair<std::string, std::string>> &overrides,
                        std::optional<std::uint64_t> env_seed);

// Reads PPGVC_SEED; a malformed value is kInvalidConfig.
std::optional<std::uint64_t> SeedFromEnvironment();

}  // namespace ppgvc

#endif  // PPGVC_CONFIG_H_
