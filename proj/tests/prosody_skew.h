// tests/prosody_skew.h

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

#ifndef PPGVC_TESTS_PROSODY_SKEW_H_
#define PPGVC_TESTS_PROSODY_SKEW_H_

// Synthetic corpora whose final quarter differs only in the direction of the
// LF0 movement: the generator corpus falls, the discriminator corpus rises.

#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "ppgvc/adversarial.h"
#include "ppgvc/neural.h"
#include "ppgvc/ppg.h"
#include "ppgvc/rng.h"

namespace ppgvc::testing {

inline constexpr int kSkewStates = 10;  // 0..5 body, 6..9 final quarter
inline constexpr Eigen::Index kSkewFrames = 48;
inline constexpr Eigen::Index kSkewTail = kSkewFrames / 4;

struct SkewUtterance {
  std::vector<int> states;
  PpgMatrix ppg;
  SpeechParams falling, rising;
};

inline OutputLayout SkewLayout() { return {2, 1, 60.0, 500.0, 10.0}; }

inline SpeechParams SkewParams(const std::vector<int> &states, bool rising) {
  const Eigen::Index t_count = static_cast<Eigen::Index>(states.size());
  SpeechParams p;
  p.mcep.resize(t_count, 2);
  p.lf0.resize(t_count);
  p.vuv = VuvVector::Constant(t_count, true);
  p.bap = Eigen::MatrixXd::Constant(t_count, 1, -20.0);
  const double lo = std::log(120.0), hi = std::log(190.0);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    const int s = states[static_cast<std::size_t>(t)];
    p.mcep(t, 0) = -3.0 + 0.3 * s;
    p.mcep(t, 1) = 0.5 * std::cos(1.3 * s);
    if (s < 6) {
      p.lf0[t] = std::log(150.0) + 0.04 * (s - 2.5);
    } else {
      // Tail states step through the contour three frames at a time.
      const double pos = (s - 6) / 3.0;
      p.lf0[t] = rising ? lo + (hi - lo) * pos : hi - (hi - lo) * pos;
    }
  }
  return p;
}

inline SkewUtterance MakeSkewUtterance(std::uint64_t seed) {
  Rng rng(seed);
  SkewUtterance u;
  for (Eigen::Index b = 0; b < (kSkewFrames - kSkewTail) / 6; ++b) {
    const int s = static_cast<int>(rng.Index(6));
    for (int k = 0; k < 6; ++k) u.states.push_back(s);
  }
  for (int s = 6; s < 10; ++s)
    for (int k = 0; k < 3; ++k) u.states.push_back(s);
  u.ppg = OraclePpg(u.states, kSkewStates, 10.0);
  u.falling = SkewParams(u.states, false);
  u.rising = SkewParams(u.states, true);
  return u;
}

struct SkewData {
  std::vector<SkewUtterance> utts;
  std::vector<Example> gen;               // falling-final targets
  std::vector<Eigen::MatrixXd> target;    // rising-final parameter matrices
  FeatureStats stats;
};

inline SkewData MakeSkewData(int n, std::uint64_t seed) {
  SkewData d;
  const OutputLayout layout = SkewLayout();
  for (int i = 0; i < n; ++i) {
    d.utts.push_back(MakeSkewUtterance(MixSeed(seed, static_cast<std::uint64_t>(i))));
    const SkewUtterance &u = d.utts.back();
    d.gen.push_back({u.ppg.values.cast<double>(), ParamsToTargets(u.falling, layout)});
    d.target.push_back(ParamsToTargets(u.rising, layout));
  }
  d.stats = ComputeStats(d.gen);
  return d;
}

inline GanHyper SkewHyper(double weight) {
  GanHyper h;
  h.adversarial_weight = weight;
  h.window_frames = 12;
  h.disc_steps = 1;
  h.disc_batch = 16;
  h.disc_hidden = {32};
  h.base.learning_rate = 3e-3;
  h.base.batch_frames = 96;
  h.base.epochs = 60;
  h.base.seed = 11;
  h.disc.learning_rate = 5e-3;
  h.disc.seed = 12;
  return h;
}

inline NetworkConfig SkewGenerator() {
  return {NetworkKind::kFeedForward, kSkewStates, SkewLayout().total(), {32, 32}, 13};
}

// Mean least-squares slope (log Hz per frame) of the predicted final quarter.
inline double TailSlope(const Network &net, const SkewData &d) {
  const OutputLayout layout = SkewLayout();
  double sum = 0.0;
  for (const auto &e : d.gen) {
    const Eigen::MatrixXd y = d.stats.DenormalizeOutputs(Forward(net, d.stats.NormalizeInputs(e.inputs)));
    const Eigen::VectorXd lf0 = y.col(layout.lf0_col()).tail(kSkewTail);
    const Eigen::ArrayXd t = Eigen::ArrayXd::LinSpaced(kSkewTail, 0.0, kSkewTail - 1.0);
    const Eigen::ArrayXd tc = t - t.mean();
    sum += (tc * (lf0.array() - lf0.mean())).sum() / tc.square().sum();
  }
  return sum / static_cast<double>(d.gen.size());
}

// Slope of the rising reference contour itself.
inline double TargetTailSlope(const SkewData &d) {
  const Eigen::VectorXd lf0 = d.target.front().col(SkewLayout().lf0_col()).tail(kSkewTail);
  const Eigen::ArrayXd t = Eigen::ArrayXd::LinSpaced(kSkewTail, 0.0, kSkewTail - 1.0);
  const Eigen::ArrayXd tc = t - t.mean();
  return (tc * (lf0.array() - lf0.mean())).sum() / tc.square().sum();
}

}  // namespace ppgvc::testing

#endif  // PPGVC_TESTS_PROSODY_SKEW_H_
