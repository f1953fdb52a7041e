// include/ppgvc/adversarial.h

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

#ifndef PPGVC_ADVERSARIAL_H_
#define PPGVC_ADVERSARIAL_H_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ppgvc/analysis.h"
#include "ppgvc/neural.h"
#include "ppgvc/rng.h"

namespace ppgvc {

/// Feed-forward classifier over windows of W parameter frames. Windows are
/// z-normalised per parameter dimension with `mean` / `std` and flattened
/// frame by frame before the network sees them.
struct Discriminator {
  Network net;
  Eigen::Index window_frames = 0;
  Eigen::Index param_dim = 0;
  Eigen::RowVectorXd mean, std;

  // n raw W x P windows -> n x (W * P) network inputs.
  Eigen::MatrixXd Flatten(std::span<const Eigen::MatrixXd> windows) const;
};

/// Hidden layers are seeded like any network; the final layer starts at zero
/// so every window scores exactly 0.5.
Discriminator InitDiscriminator(Eigen::Index window_frames, Eigen::Index param_dim,
                                const std::vector<Eigen::Index> &hidden, std::uint64_t seed,
                                Eigen::RowVectorXd mean, Eigen::RowVectorXd std);

/// Probability that a raw W x P window is real.
double Discriminate(const Discriminator &d, const Eigen::Ref<const Eigen::MatrixXd> &window);
// Probabilities for already flattened rows.
Eigen::VectorXd DiscriminateFlat(const Discriminator &d, const Eigen::Ref<const Eigen::MatrixXd> &flat);

/// Mean binary cross-entropy over real (label 1) and fake (label 0) rows and
/// its gradient with respect to the discriminator parameters.
LossAndGradient DiscriminatorLoss(const Network &net, const Eigen::Ref<const Eigen::MatrixXd> &real,
                                  const Eigen::Ref<const Eigen::MatrixXd> &fake);

/// Non-saturating generator term weight * mean(-log D(fake)) and its
/// gradient with respect to the flattened fake rows.
struct AdversarialTerm {
  double loss = 0.0;
  Eigen::MatrixXd input_grad;
};
AdversarialTerm GeneratorAdversarialTerm(const Network &disc,
                                         const Eigen::Ref<const Eigen::MatrixXd> &fake,
                                         double weight);

// Share of rows classified correctly; a probability of exactly 0.5 counts as
// a "fake" vote.
double WindowAccuracy(const Discriminator &d, const Eigen::Ref<const Eigen::MatrixXd> &real,
                      const Eigen::Ref<const Eigen::MatrixXd> &fake);

struct WindowRef {
  std::size_t utterance = 0;
  Eigen::Index offset = 0;
  bool operator==(const WindowRef &) const = default;
};

/// n draws uniform over every (utterance, offset) pair with a full window;
/// utterances shorter than W are skipped.
std::vector<WindowRef> SampleWindowRefs(std::span<const Eigen::MatrixXd> corpus,
                                        Eigen::Index window_frames, Eigen::Index n, Rng &rng);
std::vector<Eigen::MatrixXd> SampleWindows(std::span<const Eigen::MatrixXd> corpus,
                                           Eigen::Index window_frames, Eigen::Index n,
                                           std::uint64_t seed);

struct GanHyper {
  double adversarial_weight = 0.1;
  Eigen::Index window_frames = 32;
  int disc_steps = 1;
  Eigen::Index disc_batch = 16;  // windows per class per step
  std::vector<Eigen::Index> disc_hidden = {64, 64};
  TrainHyper base;  // generator
  TrainHyper disc;  // discriminator learning rate and seed
  Eigen::Index eval_windows = 64;  // per class, for the per-epoch accuracy

  void Validate() const;
};

struct GanEpoch {
  double mse = 0.0;
  double adversarial = 0.0;  // mean unweighted -log D(fake) over generator steps
  double disc_accuracy = 0.0;
};

struct GanResult {
  TrainResult generator;
  Discriminator discriminator;
  std::vector<GanEpoch> history;
};

/// Alternates discriminator steps on real windows from `target` against
/// windows of the generator's current output, and generator steps on MSE
/// plus the weighted adversarial term. Targets are raw joint parameter
/// matrices in the generator's output layout; the generator's output stats
/// normalise the discriminator's view.
GanResult GanTrain(const Network &generator, std::span<const Example> gen_corpus,
                   std::span<const Example> valid, std::span<const Eigen::MatrixXd> target,
                   const FeatureStats &stats, const GanHyper &hyper);
GanResult GanTrain(const Network &generator, std::span<const Example> gen_corpus,
                   std::span<const Example> valid, std::span<const SpeechParams> target,
                   const OutputLayout &layout, const FeatureStats &stats, const GanHyper &hyper);

Checkpoint DiscriminatorCheckpoint(const Discriminator &d, const OutputLayout &layout);
Discriminator DiscriminatorFromCheckpoint(const Checkpoint &c);

}  // namespace ppgvc

#endif  // PPGVC_ADVERSARIAL_H_
