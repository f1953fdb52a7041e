// src/train_engine.h

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

#ifndef PPGVC_SRC_TRAIN_ENGINE_H_
#define PPGVC_SRC_TRAIN_ENGINE_H_

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ppgvc/neural.h"

namespace ppgvc::internal {

struct Batch {
  const Eigen::MatrixXd &inputs;   // normalised
  const Eigen::MatrixXd &targets;  // normalised
  const Eigen::MatrixXd &outputs;  // current predictions
  // [start, length) of each utterance piece inside the batch.
  const std::vector<std::pair<Eigen::Index, Eigen::Index>> &pieces;
};

// Lets the adversarial trainer add terms to the generator objective without
// forking the MSE training loop.
class TrainingHook {
 public:
  virtual ~TrainingHook() = default;
  // Adds dLoss/dOutput for extra objective terms; returns false when it
  // contributes nothing this step.
  virtual bool ExtraOutputGradient(const Network &net, const Batch &batch,
                                   Eigen::MatrixXd *grad) = 0;
  // When false the final weights are returned instead of the
  // best-validation ones.
  virtual bool KeepBest() const { return true; }
  virtual void EndEpoch(const Network &net, int epoch) {
    (void)net;
    (void)epoch;
  }
};

TrainResult RunTraining(const Network &init, std::span<const Example> train,
                        std::span<const Example> valid, const TrainHyper &hyper,
                        const FeatureStats &stats, TrainingHook *hook);

}  // namespace ppgvc::internal

#endif  // PPGVC_SRC_TRAIN_ENGINE_H_
