// include/ppgvc/neural.h

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

#ifndef PPGVC_NEURAL_H_
#define PPGVC_NEURAL_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ppgvc/analysis.h"
#include "ppgvc/error.h"
#include "ppgvc/ppg.h"

namespace ppgvc {

enum class NetworkKind { kFeedForward, kBiRecurrent };

std::string_view NetworkKindName(NetworkKind kind);  // "feedforward" / "birecurrent"
NetworkKind ParseNetworkKind(std::string_view name);

struct NetworkConfig {
  NetworkKind kind = NetworkKind::kFeedForward;
  Eigen::Index input_dim = 0;
  Eigen::Index output_dim = 0;
  // Units per hidden layer; for recurrent nets, units per direction.
  std::vector<Eigen::Index> hidden;
  std::uint64_t seed = 1;

  void Validate() const;

  // 1024 x 6 tanh layers.
  static NetworkConfig FeedForward(Eigen::Index input_dim, Eigen::Index output_dim);
  // 4 bidirectional LSTM layers of 256 units per direction.
  static NetworkConfig BiRecurrent(Eigen::Index input_dim, Eigen::Index output_dim);
};

struct DenseShape {
  Eigen::Index in = 0, out = 0;
  Eigen::Index weight = 0, bias = 0;  // offsets into the parameter vector
};

struct LstmShape {
  Eigen::Index in = 0, units = 0;
  Eigen::Index input_weight = 0;      // 4u x in, gate blocks i, f, g, o
  Eigen::Index recurrent_weight = 0;  // 4u x u
  Eigen::Index bias = 0;              // 4u
};

/// A regression network whose weights live in one flat parameter vector;
/// layer shapes are views into it, fully determined by the config.
class Network {
 public:
  Network() = default;
  explicit Network(NetworkConfig cfg);

  const NetworkConfig &config() const { return cfg_; }
  Eigen::VectorXd &params() { return params_; }
  const Eigen::VectorXd &params() const { return params_; }
  Eigen::Index num_params() const { return params_.size(); }

  // Feed-forward hidden layers followed by the output layer.
  const std::vector<DenseShape> &dense_layers() const { return dense_; }
  // Forward / backward direction per recurrent layer.
  const std::vector<std::pair<LstmShape, LstmShape>> &lstm_layers() const { return lstm_; }
  const DenseShape &output_layer() const { return dense_.back(); }

  bool operator==(const Network &o) const;

 private:
  NetworkConfig cfg_;
  std::vector<DenseShape> dense_;
  std::vector<std::pair<LstmShape, LstmShape>> lstm_;
  Eigen::VectorXd params_;
};

/// Seeded uniform init in +-sqrt(6 / (fan_in + fan_out)); biases start at 0.
Network InitNetwork(const NetworkConfig &cfg);

// Activations kept by Forward for Backprop.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> dense_inputs;
  struct Direction {
    Eigen::MatrixXd input, gates, cells, cell_tanh, hidden;
  };
  std::vector<std::pair<Direction, Direction>> lstm;
  Eigen::MatrixXd output;
};

Eigen::MatrixXd Forward(const Network &net, const Eigen::Ref<const Eigen::MatrixXd> &inputs,
                        ForwardCache *cache = nullptr);

struct Gradients {
  Eigen::VectorXd params;
  Eigen::MatrixXd inputs;
};

// Gradients given dLoss/dOutput for the pass recorded in `cache`.
Gradients Backprop(const Network &net, const ForwardCache &cache,
                   const Eigen::Ref<const Eigen::MatrixXd> &output_grad);

/// Mean squared error over every frame and dimension.
template <typename A, typename B>
double LossMse(const Eigen::MatrixBase<A> &pred, const Eigen::MatrixBase<B> &target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    Fail(ErrorCode::kDimensionMismatch, "prediction and target shapes differ");
  if (pred.size() == 0) return 0.0;
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

struct LossAndGradient {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

LossAndGradient Backward(const Network &net, const Eigen::Ref<const Eigen::MatrixXd> &inputs,
                         const Eigen::Ref<const Eigen::MatrixXd> &target);

/// Per-dimension z-normalisation of network inputs and outputs.
struct FeatureStats {
  static constexpr double kMinStd = 1e-8;

  Eigen::RowVectorXd input_mean, input_std;
  Eigen::RowVectorXd output_mean, output_std;

  Eigen::MatrixXd NormalizeInputs(const Eigen::Ref<const Eigen::MatrixXd> &x) const;
  Eigen::MatrixXd NormalizeOutputs(const Eigen::Ref<const Eigen::MatrixXd> &y) const;
  Eigen::MatrixXd DenormalizeOutputs(const Eigen::Ref<const Eigen::MatrixXd> &y) const;
};

struct Example {
  Eigen::MatrixXd inputs;   // T x input_dim
  Eigen::MatrixXd targets;  // T x output_dim
};

FeatureStats ComputeStats(std::span<const Example> data);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(Eigen::Index n, double learning_rate, AdamConfig cfg = {});
  void Step(Eigen::VectorXd *params, const Eigen::VectorXd &grad);

 private:
  double lr_;
  AdamConfig cfg_;
  Eigen::VectorXd m_, v_;
  long step_ = 0;
};

struct TrainHyper {
  double learning_rate = 1e-3;
  Eigen::Index batch_frames = 256;
  int epochs = 10;
  AdamConfig adam;
  int patience = 0;  // epochs without improvement before stopping; 0 disables
  std::uint64_t seed = 1;

  void Validate() const;
};

struct TrainResult {
  Network net;                          // best-validation weights
  std::vector<double> valid_history;    // one entry per epoch
  std::vector<double> train_history;
  int best_epoch = 0;
};

/// Thrown when a loss turns non-finite; carries the history so far.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string &what, std::vector<double> history)
      : Error(ErrorCode::kDivergenceDetected, what), history_(std::move(history)) {}
  const std::vector<double> &history() const { return history_; }

 private:
  std::vector<double> history_;
};

/// Adam on z-normalised MSE. Utterance order is reshuffled every epoch;
/// feed-forward nets step on contiguous blocks of batch_frames frames,
/// recurrent nets on whole utterances. When `valid` is empty the training
/// loss stands in for the validation loss.
TrainResult Train(const Network &init, std::span<const Example> train,
                  std::span<const Example> valid, const TrainHyper &hyper,
                  const FeatureStats &stats);

/// Column layout of the joint output vector: mcep | lf0 | vuv logit | bap.
struct OutputLayout {
  Eigen::Index mcep_dim = 40;
  Eigen::Index bap_dim = 1;
  double f0_floor = 60.0;
  double f0_ceil = 500.0;
  double frame_shift_ms = 10.0;

  Eigen::Index total() const { return mcep_dim + 2 + bap_dim; }
  Eigen::Index lf0_col() const { return mcep_dim; }
  Eigen::Index vuv_col() const { return mcep_dim + 1; }
  Eigen::Index bap_col() const { return mcep_dim + 2; }

  static OutputLayout FromAnalysis(const AnalysisConfig &cfg);
};

// Voicing is regressed as -1 / +1.
Eigen::MatrixXd ParamsToTargets(const SpeechParams &p, const OutputLayout &layout);

struct PredictOptions {
  // 3-point moving average on predicted mcep and lf0.
  bool smooth = false;
};

SpeechParams TargetsToParams(const Eigen::Ref<const Eigen::MatrixXd> &y, const OutputLayout &layout,
                             const PredictOptions &opts = {});

// Context-stacked network input for a multilingual posteriorgram.
Eigen::MatrixXd PpgFeatures(const MultiPpg &m, Eigen::Index context_width);

SpeechParams PredictParams(const Network &net, const MultiPpg &m, const FeatureStats &stats,
                           const OutputLayout &layout, Eigen::Index context_width,
                           const PredictOptions &opts = {});

/// Network + normalisation + layout, serialised as the "PPGVCNET" checkpoint.
/// `meta` carries workflow settings as ordered key/value strings.
struct Checkpoint {
  std::string kind_tag;  // "ff", "birnn" or "disc"
  Network net;
  FeatureStats stats;
  OutputLayout layout;
  std::map<std::string, std::string> meta;
};

std::string EncodeCheckpoint(const Checkpoint &c);
Checkpoint DecodeCheckpoint(std::string_view bytes, const std::string &what);
void SaveCheckpoint(const std::filesystem::path &path, const Checkpoint &c);
Checkpoint LoadCheckpoint(const std::filesystem::path &path);

}  // namespace ppgvc

#endif  // PPGVC_NEURAL_H_
