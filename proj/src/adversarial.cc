// src/adversarial.cc

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

#include "ppgvc/adversarial.h"

#include <cmath>
#include <string>

#include "ppgvc/error.h"
#include "ppgvc/rng.h"
#include "train_engine.h"

namespace ppgvc {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;

double Softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }
double Sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::vector<WindowRef> SampleRefs(std::span<const Index> lengths, Index w, Index n, Rng &rng) {
  std::vector<Index> starts;
  Index total = 0;
  for (Index len : lengths) {
    starts.push_back(total);
    if (len >= w) total += len - w + 1;
  }
  if (total == 0)
    Fail(ErrorCode::kEmptyInput, "no utterance holds a full window of " + std::to_string(w) + " frames");
  std::vector<WindowRef> out;
  out.reserve(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k) {
    const Index pick = static_cast<Index>(rng.Index(static_cast<std::uint64_t>(total)));
    std::size_t u = static_cast<std::size_t>(
        std::upper_bound(starts.begin(), starts.end(), pick) - starts.begin() - 1);
    // Skip over zero-width entries sharing the same start.
    while (lengths[u] < w) --u;
    out.push_back({u, pick - starts[u]});
  }
  return out;
}

void FlattenInto(const Eigen::Ref<const MatrixXd> &m, Index offset, Index w, MatrixXd *out,
                 Index row) {
  const Index p = m.cols();
  for (Index k = 0; k < w; ++k) out->block(row, k * p, 1, p) = m.row(offset + k);
}

// Fake windows drawn from the generator's output, one draw per piece slot.
class GanHook : public internal::TrainingHook {
 public:
  GanHook(Discriminator *d, const GanHyper &hyper, std::vector<MatrixXd> real,
          std::vector<MatrixXd> gen_inputs)
      : d_(d),
        hyper_(hyper),
        real_(std::move(real)),
        gen_inputs_(std::move(gen_inputs)),
        adam_(d->net.num_params(), hyper.disc.learning_rate, hyper.disc.adam),
        rng_(MixSeed(hyper.disc.seed, 0x6a6e)) {
    for (const auto &m : real_) real_lengths_.push_back(m.rows());
  }

  bool ExtraOutputGradient(const Network &, const internal::Batch &batch, MatrixXd *grad) override {
    const Index w = hyper_.window_frames, n = hyper_.disc_batch;
    std::vector<Index> lengths;
    bool usable = false;
    for (const auto &[start, len] : batch.pieces) {
      lengths.push_back(len);
      usable |= len >= w;
    }
    if (!usable) return false;
    auto gather_fake = [&](const std::vector<WindowRef> &refs) {
      MatrixXd flat(static_cast<Index>(refs.size()), w * d_->param_dim);
      for (std::size_t i = 0; i < refs.size(); ++i)
        FlattenInto(batch.outputs, batch.pieces[refs[i].utterance].first + refs[i].offset, w,
                    &flat, static_cast<Index>(i));
      return flat;
    };
    for (int s = 0; s < hyper_.disc_steps; ++s) {
      const MatrixXd fake = gather_fake(SampleRefs(lengths, w, n, rng_));
      const MatrixXd real = GatherReal(n, rng_);
      const LossAndGradient lg = DiscriminatorLoss(d_->net, real, fake);
      if (!std::isfinite(lg.loss) || !lg.grad.allFinite())
        throw DivergenceError("non-finite discriminator loss", {});
      adam_.Step(&d_->net.params(), lg.grad);
    }
    const std::vector<WindowRef> refs = SampleRefs(lengths, w, n, rng_);
    const AdversarialTerm term = GeneratorAdversarialTerm(d_->net, gather_fake(refs), 1.0);
    adv_sum_ += term.loss;
    ++adv_count_;
    if (hyper_.adversarial_weight == 0.0) return false;
    const Index p = d_->param_dim;
    for (std::size_t i = 0; i < refs.size(); ++i) {
      const Index base = batch.pieces[refs[i].utterance].first + refs[i].offset;
      for (Index k = 0; k < w; ++k)
        grad->row(base + k) +=
            hyper_.adversarial_weight * term.input_grad.row(static_cast<Index>(i)).segment(k * p, p);
    }
    return true;
  }

  bool KeepBest() const override { return hyper_.adversarial_weight == 0.0; }

  void EndEpoch(const Network &net, int epoch) override {
    std::vector<MatrixXd> outputs;
    std::vector<Index> lengths;
    for (const auto &x : gen_inputs_) {
      outputs.push_back(x.rows() ? Forward(net, x) : MatrixXd(0, net.config().output_dim));
      lengths.push_back(x.rows());
    }
    Rng eval(MixSeed(hyper_.disc.seed, 0x10000 + static_cast<std::uint64_t>(epoch)));
    const Index w = hyper_.window_frames, n = hyper_.eval_windows;
    GanEpoch e;
    bool have_fake = false;
    for (Index len : lengths) have_fake |= len >= w;
    if (have_fake) {
      const std::vector<WindowRef> refs = SampleRefs(lengths, w, n, eval);
      MatrixXd fake(n, w * d_->param_dim);
      for (Index i = 0; i < n; ++i)
        FlattenInto(outputs[refs[i].utterance], refs[i].offset, w, &fake, i);
      e.disc_accuracy = WindowAccuracy(*d_, GatherReal(n, eval), fake);
    } else {
      e.disc_accuracy = 0.5;
    }
    e.adversarial = adv_count_ ? adv_sum_ / static_cast<double>(adv_count_) : 0.0;
    adv_sum_ = 0.0;
    adv_count_ = 0;
    history_.push_back(e);
  }

  std::vector<GanEpoch> &history() { return history_; }

 private:
  MatrixXd GatherReal(Index n, Rng &rng) const {
    const std::vector<WindowRef> refs = SampleRefs(real_lengths_, hyper_.window_frames, n, rng);
    MatrixXd flat(n, hyper_.window_frames * d_->param_dim);
    for (Index i = 0; i < n; ++i)
      FlattenInto(real_[refs[i].utterance], refs[i].offset, hyper_.window_frames, &flat, i);
    return flat;
  }

  Discriminator *d_;
  const GanHyper &hyper_;
  std::vector<MatrixXd> real_;
  std::vector<Index> real_lengths_;
  std::vector<MatrixXd> gen_inputs_;
  Adam adam_;
  Rng rng_;
  double adv_sum_ = 0.0;
  long adv_count_ = 0;
  std::vector<GanEpoch> history_;
};

}  // namespace

MatrixXd Discriminator::Flatten(std::span<const MatrixXd> windows) const {
  MatrixXd out(static_cast<Index>(windows.size()), window_frames * param_dim);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const MatrixXd &win = windows[i];
    if (win.rows() != window_frames || win.cols() != param_dim)
      Fail(ErrorCode::kDimensionMismatch,
           "window is " + std::to_string(win.rows()) + "x" + std::to_string(win.cols()) +
               ", discriminator expects " + std::to_string(window_frames) + "x" +
               std::to_string(param_dim));
    const MatrixXd z = ((win.rowwise() - mean).array().rowwise() / std.array()).matrix();
    FlattenInto(z, 0, window_frames, &out, static_cast<Index>(i));
  }
  return out;
}

Discriminator InitDiscriminator(Index window_frames, Index param_dim,
                                const std::vector<Index> &hidden, std::uint64_t seed,
                                Eigen::RowVectorXd mean, Eigen::RowVectorXd std) {
  if (window_frames < 1) Fail(ErrorCode::kInvalidConfig, "window_frames must be >= 1");
  if (mean.size() != param_dim || std.size() != param_dim)
    Fail(ErrorCode::kDimensionMismatch, "discriminator statistics do not match the parameter width");
  Discriminator d;
  d.net = InitNetwork({NetworkKind::kFeedForward, window_frames * param_dim, 1, hidden, seed});
  const DenseShape &out = d.net.output_layer();
  d.net.params().segment(out.weight, out.in * out.out + out.out).setZero();
  d.window_frames = window_frames;
  d.param_dim = param_dim;
  d.mean = std::move(mean);
  d.std = std::move(std);
  return d;
}

Eigen::VectorXd DiscriminateFlat(const Discriminator &d, const Eigen::Ref<const MatrixXd> &flat) {
  const MatrixXd z = Forward(d.net, flat);
  return z.col(0).unaryExpr([](double v) { return Sigmoid(v); });
}

double Discriminate(const Discriminator &d, const Eigen::Ref<const MatrixXd> &window) {
  const MatrixXd w = window;
  return DiscriminateFlat(d, d.Flatten(std::span<const MatrixXd>(&w, 1)))[0];
}

LossAndGradient DiscriminatorLoss(const Network &net, const Eigen::Ref<const MatrixXd> &real,
                                  const Eigen::Ref<const MatrixXd> &fake) {
  if (real.rows() + fake.rows() == 0) Fail(ErrorCode::kEmptyInput, "no windows to score");
  MatrixXd x(real.rows() + fake.rows(), net.config().input_dim);
  if (real.cols() != x.cols() || fake.cols() != x.cols())
    Fail(ErrorCode::kDimensionMismatch, "window width does not match the discriminator");
  x << real, fake;
  ForwardCache cache;
  const MatrixXd z = Forward(net, x, &cache);
  const double count = static_cast<double>(x.rows());
  LossAndGradient out;
  MatrixXd dz(x.rows(), 1);
  for (Index i = 0; i < x.rows(); ++i) {
    const bool is_real = i < real.rows();
    out.loss += Softplus(is_real ? -z(i, 0) : z(i, 0));
    dz(i, 0) = (Sigmoid(z(i, 0)) - (is_real ? 1.0 : 0.0)) / count;
  }
  out.loss /= count;
  out.grad = Backprop(net, cache, dz).params;
  return out;
}

AdversarialTerm GeneratorAdversarialTerm(const Network &disc, const Eigen::Ref<const MatrixXd> &fake,
                                         double weight) {
  AdversarialTerm out;
  if (fake.rows() == 0) {
    out.input_grad = MatrixXd::Zero(0, fake.cols());
    return out;
  }
  ForwardCache cache;
  const MatrixXd z = Forward(disc, fake, &cache);
  const double count = static_cast<double>(fake.rows());
  MatrixXd dz(fake.rows(), 1);
  for (Index i = 0; i < fake.rows(); ++i) {
    out.loss += Softplus(-z(i, 0));
    dz(i, 0) = weight * (Sigmoid(z(i, 0)) - 1.0) / count;
  }
  out.loss *= weight / count;
  out.input_grad = Backprop(disc, cache, dz).inputs;
  return out;
}

double WindowAccuracy(const Discriminator &d, const Eigen::Ref<const MatrixXd> &real,
                      const Eigen::Ref<const MatrixXd> &fake) {
  const Index total = real.rows() + fake.rows();
  if (total == 0) Fail(ErrorCode::kEmptyInput, "no windows to score");
  Index correct = 0;
  if (real.rows()) correct += (DiscriminateFlat(d, real).array() > 0.5).count();
  if (fake.rows()) correct += (DiscriminateFlat(d, fake).array() <= 0.5).count();
  return static_cast<double>(correct) / static_cast<double>(total);
}

std::vector<WindowRef> SampleWindowRefs(std::span<const MatrixXd> corpus, Index window_frames,
                                        Index n, Rng &rng) {
  if (window_frames < 1) Fail(ErrorCode::kInvalidConfig, "window_frames must be >= 1");
  std::vector<Index> lengths;
  for (const auto &m : corpus) lengths.push_back(m.rows());
  return SampleRefs(lengths, window_frames, n, rng);
}

std::vector<MatrixXd> SampleWindows(std::span<const MatrixXd> corpus, Index window_frames, Index n,
                                    std::uint64_t seed) {
  Rng rng(seed);
  std::vector<MatrixXd> out;
  for (const WindowRef &r : SampleWindowRefs(corpus, window_frames, n, rng))
    out.push_back(corpus[r.utterance].middleRows(r.offset, window_frames));
  return out;
}

void GanHyper::Validate() const {
  if (!(adversarial_weight >= 0.0) || !std::isfinite(adversarial_weight))
    Fail(ErrorCode::kInvalidConfig, "adversarial_weight must be >= 0");
  if (window_frames < 1) Fail(ErrorCode::kInvalidConfig, "window_frames must be >= 1");
  if (disc_steps < 0) Fail(ErrorCode::kInvalidConfig, "disc_steps must be >= 0");
  if (disc_batch < 1 || eval_windows < 1)
    Fail(ErrorCode::kInvalidConfig, "discriminator batch sizes must be >= 1");
  if (disc_hidden.empty()) Fail(ErrorCode::kInvalidConfig, "discriminator needs a hidden layer");
  base.Validate();
  disc.Validate();
}

GanResult GanTrain(const Network &generator, std::span<const Example> gen_corpus,
                   std::span<const Example> valid, std::span<const MatrixXd> target,
                   const FeatureStats &stats, const GanHyper &hyper) {
  hyper.Validate();
  if (gen_corpus.empty()) Fail(ErrorCode::kEmptyInput, "empty generator corpus");
  if (target.empty()) Fail(ErrorCode::kEmptyInput, "empty discriminator target corpus");
  const Index p = generator.config().output_dim;
  std::vector<MatrixXd> real;
  for (const auto &m : target) {
    if (m.cols() != p)
      Fail(ErrorCode::kDimensionMismatch, "target corpus width does not match the generator output");
    real.push_back(stats.NormalizeOutputs(m));
  }
  std::vector<MatrixXd> gen_inputs;
  for (const auto &e : gen_corpus) gen_inputs.push_back(stats.NormalizeInputs(e.inputs));
  {
    // Surface an unusable target corpus before any training happens.
    Rng probe(0);
    SampleWindowRefs(real, hyper.window_frames, 1, probe);
  }

  GanResult result;
  result.discriminator = InitDiscriminator(hyper.window_frames, p, hyper.disc_hidden,
                                           hyper.disc.seed, stats.output_mean, stats.output_std);
  GanHook hook(&result.discriminator, hyper, std::move(real), std::move(gen_inputs));
  result.generator = internal::RunTraining(generator, gen_corpus, valid, hyper.base, stats, &hook);
  result.history = std::move(hook.history());
  for (std::size_t e = 0; e < result.history.size() && e < result.generator.train_history.size(); ++e)
    result.history[e].mse = result.generator.train_history[e];
  return result;
}

GanResult GanTrain(const Network &generator, std::span<const Example> gen_corpus,
                   std::span<const Example> valid, std::span<const SpeechParams> target,
                   const OutputLayout &layout, const FeatureStats &stats, const GanHyper &hyper) {
  std::vector<MatrixXd> t;
  for (const auto &p : target) t.push_back(ParamsToTargets(p, layout));
  return GanTrain(generator, gen_corpus, valid, t, stats, hyper);
}

Checkpoint DiscriminatorCheckpoint(const Discriminator &d, const OutputLayout &layout) {
  Checkpoint c;
  c.kind_tag = "disc";
  c.net = d.net;
  c.stats.input_mean = d.mean;
  c.stats.input_std = d.std;
  c.stats.output_mean = Eigen::RowVectorXd::Zero(1);
  c.stats.output_std = Eigen::RowVectorXd::Ones(1);
  c.layout = layout;
  c.meta["window_frames"] = std::to_string(d.window_frames);
  return c;
}

Discriminator DiscriminatorFromCheckpoint(const Checkpoint &c) {
  if (c.kind_tag != "disc") Fail(ErrorCode::kInvalidConfig, "checkpoint is not a discriminator");
  const auto it = c.meta.find("window_frames");
  if (it == c.meta.end()) Fail(ErrorCode::kParseError, "discriminator checkpoint lacks window_frames");
  Discriminator d;
  d.net = c.net;
  d.window_frames = std::stol(it->second);
  d.param_dim = c.stats.input_mean.size();
  d.mean = c.stats.input_mean;
  d.std = c.stats.input_std;
  if (d.net.config().input_dim != d.window_frames * d.param_dim || d.net.config().output_dim != 1)
    Fail(ErrorCode::kDimensionMismatch, "discriminator checkpoint shape is inconsistent");
  return d;
}

}  // namespace ppgvc
