// src/neural.cc

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

#include "ppgvc/neural.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ppgvc/binary_io.h"
#include "ppgvc/rng.h"
#include "train_engine.h"

namespace ppgvc {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using ConstMap = Eigen::Map<const MatrixXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

ConstMap Weight(const Eigen::VectorXd &p, Index offset, Index rows, Index cols) {
  return ConstMap(p.data() + offset, rows, cols);
}
Eigen::Map<MatrixXd> Weight(Eigen::VectorXd &p, Index offset, Index rows, Index cols) {
  return Eigen::Map<MatrixXd>(p.data() + offset, rows, cols);
}

MatrixXd Sigmoid(const MatrixXd &z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

void LstmForward(const Eigen::VectorXd &p, const LstmShape &s, const MatrixXd &x,
                 ForwardCache::Direction *d) {
  const Index t_count = x.rows(), u = s.units;
  const auto w = Weight(p, s.input_weight, 4 * u, s.in);
  const auto r = Weight(p, s.recurrent_weight, 4 * u, u);
  const auto b = ConstVecMap(p.data() + s.bias, 4 * u);
  d->input = x;
  d->gates = (x * w.transpose()).rowwise() + b.transpose();
  d->cells.resize(t_count, u);
  d->cell_tanh.resize(t_count, u);
  d->hidden.resize(t_count, u);
  Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(u), c = Eigen::RowVectorXd::Zero(u);
  for (Index t = 0; t < t_count; ++t) {
    Eigen::RowVectorXd z = d->gates.row(t) + h * r.transpose();
    const Eigen::RowVectorXd i = Sigmoid(z.segment(0, u));
    const Eigen::RowVectorXd f = Sigmoid(z.segment(u, u));
    const Eigen::RowVectorXd g = z.segment(2 * u, u).array().tanh().matrix();
    const Eigen::RowVectorXd o = Sigmoid(z.segment(3 * u, u));
    c = f.cwiseProduct(c) + i.cwiseProduct(g);
    const Eigen::RowVectorXd tc = c.array().tanh().matrix();
    h = o.cwiseProduct(tc);
    d->gates.row(t) << i, f, g, o;
    d->cells.row(t) = c;
    d->cell_tanh.row(t) = tc;
    d->hidden.row(t) = h;
  }
}

// Accumulates parameter gradients into `grad`; returns dLoss/dInput.
MatrixXd LstmBackward(const Eigen::VectorXd &p, const LstmShape &s, const ForwardCache::Direction &d,
                      const MatrixXd &d_hidden, Eigen::VectorXd *grad) {
  const Index t_count = d.input.rows(), u = s.units;
  const auto w = Weight(p, s.input_weight, 4 * u, s.in);
  const auto r = Weight(p, s.recurrent_weight, 4 * u, u);
  MatrixXd dz(t_count, 4 * u);
  Eigen::RowVectorXd dh_next = Eigen::RowVectorXd::Zero(u), dc_next = Eigen::RowVectorXd::Zero(u);
  for (Index t = t_count - 1; t >= 0; --t) {
    const Eigen::RowVectorXd dh = d_hidden.row(t) + dh_next;
    const auto i = d.gates.row(t).segment(0, u).array();
    const auto f = d.gates.row(t).segment(u, u).array();
    const auto g = d.gates.row(t).segment(2 * u, u).array();
    const auto o = d.gates.row(t).segment(3 * u, u).array();
    const auto tc = d.cell_tanh.row(t).array();
    const Eigen::ArrayXXd c_prev =
        t > 0 ? Eigen::ArrayXXd(d.cells.row(t - 1)) : Eigen::ArrayXXd::Zero(1, u);
    const Eigen::ArrayXXd dc = dc_next.array() + dh.array() * o * (1.0 - tc.square());
    dz.row(t).segment(0, u) = (dc * g * i * (1.0 - i)).matrix();
    dz.row(t).segment(u, u) = (dc * c_prev * f * (1.0 - f)).matrix();
    dz.row(t).segment(2 * u, u) = (dc * i * (1.0 - g.square())).matrix();
    dz.row(t).segment(3 * u, u) = (dh.array() * tc * o * (1.0 - o)).matrix();
    dc_next = (dc * f).matrix();
    dh_next = dz.row(t) * r;
  }
  Weight(*grad, s.input_weight, 4 * u, s.in) += dz.transpose() * d.input;
  if (t_count > 1)
    Weight(*grad, s.recurrent_weight, 4 * u, u) +=
        dz.bottomRows(t_count - 1).transpose() * d.hidden.topRows(t_count - 1);
  grad->segment(s.bias, 4 * u) += dz.colwise().sum().transpose();
  return dz * w;
}

MatrixXd Reversed(const MatrixXd &m) { return m.colwise().reverse(); }

void WriteRow(ByteWriter *w, const Eigen::RowVectorXd &v) {
  w->PutU32(static_cast<std::uint32_t>(v.size()));
  for (double x : v) w->PutF64(x);
}

Eigen::RowVectorXd ReadRow(ByteReader *r) {
  const std::uint32_t n = r->GetU32();
  Eigen::RowVectorXd v(n);
  for (std::uint32_t i = 0; i < n; ++i) v[i] = r->GetF64();
  return v;
}

constexpr std::string_view kCheckpointMagic = "PPGVCNET";
constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

std::string_view NetworkKindName(NetworkKind kind) {
  return kind == NetworkKind::kFeedForward ? "feedforward" : "birecurrent";
}

NetworkKind ParseNetworkKind(std::string_view name) {
  if (name == "feedforward" || name == "ff") return NetworkKind::kFeedForward;
  if (name == "birecurrent" || name == "birnn" || name == "bilstm") return NetworkKind::kBiRecurrent;
  Fail(ErrorCode::kInvalidConfig, "unknown network kind '" + std::string(name) + "'");
}

void NetworkConfig::Validate() const {
  if (input_dim <= 0 || output_dim <= 0)
    Fail(ErrorCode::kInvalidConfig, "network input and output dims must be positive");
  if (hidden.empty()) Fail(ErrorCode::kInvalidConfig, "network needs at least one hidden layer");
  for (Index h : hidden)
    if (h <= 0) Fail(ErrorCode::kInvalidConfig, "hidden layer sizes must be positive");
}

NetworkConfig NetworkConfig::FeedForward(Index input_dim, Index output_dim) {
  return {NetworkKind::kFeedForward, input_dim, output_dim, std::vector<Index>(6, 1024), 1};
}

NetworkConfig NetworkConfig::BiRecurrent(Index input_dim, Index output_dim) {
  return {NetworkKind::kBiRecurrent, input_dim, output_dim, std::vector<Index>(4, 256), 1};
}

Network::Network(NetworkConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.Validate();
  Index offset = 0;
  auto dense = [&](Index in, Index out) {
    DenseShape s{in, out, offset, offset + in * out};
    offset += in * out + out;
    dense_.push_back(s);
  };
  auto lstm = [&](Index in, Index u) {
    LstmShape s{in, u, offset, offset + 4 * u * in, offset + 4 * u * in + 4 * u * u};
    offset += 4 * u * in + 4 * u * u + 4 * u;
    return s;
  };
  Index in = cfg_.input_dim;
  if (cfg_.kind == NetworkKind::kFeedForward) {
    for (Index h : cfg_.hidden) {
      dense(in, h);
      in = h;
    }
  } else {
    for (Index h : cfg_.hidden) {
      LstmShape fwd = lstm(in, h);
      LstmShape bwd = lstm(in, h);
      lstm_.emplace_back(fwd, bwd);
      in = 2 * h;
    }
  }
  dense(in, cfg_.output_dim);
  params_ = Eigen::VectorXd::Zero(offset);
}

bool Network::operator==(const Network &o) const {
  return cfg_.kind == o.cfg_.kind && cfg_.input_dim == o.cfg_.input_dim &&
         cfg_.output_dim == o.cfg_.output_dim && cfg_.hidden == o.cfg_.hidden &&
         params_.size() == o.params_.size() && params_ == o.params_;
}

Network InitNetwork(const NetworkConfig &cfg) {
  Network net(cfg);
  Rng rng(cfg.seed);
  auto fill = [&](Index offset, Index rows, Index cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (Index i = 0; i < rows * cols; ++i) net.params()[offset + i] = rng.Uniform(-limit, limit);
  };
  for (const auto &[fwd, bwd] : net.lstm_layers()) {
    for (const LstmShape *s : {&fwd, &bwd}) {
      fill(s->input_weight, 4 * s->units, s->in);
      fill(s->recurrent_weight, 4 * s->units, s->units);
    }
  }
  for (const auto &d : net.dense_layers()) fill(d.weight, d.out, d.in);
  return net;
}

MatrixXd Forward(const Network &net, const Eigen::Ref<const MatrixXd> &inputs, ForwardCache *cache) {
  if (inputs.cols() != net.config().input_dim)
    Fail(ErrorCode::kDimensionMismatch, "input width " + std::to_string(inputs.cols()) +
                                            " != network input " +
                                            std::to_string(net.config().input_dim));
  const auto &p = net.params();
  ForwardCache local;
  ForwardCache &c = cache ? *cache : local;
  c = {};
  MatrixXd a = inputs;
  for (const auto &[fwd, bwd] : net.lstm_layers()) {
    ForwardCache::Direction df, db;
    LstmForward(p, fwd, a, &df);
    LstmForward(p, bwd, Reversed(a), &db);
    MatrixXd next(a.rows(), fwd.units + bwd.units);
    next << df.hidden, Reversed(db.hidden);
    c.lstm.emplace_back(std::move(df), std::move(db));
    a = std::move(next);
  }
  const auto &layers = net.dense_layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseShape &s = layers[l];
    c.dense_inputs.push_back(a);
    MatrixXd z = (a * Weight(p, s.weight, s.out, s.in).transpose()).rowwise() +
                 ConstVecMap(p.data() + s.bias, s.out).transpose();
    if (l + 1 < layers.size()) z = z.array().tanh().matrix();
    a = std::move(z);
  }
  c.output = a;
  return a;
}

Gradients Backprop(const Network &net, const ForwardCache &cache,
                   const Eigen::Ref<const MatrixXd> &output_grad) {
  const auto &p = net.params();
  Gradients g;
  g.params = Eigen::VectorXd::Zero(net.num_params());
  const auto &layers = net.dense_layers();
  MatrixXd da = output_grad;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const DenseShape &s = layers[l];
    const MatrixXd &a_in = cache.dense_inputs[l];
    Weight(g.params, s.weight, s.out, s.in) += da.transpose() * a_in;
    g.params.segment(s.bias, s.out) += da.colwise().sum().transpose();
    MatrixXd prev = da * Weight(p, s.weight, s.out, s.in);
    // Dense hidden layers are tanh; their output is the next layer's input.
    if (l > 0) prev = prev.cwiseProduct((1.0 - a_in.array().square()).matrix());
    da = std::move(prev);
  }
  const auto &lstm = net.lstm_layers();
  for (std::size_t l = lstm.size(); l-- > 0;) {
    const auto &[fwd, bwd] = lstm[l];
    const auto &[cf, cb] = cache.lstm[l];
    const MatrixXd dxf = LstmBackward(p, fwd, cf, da.leftCols(fwd.units), &g.params);
    const MatrixXd dxb = LstmBackward(p, bwd, cb, Reversed(da.rightCols(bwd.units)), &g.params);
    da = dxf + Reversed(dxb);
  }
  g.inputs = std::move(da);
  return g;
}

LossAndGradient Backward(const Network &net, const Eigen::Ref<const MatrixXd> &inputs,
                         const Eigen::Ref<const MatrixXd> &target) {
  ForwardCache cache;
  const MatrixXd y = Forward(net, inputs, &cache);
  LossAndGradient out;
  out.loss = LossMse(y, target);
  const MatrixXd dy = 2.0 * (y - target) / static_cast<double>(std::max<Index>(1, y.size()));
  out.grad = Backprop(net, cache, dy).params;
  return out;
}

MatrixXd FeatureStats::NormalizeInputs(const Eigen::Ref<const MatrixXd> &x) const {
  if (x.cols() != input_mean.size())
    Fail(ErrorCode::kDimensionMismatch, "input width does not match statistics");
  return ((x.rowwise() - input_mean).array().rowwise() / input_std.array()).matrix();
}

MatrixXd FeatureStats::NormalizeOutputs(const Eigen::Ref<const MatrixXd> &y) const {
  if (y.cols() != output_mean.size())
    Fail(ErrorCode::kDimensionMismatch, "output width does not match statistics");
  return ((y.rowwise() - output_mean).array().rowwise() / output_std.array()).matrix();
}

MatrixXd FeatureStats::DenormalizeOutputs(const Eigen::Ref<const MatrixXd> &y) const {
  if (y.cols() != output_mean.size())
    Fail(ErrorCode::kDimensionMismatch, "output width does not match statistics");
  return ((y.array().rowwise() * output_std.array()).matrix().rowwise() + output_mean);
}

FeatureStats ComputeStats(std::span<const Example> data) {
  if (data.empty()) Fail(ErrorCode::kEmptyInput, "no examples for statistics");
  const Index din = data.front().inputs.cols(), dout = data.front().targets.cols();
  Eigen::RowVectorXd sx = Eigen::RowVectorXd::Zero(din), sxx = sx;
  Eigen::RowVectorXd sy = Eigen::RowVectorXd::Zero(dout), syy = sy;
  double n = 0.0;
  for (const auto &e : data) {
    if (e.inputs.cols() != din || e.targets.cols() != dout)
      Fail(ErrorCode::kDimensionMismatch, "examples disagree on dimensions");
    if (e.inputs.rows() != e.targets.rows())
      Fail(ErrorCode::kFrameCountMismatch, "example inputs and targets differ in length");
    sx += e.inputs.colwise().sum();
    sxx += e.inputs.array().square().matrix().colwise().sum();
    sy += e.targets.colwise().sum();
    syy += e.targets.array().square().matrix().colwise().sum();
    n += static_cast<double>(e.inputs.rows());
  }
  if (n == 0.0) Fail(ErrorCode::kEmptyInput, "examples contain no frames");
  FeatureStats s;
  auto finish = [n](const Eigen::RowVectorXd &sum, const Eigen::RowVectorXd &sq,
                    Eigen::RowVectorXd *mean, Eigen::RowVectorXd *std) {
    *mean = sum / n;
    *std = ((sq / n).array() - mean->array().square())
               .max(0.0)
               .sqrt()
               .max(FeatureStats::kMinStd)
               .matrix();
  };
  finish(sx, sxx, &s.input_mean, &s.input_std);
  finish(sy, syy, &s.output_mean, &s.output_std);
  return s;
}

Adam::Adam(Index n, double learning_rate, AdamConfig cfg)
    : lr_(learning_rate), cfg_(cfg), m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)) {}

void Adam::Step(Eigen::VectorXd *params, const Eigen::VectorXd &grad) {
  ++step_;
  m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
  v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  params->array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.epsilon);
}

void TrainHyper::Validate() const {
  if (!(learning_rate > 0.0)) Fail(ErrorCode::kInvalidConfig, "learning_rate must be positive");
  if (epochs < 1) Fail(ErrorCode::kInvalidConfig, "epochs must be >= 1");
  if (batch_frames < 1) Fail(ErrorCode::kInvalidConfig, "batch_frames must be >= 1");
  if (patience < 0) Fail(ErrorCode::kInvalidConfig, "patience must be >= 0");
}

namespace internal {
namespace {

struct Normalized {
  std::vector<MatrixXd> x, y;
};

Normalized NormalizeAll(std::span<const Example> data, const FeatureStats &stats, Index in,
                        Index out) {
  Normalized n;
  for (const auto &e : data) {
    if (e.inputs.cols() != in || e.targets.cols() != out)
      Fail(ErrorCode::kDimensionMismatch, "example dimensions do not match the network");
    if (e.inputs.rows() != e.targets.rows())
      Fail(ErrorCode::kFrameCountMismatch, "example inputs and targets differ in length");
    n.x.push_back(stats.NormalizeInputs(e.inputs));
    n.y.push_back(stats.NormalizeOutputs(e.targets));
  }
  return n;
}

double DatasetLoss(const Network &net, const Normalized &d) {
  double sse = 0.0, count = 0.0;
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    if (d.x[i].rows() == 0) continue;
    sse += (Forward(net, d.x[i]) - d.y[i]).squaredNorm();
    count += static_cast<double>(d.y[i].size());
  }
  return count > 0.0 ? sse / count : 0.0;
}

}  // namespace

TrainResult RunTraining(const Network &init, std::span<const Example> train,
                        std::span<const Example> valid, const TrainHyper &hyper,
                        const FeatureStats &stats, TrainingHook *hook) {
  hyper.Validate();
  if (train.empty()) Fail(ErrorCode::kEmptyInput, "empty training set");
  const Index in = init.config().input_dim, out = init.config().output_dim;
  const Normalized tr = NormalizeAll(train, stats, in, out);
  const Normalized va = NormalizeAll(valid, stats, in, out);
  const bool recurrent = init.config().kind == NetworkKind::kBiRecurrent;

  Network net = init;
  Adam adam(net.num_params(), hyper.learning_rate, hyper.adam);
  TrainResult result;
  result.net = net;
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;

  std::vector<std::size_t> order(tr.x.size());
  MatrixXd bx, by;
  std::vector<std::pair<Index, Index>> pieces;

  auto step = [&](const MatrixXd &x, const MatrixXd &y, double *sse) {
    ForwardCache cache;
    const MatrixXd pred = Forward(net, x, &cache);
    const MatrixXd resid = pred - y;
    const double loss = resid.squaredNorm() / static_cast<double>(resid.size());
    if (!std::isfinite(loss))
      throw DivergenceError("non-finite training loss", result.valid_history);
    *sse += resid.squaredNorm();
    MatrixXd dy = 2.0 * resid / static_cast<double>(resid.size());
    if (hook) {
      MatrixXd extra = MatrixXd::Zero(dy.rows(), dy.cols());
      if (hook->ExtraOutputGradient(net, Batch{x, y, pred, pieces}, &extra)) dy += extra;
    }
    const Gradients g = Backprop(net, cache, dy);
    if (!g.params.allFinite()) throw DivergenceError("non-finite gradient", result.valid_history);
    adam.Step(&net.params(), g.params);
  };

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(MixSeed(hyper.seed, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.Index(i)]);

    double sse = 0.0, count = 0.0;
    if (recurrent) {
      for (std::size_t u : order) {
        if (tr.x[u].rows() == 0) continue;
        pieces.assign(1, {0, tr.x[u].rows()});
        step(tr.x[u], tr.y[u], &sse);
        count += static_cast<double>(tr.y[u].size());
      }
    } else {
      bx.resize(hyper.batch_frames, in);
      by.resize(hyper.batch_frames, out);
      Index fill = 0;
      pieces.clear();
      auto flush = [&]() {
        if (fill == 0) return;
        const MatrixXd x = bx.topRows(fill), y = by.topRows(fill);
        step(x, y, &sse);
        count += static_cast<double>(y.size());
        fill = 0;
        pieces.clear();
      };
      for (std::size_t u : order) {
        Index pos = 0;
        const Index len = tr.x[u].rows();
        while (pos < len) {
          const Index take = std::min(len - pos, hyper.batch_frames - fill);
          bx.middleRows(fill, take) = tr.x[u].middleRows(pos, take);
          by.middleRows(fill, take) = tr.y[u].middleRows(pos, take);
          pieces.emplace_back(fill, take);
          fill += take;
          pos += take;
          if (fill == hyper.batch_frames) flush();
        }
      }
      flush();
    }
    result.train_history.push_back(count > 0.0 ? sse / count : 0.0);
    const double v = va.x.empty() ? DatasetLoss(net, tr) : DatasetLoss(net, va);
    result.valid_history.push_back(v);
    if (!std::isfinite(v)) throw DivergenceError("non-finite validation loss", result.valid_history);
    if (hook) hook->EndEpoch(net, epoch);
    if (hook && !hook->KeepBest()) {
      result.net = net;
      result.best_epoch = epoch;
    } else if (v < best) {
      best = v;
      result.net = net;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (hyper.patience > 0 && ++since_best >= hyper.patience) {
      break;
    }
  }
  return result;
}

}  // namespace internal

TrainResult Train(const Network &init, std::span<const Example> train, std::span<const Example> valid,
                  const TrainHyper &hyper, const FeatureStats &stats) {
  return internal::RunTraining(init, train, valid, hyper, stats, nullptr);
}

OutputLayout OutputLayout::FromAnalysis(const AnalysisConfig &cfg) {
  return {cfg.mcep_order + 1, cfg.bap_bands, cfg.f0_floor, cfg.f0_ceil, cfg.frame_shift_ms};
}

MatrixXd ParamsToTargets(const SpeechParams &p, const OutputLayout &layout) {
  p.Validate();
  if (p.mcep.cols() != layout.mcep_dim || p.bap.cols() != layout.bap_dim)
    Fail(ErrorCode::kDimensionMismatch, "speech parameters do not match the output layout");
  MatrixXd y(p.frames(), layout.total());
  y.leftCols(layout.mcep_dim) = p.mcep;
  y.col(layout.lf0_col()) = p.lf0;
  y.col(layout.vuv_col()) = p.vuv.cast<double>() * 2.0 - 1.0;
  y.rightCols(layout.bap_dim) = p.bap;
  return y;
}

SpeechParams TargetsToParams(const Eigen::Ref<const MatrixXd> &y, const OutputLayout &layout,
                             const PredictOptions &opts) {
  if (y.cols() != layout.total())
    Fail(ErrorCode::kDimensionMismatch, "output width does not match the layout");
  SpeechParams p;
  p.frame_shift_ms = layout.frame_shift_ms;
  p.mcep = y.leftCols(layout.mcep_dim);
  p.lf0 = y.col(layout.lf0_col());
  if (opts.smooth && y.rows() > 1) {
    auto smooth = [](const MatrixXd &m) {
      MatrixXd s(m.rows(), m.cols());
      for (Index t = 0; t < m.rows(); ++t) {
        const Index a = std::max<Index>(0, t - 1), b = std::min<Index>(m.rows() - 1, t + 1);
        s.row(t) = m.middleRows(a, b - a + 1).colwise().mean();
      }
      return s;
    };
    p.mcep = smooth(p.mcep);
    p.lf0 = smooth(p.lf0);
  }
  p.vuv = y.col(layout.vuv_col()).array() > 0.0;
  p.bap = y.rightCols(layout.bap_dim).cwiseMin(0.0);
  const double lo = std::log(layout.f0_floor), hi = std::log(layout.f0_ceil);
  for (Index t = 0; t < p.lf0.size(); ++t) {
    if (p.vuv[t])
      p.lf0[t] = std::clamp(p.lf0[t], lo, hi);
    else
      p.lf0[t] = std::clamp(p.lf0[t], lo - std::log(2.0), hi + std::log(2.0));
  }
  return p;
}

MatrixXd PpgFeatures(const MultiPpg &m, Index context_width) {
  return ContextStack(m.values.cast<double>(), context_width);
}

SpeechParams PredictParams(const Network &net, const MultiPpg &m, const FeatureStats &stats,
                           const OutputLayout &layout, Index context_width,
                           const PredictOptions &opts) {
  const Index expected = m.dim() * (2 * context_width + 1);
  if (expected != net.config().input_dim)
    Fail(ErrorCode::kDimensionMismatch, "stacked posteriorgram width " + std::to_string(expected) +
                                            " != network input " +
                                            std::to_string(net.config().input_dim));
  if (net.config().output_dim != layout.total())
    Fail(ErrorCode::kDimensionMismatch, "network output does not match the layout");
  if (m.frames() == 0) return TargetsToParams(MatrixXd(0, layout.total()), layout, opts);
  const MatrixXd y = stats.DenormalizeOutputs(Forward(net, stats.NormalizeInputs(PpgFeatures(m, context_width))));
  return TargetsToParams(y, layout, opts);
}

std::string EncodeCheckpoint(const Checkpoint &c) {
  ByteWriter w;
  w.PutBytes(kCheckpointMagic);
  w.PutU32(kCheckpointVersion);
  w.PutString(c.kind_tag);
  const NetworkConfig &cfg = c.net.config();
  w.PutString(NetworkKindName(cfg.kind));
  w.PutU32(static_cast<std::uint32_t>(cfg.input_dim));
  w.PutU32(static_cast<std::uint32_t>(cfg.output_dim));
  w.PutU32(static_cast<std::uint32_t>(cfg.hidden.size()));
  for (Index h : cfg.hidden) w.PutU32(static_cast<std::uint32_t>(h));
  w.PutU64(cfg.seed);
  WriteRow(&w, c.stats.input_mean);
  WriteRow(&w, c.stats.input_std);
  WriteRow(&w, c.stats.output_mean);
  WriteRow(&w, c.stats.output_std);
  w.PutU32(static_cast<std::uint32_t>(c.layout.mcep_dim));
  w.PutU32(static_cast<std::uint32_t>(c.layout.bap_dim));
  w.PutF64(c.layout.f0_floor);
  w.PutF64(c.layout.f0_ceil);
  w.PutF64(c.layout.frame_shift_ms);
  w.PutU32(static_cast<std::uint32_t>(c.meta.size()));
  for (const auto &[k, v] : c.meta) {
    w.PutString(k);
    w.PutString(v);
  }
  w.PutU64(static_cast<std::uint64_t>(c.net.num_params()));
  for (double x : c.net.params()) w.PutF32(static_cast<float>(x));
  return w.bytes();
}

Checkpoint DecodeCheckpoint(std::string_view bytes, const std::string &what) {
  ByteReader r(bytes, what);
  if (r.GetBytes(kCheckpointMagic.size()) != kCheckpointMagic)
    Fail(ErrorCode::kParseError, what + ": not a network checkpoint");
  const std::uint32_t version = r.GetU32();
  if (version != kCheckpointVersion)
    Fail(ErrorCode::kParseError, what + ": unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  c.kind_tag = r.GetString();
  NetworkConfig cfg;
  cfg.kind = ParseNetworkKind(r.GetString());
  cfg.input_dim = r.GetU32();
  cfg.output_dim = r.GetU32();
  const std::uint32_t layers = r.GetU32();
  for (std::uint32_t i = 0; i < layers; ++i) cfg.hidden.push_back(r.GetU32());
  cfg.seed = r.GetU64();
  c.stats.input_mean = ReadRow(&r);
  c.stats.input_std = ReadRow(&r);
  c.stats.output_mean = ReadRow(&r);
  c.stats.output_std = ReadRow(&r);
  c.layout.mcep_dim = r.GetU32();
  c.layout.bap_dim = r.GetU32();
  c.layout.f0_floor = r.GetF64();
  c.layout.f0_ceil = r.GetF64();
  c.layout.frame_shift_ms = r.GetF64();
  const std::uint32_t entries = r.GetU32();
  for (std::uint32_t i = 0; i < entries; ++i) {
    std::string k = r.GetString();
    c.meta[k] = r.GetString();
  }
  c.net = Network(cfg);
  const std::uint64_t n = r.GetU64();
  if (n != static_cast<std::uint64_t>(c.net.num_params()))
    Fail(ErrorCode::kParseError, what + ": weight count does not match the network config");
  for (Index i = 0; i < c.net.num_params(); ++i) c.net.params()[i] = r.GetF32();
  if (r.remaining() != 0) Fail(ErrorCode::kParseError, what + ": trailing bytes");
  if (!c.net.params().allFinite()) Fail(ErrorCode::kInvalidValue, what + ": non-finite weight");
  return c;
}

void SaveCheckpoint(const std::filesystem::path &path, const Checkpoint &c) {
  WriteFileBytes(path, EncodeCheckpoint(c));
}

Checkpoint LoadCheckpoint(const std::filesystem::path &path) {
  return DecodeCheckpoint(ReadFileBytes(path), path.string());
}

}  // namespace ppgvc
