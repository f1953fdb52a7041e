// tests/adversarial_test.cc

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

#include <cmath>

#include "ppgvc/adversarial.h"
#include "prosody_skew.h"
#include "test_util.h"

namespace ppgvc {
namespace {

using Eigen::MatrixXd;
using testing::MaxRelativeError;
using testing::RandomMatrix;

Discriminator ToyDiscriminator(Eigen::Index w, Eigen::Index p, std::uint64_t seed) {
  return InitDiscriminator(w, p, {8}, seed, Eigen::RowVectorXd::Zero(p),
                           Eigen::RowVectorXd::Ones(p));
}

TEST_CASE("fresh discriminator scores every window at exactly one half") {
  const Discriminator d = ToyDiscriminator(4, 3, 1);
  for (std::uint64_t s = 0; s < 5; ++s) CHECK(Discriminate(d, RandomMatrix(4, 3, s, 5.0)) == 0.5);
}

TEST_CASE("zero-weight discriminator gives 0.5") {
  Discriminator d = ToyDiscriminator(4, 3, 1);
  d.net.params().setZero();
  CHECK(Discriminate(d, RandomMatrix(4, 3, 3)) == 0.5);
}

TEST_CASE("wrong window shape is a dimension mismatch") {
  const Discriminator d = ToyDiscriminator(4, 3, 1);
  try {
    Discriminate(d, MatrixXd::Zero(4, 2));
    FAIL("expected DimensionMismatch");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kDimensionMismatch);
  }
  CHECK_THROWS_AS(Discriminate(d, MatrixXd::Zero(5, 3)), Error);
}

TEST_CASE("flattening is frame-major after normalisation") {
  Discriminator d = ToyDiscriminator(2, 2, 1);
  d.mean << 1.0, 2.0;
  d.std << 2.0, 4.0;
  MatrixXd w(2, 2);
  w << 3, 6, 5, 10;
  const std::vector<MatrixXd> one{w};
  const MatrixXd flat = d.Flatten(one);
  REQUIRE(flat.cols() == 4);
  CHECK(flat(0, 0) == 1.0);
  CHECK(flat(0, 1) == 1.0);
  CHECK(flat(0, 2) == 2.0);
  CHECK(flat(0, 3) == 2.0);
}

TEST_CASE("discriminator gradients match central differences") {
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    Discriminator d = ToyDiscriminator(3, 2, 300 + trial);
    // Perturb the zeroed output layer so every weight carries gradient.
    Rng rng(trial);
    for (Eigen::Index i = 0; i < d.net.num_params(); ++i) d.net.params()[i] += 0.1 * rng.Normal();
    const MatrixXd real = RandomMatrix(4, 6, 10 * trial + 1);
    const MatrixXd fake = RandomMatrix(3, 6, 10 * trial + 2);
    const LossAndGradient lg = DiscriminatorLoss(d.net, real, fake);
    Network probe = d.net;
    auto f = [&](const Eigen::VectorXd &p) {
      probe.params() = p;
      return DiscriminatorLoss(probe, real, fake).loss;
    };
    worst = std::max(worst, MaxRelativeError(f, d.net.params(), lg.grad));
  }
  MESSAGE("discriminator max relative error " << worst);
  CHECK(worst < 1e-4);
}

TEST_CASE("generator adversarial gradient matches central differences") {
  Discriminator d = ToyDiscriminator(3, 2, 9);
  Rng rng(4);
  for (Eigen::Index i = 0; i < d.net.num_params(); ++i) d.net.params()[i] += 0.3 * rng.Normal();
  const MatrixXd fake = RandomMatrix(5, 6, 5);
  const AdversarialTerm term = GeneratorAdversarialTerm(d.net, fake, 0.7);
  auto f = [&](const Eigen::VectorXd &v) {
    return GeneratorAdversarialTerm(d.net, Eigen::Map<const MatrixXd>(v.data(), 5, 6), 0.7).loss;
  };
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(fake.data(), fake.size());
  const Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(term.input_grad.data(), fake.size());
  CHECK(MaxRelativeError(f, x, g) < 1e-4);
  // At D = 0.5 the unweighted term is ln 2.
  const Discriminator fresh = ToyDiscriminator(3, 2, 9);
  CHECK(GeneratorAdversarialTerm(fresh.net, fake, 1.0).loss == doctest::Approx(std::log(2.0)));
}

TEST_CASE("discriminator separates two Gaussian window populations") {
  const Eigen::Index w = 4, p = 2, n = 64;
  Discriminator d = ToyDiscriminator(w, p, 21);
  Adam adam(d.net.num_params(), 1e-2);
  Rng rng(22);
  auto population = [&](double shift, Eigen::Index count) {
    MatrixXd m(count, w * p);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.Normal();
    m.array() += shift;
    return m;
  };
  // Means 4 sigma apart along every coordinate.
  for (int step = 0; step < 200; ++step) {
    const MatrixXd real = population(2.0, n), fake = population(-2.0, n);
    adam.Step(&d.net.params(), DiscriminatorLoss(d.net, real, fake).grad);
  }
  const double acc = WindowAccuracy(d, population(2.0, 500), population(-2.0, 500));
  MESSAGE("held-out accuracy " << acc);
  CHECK(acc >= 0.9);
}

TEST_CASE("window sampling") {
  std::vector<MatrixXd> one{MatrixXd::Zero(100, 2)};
  Rng rng(5);
  const auto refs = SampleWindowRefs(one, 32, 500, rng);
  Eigen::Index lo = 1000, hi = -1;
  for (const auto &r : refs) {
    CHECK(r.utterance == 0);
    lo = std::min(lo, r.offset);
    hi = std::max(hi, r.offset);
  }
  CHECK(lo >= 0);
  CHECK(hi <= 68);
  CHECK(hi >= 60);

  std::vector<MatrixXd> short_utts{MatrixXd::Zero(10, 2), MatrixXd::Zero(31, 2)};
  try {
    SampleWindows(short_utts, 32, 4, 1);
    FAIL("expected EmptyInput");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kEmptyInput);
  }

  std::vector<MatrixXd> mixed{RandomMatrix(40, 2, 1), RandomMatrix(5, 2, 2), RandomMatrix(36, 2, 3)};
  const auto a = SampleWindows(mixed, 32, 20, 9);
  const auto b = SampleWindows(mixed, 32, 20, 9);
  REQUIRE(a.size() == 20);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("window sampling is uniform over utterance and offset pairs") {
  // 9 offsets in the first utterance, 1 in the second.
  std::vector<MatrixXd> corpus{MatrixXd::Zero(12, 1), MatrixXd::Zero(4, 1)};
  Rng rng(3);
  const auto refs = SampleWindowRefs(corpus, 4, 20000, rng);
  int second = 0;
  for (const auto &r : refs) second += r.utterance == 1;
  CHECK(second / 20000.0 == doctest::Approx(0.1).epsilon(0.15));
}

TEST_CASE("zero adversarial weight reproduces plain training bitwise") {
  const auto data = testing::MakeSkewData(8, 3);
  GanHyper h = testing::SkewHyper(0.0);
  h.base.epochs = 6;
  const Network init = InitNetwork(testing::SkewGenerator());
  const GanResult gan = GanTrain(init, data.gen, {}, data.target, data.stats, h);
  const TrainResult plain = Train(init, data.gen, {}, h.base, data.stats);
  CHECK(gan.generator.net == plain.net);
  CHECK(gan.generator.valid_history == plain.valid_history);
  CHECK(gan.history.size() == 6);
  CHECK(gan.history[0].mse == plain.train_history[0]);
}

TEST_CASE("both discriminator-target routings share one code path") {
  const auto data = testing::MakeSkewData(6, 4);
  GanHyper h = testing::SkewHyper(0.5);
  h.base.epochs = 3;
  const Network init = InitNetwork(testing::SkewGenerator());
  const auto &target = data.target;
  const GanResult a = GanTrain(init, data.gen, {}, target, data.stats, h);
  const GanResult b = GanTrain(init, data.gen, {}, target, data.stats, h);
  CHECK(a.generator.net == b.generator.net);
  CHECK(a.discriminator.net == b.discriminator.net);
  for (std::size_t e = 0; e < a.history.size(); ++e) {
    CHECK(a.history[e].adversarial == b.history[e].adversarial);
    CHECK(a.history[e].disc_accuracy == b.history[e].disc_accuracy);
  }
}

TEST_CASE("untrained discriminator stays at chance") {
  const auto data = testing::MakeSkewData(6, 5);
  GanHyper h = testing::SkewHyper(0.5);
  h.disc_steps = 0;
  h.base.epochs = 4;
  const GanResult r =
      GanTrain(InitNetwork(testing::SkewGenerator()), data.gen, {}, data.target, data.stats, h);
  for (const auto &e : r.history) CHECK(std::abs(e.disc_accuracy - 0.5) <= 0.1);
}

TEST_CASE("prosody of the discriminator corpus leaks into generated contours") {
  const auto data = testing::MakeSkewData(16, 6);
  const Network init = InitNetwork(testing::SkewGenerator());
  const GanResult base = GanTrain(init, data.gen, {}, data.target, data.stats, testing::SkewHyper(0.0));
  const GanResult gan = GanTrain(init, data.gen, {}, data.target, data.stats, testing::SkewHyper(0.5));
  const double target = testing::TargetTailSlope(data);
  const double s0 = testing::TailSlope(base.generator.net, data);
  const double s1 = testing::TailSlope(gan.generator.net, data);
  MESSAGE("tail slope target " << target << " baseline " << s0 << " adversarial " << s1);
  MESSAGE("final disc accuracy " << gan.history.back().disc_accuracy);
  CHECK(s0 < 0.0);
  CHECK(std::abs(s1 - target) < std::abs(s0 - target));
}

TEST_CASE("gan_train input errors") {
  const auto data = testing::MakeSkewData(2, 7);
  const Network init = InitNetwork(testing::SkewGenerator());
  const GanHyper h = testing::SkewHyper(0.1);
  auto code_of = [](auto &&fn) {
    try {
      fn();
    } catch (const Error &e) {
      return e.code();
    }
    return ErrorCode::kIoError;
  };
  CHECK(code_of([&] { GanTrain(init, {}, {}, data.target, data.stats, h); }) == ErrorCode::kEmptyInput);
  const std::vector<MatrixXd> none;
  CHECK(code_of([&] { GanTrain(init, data.gen, {}, none, data.stats, h); }) == ErrorCode::kEmptyInput);
  GanHyper bad = h;
  bad.adversarial_weight = -1.0;
  CHECK(code_of([&] { GanTrain(init, data.gen, {}, data.target, data.stats, bad); }) ==
        ErrorCode::kInvalidConfig);
  bad = h;
  bad.window_frames = 0;
  CHECK(code_of([&] { GanTrain(init, data.gen, {}, data.target, data.stats, bad); }) ==
        ErrorCode::kInvalidConfig);
}

TEST_CASE("discriminator checkpoint round trip") {
  const Discriminator d = ToyDiscriminator(4, 3, 2);
  const Checkpoint c = DiscriminatorCheckpoint(d, {1, 1, 60.0, 500.0, 10.0});
  CHECK(c.kind_tag == "disc");
  const Discriminator e = DiscriminatorFromCheckpoint(DecodeCheckpoint(EncodeCheckpoint(c), "mem"));
  CHECK(e.window_frames == 4);
  CHECK(e.param_dim == 3);
  const MatrixXd w = RandomMatrix(4, 3, 8);
  CHECK(Discriminate(e, w) == 0.5);
}

}  // namespace
}  // namespace ppgvc
