// tests/test_motion.cc

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
#include <algorithm>
#include <cmath>

#include "adst/motion.h"
#include "doctest.h"
#include "testutil.h"

using namespace adst;
using namespace adst::motion;

TEST_CASE("default mouth/eye subset has 25 in-range indices") {
  const auto idx = DefaultMouthEyeIndices();
  CHECK(static_cast<int>(idx.size()) == kDefaultKMe);
  for (int i : idx) {
    CHECK(i >= 0);
    CHECK(i < 68);
  }
  // All 20 lip points are driven.
  for (int lip = 48; lip <= 67; ++lip)
    CHECK(std::count(idx.begin(), idx.end(), lip) == 1);
}

TEST_CASE("mouth/eye net architecture: 3x256 lstm, 256/512/3K head") {
  Rng rng(60);
  MouthEyeNet net(kDefaultKMe, rng);
  CHECK(net.lstm1.hidden() == 256);
  CHECK(net.lstm2.hidden() == 256);
  CHECK(net.lstm3.hidden() == 256);
  CHECK(net.lstm1.wi.w->value.dim(1) == 512);  // audio feature width
  CHECK(net.fc1.w->value.dim(0) == 256);
  CHECK(net.fc2.w->value.dim(0) == 512);
  CHECK(net.fc3.w->value.dim(0) == 3 * kDefaultKMe);
  CHECK(net.fc3.w->value.dim(1) == 512);

  HeadPoseNet ht(rng);
  CHECK(ht.gru.hidden() == 256);
  CHECK(ht.head_mean.w->value.dim(0) == kPoseDim);
  CHECK(ht.head_mean.w->value.dim(1) == 256 + 512);
  CHECK(ht.head_std.w->value.dim(1) == 256 + 512);
}

TEST_CASE("mouth/eye net sees exactly 18 frames of look-ahead") {
  Rng rng(61);
  MouthEyeNet net(2, rng);
  const int64_t T = 24;
  Tensor f = Tensor::Randn({T, 512}, rng);
  const DisplacementSequence base = net.Forward(f);
  REQUIRE(base.T() == T);
  REQUIRE(base.K() == 2);

  // A feature past the horizon must not affect frame 0.
  Tensor beyond = f;
  for (int64_t j = 0; j < 512; ++j)
    beyond.at(kLookaheadFrames + 1, j) += 5.0;
  const DisplacementSequence out_beyond = net.Forward(beyond);
  for (int64_t j = 0; j < base.deltas.dim(1); ++j)
    CHECK(out_beyond.deltas.at(0, j) == base.deltas.at(0, j));
  // Later frames do change.
  double diff = 0.0;
  for (int64_t j = 0; j < base.deltas.dim(1); ++j)
    diff += std::fabs(out_beyond.deltas.at(kLookaheadFrames + 1, j) -
                      base.deltas.at(kLookaheadFrames + 1, j));
  CHECK(diff > 0.0);

  // A feature at exactly t+18 is inside the window for frame t.
  Tensor edge = f;
  for (int64_t j = 0; j < 512; ++j) edge.at(kLookaheadFrames, j) += 5.0;
  const DisplacementSequence out_edge = net.Forward(edge);
  double edge_diff = 0.0;
  for (int64_t j = 0; j < base.deltas.dim(1); ++j)
    edge_diff += std::fabs(out_edge.deltas.at(0, j) - base.deltas.at(0, j));
  CHECK(edge_diff > 0.0);

  Tensor too_short = Tensor::Randn({kLookaheadFrames, 512}, rng);
  CHECK_THROWS_AS(net.Forward(too_short), ValidationError);
}

TEST_CASE("displacement loss value and gradient") {
  DisplacementSequence a, b;
  a.deltas = Tensor::FromData({2, 3}, {1, 2, 3, 4, 5, 6});
  b.deltas = Tensor::FromData({2, 3}, {1, 2, 3, 4, 5, 4});
  CHECK(LossMe(a, b) == doctest::Approx(4.0));
  CHECK(LossMe(a, a) == doctest::Approx(0.0));

  Rng rng(62);
  const Tensor truth = Tensor::Randn({3, 6}, rng);
  const Tensor pred = Tensor::Randn({3, 6}, rng);
  CHECK(testutil::MaxGradError(pred, [&](const ag::Var &v) {
          return LossMeVar(ag::Constant(truth), v);
        }, rng) < 1e-6);
}

TEST_CASE("pose likelihood at the mean reduces to the entropy term") {
  GaussianPrediction p;
  p.mean = {0.1, -0.2, 0.3, 1, 2, 3};
  p.std = {1, 1, 1, 1, 1, 1};
  CHECK(LossHt(p.mean, p) ==
        doctest::Approx(6.0 * 0.5 * std::log(2.0 * kPi)).epsilon(1e-12));
  // One-sigma offset adds 1/2 per dimension.
  auto x = p.mean;
  x[0] += 1.0;
  CHECK(LossHt(x, p) ==
        doctest::Approx(6.0 * 0.5 * std::log(2.0 * kPi) + 0.5).epsilon(1e-12));

  Rng rng(63);
  const Tensor xt = Tensor::Randn({1, 6}, rng);
  const Tensor mu = Tensor::Randn({1, 6}, rng);
  Tensor sd({1, 6});
  for (int64_t i = 0; i < 6; ++i) sd[i] = 0.5 + 0.1 * i;
  CHECK(testutil::MaxGradError(mu, [&](const ag::Var &v) {
          return LossHtVar(ag::Constant(xt), v, ag::Constant(sd));
        }, rng) < 1e-6);
  CHECK(testutil::MaxGradError(sd, [&](const ag::Var &v) {
          return LossHtVar(ag::Constant(xt), ag::Constant(mu), v);
        }, rng) < 1e-6);

  GaussianPrediction bad = p;
  bad.std[2] = 0.0;
  CHECK_THROWS_AS(bad.Validate(), ValidationError);
}

TEST_CASE("pose sampling matches the requested moments") {
  GaussianPrediction p;
  p.mean = {0.5, -1.0, 0.0, 2.0, 0.0, -0.5};
  p.std = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  Rng rng(64);
  const int n = 20000;
  std::array<double, kPoseDim> sum{}, sq{};
  for (int i = 0; i < n; ++i) {
    const auto x = HeadPoseSample(p, rng);
    for (int j = 0; j < kPoseDim; ++j) {
      sum[j] += x[j];
      sq[j] += (x[j] - p.mean[j]) * (x[j] - p.mean[j]);
    }
  }
  for (int j = 0; j < kPoseDim; ++j) {
    const double se = p.std[j] / std::sqrt(static_cast<double>(n));
    CHECK(std::fabs(sum[j] / n - p.mean[j]) < 4.0 * se);
    CHECK(std::sqrt(sq[j] / n) == doctest::Approx(p.std[j]).epsilon(0.05));
  }
}

TEST_CASE("pose history push drops the oldest row") {
  PoseHistory h;
  h.Push({1, 2, 3, 4, 5, 6});
  h.Push({7, 8, 9, 10, 11, 12});
  CHECK(h.poses.at(kHistoryLen - 1, 0) == 7.0);
  CHECK(h.poses.at(kHistoryLen - 2, 0) == 1.0);
  CHECK(h.poses.at(0, 0) == 0.0);
  h.Validate();
}

TEST_CASE("rigid decomposition inverts composition") {
  Rng rng(65);
  geometry::FaceParams fp;
  const Landmarks68 neutral = geometry::SynthFace(fp);
  const auto idx = DefaultMouthEyeIndices();
  const int64_t T = 4;

  std::vector<std::array<double, 6>> poses(T);
  for (int64_t t = 0; t < T; ++t)
    poses[t] = {UniformReal(rng, -0.2, 0.2), UniformReal(rng, -0.2, 0.2),
                UniformReal(rng, -0.2, 0.2), UniformReal(rng, -5, 5),
                UniformReal(rng, -5, 5),     UniformReal(rng, -5, 5)};

  // Pure rigid motion: recovered poses must match, deltas must vanish.
  DisplacementSequence zero;
  zero.deltas = Tensor({T, 3 * static_cast<int64_t>(idx.size())});
  const LandmarkSequence rigid = ComposeLandmarks(neutral, zero, poses, idx);
  DisplacementSequence d_out;
  std::vector<std::array<double, 6>> p_out;
  DecomposeLandmarks(neutral, rigid, idx, &d_out, &p_out);
  for (int64_t t = 0; t < T; ++t)
    for (int j = 0; j < 6; ++j)
      CHECK(p_out[t][j] == doctest::Approx(poses[t][j]).epsilon(1e-7));
  for (int64_t i = 0; i < d_out.deltas.numel(); ++i)
    CHECK(std::fabs(d_out.deltas[i]) < 1e-7);

  // With expression deltas the cycle reproduces the driven landmarks.
  DisplacementSequence expr = zero;
  for (int64_t i = 0; i < expr.deltas.numel(); ++i)
    expr.deltas[i] = UniformReal(rng, -2, 2);
  const LandmarkSequence seq = ComposeLandmarks(neutral, expr, poses, idx);
  DecomposeLandmarks(neutral, seq, idx, &d_out, &p_out);
  const LandmarkSequence back = ComposeLandmarks(neutral, d_out, p_out, idx);
  for (int64_t t = 0; t < T; ++t)
    for (int i : idx)
      for (int j = 0; j < 3; ++j)
        CHECK(back[t].p[3 * i + j] ==
              doctest::Approx(seq[t].p[3 * i + j]).epsilon(1e-7));
}

TEST_CASE("rollout is deterministic under a fixed seed") {
  Rng rng(66);
  MotionModel model(3, rng);
  const Tensor f = Tensor::Randn({3, 512}, rng);
  PoseHistory h;
  Rng ra(7), rb(7), rc(8);
  const auto a = model.Rollout(f, h, ra);
  const auto b = model.Rollout(f, h, rb);
  const auto c = model.Rollout(f, h, rc);
  REQUIRE(a.size() == 3);
  for (size_t t = 0; t < a.size(); ++t)
    for (int j = 0; j < kPoseDim; ++j) CHECK(a[t][j] == b[t][j]);
  double diff = 0.0;
  for (size_t t = 0; t < a.size(); ++t)
    for (int j = 0; j < kPoseDim; ++j) diff += std::fabs(a[t][j] - c[t][j]);
  CHECK(diff > 0.0);
}

TEST_CASE("joint training step lowers the combined loss") {
  Rng rng(67);
  MotionModel model(2, rng);
  const int64_t T = 20;
  const Tensor f = Tensor::Randn({T, 512}, rng);
  const Tensor deltas = Tensor::Randn({T, 6}, rng);
  Tensor poses({T, 6});
  for (int64_t t = 0; t < T; ++t)
    for (int64_t j = 0; j < 6; ++j)
      poses.at(t, j) = 0.05 * std::sin(0.3 * t + j);
  nn::Adam opt(nn::VarsOf(model.Params()));
  const double first = model.TrainStep(f, deltas, poses, 2, &opt, 1e-3);
  double last = first;
  for (int i = 0; i < 4; ++i)
    last = model.TrainStep(f, deltas, poses, 2, &opt, 1e-3);
  CHECK(std::isfinite(first));
  CHECK(last < first);
}

TEST_CASE("displacement files and model checkpoints round trip") {
  const std::string dir = testutil::ScratchDir("motion_io");
  Rng rng(68);
  DisplacementSequence d;
  d.deltas = Tensor::Randn({5, 9}, rng);
  WriteDisplacements(dir + "/d.adst", d);
  const DisplacementSequence back = ReadDisplacements(dir + "/d.adst");
  REQUIRE(back.T() == 5);
  REQUIRE(back.K() == 3);
  for (int64_t i = 0; i < d.deltas.numel(); ++i)
    CHECK(back.deltas[i] == doctest::Approx(d.deltas[i]).epsilon(1e-6));
  CHECK_THROWS_AS(ReadDisplacements(dir + "/nope.adst"), IoError);

  MotionModel model(2, rng);
  model.Save(dir + "/m.adst");
  MotionModel loaded;  // architecture restored from the checkpoint
  loaded.Load(dir + "/m.adst");
  CHECK(loaded.me.k_me() == 2);
  const Tensor f = Tensor::Randn({20, 512}, rng);
  const DisplacementSequence pa = model.me.Forward(f);
  const DisplacementSequence pb = loaded.me.Forward(f);
  for (int64_t i = 0; i < pa.deltas.numel(); ++i)
    CHECK(pa.deltas[i] == doctest::Approx(pb.deltas[i]).epsilon(1e-5));
}
