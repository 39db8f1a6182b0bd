// adst/stylemap.cc

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

#include "adst/stylemap.h"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <limits>

#include "adst/container.h"
#include "adst/kernels.h"
#include "json.hpp"

namespace adst {
namespace stylemap {

std::vector<MotionTemplate> DefaultMotionTemplates() {
  std::vector<MotionTemplate> t(4);
  t[0].name = "neutral";
  t[0].pattern = geometry::SynthFace({});
  t[1].name = "mouth-open";
  geometry::FaceParams open_mouth;
  open_mouth.mouth_open = 1.0;
  t[1].pattern = geometry::SynthFace(open_mouth);
  t[2].name = "head-turn";
  geometry::FaceParams turned;
  turned.yaw = 0.6;
  t[2].pattern = geometry::SynthFace(turned);
  t[3].name = "eyes-closed";
  geometry::FaceParams closed;
  closed.eye_open = 0.0;
  t[3].pattern = geometry::SynthFace(closed);
  return t;
}

void WriteTemplates(const std::string &path,
                    const std::vector<MotionTemplate> &templates) {
  nlohmann::json root;
  auto &arr = root["templates"] = nlohmann::json::array();
  for (const auto &t : templates) {
    nlohmann::json rec;
    rec["name"] = t.name;
    auto &pts = rec["points"] = nlohmann::json::array();
    for (int i = 0; i < Landmarks68::kPoints; ++i)
      pts.push_back({t.pattern.x(i), t.pattern.y(i), t.pattern.z(i)});
    arr.push_back(rec);
  }
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << root.dump(2) << "\n";
  if (!f) throw IoError("write failed: " + path);
}

std::vector<MotionTemplate> ReadTemplates(const std::string &path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open template file: " + path);
  nlohmann::json root;
  try {
    f >> root;
  } catch (const nlohmann::json::exception &e) {
    throw IoError("bad template file " + path + ": " + e.what());
  }
  std::vector<MotionTemplate> out;
  for (const auto &rec : root.at("templates")) {
    MotionTemplate t;
    t.name = rec.at("name").get<std::string>();
    const auto &pts = rec.at("points");
    ADST_CHECK(pts.size() == Landmarks68::kPoints,
               "template must have 68 points: " + path);
    for (int i = 0; i < Landmarks68::kPoints; ++i) {
      t.pattern.x(i) = pts[i][0].get<double>();
      t.pattern.y(i) = pts[i][1].get<double>();
      t.pattern.z(i) = pts[i][2].get<double>();
    }
    t.pattern.Validate();
    out.push_back(std::move(t));
  }
  return out;
}

namespace {

std::array<double, 3> Centroid(const Landmarks68 &lm) {
  std::array<double, 3> c{0, 0, 0};
  for (int i = 0; i < Landmarks68::kPoints; ++i) {
    c[0] += lm.x(i);
    c[1] += lm.y(i);
    c[2] += lm.z(i);
  }
  for (double &v : c) v /= Landmarks68::kPoints;
  return c;
}

double AlignedDistance(const Landmarks68 &a, const Landmarks68 &b) {
  const auto ca = Centroid(a), cb = Centroid(b);
  double acc = 0.0;
  for (int i = 0; i < Landmarks68::kPoints; ++i) {
    const double dx = (a.x(i) - ca[0]) - (b.x(i) - cb[0]);
    const double dy = (a.y(i) - ca[1]) - (b.y(i) - cb[1]);
    const double dz = (a.z(i) - ca[2]) - (b.z(i) - cb[2]);
    acc += std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  return acc / Landmarks68::kPoints;
}

}  // namespace

std::array<int, kNumReferences> SelectStyleReferenceIndices(
    const LandmarkSequence &video_landmarks,
    const std::vector<MotionTemplate> &templates) {
  ADST_CHECK(video_landmarks.size() >= kNumReferences,
             "SelectStyleReferenceIndices: need at least 4 frames");
  ADST_CHECK(templates.size() == kNumReferences,
             "SelectStyleReferenceIndices: need exactly 4 templates");
  std::array<int, kNumReferences> out{};
  for (int t = 0; t < kNumReferences; ++t) {
    double best = std::numeric_limits<double>::infinity();
    int best_idx = 0;
    for (size_t i = 0; i < video_landmarks.size(); ++i) {
      const double d = AlignedDistance(video_landmarks[i],
                                       templates[t].pattern);
      if (d < best) {
        best = d;
        best_idx = static_cast<int>(i);
      }
    }
    out[t] = best_idx;
  }
  return out;
}

StyleReferenceSet SelectStyleReferences(
    const std::vector<Image> &video_frames,
    const LandmarkSequence &video_landmarks,
    const std::vector<MotionTemplate> &templates) {
  ADST_CHECK(video_frames.size() == video_landmarks.size(),
             "SelectStyleReferences: frame/landmark count mismatch");
  const auto idx = SelectStyleReferenceIndices(video_landmarks, templates);
  StyleReferenceSet set;
  for (int t = 0; t < kNumReferences; ++t) {
    set.source_indices[t] = idx[t];
    set.frames[t] = video_frames[idx[t]];
    set.landmarks[t] = video_landmarks[idx[t]];
  }
  return set;
}

namespace {

void CheckInput512(const Image &image) {
  ADST_CHECK(image.channels == 3 && image.height == 512 && image.width == 512,
             "expected a 512x512 RGB image");
}

ag::Var EncoderTrunk(const nn::Conv2dLayer &c1, const nn::Conv2dLayer &c2,
                     const nn::Conv2dLayer &c3, const nn::Linear &f1,
                     const nn::Linear &f2, const ag::Var &image) {
  ag::Var h = ag::Relu(c1.Forward(image));
  h = ag::Relu(c2.Forward(h));
  h = ag::Relu(c3.Forward(h));
  h = ag::Reshape(h, {1, h->value.numel()});
  h = ag::Relu(f1.Forward(h));
  return f2.Forward(h);
}

}  // namespace

KeypointExtractor::KeypointExtractor(int k, Rng &rng)
    : conv1(3, 8, 4, 4, 0, rng),
      conv2(8, 16, 4, 4, 0, rng),
      conv3(16, 32, 4, 4, 0, rng),
      fc1(2048, 128, rng),
      fc2(128, 3 * k, rng),
      k_(k) {
  ADST_CHECK(k >= 4, "KeypointExtractor: k must be at least 4");
}

ag::Var KeypointExtractor::ForwardVar(const ag::Var &image) const {
  ++call_count_;
  return EncoderTrunk(conv1, conv2, conv3, fc1, fc2, image);
}

KeypointSet KeypointExtractor::Extract(const Image &image) const {
  CheckInput512(image);
  const Tensor out = ForwardVar(ag::Constant(image.ToTensor()))->value;
  KeypointSet kp;
  kp.points.assign(out.data(), out.data() + out.numel());
  kp.Validate();
  return kp;
}

void KeypointExtractor::Params(const std::string &prefix,
                               nn::ParamMap *out) const {
  conv1.Params(prefix + ".conv1", out);
  conv2.Params(prefix + ".conv2", out);
  conv3.Params(prefix + ".conv3", out);
  fc1.Params(prefix + ".fc1", out);
  fc2.Params(prefix + ".fc2", out);
}

PoseExpressionNet::PoseExpressionNet(int k, Rng &rng)
    : conv1(3, 8, 4, 4, 0, rng),
      conv2(8, 16, 4, 4, 0, rng),
      conv3(16, 32, 4, 4, 0, rng),
      fc1(2048, 128, rng),
      fc2(128, 6 + 3 * k, rng),
      k_(k) {}

ag::Var PoseExpressionNet::ForwardVar(const ag::Var &image) const {
  return EncoderTrunk(conv1, conv2, conv3, fc1, fc2, image);
}

PoseParams PoseExpressionNet::Predict(const Image &image) const {
  CheckInput512(image);
  const Tensor out = ForwardVar(ag::Constant(image.ToTensor()))->value;
  PoseParams pose;
  pose.rotation =
      geometry::RotvecToMatrix({out[0], out[1], out[2]});
  pose.translation = {out[3], out[4], out[5]};
  pose.expression.assign(out.data() + 6, out.data() + out.numel());
  pose.Validate();
  return pose;
}

void PoseExpressionNet::Params(const std::string &prefix,
                               nn::ParamMap *out) const {
  conv1.Params(prefix + ".conv1", out);
  conv2.Params(prefix + ".conv2", out);
  conv3.Params(prefix + ".conv3", out);
  fc1.Params(prefix + ".fc1", out);
  fc2.Params(prefix + ".fc2", out);
}

std::pair<KeypointSet, PoseParams> Disentangle(
    const Image &image, const KeypointExtractor &extractor,
    const PoseExpressionNet &pose_net) {
  return {extractor.Extract(image), pose_net.Predict(image)};
}

namespace {

double TpsKernel(double r2) { return r2 > 0.0 ? 0.5 * r2 * std::log(r2) : 0.0; }

}  // namespace

TpsWarp TpsWarp::Fit(const std::vector<std::array<double, 2>> &src,
                     const std::vector<std::array<double, 2>> &dst) {
  ADST_CHECK(src.size() == dst.size(), "TpsWarp: correspondence count mismatch");
  ADST_CHECK(src.size() >= 4, "TpsWarp: need at least 4 correspondences");
  const int n = static_cast<int>(src.size());
  // The map runs dst -> src so application is a backward lookup.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 3, n + 3);
  Eigen::VectorXd bx(n + 3), by(n + 3);
  bx.setZero();
  by.setZero();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double dx = dst[i][0] - dst[j][0];
      const double dy = dst[i][1] - dst[j][1];
      a(i, j) = TpsKernel(dx * dx + dy * dy);
    }
    a(i, n) = 1.0;
    a(i, n + 1) = dst[i][0];
    a(i, n + 2) = dst[i][1];
    a(n, i) = 1.0;
    a(n + 1, i) = dst[i][0];
    a(n + 2, i) = dst[i][1];
    bx(i) = src[i][0];
    by(i) = src[i][1];
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  lu.setThreshold(1e-10);
  if (!lu.isInvertible())
    throw SingularWarpError(
        "TpsWarp: collinear or duplicated keypoints make the system singular");
  const Eigen::VectorXd wx = lu.solve(bx);
  const Eigen::VectorXd wy = lu.solve(by);
  TpsWarp warp;
  warp.control_ = dst;
  warp.wx_.assign(wx.data(), wx.data() + n + 3);
  warp.wy_.assign(wy.data(), wy.data() + n + 3);
  return warp;
}

std::array<double, 2> TpsWarp::Apply(double x, double y) const {
  const int n = static_cast<int>(control_.size());
  double ox = wx_[n] + wx_[n + 1] * x + wx_[n + 2] * y;
  double oy = wy_[n] + wy_[n + 1] * x + wy_[n + 2] * y;
  for (int i = 0; i < n; ++i) {
    const double dx = x - control_[i][0];
    const double dy = y - control_[i][1];
    const double u = TpsKernel(dx * dx + dy * dy);
    ox += wx_[i] * u;
    oy += wy_[i] * u;
  }
  return {ox, oy};
}

Tensor TpsWarp::SampleGrid(int64_t oh, int64_t ow) const {
  Tensor grid({oh * ow, 2});
  for (int64_t y = 0; y < oh; ++y) {
    for (int64_t x = 0; x < ow; ++x) {
      const auto s = Apply(static_cast<double>(x), static_cast<double>(y));
      grid.at(y * ow + x, 0) = s[0];
      grid.at(y * ow + x, 1) = s[1];
    }
  }
  return grid;
}

namespace {

std::vector<std::array<double, 2>> Project2d(const KeypointSet &kp,
                                             double scale_x, double scale_y) {
  std::vector<std::array<double, 2>> out(kp.K());
  for (int k = 0; k < kp.K(); ++k)
    out[k] = {kp.at(k, 0) * scale_x, kp.at(k, 1) * scale_y};
  return out;
}

}  // namespace

Tensor WarpFeatures(const Tensor &features, const KeypointSet &src,
                    const KeypointSet &dst) {
  src.Validate();
  dst.Validate();
  ADST_CHECK(src.K() == dst.K(), "WarpFeatures: keypoint count mismatch");
  ADST_CHECK(features.rank() == 3, "WarpFeatures: features must be [C,H,W]");
  const int64_t c = features.dim(0), h = features.dim(1), w = features.dim(2);
  const double sx = static_cast<double>(w) / 512.0;
  const double sy = static_cast<double>(h) / 512.0;
  const TpsWarp warp =
      TpsWarp::Fit(Project2d(src, sx, sy), Project2d(dst, sx, sy));
  const Tensor grid = warp.SampleGrid(h, w);
  Tensor out({c, h, w});
  kernels::BilinearSample(features.data(), c, h, w, grid.data(), h * w,
                          out.data());
  return out;
}

IntermediateGenerator::IntermediateGenerator(Rng &rng)
    : enc1(3, 8, 4, 2, 1, rng),
      enc2(8, 16, 4, 2, 1, rng),
      enc3(16, 32, 4, 2, 1, rng),
      enc4(32, 32, 4, 2, 1, rng),
      dec1(44, 32, 3, 1, 1, rng),
      dec2(32, 16, 3, 1, 1, rng),
      dec3(16, 8, 3, 1, 1, rng),
      dec4(8, 8, 3, 1, 1, rng),
      out(8, 3, 3, 1, 1, rng) {}

ag::Var IntermediateGenerator::ForwardVar(const ag::Var &image,
                                          const Tensor &grid,
                                          const PoseParams &pose) const {
  ag::Var h = ag::Relu(enc1.Forward(image));
  h = ag::Relu(enc2.Forward(h));
  h = ag::Relu(enc3.Forward(h));
  h = ag::Relu(enc4.Forward(h));
  if (grid.numel() > 0)
    h = ag::BilinearWarp(h, grid, kBottleneck, kBottleneck);

  Tensor pose_planes({12, kBottleneck, kBottleneck});
  for (int p = 0; p < 9; ++p) {
    const double v = pose.rotation[p];
    for (int64_t i = 0; i < kBottleneck * kBottleneck; ++i)
      pose_planes.data()[p * kBottleneck * kBottleneck + i] = v;
  }
  for (int p = 0; p < 3; ++p) {
    const double v = pose.translation[p] / 256.0;
    for (int64_t i = 0; i < kBottleneck * kBottleneck; ++i)
      pose_planes.data()[(9 + p) * kBottleneck * kBottleneck + i] = v;
  }
  h = ag::ConcatAxis0({h, ag::Constant(pose_planes)});

  h = ag::Relu(dec1.Forward(h));
  h = ag::UpsampleNearest2(h);
  h = ag::Relu(dec2.Forward(h));
  h = ag::UpsampleNearest2(h);
  h = ag::Relu(dec3.Forward(h));
  h = ag::UpsampleNearest2(h);
  h = ag::Relu(dec4.Forward(h));
  h = ag::UpsampleNearest2(h);
  return ag::Sigmoid(out.Forward(h));
}

Image IntermediateGenerator::Generate(const Image &image, const Tensor &grid,
                                      const PoseParams &pose) const {
  CheckInput512(image);
  return Image::FromTensor(
      ForwardVar(ag::Constant(image.ToTensor()), grid, pose)->value);
}

double IntermediateGenerator::TrainStepReconstruct(const Image &image,
                                                   const PoseParams &pose,
                                                   nn::Adam *opt, double lr) {
  CheckInput512(image);
  opt->ZeroGrad();
  const ag::Var x = ag::Constant(image.ToTensor());
  const ag::Var loss = ag::Mean(ag::Abs(ag::Sub(ForwardVar(x, {}, pose), x)));
  ag::Backward(loss);
  opt->Step(lr);
  return loss->value.at({0});
}

nn::ParamMap IntermediateGenerator::Params() const {
  nn::ParamMap p;
  enc1.Params("enc1", &p);
  enc2.Params("enc2", &p);
  enc3.Params("enc3", &p);
  enc4.Params("enc4", &p);
  dec1.Params("dec1", &p);
  dec2.Params("dec2", &p);
  dec3.Params("dec3", &p);
  dec4.Params("dec4", &p);
  out.Params("out", &p);
  return p;
}

void IntermediateGenerator::Save(const std::string &path) const {
  container::WriteCheckpoint(path, nn::StateDict(Params()));
}

void IntermediateGenerator::Load(const std::string &path) {
  const auto state = container::ReadCheckpoint(path);
  if (!enc1.w) {
    Rng rng(0);  // shapes only; weights are overwritten below
    *this = IntermediateGenerator(rng);
  }
  nn::LoadStateDict(Params(), state);
}

ISPSet BuildIsp(const Image &neutral_image, const KeypointSet &neutral_c,
                const PoseParams &neutral_pose,
                const StyleReferenceSet &references,
                const PoseExpressionNet &pose_net,
                const IntermediateGenerator &generator) {
  neutral_c.Validate();
  neutral_pose.Validate();
  const KeypointSet composed_neutral =
      geometry::RecomposeKeypoints(neutral_c, neutral_pose);
  const double s = IntermediateGenerator::kBottleneck / 512.0;

  ISPSet isp;
  for (int i = 0; i < kNumReferences; ++i) {
    // The reference contributes pose and expression only; the canonical
    // keypoints stay those of the neutral image.
    const PoseParams ref_pose = pose_net.Predict(references.frames[i]);
    const KeypointSet composed_ref =
        geometry::RecomposeKeypoints(neutral_c, ref_pose);
    const TpsWarp warp = TpsWarp::Fit(Project2d(composed_neutral, s, s),
                                      Project2d(composed_ref, s, s));
    const Tensor grid = warp.SampleGrid(IntermediateGenerator::kBottleneck,
                                        IntermediateGenerator::kBottleneck);
    isp.images[i] = generator.Generate(neutral_image, grid, ref_pose);
  }
  return isp;
}

}  // namespace stylemap
}  // namespace adst
