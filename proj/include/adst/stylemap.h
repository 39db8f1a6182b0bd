// adst/stylemap.h

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

#ifndef ADST_STYLEMAP_H_
#define ADST_STYLEMAP_H_

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "adst/geometry.h"
#include "adst/image.h"
#include "adst/nn.h"

namespace adst {
namespace stylemap {

constexpr int kNumReferences = 4;
constexpr int kWarpKeypoints = 15;

// Canonical landmark pattern used for reference-frame retrieval.
struct MotionTemplate {
  std::string name;  // neutral | mouth-open | head-turn | eyes-closed
  Landmarks68 pattern;
};

// neutral, mouth-open, head-turn, eyes-closed on the synthetic face.
std::vector<MotionTemplate> DefaultMotionTemplates();

void WriteTemplates(const std::string &path,
                    const std::vector<MotionTemplate> &templates);
std::vector<MotionTemplate> ReadTemplates(const std::string &path);

struct StyleReferenceSet {
  std::array<Image, kNumReferences> frames;  // 512x512 RGB
  std::array<int, kNumReferences> source_indices{};
  std::array<Landmarks68, kNumReferences> landmarks;
};

struct ISPSet {
  std::array<Image, kNumReferences> images;  // 512x512 RGB
};

// Per template: argmin over frames of mean landmark L2 distance after
// centroid alignment; ties break to the lowest frame index.
std::array<int, kNumReferences> SelectStyleReferenceIndices(
    const LandmarkSequence &video_landmarks,
    const std::vector<MotionTemplate> &templates);

StyleReferenceSet SelectStyleReferences(
    const std::vector<Image> &video_frames,
    const LandmarkSequence &video_landmarks,
    const std::vector<MotionTemplate> &templates);

// Small convolutional encoder regressing K canonical keypoints from a
// 512x512 RGB image. Invocations are counted so tests can assert which
// images ever reach the extractor.
class KeypointExtractor {
 public:
  KeypointExtractor() = default;
  KeypointExtractor(int k, Rng &rng);

  KeypointSet Extract(const Image &image) const;
  ag::Var ForwardVar(const ag::Var &image) const;  // [1, 3K]
  void Params(const std::string &prefix, nn::ParamMap *out) const;
  int k() const { return k_; }
  int64_t call_count() const { return call_count_; }

  nn::Conv2dLayer conv1, conv2, conv3;
  nn::Linear fc1, fc2;

 private:
  int k_ = kWarpKeypoints;
  mutable int64_t call_count_ = 0;
};

// Convolutional encoder regressing rotation (as a rotation vector),
// translation, and per-keypoint expression offsets.
class PoseExpressionNet {
 public:
  PoseExpressionNet() = default;
  PoseExpressionNet(int k, Rng &rng);

  PoseParams Predict(const Image &image) const;
  ag::Var ForwardVar(const ag::Var &image) const;  // [1, 6 + 3K] raw
  void Params(const std::string &prefix, nn::ParamMap *out) const;
  int k() const { return k_; }

  nn::Conv2dLayer conv1, conv2, conv3;
  nn::Linear fc1, fc2;

 private:
  int k_ = kWarpKeypoints;
};

std::pair<KeypointSet, PoseParams> Disentangle(
    const Image &image, const KeypointExtractor &extractor,
    const PoseExpressionNet &pose_net);

// Thin-plate-spline map fitted on 2-D correspondences; applied as a
// backward mapping (the fit runs dst -> src) with bilinear sampling.
class TpsWarp {
 public:
  // Throws SingularWarpError on collinear or duplicated source points.
  static TpsWarp Fit(const std::vector<std::array<double, 2>> &src,
                     const std::vector<std::array<double, 2>> &dst);
  std::array<double, 2> Apply(double x, double y) const;
  // Sample grid mapping every (x, y) of an oh x ow raster through the
  // inverse (dst -> src) transform; feeds ag::BilinearWarp.
  Tensor SampleGrid(int64_t oh, int64_t ow) const;

 private:
  std::vector<std::array<double, 2>> control_;  // dst-side anchors
  std::vector<double> wx_, wy_;                 // kernel + affine weights
};

// Warps [C,H,W] features so content at src keypoints moves to dst
// keypoints (keypoint coordinates in the 512x512 image frame).
Tensor WarpFeatures(const Tensor &features, const KeypointSet &src,
                    const KeypointSet &dst);

// 4-down/4-up encoder-decoder; the bottleneck features are warped and
// concatenated with the 12 pose channels (R, tau broadcast spatially).
class IntermediateGenerator {
 public:
  IntermediateGenerator() = default;
  explicit IntermediateGenerator(Rng &rng);

  // grid: bottleneck-resolution warp grid (identity when empty).
  ag::Var ForwardVar(const ag::Var &image, const Tensor &grid,
                     const PoseParams &pose) const;
  Image Generate(const Image &image, const Tensor &grid,
                 const PoseParams &pose) const;
  // L1 reconstruction step with an identity warp; used to fit the
  // autoencoding path on the harness.
  double TrainStepReconstruct(const Image &image, const PoseParams &pose,
                              nn::Adam *opt, double lr);

  nn::ParamMap Params() const;
  void Save(const std::string &path) const;
  void Load(const std::string &path);

  static constexpr int64_t kBottleneck = 32;  // spatial size after 4 downs

  nn::Conv2dLayer enc1, enc2, enc3, enc4;
  nn::Conv2dLayer dec1, dec2, dec3, dec4, out;
};

// One ISP per reference: encode the neutral image, warp its bottleneck
// features from the neutral keypoint composition to the reference-posed
// composition (the neutral canonical keypoints are reused; the reference
// contributes only pose and expression), then decode.
ISPSet BuildIsp(const Image &neutral_image, const KeypointSet &neutral_c,
                const PoseParams &neutral_pose,
                const StyleReferenceSet &references,
                const PoseExpressionNet &pose_net,
                const IntermediateGenerator &generator);

}  // namespace stylemap
}  // namespace adst

#endif  // ADST_STYLEMAP_H_
