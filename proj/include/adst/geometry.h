// adst/geometry.h

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

#ifndef ADST_GEOMETRY_H_
#define ADST_GEOMETRY_H_

#include <array>
#include <string>
#include <vector>

#include "adst/common.h"

namespace adst {

// 68-point facial landmarks, standard semantic layout:
//   jaw 0-16, brows 17-26, nose 27-35, eyes 36-47,
//   outer lips 48-59, inner lips 60-67.
// x,y in image pixels (default 512x512 canvas), z in pixel-equivalent depth.
struct Landmarks68 {
  static constexpr int kPoints = 68;
  std::array<double, kPoints * 3> p{};

  double &x(int i) { return p[3 * i]; }
  double &y(int i) { return p[3 * i + 1]; }
  double &z(int i) { return p[3 * i + 2]; }
  double x(int i) const { return p[3 * i]; }
  double y(int i) const { return p[3 * i + 1]; }
  double z(int i) const { return p[3 * i + 2]; }

  void Validate() const {
    for (double v : p)
      ADST_CHECK(std::isfinite(v), "Landmarks68: non-finite coordinate");
  }
};

using LandmarkSequence = std::vector<Landmarks68>;

// K x 3 keypoints carrying a geometry signature; K >= 4 so downstream
// warps have a non-degenerate correspondence set.
struct KeypointSet {
  std::vector<double> points;  // [K][3]

  int K() const { return static_cast<int>(points.size() / 3); }
  double &at(int k, int c) { return points[3 * k + c]; }
  double at(int k, int c) const { return points[3 * k + c]; }

  void Validate() const {
    ADST_CHECK(points.size() % 3 == 0 && K() >= 4,
               "KeypointSet: needs at least 4 points");
    for (double v : points)
      ADST_CHECK(std::isfinite(v), "KeypointSet: non-finite coordinate");
  }
};

// Rotation matrix R (row-vector convention: p' = p * R), translation tau,
// and per-keypoint additive expression offsets.
struct PoseParams {
  std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
  std::array<double, 3> translation{0, 0, 0};
  std::vector<double> expression;  // [K][3]

  void Validate() const;  // orthonormality of R within 1e-6, det = +1
};

struct HeadPose {
  std::array<double, 3> rotvec{0, 0, 0};
  std::array<double, 3> trans{0, 0, 0};

  void Validate() const {
    for (double v : rotvec)
      ADST_CHECK(std::isfinite(v), "HeadPose: non-finite rotvec");
    for (double v : trans)
      ADST_CHECK(std::isfinite(v), "HeadPose: non-finite translation");
    const double n = std::sqrt(rotvec[0] * rotvec[0] + rotvec[1] * rotvec[1] +
                               rotvec[2] * rotvec[2]);
    ADST_CHECK(n < 2 * kPi, "HeadPose: rotvec outside canonical range");
  }
};

namespace geometry {

// Rodrigues exponential map under the row-vector convention:
// rotating p by rotvec is p * R. Satisfies R(-v) = R(v)^T.
std::array<double, 9> RotvecToMatrix(const std::array<double, 3> &rotvec);

// C_k = c_k * R + tau + eps_k (row vectors, matrix applied on the right).
KeypointSet RecomposeKeypoints(const KeypointSet &c, const PoseParams &pose);

// Row-major point-then-coordinate flattening; inverse of UnvectorizeLandmarks.
std::array<double, 204> VectorizeLandmarks(const Landmarks68 &lm);
Landmarks68 UnvectorizeLandmarks(const std::array<double, 204> &v);

// Semantic groups of the 68-point layout; closed = contour wraps around.
struct LandmarkGroup {
  const char *name;
  int first, last;  // inclusive
  bool closed;
};
const std::vector<LandmarkGroup> &LandmarkGroups();

// Newline-delimited JSON landmark sequence files:
// {"frame": int, "points": [[x,y,z] x 68]} per line.
void WriteLandmarkSequence(const std::string &path, const LandmarkSequence &seq);
LandmarkSequence ReadLandmarkSequence(const std::string &path);

// Parametric synthetic face on the 512x512 canvas. mouth_open and
// eye_open are unitless degrees of opening; rotations are radians applied
// about the face center.
struct FaceParams {
  double mouth_open = 0.0;  // 0 = closed, 1 = wide open
  double eye_open = 1.0;    // 0 = closed lids
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
  double center_x = 256.0;
  double center_y = 256.0;
  double scale = 1.0;
};

Landmarks68 SynthFace(const FaceParams &params);

}  // namespace geometry
}  // namespace adst

#endif  // ADST_GEOMETRY_H_
