// tests/test_geometry.cc

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
#include <cmath>

#include "adst/geometry.h"
#include "doctest.h"
#include "testutil.h"

using namespace adst;

namespace {

double Dot3(const double *a, const double *b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

}  // namespace

TEST_CASE("rotation vector map produces orthonormal right-handed matrices") {
  Rng rng(40);
  for (int trial = 0; trial < 20; ++trial) {
    const std::array<double, 3> v = {UniformReal(rng, -2, 2),
                                     UniformReal(rng, -2, 2),
                                     UniformReal(rng, -2, 2)};
    const auto r = geometry::RotvecToMatrix(v);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double rows = Dot3(&r[3 * i], &r[3 * j]);
        CHECK(rows == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-9));
      }
    const double det =
        r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6]) +
        r[2] * (r[3] * r[7] - r[4] * r[6]);
    CHECK(det == doctest::Approx(1.0).epsilon(1e-9));

    // R(-v) = R(v)^T.
    const auto rt = geometry::RotvecToMatrix({-v[0], -v[1], -v[2]});
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        CHECK(rt[3 * i + j] == doctest::Approx(r[3 * j + i]).epsilon(1e-9));
  }
  // Zero vector -> identity.
  const auto id = geometry::RotvecToMatrix({0, 0, 0});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(id[3 * i + j] == doctest::Approx(i == j ? 1.0 : 0.0));
}

TEST_CASE("keypoint recomposition applies rotation, translation, expression") {
  KeypointSet c;
  c.points = {1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 1, 1};
  PoseParams pose;
  pose.rotation = geometry::RotvecToMatrix({0, 0, kPi / 2});  // 90 deg roll
  pose.translation = {10, 20, 30};
  pose.expression.assign(12, 0.5);
  const KeypointSet out = geometry::RecomposeKeypoints(c, pose);
  REQUIRE(out.K() == 4);
  // Row convention: (1,0,0) * R_z(90) = (0,1,0) for the row-vector map.
  CHECK(out.at(0, 0) == doctest::Approx(10.5).epsilon(1e-9));
  CHECK(std::fabs(out.at(0, 1) - (20.5 + 1.0)) < 1e-9);
  CHECK(out.at(0, 2) == doctest::Approx(30.5).epsilon(1e-9));

  // Identity pose with zero expression is exact.
  PoseParams ident;
  ident.expression.assign(12, 0.0);
  const KeypointSet same = geometry::RecomposeKeypoints(c, ident);
  for (int k = 0; k < 4; ++k)
    for (int d = 0; d < 3; ++d) CHECK(same.at(k, d) == c.at(k, d));
}

TEST_CASE("landmark vectorization round trips") {
  Rng rng(41);
  const Landmarks68 lm = testutil::RandomFace(rng);
  const auto v = geometry::VectorizeLandmarks(lm);
  const Landmarks68 back = geometry::UnvectorizeLandmarks(v);
  for (int i = 0; i < 68 * 3; ++i) CHECK(back.p[i] == lm.p[i]);
  CHECK(v[0] == lm.x(0));
  CHECK(v[1] == lm.y(0));
  CHECK(v[2] == lm.z(0));
}

TEST_CASE("landmark groups cover all 68 points with valid ranges") {
  const auto &groups = geometry::LandmarkGroups();
  std::array<int, 68> covered{};
  for (const auto &g : groups) {
    CHECK(g.first >= 0);
    CHECK(g.last < 68);
    CHECK(g.first <= g.last);
    for (int i = g.first; i <= g.last; ++i) covered[i] = 1;
  }
  for (int i = 0; i < 68; ++i) CHECK(covered[i] == 1);
}

TEST_CASE("synthetic face responds to its parameters") {
  geometry::FaceParams closed, open;
  open.mouth_open = 1.0;
  const Landmarks68 a = geometry::SynthFace(closed);
  const Landmarks68 b = geometry::SynthFace(open);
  // Inner-lip vertical gap grows with mouth_open.
  auto gap = [](const Landmarks68 &lm) {
    return std::fabs(lm.y(66) - lm.y(62));  // bottom vs top inner lip
  };
  CHECK(gap(b) > gap(a) + 5.0);

  geometry::FaceParams blink = closed;
  blink.eye_open = 0.0;
  const Landmarks68 c = geometry::SynthFace(blink);
  auto lid = [](const Landmarks68 &lm) {
    return std::fabs(lm.y(41) - lm.y(37));
  };
  CHECK(lid(a) > lid(c) + 1.0);

  geometry::FaceParams turned = closed;
  turned.yaw = 0.5;
  const Landmarks68 d = geometry::SynthFace(turned);
  bool moved = false;
  for (int i = 0; i < 68; ++i)
    if (std::fabs(d.x(i) - a.x(i)) > 1.0) moved = true;
  CHECK(moved);
  a.Validate();
  b.Validate();
  c.Validate();
  d.Validate();
}

TEST_CASE("landmark sequence files round trip bit-exactly") {
  const std::string dir = testutil::ScratchDir("geometry_seq");
  Rng rng(42);
  const LandmarkSequence seq = testutil::RandomSequence(rng, 7);
  geometry::WriteLandmarkSequence(dir + "/s.jsonl", seq);
  const LandmarkSequence back = geometry::ReadLandmarkSequence(dir + "/s.jsonl");
  REQUIRE(back.size() == seq.size());
  for (size_t t = 0; t < seq.size(); ++t)
    for (int i = 0; i < 68 * 3; ++i) CHECK(back[t].p[i] == seq[t].p[i]);
  CHECK_THROWS_AS(geometry::ReadLandmarkSequence(dir + "/missing.jsonl"),
                  IoError);
}

TEST_CASE("pose params validation rejects non-rotations") {
  PoseParams p;
  p.Validate();
  p.rotation[0] = 2.0;
  CHECK_THROWS_AS(p.Validate(), ValidationError);
}
