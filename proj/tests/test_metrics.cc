// tests/test_metrics.cc

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

#include "adst/metrics.h"
#include "doctest.h"
#include "json.hpp"
#include "testutil.h"

using namespace adst;
using namespace adst::metrics;

namespace {

// A face whose 2D bounding box is exactly 300 x 400 (diagonal 500).
Landmarks68 BoxFace300x400() {
  Landmarks68 lm;
  for (int i = 0; i < 68; ++i) {
    lm.x(i) = 300.0 * (i % 9) / 8.0;
    lm.y(i) = 400.0 * (i / 9) / 7.0;
    lm.z(i) = 0.0;
  }
  return lm;
}

Landmarks68 Shifted(const Landmarks68 &lm, double dx, double dy) {
  Landmarks68 out = lm;
  for (int i = 0; i < 68; ++i) {
    out.x(i) += dx;
    out.y(i) += dy;
  }
  return out;
}

// A face spanning exactly 500 x 500 whose inner-lip contour is a straight
// (zero-area) segment.
Landmarks68 FlatLipFace500() {
  Landmarks68 lm;
  // Points 0-59 span the full box so the lip overrides cannot shrink it.
  for (int i = 0; i < 68; ++i) {
    lm.x(i) = 500.0 * (i % 10) / 9.0;
    lm.y(i) = 500.0 * ((i / 10) % 6) / 5.0;
    lm.z(i) = 0.0;
  }
  for (int i = 60; i < 68; ++i) {
    lm.x(i) = 200.0 + 2.0 * (i - 60);  // distinct collinear points
    lm.y(i) = 250.0;
  }
  return lm;
}

// Same box, inner lip replaced by a 10 x 10 square (area 100).
Landmarks68 SquareLipFace500() {
  Landmarks68 lm = FlatLipFace500();
  const double sq[8][2] = {{200, 245}, {205, 245}, {210, 245}, {210, 250},
                           {210, 255}, {205, 255}, {200, 255}, {200, 250}};
  for (int i = 0; i < 8; ++i) {
    lm.x(60 + i) = sq[i][0];
    lm.y(60 + i) = sq[i][1];
  }
  return lm;
}

Image StepEdgeImage(int size) {
  Image im(1, size, size);
  for (int64_t y = 0; y < size; ++y)
    for (int64_t x = 0; x < size; ++x)
      im.at(0, y, x) = x < size / 2 ? 0.1 : 0.9;
  return im;
}

Image BoxBlur(const Image &im, int radius) {
  Image out(im.channels, im.height, im.width);
  for (int64_t c = 0; c < im.channels; ++c)
    for (int64_t y = 0; y < im.height; ++y)
      for (int64_t x = 0; x < im.width; ++x) {
        double acc = 0.0;
        int n = 0;
        for (int64_t dx = -radius; dx <= radius; ++dx) {
          const int64_t sx = std::clamp<int64_t>(x + dx, 0, im.width - 1);
          acc += im.at(c, y, sx);
          ++n;
        }
        out.at(c, y, x) = acc / n;
      }
  return out;
}

}  // namespace

TEST_CASE("landmark distance metric on a hand-built example") {
  const Landmarks68 ref = BoxFace300x400();
  LandmarkSequence a = {ref, ref};
  // A uniform (3, 4) shift is 5 px per point; diagonal 500 -> 1 percent.
  LandmarkSequence b = {Shifted(ref, 3, 4), Shifted(ref, 3, 4)};
  CHECK(MetricDl(a, b) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(MetricDl(a, a) == doctest::Approx(0.0));
  // Not symmetric: the normalization box comes from the first argument.
  LandmarkSequence wide = {FlatLipFace500(), FlatLipFace500()};
  CHECK(MetricDl(a, b) != doctest::Approx(MetricDl(wide, b)));
}

TEST_CASE("velocity metric on a hand-built example") {
  const Landmarks68 ref = BoxFace300x400();
  LandmarkSequence still = {ref, ref, ref};
  // 1 px/frame drift: velocity difference 1 against diagonal 500.
  LandmarkSequence drift = {ref, Shifted(ref, 1, 0), Shifted(ref, 2, 0)};
  CHECK(MetricDv(still, drift) == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(MetricDv(still, still) == doctest::Approx(0.0));
}

TEST_CASE("mouth area metric on a hand-built example") {
  LandmarkSequence flat = {FlatLipFace500()};
  LandmarkSequence square = {SquareLipFace500()};
  // |0 - 100| px^2 against a 500x500 reference box.
  CHECK(MetricDa(flat, square) ==
        doctest::Approx(100.0 / (500.0 * 500.0) * 100.0).epsilon(1e-9));
  CHECK(MetricDa(square, square) == doctest::Approx(0.0));
}

TEST_CASE("mouth landmark distance is raw pixels") {
  const Landmarks68 ref = BoxFace300x400();
  LandmarkSequence a = {ref};
  LandmarkSequence b = {Shifted(ref, 0.6, 0.8)};  // 1 px per point
  CHECK(MetricLmd(a, b) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("sharpness stays in range and decreases under blur") {
  const Image sharp = StepEdgeImage(64);
  const double c0 = MetricCpbd(sharp);
  CHECK(c0 > 0.5);
  CHECK(c0 <= 1.0);
  double prev = c0;
  for (int radius : {2, 5}) {
    const double c = MetricCpbd(BoxBlur(sharp, radius));
    CHECK(c >= 0.0);
    CHECK(c <= prev + 1e-12);
    prev = c;
  }
  Image flat(1, 64, 64);
  for (double &v : flat.data) v = 0.5;
  CHECK(MetricCpbd(flat) == 0.0);  // no edges, warned on stderr
}

TEST_CASE("windowed style metric matches the enumeration oracle") {
  Rng rng(100);
  const LandmarkSequence ref = testutil::RandomSequence(rng, 37);
  const LandmarkSequence gen = testutil::RandomSequence(rng, 29);
  for (const CoreMetric core : {CoreMetric::kDL, CoreMetric::kDV,
                                CoreMetric::kLMD, CoreMetric::kMouthArea}) {
    for (const WindowSpec spec : {WindowSpec{4, 2}, WindowSpec{7, 3},
                                  WindowSpec{12, 5}, WindowSpec{2, 1}}) {
      const double fast = StyleMetric(ref, gen, spec, core);
      const double slow = naive::StyleMetric(ref, gen, spec, core);
      CHECK(fast == doctest::Approx(slow).epsilon(1e-9));
    }
  }
  // Identical sequences always contain a perfect matching window.
  CHECK(StyleMetric(ref, ref, {5, 2}, CoreMetric::kDL) ==
        doctest::Approx(0.0));
}

TEST_CASE("style grid skips infeasible cells and averages the rest") {
  Rng rng(101);
  const LandmarkSequence ref = testutil::RandomSequence(rng, 20);
  const LandmarkSequence gen = testutil::RandomSequence(rng, 16);
  const StyleGridResult r = StyleMetricGrid(ref, gen, {2, 8, 64}, {1, 4},
                                            CoreMetric::kDL);
  // F = 64 exceeds both sequence lengths and must be skipped.
  for (const GridCell &c : r.cells) CHECK(c.F != 64);
  CHECK(!r.cells.empty());
  double mean = 0.0;
  for (const GridCell &c : r.cells) mean += c.value;
  mean /= r.cells.size();
  CHECK(r.mean == doctest::Approx(mean).epsilon(1e-12));

  CHECK(DefaultFGrid().size() == 100);
  CHECK(DefaultFGrid().front() == 1);
  CHECK(DefaultFGrid().back() == 100);
  CHECK(DefaultVGrid().size() == 20);
  CHECK(DefaultVGrid().back() == 20);
}

TEST_CASE("full evaluation handles length mismatch and emits json") {
  Rng rng(102);
  LandmarkSequence ref = testutil::RandomSequence(rng, 30);
  LandmarkSequence gen = ref;
  gen.resize(26);  // frame metrics use the common prefix
  const MetricReport report = Evaluate(ref, gen);
  CHECK(report.d_l == doctest::Approx(0.0));
  CHECK(report.d_v == doctest::Approx(0.0));
  CHECK(report.lmd == doctest::Approx(0.0));
  CHECK(report.has_cpbd == false);

  const auto j = nlohmann::json::parse(report.ToJson());
  CHECK(j.contains("d_l"));
  CHECK(j.contains("sld"));
  CHECK(!j.contains("cpbd"));

  std::vector<Image> frames = {StepEdgeImage(64)};
  const MetricReport with_frames = Evaluate(ref, gen, frames);
  CHECK(with_frames.has_cpbd);
  const auto j2 = nlohmann::json::parse(with_frames.ToJson());
  CHECK(j2.contains("cpbd"));
  CHECK(j2.at("cpbd").get<double>() ==
        doctest::Approx(MetricCpbd(frames[0])));
}
