// adst/facialmap.cc

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

#include "adst/facialmap.h"

#include <algorithm>
#include <cmath>

namespace adst {
namespace facialmap {

Image FacialMap::ToImage() const {
  Image im(1, kMapSize, kMapSize);
  for (int i = 0; i < kMapSize * kMapSize; ++i) im.data[i] = pixels[i];
  return im;
}

CameraMatrix OrthographicCamera(double scale, double offset_x,
                                double offset_y) {
  return {scale, 0, 0, offset_x,  //
          0, scale, 0, offset_y,  //
          0, 0, 0, 1};
}

namespace {

struct Projected {
  double u, v;
  bool valid;
};

Projected Project(const CameraMatrix &p, double x, double y, double z) {
  const double w = p[8] * x + p[9] * y + p[10] * z + p[11];
  if (w <= 0.0) return {0, 0, false};
  return {(p[0] * x + p[1] * y + p[2] * z + p[3]) / w,
          (p[4] * x + p[5] * y + p[6] * z + p[7]) / w, true};
}

void PlotClipped(FacialMap *map, int64_t x, int64_t y) {
  if (x >= 0 && x < kMapSize && y >= 0 && y < kMapSize)
    map->at(static_cast<int>(y), static_cast<int>(x)) = 1;
}

void BresenhamLine(FacialMap *map, int64_t x0, int64_t y0, int64_t x1,
                   int64_t y1) {
  const int64_t dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int64_t sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int64_t err = dx + dy;
  while (true) {
    PlotClipped(map, x0, y0);
    if (x0 == x1 && y0 == y1) break;
    const int64_t e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

using Poly = std::vector<std::array<double, 2>>;

Poly LandmarkPolygon(const Landmarks68 &lm, int first, int last) {
  Poly poly;
  for (int i = first; i <= last; ++i) poly.push_back({lm.x(i), lm.y(i)});
  return poly;
}

bool SegmentsProperlyIntersect(const std::array<double, 2> &a,
                               const std::array<double, 2> &b,
                               const std::array<double, 2> &c,
                               const std::array<double, 2> &d) {
  auto cross = [](const std::array<double, 2> &o, const std::array<double, 2> &p,
                  const std::array<double, 2> &q) {
    return (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0]);
  };
  const double d1 = cross(a, b, c), d2 = cross(a, b, d);
  const double d3 = cross(c, d, a), d4 = cross(c, d, b);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 &&
         d2 != 0 && d3 != 0 && d4 != 0;
}

void CheckSimplePolygon(const Poly &poly, const std::string &name) {
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      // skip adjacent edges (sharing a vertex)
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (SegmentsProperlyIntersect(poly[i], poly[(i + 1) % n], poly[j],
                                    poly[(j + 1) % n]))
        throw DegenerateRegionError("self-intersecting " + name + " polygon");
    }
  }
}

}  // namespace

void FillPolygon(const Poly &poly, std::vector<uint8_t> *mask, int size) {
  const size_t n = poly.size();
  std::vector<double> xs;
  for (int y = 0; y < size; ++y) {
    const double yc = y + 0.5;
    xs.clear();
    for (size_t i = 0; i < n; ++i) {
      const auto &p1 = poly[i];
      const auto &p2 = poly[(i + 1) % n];
      // half-open rule: edge contributes on [min_y, max_y)
      if ((p1[1] <= yc && p2[1] > yc) || (p2[1] <= yc && p1[1] > yc)) {
        const double t = (yc - p1[1]) / (p2[1] - p1[1]);
        xs.push_back(p1[0] + t * (p2[0] - p1[0]));
      }
    }
    std::sort(xs.begin(), xs.end());
    for (size_t k = 0; k + 1 < xs.size(); k += 2) {
      const int x0 = std::max(0, static_cast<int>(std::ceil(xs[k] - 0.5)));
      const int x1 =
          std::min(size - 1, static_cast<int>(std::floor(xs[k + 1] - 0.5)));
      for (int x = x0; x <= x1; ++x) (*mask)[y * size + x] = 1;
    }
  }
}

FacialMap RasterizeFacialMap(const Landmarks68 &landmarks,
                             const CameraMatrix &camera) {
  landmarks.Validate();
  {
    // full-rank check on the 3x4 camera
    bool nonzero_row = true;
    for (int r = 0; r < 3; ++r) {
      double norm = 0;
      for (int c = 0; c < 4; ++c) norm += camera[4 * r + c] * camera[4 * r + c];
      if (norm == 0.0) nonzero_row = false;
    }
    ADST_CHECK(nonzero_row, "RasterizeFacialMap: rank-deficient camera");
  }

  std::array<Projected, Landmarks68::kPoints> proj;
  int valid = 0;
  for (int i = 0; i < Landmarks68::kPoints; ++i) {
    proj[i] = Project(camera, landmarks.x(i), landmarks.y(i), landmarks.z(i));
    if (proj[i].valid) ++valid;
  }
  if (valid == 0)
    throw EmptyMapError("all landmarks project behind the camera");

  FacialMap map;
  for (const auto &g : geometry::LandmarkGroups()) {
    const int count = g.last - g.first + 1;
    const int segments = g.closed ? count : count - 1;
    for (int s = 0; s < segments; ++s) {
      const int i = g.first + s;
      const int j = g.first + (s + 1) % count;
      if (!proj[i].valid || !proj[j].valid) continue;
      BresenhamLine(&map, std::llround(proj[i].u), std::llround(proj[i].v),
                    std::llround(proj[j].u), std::llround(proj[j].v));
    }
  }
  return map;
}

WeightMask BuildWeightMask(const Landmarks68 &landmarks) {
  landmarks.Validate();
  const Poly mouth = LandmarkPolygon(landmarks, 48, 59);
  const Poly eye_l = LandmarkPolygon(landmarks, 36, 41);
  const Poly eye_r = LandmarkPolygon(landmarks, 42, 47);
  CheckSimplePolygon(mouth, "mouth");
  CheckSimplePolygon(eye_l, "eye");
  CheckSimplePolygon(eye_r, "eye");
  // Face hull: jaw left-to-right, then brows right-to-left to close.
  Poly face = LandmarkPolygon(landmarks, 0, 16);
  for (int i = 26; i >= 17; --i) face.push_back({landmarks.x(i), landmarks.y(i)});

  std::vector<uint8_t> mouth_m(kMapSize * kMapSize, 0);
  std::vector<uint8_t> eye_m(kMapSize * kMapSize, 0);
  std::vector<uint8_t> face_m(kMapSize * kMapSize, 0);
  FillPolygon(mouth, &mouth_m, kMapSize);
  FillPolygon(eye_l, &eye_m, kMapSize);
  FillPolygon(eye_r, &eye_m, kMapSize);
  FillPolygon(face, &face_m, kMapSize);

  WeightMask mask;
  for (int i = 0; i < kMapSize * kMapSize; ++i) {
    if (mouth_m[i])
      mask.weights[i] = 5.0;
    else if (eye_m[i])
      mask.weights[i] = 3.0;
    else if (face_m[i])
      mask.weights[i] = 1.0;
  }
  return mask;
}

void WriteWeightMaskPng(const std::string &path, const WeightMask &mask) {
  Image im(1, kMapSize, kMapSize);
  for (int i = 0; i < kMapSize * kMapSize; ++i)
    im.data[i] = mask.weights[i] * 32.0 / 255.0;
  WritePng(path, im);
}

WeightMask ReadWeightMaskPng(const std::string &path) {
  const Image im = ReadPng(path);
  if (im.channels != 1 || im.height != kMapSize || im.width != kMapSize)
    throw IoError("not a 512x512 gray weight mask: " + path);
  WeightMask mask;
  for (int i = 0; i < kMapSize * kMapSize; ++i) {
    const double byte = std::round(im.data[i] * 255.0);
    mask.weights[i] = byte / 32.0;
    const double w = mask.weights[i];
    if (w != 0.0 && w != 1.0 && w != 3.0 && w != 5.0)
      throw IoError("invalid weight value in mask: " + path);
  }
  return mask;
}

}  // namespace facialmap
}  // namespace adst
