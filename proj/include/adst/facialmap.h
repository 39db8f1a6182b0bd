// adst/facialmap.h

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

#ifndef ADST_FACIALMAP_H_
#define ADST_FACIALMAP_H_

#include <array>
#include <string>
#include <vector>

#include "adst/geometry.h"
#include "adst/image.h"

namespace adst {
namespace facialmap {

constexpr int kMapSize = 512;

// 512x512 binary raster of the semantically grouped landmark contours.
struct FacialMap {
  std::vector<uint8_t> pixels;  // row-major, values 0/1

  FacialMap() : pixels(kMapSize * kMapSize, 0) {}
  uint8_t &at(int y, int x) { return pixels[y * kMapSize + x]; }
  uint8_t at(int y, int x) const { return pixels[y * kMapSize + x]; }
  Image ToImage() const;
};

// Per-pixel photometric-loss weights: mouth 5, eyes 3, skin 1, other 0.
struct WeightMask {
  std::vector<double> weights;  // row-major 512x512

  WeightMask() : weights(kMapSize * kMapSize, 0.0) {}
  double &at(int y, int x) { return weights[y * kMapSize + x]; }
  double at(int y, int x) const { return weights[y * kMapSize + x]; }
};

using CameraMatrix = std::array<double, 12>;  // 3x4 row-major projection

// Orthographic scale-and-center camera used throughout the pipeline; the
// identity-scale version maps landmark (x, y) straight to pixels.
CameraMatrix OrthographicCamera(double scale = 1.0, double offset_x = 0.0,
                                double offset_y = 0.0);

// Projects landmarks with the camera and draws 1-px segments between
// consecutive points of each semantic group (eye/lip contours closed).
// Out-of-frame portions are clipped; throws EmptyMapError when every
// point projects behind the camera.
FacialMap RasterizeFacialMap(const Landmarks68 &landmarks,
                             const CameraMatrix &camera);

// Filled-polygon region weights with precedence mouth > eyes > skin.
// Throws DegenerateRegionError on self-intersecting region contours.
WeightMask BuildWeightMask(const Landmarks68 &landmarks);

// PNG serialization: weights are stored x32 so they stay integral
// ({0, 32, 96, 160} byte values).
void WriteWeightMaskPng(const std::string &path, const WeightMask &mask);
WeightMask ReadWeightMaskPng(const std::string &path);

// Scan-line even-odd polygon fill; exposed for the harness renderer.
void FillPolygon(const std::vector<std::array<double, 2>> &poly,
                 std::vector<uint8_t> *mask, int size);

}  // namespace facialmap
}  // namespace adst

#endif  // ADST_FACIALMAP_H_
