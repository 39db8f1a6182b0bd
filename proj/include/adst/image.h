// adst/image.h

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

#ifndef ADST_IMAGE_H_
#define ADST_IMAGE_H_

#include <string>
#include <vector>

#include "adst/common.h"
#include "adst/tensor.h"

namespace adst {

// Planar image, values in [0,1]; channels is 1 (gray) or 3 (RGB).
struct Image {
  int64_t channels = 0, height = 0, width = 0;
  std::vector<double> data;  // [channels][height][width]

  Image() = default;
  Image(int64_t c, int64_t h, int64_t w)
      : channels(c), height(h), width(w), data(c * h * w, 0.0) {}

  double &at(int64_t c, int64_t y, int64_t x) {
    return data[(c * height + y) * width + x];
  }
  double at(int64_t c, int64_t y, int64_t x) const {
    return data[(c * height + y) * width + x];
  }

  Tensor ToTensor() const {
    return Tensor::FromData({channels, height, width}, data);
  }
  static Image FromTensor(const Tensor &t) {
    Image im(t.dim(0), t.dim(1), t.dim(2));
    im.data.assign(t.data(), t.data() + t.numel());
    return im;
  }

  Image ToGray() const;
};

// 8-bit PNG. Gray images write one channel, RGB three.
void WritePng(const std::string &path, const Image &im);
Image ReadPng(const std::string &path);

}  // namespace adst

#endif  // ADST_IMAGE_H_
