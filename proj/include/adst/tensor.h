// adst/tensor.h

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

#ifndef ADST_TENSOR_H_
#define ADST_TENSOR_H_

#include <cstdint>
#include <numeric>
#include <vector>

#include "adst/common.h"

namespace adst {

// Dense row-major double tensor, rank 1..4.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64_t> shape)
      : shape_(std::move(shape)), data_(NumelOf(shape_), 0.0) {}
  Tensor(std::vector<int64_t> shape, double fill)
      : shape_(std::move(shape)), data_(NumelOf(shape_), fill) {}

  static Tensor FromData(std::vector<int64_t> shape, std::vector<double> data) {
    ADST_CHECK(NumelOf(shape) == static_cast<int64_t>(data.size()),
               "tensor data size does not match shape");
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    return t;
  }

  static Tensor Randn(std::vector<int64_t> shape, Rng &rng,
                      double stddev = 1.0) {
    Tensor t(std::move(shape));
    for (double &v : t.data_) v = NormalReal(rng) * stddev;
    return t;
  }

  const std::vector<int64_t> &shape() const { return shape_; }
  int64_t dim(int i) const { return shape_[i]; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }

  double *data() { return data_.data(); }
  const double *data() const { return data_.data(); }
  double &operator[](int64_t i) { return data_[i]; }
  double operator[](int64_t i) const { return data_[i]; }

  double &at(int64_t i, int64_t j) { return data_[i * shape_[1] + j]; }
  double at(int64_t i, int64_t j) const { return data_[i * shape_[1] + j]; }

  // Row-major multi-index, any rank: t.at({i, j, k}).
  double &at(std::initializer_list<int64_t> idx) { return data_[Offset(idx)]; }
  double at(std::initializer_list<int64_t> idx) const {
    return data_[Offset(idx)];
  }

  Tensor Reshaped(std::vector<int64_t> shape) const {
    ADST_CHECK(NumelOf(shape) == numel(), "reshape changes element count");
    Tensor t = *this;
    t.shape_ = std::move(shape);
    return t;
  }

  bool SameShape(const Tensor &o) const { return shape_ == o.shape_; }

  bool AllFinite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  static int64_t NumelOf(const std::vector<int64_t> &shape) {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
  }

 private:
  int64_t Offset(std::initializer_list<int64_t> idx) const {
    int64_t off = 0;
    int d = 0;
    for (int64_t i : idx) off = off * shape_[d++] + i;
    return off;
  }

  std::vector<int64_t> shape_;
  std::vector<double> data_;
};

}  // namespace adst

#endif  // ADST_TENSOR_H_
