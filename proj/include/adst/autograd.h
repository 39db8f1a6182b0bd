// adst/autograd.h

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

#ifndef ADST_AUTOGRAD_H_
#define ADST_AUTOGRAD_H_

#include <functional>
#include <memory>
#include <vector>

#include "adst/tensor.h"

// Reverse-mode automatic differentiation over Tensor. Graphs are built
// dynamically; Backward() runs once per graph. Parameter gradients
// accumulate across calls until explicitly zeroed (see nn::Adam).

namespace adst {
namespace ag {

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;  // allocated on demand, same shape as value
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node &)> backprop;  // scatters this->grad to parents

  Tensor &g() {
    if (grad.numel() == 0) grad = Tensor(value.shape());
    return grad;
  }
};

Var Constant(Tensor v);
Var Param(Tensor v);

// Seeds root->grad with ones (root is typically scalar) and propagates.
void Backward(const Var &root);

Var Add(const Var &a, const Var &b);
Var Sub(const Var &a, const Var &b);
Var Mul(const Var &a, const Var &b);
Var Div(const Var &a, const Var &b);
Var AddScalar(const Var &a, double s);
Var MulScalar(const Var &a, double s);

// op(a) [m,k] x op(b) [k,n] -> [m,n]
Var Matmul(const Var &a, const Var &b, bool trans_a = false,
           bool trans_b = false);
// a [m,n] + b [n] broadcast over rows.
Var AddRowBroadcast(const Var &a, const Var &b);

Var Tanh(const Var &a);
Var Sigmoid(const Var &a);
Var Relu(const Var &a);
Var LeakyRelu(const Var &a, double slope);
Var Softplus(const Var &a);
Var Exp(const Var &a);
Var Log(const Var &a);
Var Sqrt(const Var &a);
Var Square(const Var &a);
Var Abs(const Var &a);

Var Sum(const Var &a);   // scalar
Var Mean(const Var &a);  // scalar

Var Reshape(const Var &a, std::vector<int64_t> shape);
// Slice/concat along the leading axis (rows of [T,D], channels of [C,H,W]).
Var SliceAxis0(const Var &a, int64_t start, int64_t len);
Var ConcatAxis0(const std::vector<Var> &parts);

// x [C,H,W], w [OC,C,kh,kw], bias [OC] or nullptr -> [OC,OH,OW]
Var Conv2d(const Var &x, const Var &w, const Var &bias, int64_t stride,
           int64_t pad);
Var AvgPool2(const Var &x, int64_t factor);     // [C,H,W] -> [C,H/f,W/f]
Var UpsampleNearest2(const Var &x);             // [C,H,W] -> [C,2H,2W]

// Each row scaled to unit L2 norm; all-zero rows pass through unchanged.
Var RowL2Normalize(const Var &a);

// Backward-mapping warp: x [C,H,W] sampled at fixed coordinates
// xy [oh*ow, 2] (x, y pixel units, border clamp) -> [C,oh,ow].
// Differentiable in x only; the sampling grid is a constant.
Var BilinearWarp(const Var &x, Tensor xy, int64_t oh, int64_t ow);

}  // namespace ag
}  // namespace adst

#endif  // ADST_AUTOGRAD_H_
