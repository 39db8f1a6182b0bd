// adst/nn.h

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

#ifndef ADST_NN_H_
#define ADST_NN_H_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "adst/autograd.h"
#include "adst/common.h"

namespace adst {
namespace nn {

using ag::Var;
using ParamMap = std::vector<std::pair<std::string, Var>>;

Var XavierParam(int64_t out, int64_t in, std::vector<int64_t> shape, Rng &rng);

class Linear {
 public:
  Linear() = default;
  Linear(int64_t in, int64_t out, Rng &rng);
  Var Forward(const Var &x) const;  // x [N,in] -> [N,out]
  void Params(const std::string &prefix, ParamMap *out) const;

  Var w;  // [out,in]
  Var b;  // [out]
};

class Conv2dLayer {
 public:
  Conv2dLayer() = default;
  Conv2dLayer(int64_t in_ch, int64_t out_ch, int64_t kernel, int64_t stride,
              int64_t pad, Rng &rng);
  Var Forward(const Var &x) const;  // x [C,H,W]
  void Params(const std::string &prefix, ParamMap *out) const;

  Var w;  // [oc,ic,k,k]
  Var b;  // [oc]
  int64_t stride = 1, pad = 0;
};

class GruLayer {
 public:
  GruLayer() = default;
  GruLayer(int64_t in, int64_t hidden, Rng &rng);
  // seq [T,in] -> [T,hidden]; initial state zero.
  Var Forward(const Var &seq) const;
  Var Step(const Var &x, const Var &h) const;  // x,h are [1,*]
  void Params(const std::string &prefix, ParamMap *out) const;
  int64_t hidden() const { return wz.w ? wz.w->value.dim(0) : 0; }

  Linear wz, wr, wh;  // input transforms
  Linear uz, ur, uh;  // recurrent transforms (biases unused, kept zero)
};

class LstmLayer {
 public:
  LstmLayer() = default;
  LstmLayer(int64_t in, int64_t hidden, Rng &rng);
  Var Forward(const Var &seq) const;  // [T,in] -> [T,hidden]
  void Params(const std::string &prefix, ParamMap *out) const;
  int64_t hidden() const { return wi.w ? wi.w->value.dim(0) : 0; }

  Linear wi, wf, wg, wo;  // input transforms
  Linear ui, uf, ug, uo;  // recurrent transforms
};

class Adam {
 public:
  explicit Adam(std::vector<Var> params, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);
  void ZeroGrad();
  // Optional global-norm gradient clip before the update; <=0 disables.
  void Step(double lr, double clip_norm = 0.0);

 private:
  std::vector<Var> params_;
  std::vector<Tensor> m_, v_;
  double beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

std::vector<Var> VarsOf(const ParamMap &params);
// Copies tensors between a parameter map and a named-block state dict.
std::map<std::string, Tensor> StateDict(const ParamMap &params);
void LoadStateDict(const ParamMap &params,
                   const std::map<std::string, Tensor> &state);

}  // namespace nn
}  // namespace adst

#endif  // ADST_NN_H_
