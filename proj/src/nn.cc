// adst/nn.cc

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

#include "adst/nn.h"

#include <cmath>

namespace adst {
namespace nn {

using namespace ag;

Var XavierParam(int64_t out, int64_t in, std::vector<int64_t> shape,
                Rng &rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i)
    t[i] = UniformReal(rng, -limit, limit);
  return Param(std::move(t));
}

Linear::Linear(int64_t in, int64_t out, Rng &rng) {
  w = XavierParam(out, in, {out, in}, rng);
  b = Param(Tensor({out}));
}

Var Linear::Forward(const Var &x) const {
  return AddRowBroadcast(Matmul(x, w, false, true), b);
}

void Linear::Params(const std::string &prefix, ParamMap *out) const {
  out->emplace_back(prefix + ".w", w);
  out->emplace_back(prefix + ".b", b);
}

Conv2dLayer::Conv2dLayer(int64_t in_ch, int64_t out_ch, int64_t kernel,
                         int64_t stride_, int64_t pad_, Rng &rng)
    : stride(stride_), pad(pad_) {
  const int64_t fan_in = in_ch * kernel * kernel;
  const int64_t fan_out = out_ch * kernel * kernel;
  w = XavierParam(fan_out, fan_in, {out_ch, in_ch, kernel, kernel}, rng);
  b = Param(Tensor({out_ch}));
}

Var Conv2dLayer::Forward(const Var &x) const {
  return ag::Conv2d(x, w, b, stride, pad);
}

void Conv2dLayer::Params(const std::string &prefix, ParamMap *out) const {
  out->emplace_back(prefix + ".w", w);
  out->emplace_back(prefix + ".b", b);
}

GruLayer::GruLayer(int64_t in, int64_t hidden, Rng &rng)
    : wz(in, hidden, rng),
      wr(in, hidden, rng),
      wh(in, hidden, rng),
      uz(hidden, hidden, rng),
      ur(hidden, hidden, rng),
      uh(hidden, hidden, rng) {}

Var GruLayer::Step(const Var &x, const Var &h) const {
  Var z = Sigmoid(Add(wz.Forward(x), uz.Forward(h)));
  Var r = Sigmoid(Add(wr.Forward(x), ur.Forward(h)));
  Var cand = Tanh(Add(wh.Forward(x), uh.Forward(Mul(r, h))));
  // h' = (1-z) * h + z * cand
  Var one_minus_z = AddScalar(MulScalar(z, -1.0), 1.0);
  return Add(Mul(one_minus_z, h), Mul(z, cand));
}

Var GruLayer::Forward(const Var &seq) const {
  const int64_t t_len = seq->value.dim(0);
  Var h = Constant(Tensor({1, hidden()}));
  std::vector<Var> outs;
  outs.reserve(t_len);
  for (int64_t t = 0; t < t_len; ++t) {
    h = Step(SliceAxis0(seq, t, 1), h);
    outs.push_back(h);
  }
  return ConcatAxis0(outs);
}

void GruLayer::Params(const std::string &prefix, ParamMap *out) const {
  wz.Params(prefix + ".wz", out);
  wr.Params(prefix + ".wr", out);
  wh.Params(prefix + ".wh", out);
  uz.Params(prefix + ".uz", out);
  ur.Params(prefix + ".ur", out);
  uh.Params(prefix + ".uh", out);
}

LstmLayer::LstmLayer(int64_t in, int64_t hidden, Rng &rng)
    : wi(in, hidden, rng),
      wf(in, hidden, rng),
      wg(in, hidden, rng),
      wo(in, hidden, rng),
      ui(hidden, hidden, rng),
      uf(hidden, hidden, rng),
      ug(hidden, hidden, rng),
      uo(hidden, hidden, rng) {
  // Forget-gate bias starts at 1 so early training keeps state.
  for (int64_t i = 0; i < wf.b->value.numel(); ++i) wf.b->value[i] = 1.0;
}

Var LstmLayer::Forward(const Var &seq) const {
  const int64_t t_len = seq->value.dim(0);
  Var h = Constant(Tensor({1, hidden()}));
  Var c = Constant(Tensor({1, hidden()}));
  std::vector<Var> outs;
  outs.reserve(t_len);
  for (int64_t t = 0; t < t_len; ++t) {
    Var x = SliceAxis0(seq, t, 1);
    Var i = Sigmoid(Add(wi.Forward(x), ui.Forward(h)));
    Var f = Sigmoid(Add(wf.Forward(x), uf.Forward(h)));
    Var g = Tanh(Add(wg.Forward(x), ug.Forward(h)));
    Var o = Sigmoid(Add(wo.Forward(x), uo.Forward(h)));
    c = Add(Mul(f, c), Mul(i, g));
    h = Mul(o, Tanh(c));
    outs.push_back(h);
  }
  return ConcatAxis0(outs);
}

void LstmLayer::Params(const std::string &prefix, ParamMap *out) const {
  wi.Params(prefix + ".wi", out);
  wf.Params(prefix + ".wf", out);
  wg.Params(prefix + ".wg", out);
  wo.Params(prefix + ".wo", out);
  ui.Params(prefix + ".ui", out);
  uf.Params(prefix + ".uf", out);
  ug.Params(prefix + ".ug", out);
  uo.Params(prefix + ".uo", out);
}

Adam::Adam(std::vector<Var> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const Var &p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void Adam::ZeroGrad() {
  for (Var &p : params_) {
    Tensor &g = p->g();
    std::fill(g.data(), g.data() + g.numel(), 0.0);
  }
}

void Adam::Step(double lr, double clip_norm) {
  if (clip_norm > 0.0) {
    double sq = 0.0;
    for (Var &p : params_) {
      const Tensor &g = p->g();
      for (int64_t i = 0; i < g.numel(); ++i) sq += g[i] * g[i];
    }
    const double norm = std::sqrt(sq);
    if (norm > clip_norm) {
      const double scale = clip_norm / norm;
      for (Var &p : params_) {
        Tensor &g = p->g();
        for (int64_t i = 0; i < g.numel(); ++i) g[i] *= scale;
      }
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t k = 0; k < params_.size(); ++k) {
    Tensor &p = params_[k]->value;
    Tensor &g = params_[k]->g();
    Tensor &m = m_[k];
    Tensor &v = v_[k];
    for (int64_t i = 0; i < p.numel(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
    }
  }
}

std::vector<Var> VarsOf(const ParamMap &params) {
  std::vector<Var> out;
  out.reserve(params.size());
  for (const auto &kv : params) out.push_back(kv.second);
  return out;
}

std::map<std::string, Tensor> StateDict(const ParamMap &params) {
  std::map<std::string, Tensor> out;
  for (const auto &kv : params) out[kv.first] = kv.second->value;
  return out;
}

void LoadStateDict(const ParamMap &params,
                   const std::map<std::string, Tensor> &state) {
  for (const auto &kv : params) {
    auto it = state.find(kv.first);
    if (it == state.end())
      throw IoError("checkpoint is missing weight block '" + kv.first + "'");
    ADST_CHECK(it->second.numel() == kv.second->value.numel(),
               "checkpoint block '" + kv.first + "' has wrong size");
    kv.second->value = it->second.Reshaped(kv.second->value.shape());
  }
}

}  // namespace nn
}  // namespace adst
