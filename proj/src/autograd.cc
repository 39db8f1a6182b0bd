// adst/autograd.cc

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

#include "adst/autograd.h"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "adst/kernels.h"

namespace adst {
namespace ag {

namespace {

Var MakeNode(Tensor value, std::vector<Var> parents,
             std::function<void(Node &)> backprop) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  for (const Var &p : n->parents)
    if (p->requires_grad) n->requires_grad = true;
  if (n->requires_grad) n->backprop = std::move(backprop);
  return n;
}

template <typename F, typename DF>
Var UnaryEw(const Var &a, F f, DF df) {
  Tensor v(a->value.shape());
  const int64_t n = v.numel();
  for (int64_t i = 0; i < n; ++i) v[i] = f(a->value[i]);
  return MakeNode(std::move(v), {a}, [f, df](Node &self) {
    Var a = self.parents[0];
    if (!a->requires_grad) return;
    Tensor &ga = a->g();
    for (int64_t i = 0; i < self.value.numel(); ++i)
      ga[i] += self.grad[i] * df(a->value[i], self.value[i]);
  });
}

}  // namespace

Var Constant(Tensor v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  return n;
}

Var Param(Tensor v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->requires_grad = true;
  return n;
}

void Backward(const Var &root) {
  // Iterative topological order (DFS), then reverse sweep.
  std::vector<Node *> order;
  std::unordered_set<Node *> seen;
  std::vector<std::pair<Node *, size_t>> stack;
  stack.emplace_back(root.get(), 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto &[node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node *p = node->parents[idx++].get();
      if (p->requires_grad && seen.insert(p).second)
        stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  Tensor &g = root->g();
  for (int64_t i = 0; i < g.numel(); ++i) g[i] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node *n = *it;
    if (n->backprop && n->grad.numel() > 0) n->backprop(*n);
  }
}

Var Add(const Var &a, const Var &b) {
  ADST_CHECK(a->value.SameShape(b->value), "Add: shape mismatch");
  Tensor v(a->value.shape());
  for (int64_t i = 0; i < v.numel(); ++i) v[i] = a->value[i] + b->value[i];
  return MakeNode(std::move(v), {a, b}, [](Node &self) {
    for (int s = 0; s < 2; ++s) {
      Var p = self.parents[s];
      if (!p->requires_grad) continue;
      Tensor &gp = p->g();
      for (int64_t i = 0; i < gp.numel(); ++i) gp[i] += self.grad[i];
    }
  });
}

Var Sub(const Var &a, const Var &b) {
  ADST_CHECK(a->value.SameShape(b->value), "Sub: shape mismatch");
  Tensor v(a->value.shape());
  for (int64_t i = 0; i < v.numel(); ++i) v[i] = a->value[i] - b->value[i];
  return MakeNode(std::move(v), {a, b}, [](Node &self) {
    Var a = self.parents[0], b = self.parents[1];
    if (a->requires_grad) {
      Tensor &ga = a->g();
      for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += self.grad[i];
    }
    if (b->requires_grad) {
      Tensor &gb = b->g();
      for (int64_t i = 0; i < gb.numel(); ++i) gb[i] -= self.grad[i];
    }
  });
}

Var Mul(const Var &a, const Var &b) {
  ADST_CHECK(a->value.SameShape(b->value), "Mul: shape mismatch");
  Tensor v(a->value.shape());
  for (int64_t i = 0; i < v.numel(); ++i) v[i] = a->value[i] * b->value[i];
  return MakeNode(std::move(v), {a, b}, [](Node &self) {
    Var a = self.parents[0], b = self.parents[1];
    if (a->requires_grad) {
      Tensor &ga = a->g();
      for (int64_t i = 0; i < ga.numel(); ++i)
        ga[i] += self.grad[i] * b->value[i];
    }
    if (b->requires_grad) {
      Tensor &gb = b->g();
      for (int64_t i = 0; i < gb.numel(); ++i)
        gb[i] += self.grad[i] * a->value[i];
    }
  });
}

Var Div(const Var &a, const Var &b) {
  ADST_CHECK(a->value.SameShape(b->value), "Div: shape mismatch");
  Tensor v(a->value.shape());
  for (int64_t i = 0; i < v.numel(); ++i) v[i] = a->value[i] / b->value[i];
  return MakeNode(std::move(v), {a, b}, [](Node &self) {
    Var a = self.parents[0], b = self.parents[1];
    if (a->requires_grad) {
      Tensor &ga = a->g();
      for (int64_t i = 0; i < ga.numel(); ++i)
        ga[i] += self.grad[i] / b->value[i];
    }
    if (b->requires_grad) {
      Tensor &gb = b->g();
      for (int64_t i = 0; i < gb.numel(); ++i)
        gb[i] -= self.grad[i] * self.value[i] / b->value[i];
    }
  });
}

Var AddScalar(const Var &a, double s) {
  return UnaryEw(
      a, [s](double x) { return x + s; },
      [](double, double) { return 1.0; });
}

Var MulScalar(const Var &a, double s) {
  return UnaryEw(
      a, [s](double x) { return x * s; },
      [s](double, double) { return s; });
}

Var Matmul(const Var &a, const Var &b, bool trans_a, bool trans_b) {
  const auto &sa = a->value.shape(), &sb = b->value.shape();
  ADST_CHECK(sa.size() == 2 && sb.size() == 2, "Matmul: rank-2 required");
  const int64_t m = trans_a ? sa[1] : sa[0];
  const int64_t ka = trans_a ? sa[0] : sa[1];
  const int64_t kb = trans_b ? sb[1] : sb[0];
  const int64_t n = trans_b ? sb[0] : sb[1];
  ADST_CHECK(ka == kb, "Matmul: inner dimension mismatch");
  Tensor v({m, n});
  kernels::Gemm(trans_a, trans_b, m, n, ka, 1.0, a->value.data(), sa[1],
                b->value.data(), sb[1], 0.0, v.data(), n);
  return MakeNode(std::move(v), {a, b}, [trans_a, trans_b, m, n,
                                         k = ka](Node &self) {
    Var a = self.parents[0], b = self.parents[1];
    const double *gy = self.grad.data();
    if (a->requires_grad) {
      Tensor &ga = a->g();
      const int64_t lda = a->value.shape()[1];
      // dA = dY B^T (or transposed variants)
      if (!trans_a)
        kernels::Gemm(false, !trans_b, m, k, n, 1.0, gy, n, b->value.data(),
                      b->value.shape()[1], 1.0, ga.data(), lda);
      else
        kernels::Gemm(trans_b, true, k, m, n, 1.0, b->value.data(),
                      b->value.shape()[1], gy, n, 1.0, ga.data(), lda);
    }
    if (b->requires_grad) {
      Tensor &gb = b->g();
      const int64_t ldb = b->value.shape()[1];
      if (!trans_b)
        kernels::Gemm(!trans_a, false, k, n, m, 1.0, a->value.data(),
                      a->value.shape()[1], gy, n, 1.0, gb.data(), ldb);
      else
        kernels::Gemm(true, trans_a, n, k, m, 1.0, gy, n, a->value.data(),
                      a->value.shape()[1], 1.0, gb.data(), ldb);
    }
  });
}

Var AddRowBroadcast(const Var &a, const Var &b) {
  const auto &sa = a->value.shape();
  ADST_CHECK(sa.size() == 2 && b->value.rank() == 1 &&
                 b->value.dim(0) == sa[1],
             "AddRowBroadcast: shape mismatch");
  Tensor v(sa);
  for (int64_t i = 0; i < sa[0]; ++i)
    for (int64_t j = 0; j < sa[1]; ++j)
      v.at(i, j) = a->value.at(i, j) + b->value[j];
  return MakeNode(std::move(v), {a, b}, [](Node &self) {
    Var a = self.parents[0], b = self.parents[1];
    const int64_t m = self.value.dim(0), n = self.value.dim(1);
    if (a->requires_grad) {
      Tensor &ga = a->g();
      for (int64_t i = 0; i < m * n; ++i) ga[i] += self.grad[i];
    }
    if (b->requires_grad) {
      Tensor &gb = b->g();
      for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) gb[j] += self.grad[i * n + j];
    }
  });
}

Var Tanh(const Var &a) {
  return UnaryEw(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var Sigmoid(const Var &a) {
  return UnaryEw(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var Relu(const Var &a) {
  return UnaryEw(
      a, [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var LeakyRelu(const Var &a, double slope) {
  return UnaryEw(
      a, [slope](double x) { return x > 0 ? x : slope * x; },
      [slope](double x, double) { return x > 0 ? 1.0 : slope; });
}

Var Softplus(const Var &a) {
  return UnaryEw(
      a,
      [](double x) {
        // log(1+exp(x)) without overflow
        return x > 30 ? x : std::log1p(std::exp(x));
      },
      [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Var Exp(const Var &a) {
  return UnaryEw(
      a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Var Log(const Var &a) {
  return UnaryEw(
      a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Var Sqrt(const Var &a) {
  return UnaryEw(
      a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return 0.5 / y; });
}

Var Square(const Var &a) {
  return UnaryEw(
      a, [](double x) { return x * x; },
      [](double x, double) { return 2.0 * x; });
}

Var Abs(const Var &a) {
  return UnaryEw(
      a, [](double x) { return std::fabs(x); },
      [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Var Sum(const Var &a) {
  Tensor v({1});
  double acc = 0.0;
  for (int64_t i = 0; i < a->value.numel(); ++i) acc += a->value[i];
  v[0] = acc;
  return MakeNode(std::move(v), {a}, [](Node &self) {
    Var a = self.parents[0];
    if (!a->requires_grad) return;
    Tensor &ga = a->g();
    for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += self.grad[0];
  });
}

Var Mean(const Var &a) {
  return MulScalar(Sum(a), 1.0 / static_cast<double>(a->value.numel()));
}

Var Reshape(const Var &a, std::vector<int64_t> shape) {
  Tensor v = a->value.Reshaped(shape);
  return MakeNode(std::move(v), {a}, [](Node &self) {
    Var a = self.parents[0];
    if (!a->requires_grad) return;
    Tensor &ga = a->g();
    for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += self.grad[i];
  });
}

Var SliceAxis0(const Var &a, int64_t start, int64_t len) {
  const auto &s = a->value.shape();
  ADST_CHECK(start >= 0 && start + len <= s[0], "SliceAxis0: out of range");
  int64_t inner = 1;
  for (size_t d = 1; d < s.size(); ++d) inner *= s[d];
  std::vector<int64_t> os = s;
  os[0] = len;
  Tensor v(os);
  std::copy(a->value.data() + start * inner,
            a->value.data() + (start + len) * inner, v.data());
  return MakeNode(std::move(v), {a}, [start, inner](Node &self) {
    Var a = self.parents[0];
    if (!a->requires_grad) return;
    Tensor &ga = a->g();
    for (int64_t i = 0; i < self.value.numel(); ++i)
      ga[start * inner + i] += self.grad[i];
  });
}

Var ConcatAxis0(const std::vector<Var> &parts) {
  ADST_CHECK(!parts.empty(), "ConcatAxis0: no inputs");
  std::vector<int64_t> os = parts[0]->value.shape();
  int64_t inner = 1;
  for (size_t d = 1; d < os.size(); ++d) inner *= os[d];
  int64_t total = 0;
  for (const Var &p : parts) total += p->value.dim(0);
  os[0] = total;
  Tensor v(os);
  int64_t off = 0;
  for (const Var &p : parts) {
    std::copy(p->value.data(), p->value.data() + p->value.numel(),
              v.data() + off);
    off += p->value.numel();
  }
  return MakeNode(std::move(v), parts, [](Node &self) {
    int64_t off = 0;
    for (Var &p : self.parents) {
      if (p->requires_grad) {
        Tensor &gp = p->g();
        for (int64_t i = 0; i < gp.numel(); ++i) gp[i] += self.grad[off + i];
      }
      off += p->value.numel();
    }
  });
}

Var Conv2d(const Var &x, const Var &w, const Var &bias, int64_t stride,
           int64_t pad) {
  const auto &sx = x->value.shape(), &sw = w->value.shape();
  ADST_CHECK(sx.size() == 3 && sw.size() == 4 && sx[0] == sw[1],
             "Conv2d: shape mismatch");
  const int64_t c = sx[0], h = sx[1], ww = sx[2];
  const int64_t oc = sw[0], kh = sw[2], kw = sw[3];
  const int64_t oh = kernels::ConvOutDim(h, kh, stride, pad);
  const int64_t ow = kernels::ConvOutDim(ww, kw, stride, pad);
  const int64_t patch = c * kh * kw;
  Tensor col({patch, oh * ow});
  kernels::Im2Col(x->value.data(), c, h, ww, kh, kw, stride, pad, col.data());
  Tensor v({oc, oh, ow});
  kernels::Gemm(false, false, oc, oh * ow, patch, 1.0, w->value.data(), patch,
                col.data(), oh * ow, 0.0, v.data(), oh * ow);
  if (bias) {
    for (int64_t o = 0; o < oc; ++o) {
      const double b = bias->value[o];
      double *p = v.data() + o * oh * ow;
      for (int64_t i = 0; i < oh * ow; ++i) p[i] += b;
    }
  }
  std::vector<Var> parents = {x, w};
  if (bias) parents.push_back(bias);
  // The im2col buffer is recomputed in backward to bound tape memory.
  return MakeNode(
      std::move(v), std::move(parents),
      [stride, pad, c, h, ww, oc, kh, kw, oh, ow, patch](Node &self) {
        Var x = self.parents[0], w = self.parents[1];
        const double *gy = self.grad.data();
        if (w->requires_grad || x->requires_grad) {
          if (w->requires_grad) {
            Tensor col({patch, oh * ow});
            kernels::Im2Col(x->value.data(), c, h, ww, kh, kw, stride, pad,
                            col.data());
            kernels::Gemm(false, true, oc, patch, oh * ow, 1.0, gy, oh * ow,
                          col.data(), oh * ow, 1.0, w->g().data(), patch);
          }
          if (x->requires_grad) {
            Tensor gcol({patch, oh * ow});
            kernels::Gemm(true, false, patch, oh * ow, oc, 1.0,
                          w->value.data(), patch, gy, oh * ow, 0.0,
                          gcol.data(), oh * ow);
            kernels::Col2Im(gcol.data(), c, h, ww, kh, kw, stride, pad,
                            x->g().data());
          }
        }
        if (self.parents.size() == 3 && self.parents[2]->requires_grad) {
          Tensor &gb = self.parents[2]->g();
          for (int64_t o = 0; o < oc; ++o) {
            double acc = 0.0;
            for (int64_t i = 0; i < oh * ow; ++i) acc += gy[o * oh * ow + i];
            gb[o] += acc;
          }
        }
      });
}

Var AvgPool2(const Var &x, int64_t factor) {
  const auto &s = x->value.shape();
  ADST_CHECK(s.size() == 3 && s[1] % factor == 0 && s[2] % factor == 0,
             "AvgPool2: size not divisible");
  const int64_t c = s[0], h = s[1], w = s[2];
  const int64_t oh = h / factor, ow = w / factor;
  Tensor v({c, oh, ow});
  const double inv = 1.0 / static_cast<double>(factor * factor);
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t oy = 0; oy < oh; ++oy)
      for (int64_t ox = 0; ox < ow; ++ox) {
        double acc = 0.0;
        for (int64_t dy = 0; dy < factor; ++dy)
          for (int64_t dx = 0; dx < factor; ++dx)
            acc += x->value[(ch * h + oy * factor + dy) * w + ox * factor + dx];
        v[(ch * oh + oy) * ow + ox] = acc * inv;
      }
  return MakeNode(std::move(v), {x}, [factor, c, h, w, oh, ow, inv](Node &self) {
    Var x = self.parents[0];
    if (!x->requires_grad) return;
    Tensor &gx = x->g();
    for (int64_t ch = 0; ch < c; ++ch)
      for (int64_t oy = 0; oy < oh; ++oy)
        for (int64_t ox = 0; ox < ow; ++ox) {
          const double g = self.grad[(ch * oh + oy) * ow + ox] * inv;
          for (int64_t dy = 0; dy < factor; ++dy)
            for (int64_t dx = 0; dx < factor; ++dx)
              gx[(ch * h + oy * factor + dy) * w + ox * factor + dx] += g;
        }
  });
}

Var UpsampleNearest2(const Var &x) {
  const auto &s = x->value.shape();
  ADST_CHECK(s.size() == 3, "UpsampleNearest2: rank-3 required");
  const int64_t c = s[0], h = s[1], w = s[2];
  Tensor v({c, 2 * h, 2 * w});
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t y = 0; y < 2 * h; ++y)
      for (int64_t xx = 0; xx < 2 * w; ++xx)
        v[(ch * 2 * h + y) * 2 * w + xx] =
            x->value[(ch * h + y / 2) * w + xx / 2];
  return MakeNode(std::move(v), {x}, [c, h, w](Node &self) {
    Var x = self.parents[0];
    if (!x->requires_grad) return;
    Tensor &gx = x->g();
    for (int64_t ch = 0; ch < c; ++ch)
      for (int64_t y = 0; y < 2 * h; ++y)
        for (int64_t xx = 0; xx < 2 * w; ++xx)
          gx[(ch * h + y / 2) * w + xx / 2] +=
              self.grad[(ch * 2 * h + y) * 2 * w + xx];
  });
}

Var RowL2Normalize(const Var &a) {
  const auto &s = a->value.shape();
  ADST_CHECK(s.size() == 2, "RowL2Normalize: rank-2 required");
  const int64_t m = s[0], n = s[1];
  Tensor v(s);
  std::vector<double> norms(m);
  for (int64_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (int64_t j = 0; j < n; ++j) acc += a->value.at(i, j) * a->value.at(i, j);
    norms[i] = std::sqrt(acc);
    const double inv = norms[i] > 0 ? 1.0 / norms[i] : 1.0;
    for (int64_t j = 0; j < n; ++j) v.at(i, j) = a->value.at(i, j) * inv;
  }
  return MakeNode(std::move(v), {a}, [m, n, norms](Node &self) {
    Var a = self.parents[0];
    if (!a->requires_grad) return;
    Tensor &ga = a->g();
    for (int64_t i = 0; i < m; ++i) {
      if (norms[i] <= 0) {  // zero row passed through
        for (int64_t j = 0; j < n; ++j)
          ga.at(i, j) += self.grad.at(i, j);
        continue;
      }
      double dot = 0.0;
      for (int64_t j = 0; j < n; ++j)
        dot += self.grad.at(i, j) * self.value.at(i, j);
      const double inv = 1.0 / norms[i];
      for (int64_t j = 0; j < n; ++j)
        ga.at(i, j) += (self.grad.at(i, j) - self.value.at(i, j) * dot) * inv;
    }
  });
}

Var BilinearWarp(const Var &x, Tensor xy, int64_t oh, int64_t ow) {
  const auto &s = x->value.shape();
  ADST_CHECK(s.size() == 3, "BilinearWarp: input must be [C,H,W]");
  ADST_CHECK(xy.rank() == 2 && xy.dim(1) == 2 && xy.dim(0) == oh * ow,
             "BilinearWarp: grid must be [oh*ow, 2]");
  const int64_t c = s[0], h = s[1], w = s[2];
  Tensor v({c, oh, ow});
  kernels::BilinearSample(x->value.data(), c, h, w, xy.data(), oh * ow,
                          v.data());
  auto grid = std::make_shared<Tensor>(std::move(xy));
  return MakeNode(std::move(v), {x}, [grid, c, h, w, oh, ow](Node &self) {
    Var x = self.parents[0];
    if (!x->requires_grad) return;
    Tensor &gx = x->g();
    const int64_t n = oh * ow;
    for (int64_t i = 0; i < n; ++i) {
      const double px =
          std::clamp((*grid)[2 * i], 0.0, static_cast<double>(w - 1));
      const double py =
          std::clamp((*grid)[2 * i + 1], 0.0, static_cast<double>(h - 1));
      const int64_t x0 = static_cast<int64_t>(std::floor(px));
      const int64_t y0 = static_cast<int64_t>(std::floor(py));
      const int64_t x1 = std::min(x0 + 1, w - 1);
      const int64_t y1 = std::min(y0 + 1, h - 1);
      const double fx = px - static_cast<double>(x0);
      const double fy = py - static_cast<double>(y0);
      for (int64_t ch = 0; ch < c; ++ch) {
        const double g = self.grad[ch * n + i];
        double *p = gx.data() + ch * h * w;
        p[y0 * w + x0] += g * (1 - fy) * (1 - fx);
        p[y0 * w + x1] += g * (1 - fy) * fx;
        p[y1 * w + x0] += g * fy * (1 - fx);
        p[y1 * w + x1] += g * fy * fx;
      }
    }
  });
}

}  // namespace ag
}  // namespace adst
