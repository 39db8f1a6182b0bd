// adst/kernels.cc

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

#include "adst/kernels.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace adst {
namespace kernels {

using MatMap = Eigen::Map<
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>,
    0, Eigen::OuterStride<>>;
using ConstMatMap = Eigen::Map<
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                        Eigen::RowMajor>,
    0, Eigen::OuterStride<>>;

void Gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
          double alpha, const double *a, int64_t lda, const double *b,
          int64_t ldb, double beta, double *c, int64_t ldc) {
  MatMap cm(c, m, n, Eigen::OuterStride<>(ldc));
  ConstMatMap am(a, trans_a ? k : m, trans_a ? m : k,
                 Eigen::OuterStride<>(lda));
  ConstMatMap bm(b, trans_b ? n : k, trans_b ? k : n,
                 Eigen::OuterStride<>(ldb));
  if (beta == 0.0)
    cm.setZero();
  else if (beta != 1.0)
    cm *= beta;
  if (!trans_a && !trans_b)
    cm.noalias() += alpha * (am * bm);
  else if (trans_a && !trans_b)
    cm.noalias() += alpha * (am.transpose() * bm);
  else if (!trans_a && trans_b)
    cm.noalias() += alpha * (am * bm.transpose());
  else
    cm.noalias() += alpha * (am.transpose() * bm.transpose());
}

void Im2Col(const double *in, int64_t channels, int64_t h, int64_t w,
            int64_t kh, int64_t kw, int64_t stride, int64_t pad, double *col) {
  const int64_t oh = ConvOutDim(h, kh, stride, pad);
  const int64_t ow = ConvOutDim(w, kw, stride, pad);
  const int64_t rows = channels * kh * kw;
#pragma omp parallel for schedule(static)
  for (int64_t r = 0; r < rows; ++r) {
    const int64_t c = r / (kh * kw);
    const int64_t ky = (r / kw) % kh;
    const int64_t kx = r % kw;
    double *dst = col + r * oh * ow;
    const double *src = in + c * h * w;
    for (int64_t oy = 0; oy < oh; ++oy) {
      const int64_t iy = oy * stride - pad + ky;
      if (iy < 0 || iy >= h) {
        std::fill(dst, dst + ow, 0.0);
        dst += ow;
        continue;
      }
      for (int64_t ox = 0; ox < ow; ++ox) {
        const int64_t ix = ox * stride - pad + kx;
        *dst++ = (ix >= 0 && ix < w) ? src[iy * w + ix] : 0.0;
      }
    }
  }
}

void Col2Im(const double *col, int64_t channels, int64_t h, int64_t w,
            int64_t kh, int64_t kw, int64_t stride, int64_t pad, double *in) {
  const int64_t oh = ConvOutDim(h, kh, stride, pad);
  const int64_t ow = ConvOutDim(w, kw, stride, pad);
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < channels; ++c) {
    for (int64_t ky = 0; ky < kh; ++ky) {
      for (int64_t kx = 0; kx < kw; ++kx) {
        const int64_t r = (c * kh + ky) * kw + kx;
        const double *src = col + r * oh * ow;
        double *dst = in + c * h * w;
        for (int64_t oy = 0; oy < oh; ++oy) {
          const int64_t iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) {
            src += ow;
            continue;
          }
          for (int64_t ox = 0; ox < ow; ++ox) {
            const int64_t ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w) dst[iy * w + ix] += src[ox];
          }
          src += ow;
        }
      }
    }
  }
}

void BilinearSample(const double *img, int64_t channels, int64_t h, int64_t w,
                    const double *xy, int64_t n, double *out) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    double x = xy[2 * i];
    double y = xy[2 * i + 1];
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
    const int64_t x0 = static_cast<int64_t>(std::floor(x));
    const int64_t y0 = static_cast<int64_t>(std::floor(y));
    const int64_t x1 = std::min(x0 + 1, w - 1);
    const int64_t y1 = std::min(y0 + 1, h - 1);
    const double fx = x - static_cast<double>(x0);
    const double fy = y - static_cast<double>(y0);
    for (int64_t c = 0; c < channels; ++c) {
      const double *p = img + c * h * w;
      const double v =
          (1 - fy) * ((1 - fx) * p[y0 * w + x0] + fx * p[y0 * w + x1]) +
          fy * ((1 - fx) * p[y1 * w + x0] + fx * p[y1 * w + x1]);
      out[c * n + i] = v;
    }
  }
}

namespace serial {

void Gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
          double alpha, const double *a, int64_t lda, const double *b,
          int64_t ldb, double beta, double *c, int64_t ldc) {
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int64_t p = 0; p < k; ++p) {
        const double av = trans_a ? a[p * lda + i] : a[i * lda + p];
        const double bv = trans_b ? b[j * ldb + p] : b[p * ldb + j];
        acc += av * bv;
      }
      c[i * ldc + j] = alpha * acc + (beta == 0.0 ? 0.0 : beta * c[i * ldc + j]);
    }
  }
}

void Conv2d(const double *in, int64_t channels, int64_t h, int64_t w,
            const double *weight, int64_t out_channels, int64_t kh, int64_t kw,
            int64_t stride, int64_t pad, const double *bias, double *out) {
  const int64_t oh = ConvOutDim(h, kh, stride, pad);
  const int64_t ow = ConvOutDim(w, kw, stride, pad);
  for (int64_t oc = 0; oc < out_channels; ++oc) {
    for (int64_t oy = 0; oy < oh; ++oy) {
      for (int64_t ox = 0; ox < ow; ++ox) {
        double acc = bias ? bias[oc] : 0.0;
        for (int64_t c = 0; c < channels; ++c) {
          for (int64_t ky = 0; ky < kh; ++ky) {
            const int64_t iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= h) continue;
            for (int64_t kx = 0; kx < kw; ++kx) {
              const int64_t ix = ox * stride - pad + kx;
              if (ix < 0 || ix >= w) continue;
              acc += in[(c * h + iy) * w + ix] *
                     weight[((oc * channels + c) * kh + ky) * kw + kx];
            }
          }
        }
        out[(oc * oh + oy) * ow + ox] = acc;
      }
    }
  }
}

void BilinearSample(const double *img, int64_t channels, int64_t h, int64_t w,
                    const double *xy, int64_t n, double *out) {
  for (int64_t i = 0; i < n; ++i) {
    double x = std::clamp(xy[2 * i], 0.0, static_cast<double>(w - 1));
    double y = std::clamp(xy[2 * i + 1], 0.0, static_cast<double>(h - 1));
    const int64_t x0 = static_cast<int64_t>(std::floor(x));
    const int64_t y0 = static_cast<int64_t>(std::floor(y));
    const int64_t x1 = std::min(x0 + 1, w - 1);
    const int64_t y1 = std::min(y0 + 1, h - 1);
    const double fx = x - static_cast<double>(x0);
    const double fy = y - static_cast<double>(y0);
    for (int64_t c = 0; c < channels; ++c) {
      const double *p = img + c * h * w;
      out[c * n + i] =
          (1 - fy) * ((1 - fx) * p[y0 * w + x0] + fx * p[y0 * w + x1]) +
          fy * ((1 - fx) * p[y1 * w + x0] + fx * p[y1 * w + x1]);
    }
  }
}

}  // namespace serial
}  // namespace kernels
}  // namespace adst
