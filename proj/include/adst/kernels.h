// adst/kernels.h

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

#ifndef ADST_KERNELS_H_
#define ADST_KERNELS_H_

#include <cstdint>

// Compute kernels backing the tensor ops. Every kernel has an optimized
// entry point (vectorized, OpenMP where the loop is data-parallel) and a
// plain serial reference under kernels::serial used by the tests and the
// kernel benchmark.

namespace adst {
namespace kernels {

// C = alpha * op(A) * op(B) + beta * C, row-major.
// op(A) is m x k, op(B) is k x n, C is m x n with leading dimension ldc.
void Gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
          double alpha, const double *a, int64_t lda, const double *b,
          int64_t ldb, double beta, double *c, int64_t ldc);

// input [C,H,W] -> col [C*kh*kw, oh*ow] for a stride/pad convolution.
void Im2Col(const double *in, int64_t channels, int64_t h, int64_t w,
            int64_t kh, int64_t kw, int64_t stride, int64_t pad, double *col);

// Scatter-add transpose of Im2Col; `in` is accumulated into, caller zeroes.
void Col2Im(const double *col, int64_t channels, int64_t h, int64_t w,
            int64_t kh, int64_t kw, int64_t stride, int64_t pad, double *in);

// out[c, i] = img sampled at (x[i], y[i]) with bilinear weights; coordinates
// outside the image clamp to the border. xy is [n][2] in (x, y) pixel units.
void BilinearSample(const double *img, int64_t channels, int64_t h, int64_t w,
                    const double *xy, int64_t n, double *out);

inline int64_t ConvOutDim(int64_t in, int64_t k, int64_t stride, int64_t pad) {
  return (in + 2 * pad - k) / stride + 1;
}

namespace serial {

void Gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
          double alpha, const double *a, int64_t lda, const double *b,
          int64_t ldb, double beta, double *c, int64_t ldc);

// Direct (no im2col) convolution: input [C,H,W], weight [OC,C,kh,kw],
// bias [OC] or nullptr, output [OC,OH,OW].
void Conv2d(const double *in, int64_t channels, int64_t h, int64_t w,
            const double *weight, int64_t out_channels, int64_t kh, int64_t kw,
            int64_t stride, int64_t pad, const double *bias, double *out);

void BilinearSample(const double *img, int64_t channels, int64_t h, int64_t w,
                    const double *xy, int64_t n, double *out);

}  // namespace serial
}  // namespace kernels
}  // namespace adst

#endif  // ADST_KERNELS_H_
