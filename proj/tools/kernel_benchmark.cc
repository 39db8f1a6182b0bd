// tools/kernel_benchmark.cc

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

// Times each optimized kernel against its serial reference and reports
// GFLOP/s plus the speedup; also cross-checks the outputs agree.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#include "adst/kernels.h"
#include "adst/tensor.h"

using namespace adst;

namespace {

double TimeSeconds(const std::function<void()> &fn, int reps) {
  fn();  // warm up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count() / reps;
}

double MaxAbsDiff(const std::vector<double> &a, const std::vector<double> &b) {
  double m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

void BenchGemm(int64_t n, Rng &rng) {
  const Tensor a = Tensor::Randn({n, n}, rng), b = Tensor::Randn({n, n}, rng);
  std::vector<double> c_opt(n * n, 0.0), c_ref(n * n, 0.0);
  const double flops = 2.0 * n * n * n;
  const int reps = n <= 256 ? 10 : 3;
  const double t_opt = TimeSeconds(
      [&] {
        kernels::Gemm(false, false, n, n, n, 1.0, a.data(), n, b.data(), n, 0.0,
                      c_opt.data(), n);
      },
      reps);
  const double t_ref = TimeSeconds(
      [&] {
        kernels::serial::Gemm(false, false, n, n, n, 1.0, a.data(), n, b.data(),
                              n, 0.0, c_ref.data(), n);
      },
      reps);
  std::printf("gemm %4lld: opt %7.2f GFLOP/s  serial %7.2f GFLOP/s  "
              "speedup %5.2fx  maxdiff %.2e\n",
              static_cast<long long>(n), flops / t_opt * 1e-9,
              flops / t_ref * 1e-9, t_ref / t_opt, MaxAbsDiff(c_opt, c_ref));
}

void BenchConv(int64_t ch, int64_t hw, Rng &rng) {
  const int64_t oc = ch, k = 3, stride = 1, pad = 1;
  const Tensor in = Tensor::Randn({ch, hw, hw}, rng);
  const Tensor w = Tensor::Randn({oc, ch, k, k}, rng);
  const int64_t oh = kernels::ConvOutDim(hw, k, stride, pad);
  std::vector<double> out_opt(oc * oh * oh, 0.0), out_ref(oc * oh * oh, 0.0);
  std::vector<double> col(ch * k * k * oh * oh, 0.0);
  const double flops = 2.0 * oc * ch * k * k * oh * oh;
  const double t_opt = TimeSeconds(
      [&] {
        kernels::Im2Col(in.data(), ch, hw, hw, k, k, stride, pad, col.data());
        kernels::Gemm(false, false, oc, oh * oh, ch * k * k, 1.0, w.data(),
                      ch * k * k, col.data(), oh * oh, 0.0, out_opt.data(),
                      oh * oh);
      },
      3);
  const double t_ref = TimeSeconds(
      [&] {
        kernels::serial::Conv2d(in.data(), ch, hw, hw, w.data(), oc, k, k,
                                stride, pad, nullptr, out_ref.data());
      },
      3);
  std::printf("conv %3lldch %3lldpx: opt %7.2f GFLOP/s  serial %7.2f GFLOP/s  "
              "speedup %5.2fx  maxdiff %.2e\n",
              static_cast<long long>(ch), static_cast<long long>(hw),
              flops / t_opt * 1e-9, flops / t_ref * 1e-9, t_ref / t_opt,
              MaxAbsDiff(out_opt, out_ref));
}

void BenchBilinear(int64_t n, Rng &rng) {
  const int64_t ch = 8, hw = 256;
  const Tensor img = Tensor::Randn({ch, hw, hw}, rng);
  std::vector<double> xy(2 * n);
  for (int64_t i = 0; i < n; ++i) {
    xy[2 * i] = UniformReal(rng, -1.0, hw);
    xy[2 * i + 1] = UniformReal(rng, -1.0, hw);
  }
  std::vector<double> out_opt(ch * n, 0.0), out_ref(ch * n, 0.0);
  const double t_opt = TimeSeconds(
      [&] {
        kernels::BilinearSample(img.data(), ch, hw, hw, xy.data(), n,
                                out_opt.data());
      },
      10);
  const double t_ref = TimeSeconds(
      [&] {
        kernels::serial::BilinearSample(img.data(), ch, hw, hw, xy.data(), n,
                                        out_ref.data());
      },
      10);
  std::printf("bilinear %7lld pts: opt %8.2f Mpts/s  serial %8.2f Mpts/s  "
              "speedup %5.2fx  maxdiff %.2e\n",
              static_cast<long long>(n), n / t_opt * 1e-6, n / t_ref * 1e-6,
              t_ref / t_opt, MaxAbsDiff(out_opt, out_ref));
}

}  // namespace

int main() {
  Rng rng(7);
  for (int64_t n : {128, 256, 512}) BenchGemm(n, rng);
  BenchConv(16, 128, rng);
  BenchConv(64, 64, rng);
  BenchBilinear(1 << 16, rng);
  BenchBilinear(1 << 20, rng);
  return 0;
}
