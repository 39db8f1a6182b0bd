// adst/metrics.h

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

#ifndef ADST_METRICS_H_
#define ADST_METRICS_H_

#include <string>
#include <vector>

#include "adst/geometry.h"
#include "adst/image.h"

namespace adst {
namespace metrics {

// Temporal chunking: windows of F frames starting at 0, v, 2v, ...,
// kappa*v with kappa = floor((N - F) / v).
struct WindowSpec {
  int F = 1;
  int v = 1;
};

enum class CoreMetric { kDL, kDV, kLMD, kMouthArea };

// Percent metrics are normalized by the reference (first argument) face
// bounding box: D-L and D-V by its 2D diagonal, D-A by its area.
double MetricDl(const LandmarkSequence &a, const LandmarkSequence &b);
double MetricDv(const LandmarkSequence &a, const LandmarkSequence &b);
double MetricDa(const LandmarkSequence &a, const LandmarkSequence &b);
// Mean mouth-point (48-67) 2D distance in raw pixels.
double MetricLmd(const LandmarkSequence &a, const LandmarkSequence &b);

// Sharpness in [0,1]; higher is sharper. Images with no detected edges
// score 0 with a stderr warning.
double MetricCpbd(const Image &image);

// Mean over reference windows of the min over generated windows of the
// core metric. Windowed variants: SLD (D-L core), SLV (D-V core),
// SMD (LMD core as published; kMouthArea gives the area-based reading).
double StyleMetric(const LandmarkSequence &reference,
                   const LandmarkSequence &generated, WindowSpec spec,
                   CoreMetric core);

struct GridCell {
  int F, v;
  double value;
};
struct StyleGridResult {
  double mean = 0.0;
  std::vector<GridCell> cells;
};

// Evaluates the style metric over all feasible (F, v) pairs; infeasible
// cells are skipped, the headline value is the unweighted cell mean.
StyleGridResult StyleMetricGrid(const LandmarkSequence &reference,
                                const LandmarkSequence &generated,
                                const std::vector<int> &f_set,
                                const std::vector<int> &v_set,
                                CoreMetric core);

std::vector<int> DefaultFGrid();  // 1..100
std::vector<int> DefaultVGrid();  // 1..20

struct MetricReport {
  double d_l = 0, d_v = 0, d_a = 0, lmd = 0;
  double sld = 0, slv = 0, smd = 0;
  double cpbd = 0;
  bool has_cpbd = false;
  std::vector<GridCell> sld_grid, slv_grid, smd_grid;

  std::string ToJson() const;
};

// Full report: frame-aligned metrics on the common prefix, style metrics
// over the grid, CPBD averaged over `frames` when provided.
MetricReport Evaluate(const LandmarkSequence &reference,
                      const LandmarkSequence &generated,
                      const std::vector<Image> &frames = {});

namespace naive {
// Window-enumeration reference: materializes every window pair and calls
// the public core metrics. Cross-validates the optimized implementation.
double StyleMetric(const LandmarkSequence &reference,
                   const LandmarkSequence &generated, WindowSpec spec,
                   CoreMetric core);
}  // namespace naive

}  // namespace metrics
}  // namespace adst

#endif  // ADST_METRICS_H_
