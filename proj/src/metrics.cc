// adst/metrics.cc

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

#include "adst/metrics.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

#include "json.hpp"

namespace adst {
namespace metrics {

namespace {

constexpr int kMouthFirst = 48, kMouthLast = 67;
constexpr int kInnerLipFirst = 60, kInnerLipLast = 67;

struct Box {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();

  void Add(const Landmarks68 &lm) {
    for (int i = 0; i < Landmarks68::kPoints; ++i) {
      min_x = std::min(min_x, lm.x(i));
      max_x = std::max(max_x, lm.x(i));
      min_y = std::min(min_y, lm.y(i));
      max_y = std::max(max_y, lm.y(i));
    }
  }
  double Diag() const {
    const double w = max_x - min_x, h = max_y - min_y;
    return std::max(std::sqrt(w * w + h * h), 1e-12);
  }
  double Area() const {
    return std::max((max_x - min_x) * (max_y - min_y), 1e-12);
  }
};

Box BoxOf(const LandmarkSequence &seq, size_t start, size_t len) {
  Box b;
  for (size_t t = start; t < start + len; ++t) b.Add(seq[t]);
  return b;
}

// Sum over a point range of per-point 2D distances between two frames.
double FrameDistSum(const Landmarks68 &a, const Landmarks68 &b, int first,
                    int last) {
  double acc = 0.0;
  for (int i = first; i <= last; ++i) {
    const double dx = a.x(i) - b.x(i), dy = a.y(i) - b.y(i);
    acc += std::sqrt(dx * dx + dy * dy);
  }
  return acc;
}

double InnerLipArea(const Landmarks68 &lm) {
  double acc = 0.0;
  for (int i = kInnerLipFirst; i <= kInnerLipLast; ++i) {
    const int j = i == kInnerLipLast ? kInnerLipFirst : i + 1;
    acc += lm.x(i) * lm.y(j) - lm.x(j) * lm.y(i);
  }
  return 0.5 * std::fabs(acc);
}

double InnerLipPerimeter(const Landmarks68 &lm) {
  double acc = 0.0;
  for (int i = kInnerLipFirst; i <= kInnerLipLast; ++i) {
    const int j = i == kInnerLipLast ? kInnerLipFirst : i + 1;
    const double dx = lm.x(i) - lm.x(j), dy = lm.y(i) - lm.y(j);
    acc += std::sqrt(dx * dx + dy * dy);
  }
  return acc;
}

LandmarkSequence Velocities(const LandmarkSequence &seq) {
  LandmarkSequence v(seq.size() - 1);
  for (size_t t = 0; t + 1 < seq.size(); ++t)
    for (size_t i = 0; i < seq[t].p.size(); ++i)
      v[t].p[i] = seq[t + 1].p[i] - seq[t].p[i];
  return v;
}

}  // namespace

double MetricDl(const LandmarkSequence &a, const LandmarkSequence &b) {
  ADST_CHECK(a.size() == b.size(), "MetricDl: mismatched window lengths");
  ADST_CHECK(!a.empty(), "MetricDl: empty window");
  double acc = 0.0;
  for (size_t t = 0; t < a.size(); ++t)
    acc += FrameDistSum(a[t], b[t], 0, Landmarks68::kPoints - 1);
  const double mean =
      acc / (static_cast<double>(a.size()) * Landmarks68::kPoints);
  return mean / BoxOf(a, 0, a.size()).Diag() * 100.0;
}

double MetricDv(const LandmarkSequence &a, const LandmarkSequence &b) {
  ADST_CHECK(a.size() == b.size(), "MetricDv: mismatched window lengths");
  ADST_CHECK(a.size() >= 2, "MetricDv: needs at least 2 frames");
  const LandmarkSequence va = Velocities(a), vb = Velocities(b);
  double acc = 0.0;
  for (size_t t = 0; t < va.size(); ++t)
    acc += FrameDistSum(va[t], vb[t], 0, Landmarks68::kPoints - 1);
  const double mean =
      acc / (static_cast<double>(va.size()) * Landmarks68::kPoints);
  // Normalized by the reference face box, not the velocity extent.
  return mean / BoxOf(a, 0, a.size()).Diag() * 100.0;
}

double MetricDa(const LandmarkSequence &a, const LandmarkSequence &b) {
  ADST_CHECK(a.size() == b.size(), "MetricDa: mismatched window lengths");
  ADST_CHECK(!a.empty(), "MetricDa: empty window");
  for (const auto &lm : a)
    ADST_CHECK(InnerLipPerimeter(lm) > 0.0,
               "MetricDa: degenerate inner-lip contour");
  for (const auto &lm : b)
    ADST_CHECK(InnerLipPerimeter(lm) > 0.0,
               "MetricDa: degenerate inner-lip contour");
  double acc = 0.0;
  for (size_t t = 0; t < a.size(); ++t)
    acc += std::fabs(InnerLipArea(a[t]) - InnerLipArea(b[t]));
  const double mean = acc / static_cast<double>(a.size());
  return mean / BoxOf(a, 0, a.size()).Area() * 100.0;
}

double MetricLmd(const LandmarkSequence &a, const LandmarkSequence &b) {
  ADST_CHECK(a.size() == b.size(), "MetricLmd: mismatched window lengths");
  ADST_CHECK(!a.empty(), "MetricLmd: empty window");
  double acc = 0.0;
  for (size_t t = 0; t < a.size(); ++t)
    acc += FrameDistSum(a[t], b[t], kMouthFirst, kMouthLast);
  const int n_pts = kMouthLast - kMouthFirst + 1;
  return acc / (static_cast<double>(a.size()) * n_pts);
}

double MetricCpbd(const Image &image) {
  ADST_CHECK(image.channels == 1 || image.channels == 3,
             "MetricCpbd: not an image");
  ADST_CHECK(image.width >= 3 && image.height >= 3,
             "MetricCpbd: image too small");
  const Image gray = image.ToGray();
  const int64_t w = gray.width, h = gray.height;
  auto lum = [&](int64_t y, int64_t x) { return gray.at(0, y, x) * 255.0; };

  constexpr double kEdgeThreshold = 20.0;
  constexpr double kBeta = 3.6;
  constexpr double kSharpProb = 0.63;
  int64_t edges = 0, sharp = 0;
  for (int64_t y = 1; y < h - 1; ++y) {
    for (int64_t x = 1; x < w - 1; ++x) {
      const double gx = (lum(y - 1, x + 1) + 2 * lum(y, x + 1) +
                         lum(y + 1, x + 1)) -
                        (lum(y - 1, x - 1) + 2 * lum(y, x - 1) +
                         lum(y + 1, x - 1));
      if (std::fabs(gx) / 4.0 <= kEdgeThreshold) continue;
      // Marziliano-style horizontal width: distance between the local
      // extrema bracketing the edge along the scan line.
      const int dir = gx > 0 ? 1 : -1;
      int64_t xl = x;
      while (xl > 0 && dir * (lum(y, xl - 1) - lum(y, xl)) < 0) --xl;
      int64_t xr = x;
      while (xr < w - 1 && dir * (lum(y, xr + 1) - lum(y, xr)) > 0) ++xr;
      const double width = static_cast<double>(xr - xl);
      const double contrast = std::fabs(lum(y, xr) - lum(y, xl));
      const double w_jnb = contrast <= 50.0 ? 5.0 : 3.0;
      const double p_blur = 1.0 - std::exp(-std::pow(width / w_jnb, kBeta));
      ++edges;
      if (p_blur <= kSharpProb) ++sharp;
    }
  }
  if (edges == 0) {
    std::cerr << "warning: CPBD found no edges; returning 0\n";
    return 0.0;
  }
  return static_cast<double>(sharp) / static_cast<double>(edges);
}

namespace {

// Per-frame-pair cost matrices with prefix sums along every diagonal so a
// window-aligned sum costs O(1) regardless of F.
class DiagonalSums {
 public:
  DiagonalSums() = default;
  DiagonalSums(std::vector<double> m, int64_t rows, int64_t cols)
      : rows_(rows), cols_(cols), sums_(std::move(m)) {
    offsets_.resize(rows_ + cols_, 0);
    // Re-lay the matrix as concatenated diagonals, prefix-summed in place.
    std::vector<double> diag(sums_.size());
    int64_t off = 0;
    for (int64_t d = -(rows_ - 1); d <= cols_ - 1; ++d) {
      offsets_[d + rows_ - 1] = off;
      int64_t i = d >= 0 ? 0 : -d, j = d >= 0 ? d : 0;
      double acc = 0.0;
      while (i < rows_ && j < cols_) {
        acc += sums_[i * cols_ + j];
        diag[off++] = acc;
        ++i;
        ++j;
      }
    }
    sums_ = std::move(diag);
  }

  // Sum of m[s+f][t+f] for f in [0, len).
  double WindowSum(int64_t s, int64_t t, int64_t len) const {
    const int64_t d = t - s;
    const int64_t k = d >= 0 ? s : t;
    const int64_t off = offsets_[d + rows_ - 1];
    const double hi = sums_[off + k + len - 1];
    return k > 0 ? hi - sums_[off + k - 1] : hi;
  }

 private:
  int64_t rows_ = 0, cols_ = 0;
  std::vector<double> sums_;
  std::vector<int64_t> offsets_;
};

// Caches everything reusable across (F, v) grid cells for one pair of
// sequences and one core metric.
class StyleEngine {
 public:
  StyleEngine(const LandmarkSequence &ref, const LandmarkSequence &gen,
              CoreMetric core)
      : ref_(ref), gen_(gen), core_(core) {
    const int64_t ns = ref.size(), na = gen.size();
    switch (core) {
      case CoreMetric::kDL: {
        costs_ = DiagonalSums(PointCosts(ref, gen, 0, 67), ns, na);
        break;
      }
      case CoreMetric::kDV: {
        const LandmarkSequence vr = Velocities(ref), vg = Velocities(gen);
        costs_ = DiagonalSums(PointCosts(vr, vg, 0, 67), ns - 1, na - 1);
        break;
      }
      case CoreMetric::kLMD: {
        costs_ =
            DiagonalSums(PointCosts(ref, gen, kMouthFirst, kMouthLast), ns, na);
        break;
      }
      case CoreMetric::kMouthArea: {
        std::vector<double> m(ns * na);
        std::vector<double> ar(ns), ag(na);
        for (int64_t i = 0; i < ns; ++i) ar[i] = InnerLipArea(ref[i]);
        for (int64_t j = 0; j < na; ++j) ag[j] = InnerLipArea(gen[j]);
        for (int64_t i = 0; i < ns; ++i)
          for (int64_t j = 0; j < na; ++j)
            m[i * na + j] = std::fabs(ar[i] - ag[j]);
        costs_ = DiagonalSums(std::move(m), ns, na);
        break;
      }
    }
  }

  bool Feasible(WindowSpec spec) const {
    if (spec.F < 1 || spec.v < 1) return false;
    if (core_ == CoreMetric::kDV && spec.F < 2) return false;
    return spec.F <= static_cast<int>(std::min(ref_.size(), gen_.size()));
  }

  double Value(WindowSpec spec) const {
    ADST_CHECK(Feasible(spec), "StyleMetric: infeasible window spec");
    const int64_t f = spec.F, v = spec.v;
    const int64_t kappa_s = (static_cast<int64_t>(ref_.size()) - f) / v;
    const int64_t kappa_a = (static_cast<int64_t>(gen_.size()) - f) / v;
    double total = 0.0;
    for (int64_t ws = 0; ws <= kappa_s; ++ws) {
      const int64_t s = ws * v;
      const Box box = BoxOf(ref_, s, f);
      double best = std::numeric_limits<double>::infinity();
      for (int64_t wa = 0; wa <= kappa_a; ++wa) {
        const int64_t t = wa * v;
        best = std::min(best, WindowMetric(s, t, f, box));
      }
      total += best;
    }
    return total / static_cast<double>(kappa_s + 1);
  }

 private:
  static std::vector<double> PointCosts(const LandmarkSequence &a,
                                        const LandmarkSequence &b, int first,
                                        int last) {
    const int64_t ns = a.size(), na = b.size();
    std::vector<double> m(ns * na);
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < ns; ++i)
      for (int64_t j = 0; j < na; ++j) {
        double acc = 0.0;
        for (int p = first; p <= last; ++p) {
          const double dx = a[i].x(p) - b[j].x(p);
          const double dy = a[i].y(p) - b[j].y(p);
          acc += std::sqrt(dx * dx + dy * dy);
        }
        m[i * na + j] = acc;
      }
    return m;
  }

  double WindowMetric(int64_t s, int64_t t, int64_t f, const Box &box) const {
    switch (core_) {
      case CoreMetric::kDL:
        return costs_.WindowSum(s, t, f) /
               (static_cast<double>(f) * Landmarks68::kPoints) / box.Diag() *
               100.0;
      case CoreMetric::kDV:
        return costs_.WindowSum(s, t, f - 1) /
               (static_cast<double>(f - 1) * Landmarks68::kPoints) /
               box.Diag() * 100.0;
      case CoreMetric::kLMD:
        return costs_.WindowSum(s, t, f) /
               (static_cast<double>(f) * (kMouthLast - kMouthFirst + 1));
      case CoreMetric::kMouthArea:
        return costs_.WindowSum(s, t, f) / static_cast<double>(f) /
               box.Area() * 100.0;
    }
    return 0.0;
  }

  const LandmarkSequence &ref_, &gen_;
  CoreMetric core_;
  DiagonalSums costs_;
};

}  // namespace

double StyleMetric(const LandmarkSequence &reference,
                   const LandmarkSequence &generated, WindowSpec spec,
                   CoreMetric core) {
  ADST_CHECK(!reference.empty() && !generated.empty(),
             "StyleMetric: empty sequence");
  ADST_CHECK(spec.F >= 1 && spec.v >= 1, "StyleMetric: F and v must be >= 1");
  ADST_CHECK(spec.F <= static_cast<int>(std::min(reference.size(),
                                                 generated.size())),
             "StyleMetric: window larger than sequence");
  StyleEngine engine(reference, generated, core);
  return engine.Value(spec);
}

StyleGridResult StyleMetricGrid(const LandmarkSequence &reference,
                                const LandmarkSequence &generated,
                                const std::vector<int> &f_set,
                                const std::vector<int> &v_set,
                                CoreMetric core) {
  ADST_CHECK(!reference.empty() && !generated.empty(),
             "StyleMetricGrid: empty sequence");
  StyleEngine engine(reference, generated, core);
  std::vector<WindowSpec> specs;
  for (int f : f_set)
    for (int v : v_set)
      if (engine.Feasible({f, v})) specs.push_back({f, v});
  ADST_CHECK(!specs.empty(), "StyleMetricGrid: no feasible (F, v) pair");

  StyleGridResult out;
  out.cells.resize(specs.size());
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < static_cast<int64_t>(specs.size()); ++i)
    out.cells[i] = {specs[i].F, specs[i].v, engine.Value(specs[i])};
  double acc = 0.0;  // fixed reduction order for reproducibility
  for (const GridCell &c : out.cells) acc += c.value;
  out.mean = acc / static_cast<double>(out.cells.size());
  return out;
}

std::vector<int> DefaultFGrid() {
  std::vector<int> f(100);
  std::iota(f.begin(), f.end(), 1);
  return f;
}

std::vector<int> DefaultVGrid() {
  std::vector<int> v(20);
  std::iota(v.begin(), v.end(), 1);
  return v;
}

std::string MetricReport::ToJson() const {
  nlohmann::json j;
  j["d_l"] = d_l;
  j["d_v"] = d_v;
  j["d_a"] = d_a;
  j["lmd"] = lmd;
  j["sld"] = sld;
  j["slv"] = slv;
  j["smd"] = smd;
  if (has_cpbd) j["cpbd"] = cpbd;
  auto grid_json = [](const std::vector<GridCell> &g) {
    nlohmann::json arr = nlohmann::json::array();
    for (const GridCell &c : g)
      arr.push_back({{"F", c.F}, {"v", c.v}, {"value", c.value}});
    return arr;
  };
  j["sld_grid"] = grid_json(sld_grid);
  j["slv_grid"] = grid_json(slv_grid);
  j["smd_grid"] = grid_json(smd_grid);
  return j.dump(2);
}

MetricReport Evaluate(const LandmarkSequence &reference,
                      const LandmarkSequence &generated,
                      const std::vector<Image> &frames) {
  ADST_CHECK(reference.size() >= 2 && generated.size() >= 2,
             "Evaluate: sequences need at least 2 frames");
  MetricReport report;
  const size_t n = std::min(reference.size(), generated.size());
  const LandmarkSequence ra(reference.begin(), reference.begin() + n);
  const LandmarkSequence ga(generated.begin(), generated.begin() + n);
  report.d_l = MetricDl(ra, ga);
  report.d_v = MetricDv(ra, ga);
  report.d_a = MetricDa(ra, ga);
  report.lmd = MetricLmd(ra, ga);

  const auto f_grid = DefaultFGrid();
  const auto v_grid = DefaultVGrid();
  auto sld = StyleMetricGrid(reference, generated, f_grid, v_grid,
                             CoreMetric::kDL);
  auto slv = StyleMetricGrid(reference, generated, f_grid, v_grid,
                             CoreMetric::kDV);
  auto smd = StyleMetricGrid(reference, generated, f_grid, v_grid,
                             CoreMetric::kLMD);
  report.sld = sld.mean;
  report.slv = slv.mean;
  report.smd = smd.mean;
  report.sld_grid = std::move(sld.cells);
  report.slv_grid = std::move(slv.cells);
  report.smd_grid = std::move(smd.cells);

  if (!frames.empty()) {
    double acc = 0.0;
    for (const Image &im : frames) acc += MetricCpbd(im);
    report.cpbd = acc / static_cast<double>(frames.size());
    report.has_cpbd = true;
  }
  return report;
}

namespace naive {

double StyleMetric(const LandmarkSequence &reference,
                   const LandmarkSequence &generated, WindowSpec spec,
                   CoreMetric core) {
  ADST_CHECK(spec.F >= 1 && spec.v >= 1, "StyleMetric: F and v must be >= 1");
  ADST_CHECK(spec.F <= static_cast<int>(std::min(reference.size(),
                                                 generated.size())),
             "StyleMetric: window larger than sequence");
  const int64_t f = spec.F, v = spec.v;
  auto window = [f](const LandmarkSequence &seq, int64_t start) {
    return LandmarkSequence(seq.begin() + start, seq.begin() + start + f);
  };
  auto core_fn = [core](const LandmarkSequence &a, const LandmarkSequence &b) {
    switch (core) {
      case CoreMetric::kDL:
        return MetricDl(a, b);
      case CoreMetric::kDV:
        return MetricDv(a, b);
      case CoreMetric::kLMD:
        return MetricLmd(a, b);
      case CoreMetric::kMouthArea:
        return MetricDa(a, b);
    }
    return 0.0;
  };
  const int64_t kappa_s = (static_cast<int64_t>(reference.size()) - f) / v;
  const int64_t kappa_a = (static_cast<int64_t>(generated.size()) - f) / v;
  double total = 0.0;
  for (int64_t ws = 0; ws <= kappa_s; ++ws) {
    const LandmarkSequence wr = window(reference, ws * v);
    double best = std::numeric_limits<double>::infinity();
    for (int64_t wa = 0; wa <= kappa_a; ++wa)
      best = std::min(best, core_fn(wr, window(generated, wa * v)));
    total += best;
  }
  return total / static_cast<double>(kappa_s + 1);
}

}  // namespace naive

}  // namespace metrics
}  // namespace adst
