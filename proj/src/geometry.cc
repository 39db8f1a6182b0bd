// adst/geometry.cc

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

#include "adst/geometry.h"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace adst {

void PoseParams::Validate() const {
  for (double v : rotation)
    ADST_CHECK(std::isfinite(v), "PoseParams: non-finite rotation");
  for (double v : translation)
    ADST_CHECK(std::isfinite(v), "PoseParams: non-finite translation");
  for (double v : expression)
    ADST_CHECK(std::isfinite(v), "PoseParams: non-finite expression");
  const auto &r = rotation;
  // R R^T = I within 1e-6
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += r[3 * i + k] * r[3 * j + k];
      const double expect = i == j ? 1.0 : 0.0;
      ADST_CHECK(std::fabs(dot - expect) < 1e-6,
                 "PoseParams: rotation not orthonormal");
    }
  }
  const double det =
      r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6]) +
      r[2] * (r[3] * r[7] - r[4] * r[6]);
  ADST_CHECK(std::fabs(det - 1.0) < 1e-6, "PoseParams: det(R) != 1");
}

namespace geometry {

std::array<double, 9> RotvecToMatrix(const std::array<double, 3> &rotvec) {
  for (double v : rotvec)
    ADST_CHECK(std::isfinite(v), "RotvecToMatrix: non-finite input");
  const double theta = std::sqrt(rotvec[0] * rotvec[0] +
                                 rotvec[1] * rotvec[1] + rotvec[2] * rotvec[2]);
  std::array<double, 9> r{1, 0, 0, 0, 1, 0, 0, 0, 1};
  if (theta < 1e-14) return r;
  const double kx = rotvec[0] / theta, ky = rotvec[1] / theta,
               kz = rotvec[2] / theta;
  const double c = std::cos(theta), s = std::sin(theta), v = 1.0 - c;
  // Column-convention Rodrigues, then transposed for the row-vector
  // convention p' = p * R.
  const double m[9] = {
      c + kx * kx * v,      kx * ky * v - kz * s, kx * kz * v + ky * s,
      ky * kx * v + kz * s, c + ky * ky * v,      ky * kz * v - kx * s,
      kz * kx * v - ky * s, kz * ky * v + kx * s, c + kz * kz * v};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[3 * i + j] = m[3 * j + i];
  return r;
}

KeypointSet RecomposeKeypoints(const KeypointSet &c, const PoseParams &pose) {
  c.Validate();
  pose.Validate();
  ADST_CHECK(pose.expression.size() == c.points.size(),
             "RecomposeKeypoints: expression count does not match keypoints");
  KeypointSet out;
  out.points.resize(c.points.size());
  const auto &r = pose.rotation;
  for (int k = 0; k < c.K(); ++k) {
    for (int j = 0; j < 3; ++j) {
      double acc = pose.translation[j] + pose.expression[3 * k + j];
      for (int i = 0; i < 3; ++i) acc += c.at(k, i) * r[3 * i + j];
      out.at(k, j) = acc;
    }
  }
  return out;
}

std::array<double, 204> VectorizeLandmarks(const Landmarks68 &lm) {
  lm.Validate();
  std::array<double, 204> v;
  std::copy(lm.p.begin(), lm.p.end(), v.begin());
  return v;
}

Landmarks68 UnvectorizeLandmarks(const std::array<double, 204> &v) {
  Landmarks68 lm;
  std::copy(v.begin(), v.end(), lm.p.begin());
  lm.Validate();
  return lm;
}

const std::vector<LandmarkGroup> &LandmarkGroups() {
  static const std::vector<LandmarkGroup> kGroups = {
      {"jaw", 0, 16, false},        {"brow_left", 17, 21, false},
      {"brow_right", 22, 26, false}, {"nose_bridge", 27, 30, false},
      {"nose_base", 31, 35, false}, {"eye_left", 36, 41, true},
      {"eye_right", 42, 47, true},  {"lips_outer", 48, 59, true},
      {"lips_inner", 60, 67, true}};
  return kGroups;
}

void WriteLandmarkSequence(const std::string &path,
                           const LandmarkSequence &seq) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  for (size_t t = 0; t < seq.size(); ++t) {
    nlohmann::json rec;
    rec["frame"] = t;
    auto &pts = rec["points"] = nlohmann::json::array();
    for (int i = 0; i < Landmarks68::kPoints; ++i)
      pts.push_back({seq[t].x(i), seq[t].y(i), seq[t].z(i)});
    f << rec.dump() << "\n";
  }
  if (!f) throw IoError("write failed: " + path);
}

LandmarkSequence ReadLandmarkSequence(const std::string &path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open landmark file: " + path);
  LandmarkSequence seq;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception &e) {
      throw IoError("bad landmark record in " + path + ": " + e.what());
    }
    const auto &pts = rec.at("points");
    ADST_CHECK(pts.size() == Landmarks68::kPoints,
               "landmark record must have 68 points: " + path);
    Landmarks68 lm;
    for (int i = 0; i < Landmarks68::kPoints; ++i) {
      lm.x(i) = pts[i][0].get<double>();
      lm.y(i) = pts[i][1].get<double>();
      lm.z(i) = pts[i][2].get<double>();
    }
    lm.Validate();
    seq.push_back(lm);
  }
  return seq;
}

Landmarks68 SynthFace(const FaceParams &params) {
  ADST_CHECK(params.scale > 0, "SynthFace: scale must be positive");
  ADST_CHECK(params.eye_open >= 0 && params.mouth_open >= 0,
             "SynthFace: openings must be non-negative");
  Landmarks68 lm;
  auto set = [&lm](int i, double x, double y, double z) {
    lm.x(i) = x;
    lm.y(i) = y;
    lm.z(i) = z;
  };

  // Jaw 0-16: lower face ellipse, chin at index 8.
  for (int i = 0; i <= 16; ++i) {
    const double t = (-90.0 + 180.0 * i / 16.0) * kPi / 180.0;
    set(i, 110.0 * std::sin(t), 150.0 * std::cos(t), 12.0 * (1 - std::cos(t)));
  }
  // Brows 17-26: two arches.
  for (int i = 0; i < 5; ++i) {
    const double u = i / 4.0;
    const double arch = 10.0 * std::sin(kPi * u);
    set(17 + i, -85.0 + 60.0 * u, -62.0 - arch, -4.0);
    set(22 + i, 25.0 + 60.0 * u, -62.0 - 10.0 * std::sin(kPi * (1.0 - u)), -4.0);
  }
  // Nose 27-35: bridge and base row; tip protrudes.
  for (int i = 0; i < 4; ++i) set(27 + i, 0.0, -42.0 + 20.0 * i, -8.0 - 6.0 * i);
  for (int i = 0; i < 5; ++i) set(31 + i, -20.0 + 10.0 * i, 34.0, -14.0);
  // Eyes 36-47: hexagons; lids flatten as eye_open -> 0.
  const double lid = 8.0 * params.eye_open;
  const double eye_y = -32.0;
  const double ecx[2] = {-55.0, 55.0};
  for (int e = 0; e < 2; ++e) {
    const int b = 36 + 6 * e;
    set(b + 0, ecx[e] - 22.0, eye_y, -2.0);
    set(b + 1, ecx[e] - 10.0, eye_y - lid, -2.0);
    set(b + 2, ecx[e] + 6.0, eye_y - lid, -2.0);
    set(b + 3, ecx[e] + 22.0, eye_y, -2.0);
    set(b + 4, ecx[e] + 6.0, eye_y + 0.9 * lid, -2.0);
    set(b + 5, ecx[e] - 10.0, eye_y + 0.9 * lid, -2.0);
  }
  // Outer lips 48-59 around the mouth center; the lower arc drops with
  // mouth_open. Inner lips 60-67 separate by the opening amount.
  const double my = 95.0;
  const double drop = 26.0 * params.mouth_open;
  set(48, -45.0, my, -4.0);
  for (int i = 0; i < 5; ++i) {
    const double u = (i + 1) / 6.0;
    const double x = -45.0 + 90.0 * u;
    set(49 + i, x, my - 13.0 * std::sin(kPi * u), -4.0);
  }
  set(54, 45.0, my, -4.0);
  for (int i = 0; i < 5; ++i) {
    const double u = (i + 1) / 6.0;
    const double x = 45.0 - 90.0 * u;
    set(55 + i, x, my + (13.0 + drop) * std::sin(kPi * u), -4.0);
  }
  const double gap = 20.0 * params.mouth_open;
  set(60, -34.0, my, -4.0);
  for (int i = 0; i < 3; ++i) {
    const double u = (i + 1) / 4.0;
    set(61 + i, -34.0 + 68.0 * u, my - gap * std::sin(kPi * u), -4.0);
  }
  set(64, 34.0, my, -4.0);
  for (int i = 0; i < 3; ++i) {
    const double u = (i + 1) / 4.0;
    set(65 + i, 34.0 - 68.0 * u, my + gap * std::sin(kPi * u), -4.0);
  }

  const auto r = RotvecToMatrix({params.pitch, params.yaw, params.roll});
  Landmarks68 out;
  for (int i = 0; i < Landmarks68::kPoints; ++i) {
    const double p[3] = {lm.x(i), lm.y(i), lm.z(i)};
    for (int j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) acc += p[k] * r[3 * k + j];
      out.p[3 * i + j] = params.scale * acc;
    }
    out.x(i) += params.center_x;
    out.y(i) += params.center_y;
  }
  out.Validate();
  return out;
}

}  // namespace geometry
}  // namespace adst
