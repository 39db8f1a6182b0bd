// adst/dataharness.cc

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

#include "adst/dataharness.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "adst/facialmap.h"
#include "json.hpp"

namespace adst {
namespace dataharness {

namespace fs = std::filesystem;

void SyntheticStyle::Validate() const {
  ADST_CHECK(!name.empty(), "SyntheticStyle: empty name");
  ADST_CHECK(head_bob_freq > 0, "SyntheticStyle: head_bob_freq must be > 0");
  ADST_CHECK(head_bob_amp >= 0, "SyntheticStyle: head_bob_amp must be >= 0");
  ADST_CHECK(mouth_gain >= 0, "SyntheticStyle: mouth_gain must be >= 0");
  ADST_CHECK(blink_period >= 1, "SyntheticStyle: blink_period must be >= 1");
  ADST_CHECK(eye_openness_bias >= 0 && eye_openness_bias <= 1,
             "SyntheticStyle: eye_openness_bias must be in [0,1]");
}

const std::vector<SyntheticStyle> &BuiltinStyles() {
  static const std::vector<SyntheticStyle> kStyles = {
      {"ballad", 0.4, 6.0, 0.5, 45, 0.8},
      {"rap", 2.5, 12.0, 1.4, 150, 1.0},
      {"opera", 0.6, 8.0, 2.0, 120, 0.9},
  };
  return kStyles;
}

SyntheticStyle StyleByName(const std::string &name) {
  for (const auto &s : BuiltinStyles())
    if (s.name == name) return s;
  throw ValidationError("unknown style: " + name);
}

void SyntheticSample::Validate() const {
  audio.Validate();
  style.Validate();
  const size_t expect =
      static_cast<size_t>(audio.DurationSeconds() * kVideoFps);
  ADST_CHECK(landmarks.size() == expect,
             "SyntheticSample: landmark count must be duration x 60");
  for (const auto &lm : landmarks) lm.Validate();
  if (!frames.empty())
    ADST_CHECK(frames.size() == landmarks.size(),
               "SyntheticSample: frame count must match landmarks");
}

Image RenderFrame(const Landmarks68 &landmarks) {
  landmarks.Validate();
  const int n = facialmap::kMapSize;
  Image im(3, n, n);
  const double bg[3] = {0.12, 0.15, 0.20};
  for (int c = 0; c < 3; ++c)
    std::fill(im.data.begin() + c * n * n, im.data.begin() + (c + 1) * n * n,
              bg[c]);

  auto paint = [&](const std::vector<std::array<double, 2>> &poly,
                   double r, double g, double b) {
    std::vector<uint8_t> mask(n * n, 0);
    facialmap::FillPolygon(poly, &mask, n);
    for (int i = 0; i < n * n; ++i) {
      if (!mask[i]) continue;
      im.data[i] = r;
      im.data[n * n + i] = g;
      im.data[2 * n * n + i] = b;
    }
  };
  auto landmark_poly = [&](int first, int last) {
    std::vector<std::array<double, 2>> poly;
    for (int i = first; i <= last; ++i)
      poly.push_back({landmarks.x(i), landmarks.y(i)});
    return poly;
  };

  // Skin hull: jaw forward, brows backward.
  std::vector<std::array<double, 2>> face = landmark_poly(0, 16);
  for (int i = 26; i >= 17; --i)
    face.push_back({landmarks.x(i), landmarks.y(i)});
  paint(face, 0.85, 0.70, 0.60);
  paint(landmark_poly(36, 41), 0.92, 0.92, 0.95);
  paint(landmark_poly(42, 47), 0.92, 0.92, 0.95);
  paint(landmark_poly(48, 59), 0.60, 0.22, 0.22);
  paint(landmark_poly(60, 67), 0.18, 0.05, 0.05);

  // Dark contour overlay keeps crisp edges in the render.
  const facialmap::FacialMap contours = facialmap::RasterizeFacialMap(
      landmarks, facialmap::OrthographicCamera());
  for (int i = 0; i < n * n; ++i) {
    if (!contours.pixels[i]) continue;
    im.data[i] = 0.08;
    im.data[n * n + i] = 0.08;
    im.data[2 * n * n + i] = 0.08;
  }
  return im;
}

SyntheticSample SynthGenerate(const SyntheticStyle &style, double duration_s,
                              uint64_t seed, bool render_frames) {
  style.Validate();
  ADST_CHECK(duration_s >= 1.0, "SynthGenerate: duration must be >= 1 s");
  Rng rng(seed);

  const double env_freq = UniformReal(rng, 0.8, 1.6);
  const double env_phase = UniformReal(rng, 0.0, 2.0 * kPi);
  auto envelope = [env_freq, env_phase](double t) {
    return 0.55 + 0.45 * std::sin(2.0 * kPi * env_freq * t + env_phase);
  };

  SyntheticSample sample;
  sample.style = style;
  const int sr = sample.audio.sample_rate;
  const int64_t n_samples = static_cast<int64_t>(duration_s * sr);
  sample.audio.samples.resize(n_samples);
  // Band-limited noise: moving average of white noise, then modulated.
  constexpr int kTaps = 8;
  std::array<double, kTaps> window{};
  int w_pos = 0;
  double w_sum = 0.0;
  for (int64_t i = 0; i < n_samples; ++i) {
    const double white = UniformReal(rng, -1.0, 1.0);
    w_sum += white - window[w_pos];
    window[w_pos] = white;
    w_pos = (w_pos + 1) % kTaps;
    const double carrier = w_sum / kTaps;
    sample.audio.samples[i] =
        std::clamp(0.8 * envelope(static_cast<double>(i) / sr) * carrier,
                   -1.0, 1.0);
  }

  const int64_t n_frames = static_cast<int64_t>(duration_s * kVideoFps);
  const double amp_rad = style.head_bob_amp * kPi / 180.0;
  for (int64_t t = 0; t < n_frames; ++t) {
    const double sec = static_cast<double>(t) / kVideoFps;
    geometry::FaceParams fp;
    fp.mouth_open = std::min(style.mouth_gain * envelope(sec), 1.6);
    fp.eye_open =
        (t % style.blink_period) < 3 ? 0.0 : style.eye_openness_bias;
    fp.yaw = amp_rad * std::sin(2.0 * kPi * style.head_bob_freq * sec);
    sample.landmarks.push_back(geometry::SynthFace(fp));
    if (render_frames) sample.frames.push_back(RenderFrame(sample.landmarks.back()));
  }
  sample.Validate();
  return sample;
}

double SynthStyleDistance(const SyntheticStyle &a, const SyntheticStyle &b) {
  a.Validate();
  b.Validate();
  // Per-parameter scales keep the axes comparable.
  const double d[5] = {
      (a.head_bob_freq - b.head_bob_freq) / 3.0,
      (a.head_bob_amp - b.head_bob_amp) / 20.0,
      (a.mouth_gain - b.mouth_gain) / 2.0,
      static_cast<double>(a.blink_period - b.blink_period) / 120.0,
      a.eye_openness_bias - b.eye_openness_bias,
  };
  double acc = 0.0;
  for (double v : d) acc += v * v;
  return std::sqrt(acc / 5.0);
}

void SaveDataset(const std::string &manifest_path,
                 const std::vector<SyntheticSample> &samples) {
  const fs::path manifest(manifest_path);
  const fs::path dir = manifest.parent_path();
  if (!dir.empty()) fs::create_directories(dir);

  nlohmann::json root = nlohmann::json::array();
  for (size_t i = 0; i < samples.size(); ++i) {
    samples[i].Validate();
    const std::string stem = "sample_" + std::to_string(i);
    WriteWav((dir / (stem + ".wav")).string(), samples[i].audio);
    geometry::WriteLandmarkSequence((dir / (stem + ".jsonl")).string(),
                                    samples[i].landmarks);
    std::string frames_dir;
    if (!samples[i].frames.empty()) {
      frames_dir = stem + "_frames";
      fs::create_directories(dir / frames_dir);
      for (size_t t = 0; t < samples[i].frames.size(); ++t) {
        char name[32];
        std::snprintf(name, sizeof(name), "%05zu.png", t);
        WritePng((dir / frames_dir / name).string(), samples[i].frames[t]);
      }
    }
    nlohmann::json rec;
    rec["audio"] = stem + ".wav";
    rec["landmarks"] = stem + ".jsonl";
    rec["frames_dir"] = frames_dir;
    rec["style"] = samples[i].style.name;
    root.push_back(rec);
  }
  std::ofstream f(manifest_path);
  if (!f) throw IoError("cannot open for writing: " + manifest_path);
  f << root.dump(2) << "\n";
  if (!f) throw IoError("write failed: " + manifest_path);
}

std::vector<SyntheticSample> LoadDataset(const std::string &manifest_path,
                                         bool load_frames) {
  std::ifstream f(manifest_path);
  if (!f) throw IoError("cannot open manifest: " + manifest_path);
  nlohmann::json root;
  try {
    f >> root;
  } catch (const nlohmann::json::exception &e) {
    throw IoError("bad manifest " + manifest_path + ": " + e.what());
  }
  ADST_CHECK(root.is_array(), "manifest must be a JSON array");
  const fs::path dir = fs::path(manifest_path).parent_path();

  std::vector<SyntheticSample> samples;
  for (const auto &rec : root) {
    SyntheticSample s;
    const fs::path wav = dir / rec.at("audio").get<std::string>();
    const fs::path lmk = dir / rec.at("landmarks").get<std::string>();
    if (!fs::exists(wav)) throw IoError("missing audio file: " + wav.string());
    if (!fs::exists(lmk))
      throw IoError("missing landmark file: " + lmk.string());
    s.audio = ReadWav(wav.string());
    s.landmarks = geometry::ReadLandmarkSequence(lmk.string());
    s.style = StyleByName(rec.at("style").get<std::string>());
    const std::string frames_dir = rec.at("frames_dir").get<std::string>();
    if (load_frames && !frames_dir.empty()) {
      for (size_t t = 0; t < s.landmarks.size(); ++t) {
        char name[32];
        std::snprintf(name, sizeof(name), "%05zu.png", t);
        const fs::path frame = dir / frames_dir / name;
        if (!fs::exists(frame))
          throw IoError("missing frame: " + frame.string());
        s.frames.push_back(ReadPng(frame.string()));
      }
    }
    s.Validate();
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace dataharness
}  // namespace adst
