// adst/dataharness.h

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

#ifndef ADST_DATAHARNESS_H_
#define ADST_DATAHARNESS_H_

#include <string>
#include <vector>

#include "adst/geometry.h"
#include "adst/image.h"
#include "adst/wav.h"

namespace adst {
namespace dataharness {

constexpr int kVideoFps = 60;

struct SyntheticStyle {
  std::string name;
  double head_bob_freq = 1.0;      // Hz
  double head_bob_amp = 10.0;      // degrees of yaw
  double mouth_gain = 1.0;         // audio envelope -> mouth opening
  int blink_period = 90;           // frames between blinks
  double eye_openness_bias = 1.0;  // resting lid opening in [0,1]

  void Validate() const;
};

// ballad-like, rap-like, opera-like parameterizations.
const std::vector<SyntheticStyle> &BuiltinStyles();
SyntheticStyle StyleByName(const std::string &name);

struct SyntheticSample {
  AudioClip audio;
  LandmarkSequence landmarks;  // 60 FPS
  std::vector<Image> frames;   // empty unless rendering was requested
  SyntheticStyle style;

  void Validate() const;
};

// Flat-shaded 512x512 render of the landmark polygons.
Image RenderFrame(const Landmarks68 &landmarks);

// Deterministic per (style, seed): amplitude-modulated band-limited
// noise audio; mouth opening follows the envelope times mouth_gain; yaw
// is a head_bob_freq sinusoid; lids close every blink_period frames.
SyntheticSample SynthGenerate(const SyntheticStyle &style, double duration_s,
                              uint64_t seed, bool render_frames = false);

// Normalized L2 over the style parameter vector.
double SynthStyleDistance(const SyntheticStyle &a, const SyntheticStyle &b);

// Manifest: JSON list of {audio, landmarks, frames_dir, style}; paths
// relative to the manifest file.
void SaveDataset(const std::string &manifest_path,
                 const std::vector<SyntheticSample> &samples);
std::vector<SyntheticSample> LoadDataset(const std::string &manifest_path,
                                         bool load_frames = false);

}  // namespace dataharness
}  // namespace adst

#endif  // ADST_DATAHARNESS_H_
