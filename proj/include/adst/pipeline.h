// adst/pipeline.h

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

#ifndef ADST_PIPELINE_H_
#define ADST_PIPELINE_H_

#include <string>
#include <vector>

#include "adst/audio.h"
#include "adst/motion.h"
#include "adst/renderer.h"

namespace adst {
namespace pipeline {

// Fixed file layout inside a checkpoint directory.
struct Checkpoint {
  std::string dir;

  std::string ApcPath() const;
  std::string MotionPath() const;
  std::string GeneratorPath() const;
  std::string NeutralPath() const;     // 1-frame landmark sequence
  std::string IspPath(int i) const;    // isp_<i>.png
};

// ADST_CACHE if set, otherwise "" (caching disabled).
std::string CacheDir();

// WAV -> log-Mel -> APC stream features -> 60 FPS alignment. When
// cache_dir is non-empty the aligned features are memoized on disk, keyed
// by a hash of the audio samples and the encoder weights.
Tensor AudioFeatures(const AudioClip &clip, const audio::ApcEncoder &apc,
                     const std::string &cache_dir);

struct AnimateOptions {
  uint64_t seed = 0;
  int max_render_frames = -1;  // -1 = every frame, 0 = landmarks only
};

struct AnimateResult {
  LandmarkSequence landmarks;
  int frames_written = 0;
};

// audio + single source image + checkpoint -> numbered PNG frames and a
// landmark file in out_dir. Missing checkpoint files raise IoError naming
// the path. ISP images fall back to the source image when the checkpoint
// has none.
AnimateResult Animate(const std::string &audio_path,
                      const std::string &source_image_path,
                      const std::string &checkpoint_dir,
                      const std::string &out_dir, const AnimateOptions &opts);

struct SmokeConfig {
  std::string work_dir;
  uint64_t seed = 1;
  double duration_s = 2.0;
  int apc_steps = 2;
  int motion_steps = 2;
  int gan_steps = 1;
  int transfer_epochs = 2;
  int render_frames = 1;
};

struct SmokeResult {
  std::vector<double> apc_losses, motion_losses, gan_losses, transfer_losses;
  std::string report_json;
};

// Tiny end-to-end run: synthesize two styles, train every stage with the
// configured micro budgets, transfer toward the second style, animate,
// evaluate. Fully determined by cfg.seed.
SmokeResult RunSmokePipeline(const SmokeConfig &cfg);

}  // namespace pipeline
}  // namespace adst

#endif  // ADST_PIPELINE_H_
