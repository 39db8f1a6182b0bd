// adst/audio.h

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

#ifndef ADST_AUDIO_H_
#define ADST_AUDIO_H_

#include <complex>
#include <string>
#include <vector>

#include "adst/nn.h"
#include "adst/tensor.h"
#include "adst/wav.h"

namespace adst {
namespace audio {

constexpr int kMelBands = 80;
constexpr int kFftSize = 512;
constexpr double kFrameShiftS = 1.0 / 120.0;
constexpr double kFrameLengthS = 1.0 / 60.0;
constexpr double kMelFloor = 1e-10;

struct MelSpectrogram {
  Tensor frames;  // [N, 80]
  double frame_shift_s = kFrameShiftS;
  double frame_length_s = kFrameLengthS;

  int64_t NumFrames() const { return frames.dim(0); }
  void Validate() const;
};

// In-place iterative radix-2 FFT; n must be a power of two.
void Fft(std::vector<std::complex<double>> *x);

// Triangular mel filterbank [n_mels, n_fft/2 + 1] on the HTK mel scale.
Tensor MelFilterbank(int n_mels, int n_fft, double sample_rate);

// Frame count follows floor((duration - frame_length)/frame_shift) + 1.
// Hann-windowed 512-point STFT magnitudes through the 80-band filterbank,
// then natural log with floor 1e-10.
MelSpectrogram ComputeLogMel(const AudioClip &clip);

// 3-layer GRU (512 units each) trained by predicting a future mel frame,
// with a linear 512->512 map plus row L2 normalization on top of the last
// layer's states.
class ApcEncoder {
 public:
  ApcEncoder() = default;
  explicit ApcEncoder(Rng &rng);

  // [N,80] mel -> [N,512] unit-norm stream features (no graph kept).
  Tensor Encode(const MelSpectrogram &mel) const;
  ag::Var EncodeVar(const ag::Var &mel) const;  // differentiable path
  ag::Var ProjectToManifold(const ag::Var &h3) const;

  // One Adam step on the future-frame MSE; returns the loss value.
  double TrainStep(const MelSpectrogram &mel, int prediction_offset,
                   nn::Adam *opt, double lr);
  // Loss graph only (no step); exposed for gradient checks.
  ag::Var Loss(const ag::Var &mel, int prediction_offset) const;

  nn::ParamMap Params() const;
  void Save(const std::string &path) const;
  void Load(const std::string &path);

  nn::GruLayer gru1, gru2, gru3;
  nn::Linear manifold;    // 512 -> 512
  nn::Linear prediction;  // 512 -> 80 training head
};

// 2 audio frames (1/120 s shift) per 60 FPS video frame, averaged;
// a trailing unpaired audio frame is dropped.
Tensor AlignAudioToVideo(const Tensor &features, int audio_fps = 120,
                         int video_fps = 60);

// Feature cache (magic "ADST1", float32 payload).
void WriteFeatureCache(const std::string &path, const Tensor &features);
Tensor ReadFeatureCache(const std::string &path);

}  // namespace audio
}  // namespace adst

#endif  // ADST_AUDIO_H_
