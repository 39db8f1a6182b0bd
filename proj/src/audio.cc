// adst/audio.cc

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

#include "adst/audio.h"

#include <cmath>

#include "adst/container.h"

namespace adst {
namespace audio {

void MelSpectrogram::Validate() const {
  ADST_CHECK(frames.rank() == 2 && frames.dim(1) == kMelBands,
             "MelSpectrogram: frames must be [N, 80]");
  ADST_CHECK(frames.dim(0) >= 1, "MelSpectrogram: empty");
  ADST_CHECK(frames.AllFinite(), "MelSpectrogram: non-finite values");
}

void Fft(std::vector<std::complex<double>> *x) {
  const size_t n = x->size();
  ADST_CHECK(n > 0 && (n & (n - 1)) == 0, "Fft: size must be a power of two");
  auto &a = *x;
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

namespace {

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

}  // namespace

Tensor MelFilterbank(int n_mels, int n_fft, double sample_rate) {
  const int n_bins = n_fft / 2 + 1;
  Tensor fb({n_mels, n_bins});
  const double mel_lo = HzToMel(0.0);
  const double mel_hi = HzToMel(sample_rate / 2.0);
  std::vector<double> hz(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i)
    hz[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));
  for (int m = 0; m < n_mels; ++m) {
    const double left = hz[m], center = hz[m + 1], right = hz[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = k * sample_rate / n_fft;
      double w = 0.0;
      if (f > left && f < center)
        w = (f - left) / (center - left);
      else if (f >= center && f < right)
        w = (right - f) / (right - center);
      fb.at({m, k}) = w;
    }
  }
  return fb;
}

MelSpectrogram ComputeLogMel(const AudioClip &clip) {
  clip.Validate();
  const double dur = clip.DurationSeconds();
  ADST_CHECK(dur >= kFrameLengthS, "ComputeLogMel: clip shorter than a frame");

  const int64_t n_frames =
      static_cast<int64_t>(
          std::floor((dur - kFrameLengthS) / kFrameShiftS + 1e-9)) +
      1;
  const int win = static_cast<int>(std::lround(kFrameLengthS * clip.sample_rate));
  ADST_CHECK(win <= kFftSize, "ComputeLogMel: frame longer than the FFT size");

  std::vector<double> window(win);
  for (int i = 0; i < win; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / (win - 1));

  const Tensor fb = MelFilterbank(kMelBands, kFftSize, clip.sample_rate);
  const int n_bins = kFftSize / 2 + 1;

  MelSpectrogram mel;
  mel.frames = Tensor({n_frames, kMelBands});
  std::vector<std::complex<double>> buf(kFftSize);
  for (int64_t t = 0; t < n_frames; ++t) {
    const int64_t start =
        std::llround(static_cast<double>(t) * kFrameShiftS * clip.sample_rate);
    for (int i = 0; i < kFftSize; ++i) {
      const int64_t s = start + i;
      const double v = (i < win && s < static_cast<int64_t>(clip.samples.size()))
                           ? clip.samples[s] * window[i]
                           : 0.0;
      buf[i] = {v, 0.0};
    }
    Fft(&buf);
    for (int m = 0; m < kMelBands; ++m) {
      double acc = 0.0;
      for (int k = 0; k < n_bins; ++k)
        acc += fb.at({m, k}) * std::abs(buf[k]);
      mel.frames.at({t, m}) = std::log(acc + kMelFloor);
    }
  }
  mel.Validate();
  return mel;
}

ApcEncoder::ApcEncoder(Rng &rng)
    : gru1(kMelBands, 512, rng),
      gru2(512, 512, rng),
      gru3(512, 512, rng),
      manifold(512, 512, rng),
      prediction(512, kMelBands, rng) {}

ag::Var ApcEncoder::ProjectToManifold(const ag::Var &h3) const {
  return ag::RowL2Normalize(manifold.Forward(h3));
}

ag::Var ApcEncoder::EncodeVar(const ag::Var &mel) const {
  return ProjectToManifold(gru3.Forward(gru2.Forward(gru1.Forward(mel))));
}

Tensor ApcEncoder::Encode(const MelSpectrogram &mel) const {
  mel.Validate();
  return EncodeVar(ag::Constant(mel.frames))->value;
}

ag::Var ApcEncoder::Loss(const ag::Var &mel, int prediction_offset) const {
  const int64_t n = mel->value.dim(0);
  ADST_CHECK(prediction_offset >= 1, "apc loss: offset must be >= 1");
  ADST_CHECK(n > prediction_offset,
             "apc loss: sequence must be longer than the prediction offset");
  const ag::Var h3 = gru3.Forward(gru2.Forward(gru1.Forward(mel)));
  const ag::Var pred =
      prediction.Forward(ag::SliceAxis0(h3, 0, n - prediction_offset));
  const ag::Var target =
      ag::SliceAxis0(mel, prediction_offset, n - prediction_offset);
  return ag::Mean(ag::Square(ag::Sub(pred, target)));
}

double ApcEncoder::TrainStep(const MelSpectrogram &mel, int prediction_offset,
                             nn::Adam *opt, double lr) {
  mel.Validate();
  opt->ZeroGrad();
  const ag::Var loss = Loss(ag::Constant(mel.frames), prediction_offset);
  ag::Backward(loss);
  opt->Step(lr);
  return loss->value.at({0});
}

nn::ParamMap ApcEncoder::Params() const {
  nn::ParamMap p;
  gru1.Params("gru1", &p);
  gru2.Params("gru2", &p);
  gru3.Params("gru3", &p);
  manifold.Params("manifold", &p);
  prediction.Params("prediction", &p);
  return p;
}

void ApcEncoder::Save(const std::string &path) const {
  container::WriteCheckpoint(path, nn::StateDict(Params()));
}

void ApcEncoder::Load(const std::string &path) {
  const auto state = container::ReadCheckpoint(path);
  if (!gru1.wz.w) {
    Rng rng(0);  // shapes only; weights are overwritten below
    *this = ApcEncoder(rng);
  }
  nn::LoadStateDict(Params(), state);
}

Tensor AlignAudioToVideo(const Tensor &features, int audio_fps, int video_fps) {
  ADST_CHECK(features.rank() == 2, "AlignAudioToVideo: features must be rank 2");
  ADST_CHECK(video_fps > 0 && audio_fps > 0 && audio_fps % video_fps == 0,
             "AlignAudioToVideo: audio rate must be a multiple of video rate");
  const int64_t ratio = audio_fps / video_fps;
  const int64_t n_video = features.dim(0) / ratio;
  ADST_CHECK(n_video >= 1, "AlignAudioToVideo: fewer audio frames than ratio");
  const int64_t d = features.dim(1);
  Tensor out({n_video, d});
  for (int64_t t = 0; t < n_video; ++t) {
    for (int64_t j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int64_t r = 0; r < ratio; ++r)
        acc += features.at({t * ratio + r, j});
      out.at({t, j}) = acc / static_cast<double>(ratio);
    }
  }
  return out;
}

void WriteFeatureCache(const std::string &path, const Tensor &features) {
  container::WriteMatrix(path, features);
}

Tensor ReadFeatureCache(const std::string &path) {
  return container::ReadMatrix(path);
}

}  // namespace audio
}  // namespace adst
