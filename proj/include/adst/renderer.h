// adst/renderer.h

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

#ifndef ADST_RENDERER_H_
#define ADST_RENDERER_H_

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "adst/facialmap.h"
#include "adst/nn.h"
#include "adst/stylemap.h"

namespace adst {
namespace renderer {

// source (3) + facial map replicated (3) + 4 ISP images (12).
constexpr int64_t kInputChannels = 18;

struct GeneratorInput {
  Image source;                       // 512x512 RGB in [0,1]
  facialmap::FacialMap facial_map;
  stylemap::ISPSet isp;

  Tensor ToTensor() const;  // [18,512,512]
};

// [0,1] image <-> [-1,1] generator value range.
Tensor ImageToSigned(const Image &im);
Image SignedToImage(const Tensor &t);

// 8 stride-2 encoder layers with pinned output shapes, a bottleneck
// residual block after every layer except the first, and a lightweight
// decoder with 1x1-projected skip connections. Output is tanh.
class GeneratorNet {
 public:
  GeneratorNet() = default;
  explicit GeneratorNet(Rng &rng);

  ag::Var ForwardVar(const ag::Var &x) const;     // [18,512,512] -> [3,512,512]
  Image Generate(const GeneratorInput &input) const;
  // (channels, spatial) after each encoder layer, computed by running
  // the layers, not hard-coded.
  std::vector<std::pair<int64_t, int64_t>> EncoderShapes() const;

  nn::ParamMap Params() const;
  void Save(const std::string &path) const;
  void Load(const std::string &path);

  struct Residual {  // 1x1 reduce, 3x3, 1x1 expand around a skip
    nn::Conv2dLayer reduce, conv, expand;
    Residual() = default;
    Residual(int64_t ch, Rng &rng);
    ag::Var Forward(const ag::Var &x) const;
    void Params(const std::string &prefix, nn::ParamMap *out) const;
  };

  std::array<nn::Conv2dLayer, 8> enc;
  std::array<Residual, 7> res;            // after layers 2..8
  std::array<nn::Conv2dLayer, 4> skip;    // 1x1 projections, 64..8 px scales
  std::array<nn::Conv2dLayer, 8> dec;
  nn::Conv2dLayer out;
};

// PatchGAN score grid plus intermediate feature taps for L_F.
class PatchDiscriminator {
 public:
  PatchDiscriminator() = default;
  explicit PatchDiscriminator(Rng &rng);

  // returns (scores [1,g,g], taps).
  std::pair<ag::Var, std::vector<ag::Var>> ForwardVar(const ag::Var &x) const;
  nn::ParamMap Params() const;
  void Save(const std::string &path) const;
  void Load(const std::string &path);

  nn::Conv2dLayer c1, c2, c3, c4;
};

// Frozen randomly initialized 3-scale convolutional pyramid standing in
// for a pretrained perceptual feature extractor; the published seed makes
// it identical across runs.
class PerceptualNet {
 public:
  static constexpr uint64_t kSeed = 0x5eedfacade5c01ULL;
  PerceptualNet();
  std::vector<ag::Var> Features(const ag::Var &x) const;  // 3 scales

  nn::Conv2dLayer p1, p2, p3;
};

// LSGAN: real pushed to 1, fake to 0 for D; fake to 1 for G.
ag::Var LossDiscriminator(const ag::Var &real_scores,
                          const ag::Var &fake_scores);
double LossDiscriminatorValue(const Tensor &real_scores,
                              const Tensor &fake_scores);

struct GeneratorLossTerms {
  ag::Var total;  // l_a + 100 l_pw + 10 l_p + 1 l_f
  double l_a = 0, l_pw = 0, l_p = 0, l_f = 0;
};
GeneratorLossTerms LossGenerator(const ag::Var &fake_scores,
                                 const ag::Var &fake_img,
                                 const ag::Var &real_img,
                                 const std::vector<ag::Var> &d_feats_fake,
                                 const std::vector<ag::Var> &d_feats_real,
                                 const PerceptualNet &perceptual);

// Eq-style photometric term: sum over channels and pixels of
// W |I' - I_m|, divided by the pixel count (mask broadcast per channel).
ag::Var LossStylePhotometric(const ag::Var &gen_img, const ag::Var &matched_img,
                             const facialmap::WeightMask &w);

// Best-matched reference frame by mean landmark L2 distance, ties to the
// lowest index.
int RetrieveMatchedStyleIndex(const Landmarks68 &gen_landmarks,
                              const stylemap::StyleReferenceSet &references);

struct GanSample {
  GeneratorInput input;
  Image target;                 // ground-truth frame, [0,1]
  Image matched_style;          // I_m for the photometric term
  facialmap::WeightMask weights;
};

struct GanStepResult {
  double loss_g = 0, loss_d = 0;
  double l_a = 0, l_pw = 0, l_p = 0, l_f = 0, l_sp = 0;
};

// One alternating D step then G step (L_G + L_sp), gradients clipped at
// global norm 10.
GanStepResult TrainStepGan(const GanSample &sample, GeneratorNet *g,
                           PatchDiscriminator *d,
                           const PerceptualNet &perceptual, nn::Adam *opt_g,
                           nn::Adam *opt_d, double lr_g, double lr_d);

// Flat key=value training configuration file; unknown keys are rejected.
struct TrainingConfig {
  double lr_generator = 1e-5;
  double lr_discriminator = 1e-5;
  double lr_audio = 1e-4;
  double lr_motion = 1e-4;
  double lr_stylemap = 1e-4;
  int batch_generator = 8;
  int batch_other = 64;
  double lambda_pw = 100.0;
  double lambda_p = 10.0;
  double lambda_f = 1.0;

  static TrainingConfig Load(const std::string &path);
  void Save(const std::string &path) const;
};

}  // namespace renderer
}  // namespace adst

#endif  // ADST_RENDERER_H_
