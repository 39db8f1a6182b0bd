// adst/transfer.h

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

#ifndef ADST_TRANSFER_H_
#define ADST_TRANSFER_H_

#include <array>
#include <string>
#include <vector>

#include "adst/motion.h"
#include "adst/nn.h"

namespace adst {
namespace transfer {

constexpr int kPhiDim = 204;      // 68 x 3 landmark vector
constexpr int kFeatureDim = 256;  // style feature width

// tanh MLP 204 -> 1024 -> 512 -> 256 extracting style "mean features".
class StyleTransferNet {
 public:
  StyleTransferNet() = default;
  explicit StyleTransferNet(Rng &rng);

  ag::Var ForwardVar(const ag::Var &phi) const;  // [N,204] -> [N,256]
  Tensor Features(const Tensor &phi) const;

  // First-order graph for grad_phi of mean(f(phi)); usable inside a loss
  // so the penalty itself stays differentiable w.r.t. the weights.
  ag::Var InputGradVar(const ag::Var &phi) const;  // [N,204]

  nn::ParamMap Params() const;
  void Save(const std::string &path) const;
  void Load(const std::string &path);

  nn::Linear l1, l2, l3;
};

// ||f(phi_mg) - f(phi_s)||^2 per row, summed.
ag::Var LossConstraintVar(const StyleTransferNet &f, const ag::Var &phi_mg,
                          const ag::Var &phi_s);
double LossConstraint(const StyleTransferNet &f, const Tensor &phi_mg,
                      const Tensor &phi_s);

// gamma * phi_s + (1 - gamma) * phi_mg, gamma in [0,1].
Tensor Interpolate(const Tensor &phi_s, const Tensor &phi_mg, double gamma);
ag::Var InterpolateVar(const ag::Var &phi_s, const ag::Var &phi_mg,
                       double gamma);

// (||grad_phi mean f(phi)||_2 - 1)^2, averaged over rows.
ag::Var LossRegularizerVar(const StyleTransferNet &f, const ag::Var &phi_hat);
double LossRegularizer(const StyleTransferNet &f, const Tensor &phi_hat);

double LossTransfer(double l_mg, double l_sc, double l_r);

// Pretraining step for f on the harness: pulls same-style feature pairs
// together under L_sc while the gradient penalty on a probe point keeps
// the map from collapsing.
double PretrainStep(StyleTransferNet *f, const Tensor &phi_a,
                    const Tensor &phi_b, const Tensor &phi_probe,
                    nn::Adam *opt, double lr);

enum class GammaMode { kFixed, kUniform };

struct TransferConfig {
  GammaMode gamma_mode = GammaMode::kUniform;
  double gamma = 0.5;      // used by kFixed
  int epochs = 6;          // 1 frozen phase + 5 joint
  double lr_phase1 = 1e-3;
  double lr_phase2 = 1e-7;
  int steps_per_epoch = 8;
  int frames_per_step = 4;
  int pose_samples = 2;

  void Validate() const;
};

// Cosine annealing from `base` to 0 across `total` steps.
double CosineLr(double base, int step, int total);

struct TransferResult {
  std::vector<double> epoch_losses;
  double pre_l_mg = 0, post_l_mg = 0;
};

// Fine-tunes the motion model toward the style of `reference`:
// epoch 1 trains only f at lr_phase1; later epochs unfreeze the motion
// model at lr_phase2; each phase is cosine-annealed to 0. The reference
// sequence is decomposed against `neutral` for the supervised L_mg part
// and for the pose-free phi_s style vectors.
TransferResult RunTransfer(motion::MotionModel *model, StyleTransferNet *f,
                           const Tensor &features,
                           const LandmarkSequence &reference,
                           const Landmarks68 &neutral,
                           const TransferConfig &cfg, Rng &rng);

// JSON run manifest written beside the output checkpoint.
struct TransferManifest {
  std::string style_name;
  std::string reference_landmark_file;
  std::string audio_file;
  int epochs = 6;
  std::string gamma_mode;  // "fixed" | "uniform"
  uint64_t seed = 0;
};
void WriteTransferManifest(const std::string &path, const TransferManifest &m);
TransferManifest ReadTransferManifest(const std::string &path);

}  // namespace transfer
}  // namespace adst

#endif  // ADST_TRANSFER_H_
