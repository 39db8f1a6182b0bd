// adst/motion.h

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

#ifndef ADST_MOTION_H_
#define ADST_MOTION_H_

#include <array>
#include <string>
#include <vector>

#include "adst/geometry.h"
#include "adst/nn.h"
#include "adst/tensor.h"

namespace adst {
namespace motion {

constexpr int kDefaultKMe = 25;
constexpr int kLookaheadFrames = 18;
constexpr int kHistoryLen = 256;
constexpr int kPoseDim = 6;  // rotation vector (3) + translation (3)
constexpr double kStdFloor = 1e-4;

// T x (3 K) mouth/eye displacements in object coordinates.
struct DisplacementSequence {
  Tensor deltas;  // [T, 3*K]
  int64_t T() const { return deltas.dim(0); }
  int64_t K() const { return deltas.dim(1) / 3; }
  void Validate() const;
};

struct PoseHistory {
  Tensor poses;  // [256, 6], oldest first

  PoseHistory() : poses({kHistoryLen, kPoseDim}) {}
  void Validate() const;
  void Push(const std::array<double, kPoseDim> &pose);  // drops the oldest
};

struct GaussianPrediction {
  std::array<double, kPoseDim> mean;
  std::array<double, kPoseDim> std;  // strictly positive
  void Validate() const;
};

// The mouth/eye landmark subset driven by the displacement head; the
// remaining 75-neuron output corresponds to these 25 points times xyz.
std::vector<int> DefaultMouthEyeIndices();

// 3 stacked LSTMs (256 units) + MLP 256/512/3K over per-frame audio
// features, with an 18-frame look-ahead: the prediction for frame t is
// emitted after the recurrence has consumed features up to t+18 (the tail
// is padded by edge replication).
class MouthEyeNet {
 public:
  MouthEyeNet() = default;
  MouthEyeNet(int k_me, Rng &rng);

  DisplacementSequence Forward(const Tensor &features) const;  // [T,512]
  ag::Var ForwardVar(const ag::Var &features) const;           // [T,3K]
  void Params(const std::string &prefix, nn::ParamMap *out) const;
  int k_me() const { return k_me_; }

  nn::LstmLayer lstm1, lstm2, lstm3;
  nn::Linear fc1, fc2, fc3;  // 256 -> 256 -> 512 -> 3K

 private:
  int k_me_ = kDefaultKMe;
};

// GRU (256 units) over the 256-pose history; final state concatenated
// with the 512-d audio feature feeds linear heads for the mean and the
// pre-softplus std of a diagonal 6-D Gaussian.
class HeadPoseNet {
 public:
  HeadPoseNet() = default;
  explicit HeadPoseNet(Rng &rng);

  GaussianPrediction Predict(const PoseHistory &history,
                             const Tensor &h_t) const;  // h_t [512]
  // Differentiable (mu, std) with the softplus + 1e-4 floor applied.
  std::pair<ag::Var, ag::Var> PredictVar(const ag::Var &history,
                                         const ag::Var &h_t) const;
  void Params(const std::string &prefix, nn::ParamMap *out) const;

  nn::GruLayer gru;
  nn::Linear head_mean, head_std;  // 768 -> 6 each
};

// Sum over frames of the squared Frobenius norm of the difference.
double LossMe(const DisplacementSequence &truth,
              const DisplacementSequence &pred);
ag::Var LossMeVar(const ag::Var &truth, const ag::Var &pred);

// Diagonal Gaussian negative log-likelihood of x under (mu, std).
double LossHt(const std::array<double, kPoseDim> &x,
              const GaussianPrediction &pred);
ag::Var LossHtVar(const ag::Var &x, const ag::Var &mu, const ag::Var &std);

double LossMg(double me, double ht);

std::array<double, kPoseDim> HeadPoseSample(const GaussianPrediction &pred,
                                            Rng &rng);

// Joint mouth/eye + head-pose model with training helpers.
class MotionModel {
 public:
  MotionModel() = default;
  MotionModel(int k_me, Rng &rng) : me(k_me, rng), ht(rng) {}

  // Teacher-forced joint loss over one clip: L_me on displacements plus
  // the mean pose NLL over `pose_samples` frames spread across the clip.
  double TrainStep(const Tensor &features, const Tensor &truth_deltas,
                   const Tensor &truth_poses, int pose_samples, nn::Adam *opt,
                   double lr);
  double EvalLossMe(const Tensor &features, const Tensor &truth_deltas) const;

  // Autoregressive pose rollout seeded from `history`.
  std::vector<std::array<double, kPoseDim>> Rollout(const Tensor &features,
                                                    PoseHistory history,
                                                    Rng &rng) const;

  nn::ParamMap Params() const;
  void Save(const std::string &path) const;
  void Load(const std::string &path);

  MouthEyeNet me;
  HeadPoseNet ht;
};

// neutral + displacements on the mouth/eye subset, then the rigid pose:
// L_t = (neutral + scatter(delta_t)) * R(x_t) + tau(x_t).
LandmarkSequence ComposeLandmarks(const Landmarks68 &neutral,
                                  const DisplacementSequence &deltas,
                                  const std::vector<std::array<double, 6>> &poses,
                                  const std::vector<int> &me_indices);

// Inverse of ComposeLandmarks for training targets: per-frame rigid fit
// (rotation via SVD, translation from centroids) against the neutral
// face, residual displacements gathered at the mouth/eye subset.
void DecomposeLandmarks(const Landmarks68 &neutral, const LandmarkSequence &seq,
                        const std::vector<int> &me_indices,
                        DisplacementSequence *deltas,
                        std::vector<std::array<double, 6>> *poses);

// "ADST1" container rows: dim 3K (displacements) or 6 (poses).
void WriteDisplacements(const std::string &path,
                        const DisplacementSequence &d);
DisplacementSequence ReadDisplacements(const std::string &path);

}  // namespace motion
}  // namespace adst

#endif  // ADST_MOTION_H_
