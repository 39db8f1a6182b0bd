// adst/motion.cc

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

#include "adst/motion.h"

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>

#include "adst/container.h"

namespace adst {
namespace motion {

void DisplacementSequence::Validate() const {
  ADST_CHECK(deltas.rank() == 2 && deltas.dim(1) % 3 == 0,
             "DisplacementSequence: deltas must be [T, 3K]");
  ADST_CHECK(deltas.AllFinite(), "DisplacementSequence: non-finite values");
}

void PoseHistory::Validate() const {
  ADST_CHECK(poses.rank() == 2 && poses.dim(0) == kHistoryLen &&
                 poses.dim(1) == kPoseDim,
             "PoseHistory: must be [256, 6]");
  ADST_CHECK(poses.AllFinite(), "PoseHistory: non-finite values");
}

void PoseHistory::Push(const std::array<double, kPoseDim> &pose) {
  for (int64_t t = 0; t + 1 < kHistoryLen; ++t)
    for (int64_t j = 0; j < kPoseDim; ++j)
      poses.at({t, j}) = poses.at({t + 1, j});
  for (int64_t j = 0; j < kPoseDim; ++j)
    poses.at({kHistoryLen - 1, j}) = pose[j];
}

void GaussianPrediction::Validate() const {
  for (double m : mean)
    ADST_CHECK(std::isfinite(m), "GaussianPrediction: non-finite mean");
  for (double s : std)
    ADST_CHECK(std::isfinite(s) && s > 0.0,
               "GaussianPrediction: std must be positive");
}

std::vector<int> DefaultMouthEyeIndices() {
  std::vector<int> idx;
  for (int i = 48; i <= 67; ++i) idx.push_back(i);  // lips
  idx.push_back(37);  // left upper lid
  idx.push_back(40);  // left lower lid
  idx.push_back(43);  // right upper lid
  idx.push_back(46);  // right lower lid
  idx.push_back(33);  // nose base anchor
  return idx;
}

MouthEyeNet::MouthEyeNet(int k_me, Rng &rng)
    : lstm1(512, 256, rng),
      lstm2(256, 256, rng),
      lstm3(256, 256, rng),
      fc1(256, 256, rng),
      fc2(256, 512, rng),
      fc3(512, 3 * k_me, rng),
      k_me_(k_me) {
  ADST_CHECK(k_me >= 1, "MouthEyeNet: k_me must be positive");
}

ag::Var MouthEyeNet::ForwardVar(const ag::Var &features) const {
  const int64_t T = features->value.dim(0);
  ADST_CHECK(features->value.rank() == 2 && features->value.dim(1) == 512,
             "MouthEyeNet: features must be [T, 512]");
  ADST_CHECK(T > kLookaheadFrames,
             "MouthEyeNet: sequence must be longer than the look-ahead");
  // Pad the tail by edge replication so the recurrence for frame t has
  // consumed features up to t+18 before the prediction is read off.
  std::vector<ag::Var> parts = {features};
  const ag::Var last = ag::SliceAxis0(features, T - 1, 1);
  for (int i = 0; i < kLookaheadFrames; ++i) parts.push_back(last);
  ag::Var h = lstm3.Forward(lstm2.Forward(lstm1.Forward(ag::ConcatAxis0(parts))));
  h = ag::SliceAxis0(h, kLookaheadFrames, T);
  h = ag::Relu(fc1.Forward(h));
  h = ag::Relu(fc2.Forward(h));
  return fc3.Forward(h);
}

DisplacementSequence MouthEyeNet::Forward(const Tensor &features) const {
  DisplacementSequence d;
  d.deltas = ForwardVar(ag::Constant(features))->value;
  return d;
}

void MouthEyeNet::Params(const std::string &prefix, nn::ParamMap *out) const {
  lstm1.Params(prefix + ".lstm1", out);
  lstm2.Params(prefix + ".lstm2", out);
  lstm3.Params(prefix + ".lstm3", out);
  fc1.Params(prefix + ".fc1", out);
  fc2.Params(prefix + ".fc2", out);
  fc3.Params(prefix + ".fc3", out);
}

HeadPoseNet::HeadPoseNet(Rng &rng)
    : gru(kPoseDim, 256, rng),
      head_mean(256 + 512, kPoseDim, rng),
      head_std(256 + 512, kPoseDim, rng) {}

std::pair<ag::Var, ag::Var> HeadPoseNet::PredictVar(const ag::Var &history,
                                                    const ag::Var &h_t) const {
  const ag::Var states = gru.Forward(history);
  const ag::Var last =
      ag::Reshape(ag::SliceAxis0(states, kHistoryLen - 1, 1), {256});
  const ag::Var feat = ag::Reshape(h_t, {512});
  const ag::Var joint = ag::Reshape(ag::ConcatAxis0({last, feat}), {1, 768});
  const ag::Var mu = head_mean.Forward(joint);
  const ag::Var std =
      ag::AddScalar(ag::Softplus(head_std.Forward(joint)), kStdFloor);
  return {mu, std};
}

GaussianPrediction HeadPoseNet::Predict(const PoseHistory &history,
                                        const Tensor &h_t) const {
  history.Validate();
  ADST_CHECK(h_t.numel() == 512 && h_t.AllFinite(),
             "HeadPoseNet: h_t must be a finite 512-vector");
  const auto [mu, std] =
      PredictVar(ag::Constant(history.poses), ag::Constant(h_t));
  GaussianPrediction p;
  for (int j = 0; j < kPoseDim; ++j) {
    p.mean[j] = mu->value.data()[j];
    p.std[j] = std->value.data()[j];
  }
  p.Validate();
  return p;
}

void HeadPoseNet::Params(const std::string &prefix, nn::ParamMap *out) const {
  gru.Params(prefix + ".gru", out);
  head_mean.Params(prefix + ".head_mean", out);
  head_std.Params(prefix + ".head_std", out);
}

double LossMe(const DisplacementSequence &truth,
              const DisplacementSequence &pred) {
  truth.Validate();
  pred.Validate();
  ADST_CHECK(truth.deltas.SameShape(pred.deltas), "LossMe: shape mismatch");
  double acc = 0.0;
  for (int64_t i = 0; i < truth.deltas.numel(); ++i) {
    const double d = truth.deltas.data()[i] - pred.deltas.data()[i];
    acc += d * d;
  }
  return acc;
}

ag::Var LossMeVar(const ag::Var &truth, const ag::Var &pred) {
  return ag::Sum(ag::Square(ag::Sub(truth, pred)));
}

ag::Var LossHtVar(const ag::Var &x, const ag::Var &mu, const ag::Var &std) {
  const ag::Var var2 = ag::Square(std);
  const ag::Var log_term =
      ag::MulScalar(ag::Log(ag::MulScalar(var2, 2.0 * kPi)), 0.5);
  const ag::Var quad = ag::Div(ag::Square(ag::Sub(x, mu)), ag::MulScalar(var2, 2.0));
  return ag::Sum(ag::Add(log_term, quad));
}

double LossHt(const std::array<double, kPoseDim> &x,
              const GaussianPrediction &pred) {
  pred.Validate();
  double acc = 0.0;
  for (int j = 0; j < kPoseDim; ++j) {
    const double e2 = pred.std[j] * pred.std[j];
    const double d = x[j] - pred.mean[j];
    acc += 0.5 * std::log(2.0 * kPi * e2) + d * d / (2.0 * e2);
  }
  return acc;
}

double LossMg(double me, double ht) {
  ADST_CHECK(std::isfinite(me) && std::isfinite(ht), "LossMg: non-finite input");
  return me + ht;
}

std::array<double, kPoseDim> HeadPoseSample(const GaussianPrediction &pred,
                                            Rng &rng) {
  pred.Validate();
  std::array<double, kPoseDim> x;
  for (int j = 0; j < kPoseDim; ++j)
    x[j] = pred.mean[j] + pred.std[j] * NormalReal(rng);
  return x;
}

namespace {

// History rows t-256 .. t-1 of the pose track, zero-padded at the front.
Tensor HistoryAt(const Tensor &poses, int64_t t) {
  Tensor h({kHistoryLen, kPoseDim});
  for (int64_t r = 0; r < kHistoryLen; ++r) {
    const int64_t src = t - kHistoryLen + r;
    if (src < 0) continue;
    for (int64_t j = 0; j < kPoseDim; ++j) h.at({r, j}) = poses.at({src, j});
  }
  return h;
}

}  // namespace

double MotionModel::TrainStep(const Tensor &features, const Tensor &truth_deltas,
                              const Tensor &truth_poses, int pose_samples,
                              nn::Adam *opt, double lr) {
  const int64_t T = features.dim(0);
  ADST_CHECK(truth_deltas.dim(0) == T && truth_poses.dim(0) == T,
             "MotionModel::TrainStep: sequence length mismatch");
  ADST_CHECK(pose_samples >= 1, "MotionModel::TrainStep: pose_samples >= 1");
  opt->ZeroGrad();

  ag::Var loss = LossMeVar(ag::Constant(truth_deltas),
                           me.ForwardVar(ag::Constant(features)));
  ag::Var ht_sum;
  for (int s = 0; s < pose_samples; ++s) {
    const int64_t t = pose_samples == 1 ? T / 2 : s * (T - 1) / (pose_samples - 1);
    const ag::Var hist = ag::Constant(HistoryAt(truth_poses, t));
    const ag::Var h_t = ag::SliceAxis0(ag::Constant(features), t, 1);
    const auto [mu, std] = this->ht.PredictVar(hist, h_t);
    const ag::Var x = ag::SliceAxis0(ag::Constant(truth_poses), t, 1);
    const ag::Var nll = LossHtVar(x, mu, std);
    ht_sum = ht_sum ? ag::Add(ht_sum, nll) : nll;
  }
  loss = ag::Add(loss, ag::MulScalar(ht_sum, 1.0 / pose_samples));
  ag::Backward(loss);
  opt->Step(lr);
  return loss->value.at({0});
}

double MotionModel::EvalLossMe(const Tensor &features,
                               const Tensor &truth_deltas) const {
  DisplacementSequence truth, pred;
  truth.deltas = truth_deltas;
  pred = me.Forward(features);
  return LossMe(truth, pred);
}

std::vector<std::array<double, kPoseDim>> MotionModel::Rollout(
    const Tensor &features, PoseHistory history, Rng &rng) const {
  history.Validate();
  const int64_t T = features.dim(0);
  std::vector<std::array<double, kPoseDim>> out;
  out.reserve(T);
  for (int64_t t = 0; t < T; ++t) {
    Tensor h_t({512});
    for (int64_t j = 0; j < 512; ++j) h_t.at({j}) = features.at({t, j});
    const GaussianPrediction pred = ht.Predict(history, h_t);
    const auto x = HeadPoseSample(pred, rng);
    history.Push(x);
    out.push_back(x);
  }
  return out;
}

nn::ParamMap MotionModel::Params() const {
  nn::ParamMap p;
  me.Params("me", &p);
  ht.Params("ht", &p);
  return p;
}

void MotionModel::Save(const std::string &path) const {
  container::WriteCheckpoint(path, nn::StateDict(Params()));
}

void MotionModel::Load(const std::string &path) {
  const auto state = container::ReadCheckpoint(path);
  if (!me.fc3.w) {
    const auto it = state.find("me.fc3.w");
    if (it == state.end())
      throw IoError("checkpoint is missing weight block 'me.fc3.w'");
    const int k = static_cast<int>(it->second.dim(0) / 3);
    Rng rng(0);  // shapes only; weights are overwritten below
    *this = MotionModel(k, rng);
  }
  nn::LoadStateDict(Params(), state);
}

LandmarkSequence ComposeLandmarks(
    const Landmarks68 &neutral, const DisplacementSequence &deltas,
    const std::vector<std::array<double, 6>> &poses,
    const std::vector<int> &me_indices) {
  neutral.Validate();
  deltas.Validate();
  ADST_CHECK(static_cast<int64_t>(me_indices.size()) == deltas.K(),
             "ComposeLandmarks: index count does not match K");
  ADST_CHECK(poses.size() == static_cast<size_t>(deltas.T()),
             "ComposeLandmarks: pose count does not match T");
  LandmarkSequence seq;
  for (int64_t t = 0; t < deltas.T(); ++t) {
    Landmarks68 lm = neutral;
    for (size_t k = 0; k < me_indices.size(); ++k) {
      const int i = me_indices[k];
      lm.x(i) += deltas.deltas.at({t, static_cast<int64_t>(3 * k)});
      lm.y(i) += deltas.deltas.at({t, static_cast<int64_t>(3 * k + 1)});
      lm.z(i) += deltas.deltas.at({t, static_cast<int64_t>(3 * k + 2)});
    }
    const auto r = geometry::RotvecToMatrix(
        {poses[t][0], poses[t][1], poses[t][2]});
    Landmarks68 posed;
    for (int i = 0; i < Landmarks68::kPoints; ++i) {
      for (int j = 0; j < 3; ++j) {
        posed.p[3 * i + j] = poses[t][3 + j] + lm.p[3 * i] * r[j] +
                             lm.p[3 * i + 1] * r[3 + j] +
                             lm.p[3 * i + 2] * r[6 + j];
      }
    }
    seq.push_back(posed);
  }
  return seq;
}

void DecomposeLandmarks(const Landmarks68 &neutral, const LandmarkSequence &seq,
                        const std::vector<int> &me_indices,
                        DisplacementSequence *deltas,
                        std::vector<std::array<double, 6>> *poses) {
  neutral.Validate();
  ADST_CHECK(!seq.empty(), "DecomposeLandmarks: empty sequence");
  ADST_CHECK(!me_indices.empty(), "DecomposeLandmarks: empty index set");
  const int64_t T = static_cast<int64_t>(seq.size());
  const int64_t K = static_cast<int64_t>(me_indices.size());
  deltas->deltas = Tensor({T, 3 * K});
  poses->assign(T, {});

  Eigen::Matrix<double, 68, 3> n;
  for (int i = 0; i < 68; ++i)
    n.row(i) << neutral.x(i), neutral.y(i), neutral.z(i);
  const Eigen::RowVector3d n_mean = n.colwise().mean();
  const Eigen::Matrix<double, 68, 3> nc = n.rowwise() - n_mean;

  for (int64_t t = 0; t < T; ++t) {
    Eigen::Matrix<double, 68, 3> m;
    for (int i = 0; i < 68; ++i)
      m.row(i) << seq[t].x(i), seq[t].y(i), seq[t].z(i);
    const Eigen::RowVector3d m_mean = m.colwise().mean();
    const Eigen::Matrix<double, 68, 3> mc = m.rowwise() - m_mean;

    // Orthogonal Procrustes for the row convention m ~ n * R.
    const Eigen::Matrix3d h = nc.transpose() * mc;
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(
        h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() < 0) {
      Eigen::Matrix3d u = svd.matrixU();
      u.col(2) *= -1.0;
      r = u * svd.matrixV().transpose();
    }
    const Eigen::RowVector3d tau = m_mean - n_mean * r;

    // r maps row vectors; its transpose is the column-convention matrix.
    const Eigen::AngleAxisd aa(Eigen::Matrix3d(r.transpose()));
    const Eigen::Vector3d rotvec = aa.axis() * aa.angle();
    auto &x = (*poses)[t];
    x = {rotvec(0), rotvec(1), rotvec(2), tau(0), tau(1), tau(2)};

    const Eigen::Matrix<double, 68, 3> unposed =
        (m.rowwise() - tau) * r.transpose();
    for (int64_t k = 0; k < K; ++k) {
      const int i = me_indices[k];
      for (int64_t j = 0; j < 3; ++j)
        deltas->deltas.at({t, 3 * k + j}) = unposed(i, j) - n(i, j);
    }
  }
}

void WriteDisplacements(const std::string &path,
                        const DisplacementSequence &d) {
  d.Validate();
  container::WriteMatrix(path, d.deltas);
}

DisplacementSequence ReadDisplacements(const std::string &path) {
  DisplacementSequence d;
  d.deltas = container::ReadMatrix(path);
  d.Validate();
  return d;
}

}  // namespace motion
}  // namespace adst
