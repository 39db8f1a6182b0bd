// adst/transfer.cc

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

#include "adst/transfer.h"

#include <cmath>
#include <fstream>

#include "adst/container.h"
#include "json.hpp"

namespace adst {
namespace transfer {

StyleTransferNet::StyleTransferNet(Rng &rng)
    : l1(kPhiDim, 1024, rng), l2(1024, 512, rng), l3(512, kFeatureDim, rng) {}

ag::Var StyleTransferNet::ForwardVar(const ag::Var &phi) const {
  ADST_CHECK(phi->value.rank() == 2 && phi->value.dim(1) == kPhiDim,
             "StyleTransferNet: input must be [N, 204]");
  ag::Var h = ag::Tanh(l1.Forward(phi));
  h = ag::Tanh(l2.Forward(h));
  return l3.Forward(h);
}

Tensor StyleTransferNet::Features(const Tensor &phi) const {
  Tensor in = phi;
  if (in.rank() == 1) in = in.Reshaped({1, in.numel()});
  return ForwardVar(ag::Constant(in))->value;
}

ag::Var StyleTransferNet::InputGradVar(const ag::Var &phi) const {
  // grad of mean(f) w.r.t. phi expressed with forward ops only:
  // u3 = 1/256, u2 = (u3 W3) (1 - a2^2), u1 = (u2 W2) (1 - a1^2),
  // g = u1 W1.
  const int64_t n = phi->value.dim(0);
  const ag::Var a1 = ag::Tanh(l1.Forward(phi));
  const ag::Var a2 = ag::Tanh(l2.Forward(a1));
  Tensor ones({n, kFeatureDim});
  for (int64_t i = 0; i < ones.numel(); ++i)
    ones.data()[i] = 1.0 / kFeatureDim;
  auto one_minus_sq = [](const ag::Var &a) {
    return ag::AddScalar(ag::MulScalar(ag::Square(a), -1.0), 1.0);
  };
  const ag::Var u2 = ag::Mul(ag::Matmul(ag::Constant(ones), l3.w),
                             one_minus_sq(a2));
  const ag::Var u1 = ag::Mul(ag::Matmul(u2, l2.w), one_minus_sq(a1));
  return ag::Matmul(u1, l1.w);
}

nn::ParamMap StyleTransferNet::Params() const {
  nn::ParamMap p;
  l1.Params("l1", &p);
  l2.Params("l2", &p);
  l3.Params("l3", &p);
  return p;
}

void StyleTransferNet::Save(const std::string &path) const {
  container::WriteCheckpoint(path, nn::StateDict(Params()));
}

void StyleTransferNet::Load(const std::string &path) {
  const auto state = container::ReadCheckpoint(path);
  if (!l1.w) {
    Rng rng(0);  // shapes only; weights are overwritten below
    *this = StyleTransferNet(rng);
  }
  nn::LoadStateDict(Params(), state);
}

ag::Var LossConstraintVar(const StyleTransferNet &f, const ag::Var &phi_mg,
                          const ag::Var &phi_s) {
  return ag::Sum(ag::Square(
      ag::Sub(f.ForwardVar(phi_mg), f.ForwardVar(phi_s))));
}

namespace {

Tensor AsRow(const Tensor &t) {
  return t.rank() == 1 ? t.Reshaped({1, t.numel()}) : t;
}

}  // namespace

double LossConstraint(const StyleTransferNet &f, const Tensor &phi_mg,
                      const Tensor &phi_s) {
  return LossConstraintVar(f, ag::Constant(AsRow(phi_mg)),
                           ag::Constant(AsRow(phi_s)))
      ->value.at({0});
}

Tensor Interpolate(const Tensor &phi_s, const Tensor &phi_mg, double gamma) {
  ADST_CHECK(gamma >= 0.0 && gamma <= 1.0, "Interpolate: gamma outside [0,1]");
  ADST_CHECK(phi_s.SameShape(phi_mg), "Interpolate: shape mismatch");
  Tensor out(phi_s.shape());
  for (int64_t i = 0; i < out.numel(); ++i)
    out.data()[i] = gamma * phi_s.data()[i] + (1.0 - gamma) * phi_mg.data()[i];
  return out;
}

ag::Var InterpolateVar(const ag::Var &phi_s, const ag::Var &phi_mg,
                       double gamma) {
  ADST_CHECK(gamma >= 0.0 && gamma <= 1.0, "Interpolate: gamma outside [0,1]");
  return ag::Add(ag::MulScalar(phi_s, gamma),
                 ag::MulScalar(phi_mg, 1.0 - gamma));
}

ag::Var LossRegularizerVar(const StyleTransferNet &f, const ag::Var &phi_hat) {
  const int64_t n = phi_hat->value.dim(0);
  const ag::Var g = f.InputGradVar(phi_hat);
  ag::Var acc;
  for (int64_t i = 0; i < n; ++i) {
    const ag::Var row = ag::SliceAxis0(g, i, 1);
    const ag::Var norm = ag::Sqrt(ag::Sum(ag::Square(row)));
    const ag::Var term = ag::Square(ag::AddScalar(norm, -1.0));
    acc = acc ? ag::Add(acc, term) : term;
  }
  return ag::MulScalar(acc, 1.0 / n);
}

double LossRegularizer(const StyleTransferNet &f, const Tensor &phi_hat) {
  return LossRegularizerVar(f, ag::Constant(AsRow(phi_hat)))->value.at({0});
}

double LossTransfer(double l_mg, double l_sc, double l_r) {
  ADST_CHECK(std::isfinite(l_mg) && std::isfinite(l_sc) && std::isfinite(l_r),
             "LossTransfer: non-finite term");
  return l_mg + l_sc + l_r;
}

double PretrainStep(StyleTransferNet *f, const Tensor &phi_a,
                    const Tensor &phi_b, const Tensor &phi_probe,
                    nn::Adam *opt, double lr) {
  opt->ZeroGrad();
  const ag::Var l_sc = LossConstraintVar(*f, ag::Constant(AsRow(phi_a)),
                                         ag::Constant(AsRow(phi_b)));
  const ag::Var l_r = LossRegularizerVar(*f, ag::Constant(AsRow(phi_probe)));
  const ag::Var loss = ag::Add(l_sc, l_r);
  ag::Backward(loss);
  opt->Step(lr);
  return loss->value.at({0});
}

void TransferConfig::Validate() const {
  ADST_CHECK(gamma >= 0.0 && gamma <= 1.0, "TransferConfig: gamma outside [0,1]");
  ADST_CHECK(epochs >= 1, "TransferConfig: epochs >= 1");
  ADST_CHECK(lr_phase1 > 0 && lr_phase2 > 0, "TransferConfig: lrs must be > 0");
  ADST_CHECK(steps_per_epoch >= 1 && frames_per_step >= 1 && pose_samples >= 1,
             "TransferConfig: step counts must be positive");
}

double CosineLr(double base, int step, int total) {
  ADST_CHECK(total >= 1 && step >= 0 && step <= total, "CosineLr: bad step");
  return 0.5 * base * (1.0 + std::cos(kPi * step / total));
}

namespace {

// [3K, 204] selection matrix scattering displacement entries into the
// landmark vector.
Tensor ScatterMatrix(const std::vector<int> &me_indices) {
  const int64_t k = static_cast<int64_t>(me_indices.size());
  Tensor s({3 * k, kPhiDim});
  for (int64_t i = 0; i < k; ++i)
    for (int64_t j = 0; j < 3; ++j)
      s.at(3 * i + j, 3 * me_indices[i] + j) = 1.0;
  return s;
}

Tensor RowOf(const Tensor &m, int64_t r) {
  Tensor out({1, m.dim(1)});
  for (int64_t j = 0; j < m.dim(1); ++j) out.at(0, j) = m.at(r, j);
  return out;
}

}  // namespace

TransferResult RunTransfer(motion::MotionModel *model, StyleTransferNet *f,
                           const Tensor &features,
                           const LandmarkSequence &reference,
                           const Landmarks68 &neutral,
                           const TransferConfig &cfg, Rng &rng) {
  cfg.Validate();
  const int64_t T = features.dim(0);
  ADST_CHECK(static_cast<size_t>(T) == reference.size(),
             "RunTransfer: feature/landmark length mismatch");
  ADST_CHECK(T > motion::kLookaheadFrames, "RunTransfer: sequence too short");

  const std::vector<int> me_idx = motion::DefaultMouthEyeIndices();
  ADST_CHECK(static_cast<int64_t>(me_idx.size()) == model->me.k_me(),
             "RunTransfer: model K does not match the landmark subset");
  motion::DisplacementSequence truth;
  std::vector<std::array<double, 6>> poses;
  motion::DecomposeLandmarks(neutral, reference, me_idx, &truth, &poses);
  Tensor truth_poses({T, motion::kPoseDim});
  for (int64_t t = 0; t < T; ++t)
    for (int64_t j = 0; j < motion::kPoseDim; ++j)
      truth_poses.at(t, j) = poses[t][j];

  // Pose-free style vectors: unposed reference landmarks.
  Tensor phi_s({T, kPhiDim});
  const auto neutral_vec = geometry::VectorizeLandmarks(neutral);
  const Tensor scatter = ScatterMatrix(me_idx);
  {
    motion::DisplacementSequence full;
    std::vector<int> all_idx(Landmarks68::kPoints);
    for (int i = 0; i < Landmarks68::kPoints; ++i) all_idx[i] = i;
    std::vector<std::array<double, 6>> unused;
    motion::DecomposeLandmarks(neutral, reference, all_idx, &full, &unused);
    for (int64_t t = 0; t < T; ++t)
      for (int64_t j = 0; j < kPhiDim; ++j)
        phi_s.at(t, j) = neutral_vec[j] + full.deltas.at(t, j);
  }
  Tensor neutral_row({1, kPhiDim});
  for (int64_t j = 0; j < kPhiDim; ++j) neutral_row.at(0, j) = neutral_vec[j];

  auto eval_l_mg = [&]() {
    const double me = model->EvalLossMe(features, truth.deltas);
    motion::PoseHistory hist;
    for (int64_t t = 0; t < std::min<int64_t>(T, motion::kHistoryLen); ++t)
      hist.Push(poses[t]);
    Tensor h_last({512});
    for (int64_t j = 0; j < 512; ++j) h_last.at({j}) = features.at(T - 1, j);
    const double ht =
        motion::LossHt(poses[T - 1], model->ht.Predict(hist, h_last));
    return motion::LossMg(me, ht);
  };

  TransferResult result;
  result.pre_l_mg = eval_l_mg();

  const nn::ParamMap f_params = f->Params();
  nn::ParamMap joint_params = f_params;
  {
    const nn::ParamMap motion_params = model->Params();
    joint_params.insert(joint_params.end(), motion_params.begin(),
                        motion_params.end());
  }
  nn::Adam opt_phase1(nn::VarsOf(f_params));
  nn::Adam opt_phase2(nn::VarsOf(joint_params));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const bool frozen = epoch == 0;
    double epoch_loss = 0.0;
    for (int step = 0; step < cfg.steps_per_epoch; ++step) {
      nn::Adam &opt = frozen ? opt_phase1 : opt_phase2;
      opt.ZeroGrad();

      const ag::Var deltas = model->me.ForwardVar(ag::Constant(features));
      ag::Var l_mg = motion::LossMeVar(ag::Constant(truth.deltas), deltas);
      for (int s = 0; s < cfg.pose_samples; ++s) {
        const int64_t t = static_cast<int64_t>(
            UniformReal(rng, 0.0, static_cast<double>(T)));
        const int64_t tt = std::min<int64_t>(t, T - 1);
        Tensor hist({motion::kHistoryLen, motion::kPoseDim});
        for (int64_t r = 0; r < motion::kHistoryLen; ++r) {
          const int64_t src = tt - motion::kHistoryLen + r;
          if (src < 0) continue;
          for (int64_t j = 0; j < motion::kPoseDim; ++j)
            hist.at(r, j) = truth_poses.at(src, j);
        }
        const auto [mu, std_v] = model->ht.PredictVar(
            ag::Constant(hist),
            ag::SliceAxis0(ag::Constant(features), tt, 1));
        const ag::Var nll = motion::LossHtVar(
            ag::Constant(RowOf(truth_poses, tt)), mu, std_v);
        l_mg = ag::Add(l_mg, ag::MulScalar(nll, 1.0 / cfg.pose_samples));
      }

      ag::Var l_style;
      for (int b = 0; b < cfg.frames_per_step; ++b) {
        const int64_t t = std::min<int64_t>(
            static_cast<int64_t>(UniformReal(rng, 0.0, static_cast<double>(T))),
            T - 1);
        const ag::Var phi_mg =
            ag::Add(ag::Constant(neutral_row),
                    ag::Matmul(ag::SliceAxis0(deltas, t, 1),
                               ag::Constant(scatter)));
        const ag::Var phi_s_t = ag::Constant(RowOf(phi_s, t));
        const ag::Var l_sc = LossConstraintVar(*f, phi_mg, phi_s_t);
        const double gamma = cfg.gamma_mode == GammaMode::kFixed
                                 ? cfg.gamma
                                 : UniformReal(rng, 0.0, 1.0);
        const ag::Var phi_hat = InterpolateVar(phi_s_t, phi_mg, gamma);
        const ag::Var l_r = LossRegularizerVar(*f, phi_hat);
        const ag::Var term = ag::Add(l_sc, l_r);
        l_style = l_style ? ag::Add(l_style, term) : term;
      }
      const ag::Var loss = ag::Add(
          l_mg, ag::MulScalar(l_style, 1.0 / cfg.frames_per_step));
      ag::Backward(loss);

      const double base = frozen ? cfg.lr_phase1 : cfg.lr_phase2;
      const int phase_total =
          frozen ? cfg.steps_per_epoch
                 : (cfg.epochs - 1) * cfg.steps_per_epoch;
      const int phase_step =
          frozen ? step : (epoch - 1) * cfg.steps_per_epoch + step;
      opt.Step(CosineLr(base, phase_step, phase_total));
      epoch_loss += loss->value.at({0});
    }
    result.epoch_losses.push_back(epoch_loss / cfg.steps_per_epoch);
  }

  result.post_l_mg = eval_l_mg();
  return result;
}

void WriteTransferManifest(const std::string &path,
                           const TransferManifest &m) {
  nlohmann::json j;
  j["style_name"] = m.style_name;
  j["reference_landmark_file"] = m.reference_landmark_file;
  j["audio_file"] = m.audio_file;
  j["epochs"] = m.epochs;
  j["gamma_mode"] = m.gamma_mode;
  j["seed"] = m.seed;
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << j.dump(2) << "\n";
  if (!f) throw IoError("write failed: " + path);
}

TransferManifest ReadTransferManifest(const std::string &path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open manifest: " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception &e) {
    throw IoError("bad manifest " + path + ": " + e.what());
  }
  TransferManifest m;
  m.style_name = j.at("style_name").get<std::string>();
  m.reference_landmark_file = j.at("reference_landmark_file").get<std::string>();
  m.audio_file = j.at("audio_file").get<std::string>();
  m.epochs = j.at("epochs").get<int>();
  m.gamma_mode = j.at("gamma_mode").get<std::string>();
  m.seed = j.at("seed").get<uint64_t>();
  ADST_CHECK(m.gamma_mode == "fixed" || m.gamma_mode == "uniform",
             "manifest gamma_mode must be fixed or uniform");
  return m;
}

}  // namespace transfer
}  // namespace adst
