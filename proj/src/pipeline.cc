// adst/pipeline.cc

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

#include "adst/pipeline.h"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>

#include "adst/container.h"
#include "adst/dataharness.h"
#include "adst/metrics.h"
#include "adst/transfer.h"

namespace adst {
namespace pipeline {

namespace fs = std::filesystem;

std::string Checkpoint::ApcPath() const { return dir + "/apc.adst"; }
std::string Checkpoint::MotionPath() const { return dir + "/motion.adst"; }
std::string Checkpoint::GeneratorPath() const {
  return dir + "/generator.adst";
}
std::string Checkpoint::NeutralPath() const { return dir + "/neutral.jsonl"; }
std::string Checkpoint::IspPath(int i) const {
  return dir + "/isp_" + std::to_string(i) + ".png";
}

std::string CacheDir() {
  const char *env = std::getenv("ADST_CACHE");
  return env ? std::string(env) : std::string();
}

namespace {

uint64_t Fnv1a(uint64_t h, const void *data, size_t len) {
  const auto *p = static_cast<const unsigned char *>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

uint64_t FeatureCacheKey(const AudioClip &clip, const audio::ApcEncoder &apc) {
  uint64_t h = 14695981039346656037ULL;
  h = Fnv1a(h, clip.samples.data(), clip.samples.size() * sizeof(double));
  h = Fnv1a(h, &clip.sample_rate, sizeof(clip.sample_rate));
  for (const auto &[name, var] : apc.Params()) {
    h = Fnv1a(h, name.data(), name.size());
    h = Fnv1a(h, var->value.data(), var->value.numel() * sizeof(double));
  }
  return h;
}

Tensor TakeRows(const Tensor &t, int64_t n) {
  const int64_t cols = t.dim(1);
  std::vector<double> rows(t.data(), t.data() + n * cols);
  return Tensor::FromData({n, cols}, std::move(rows));
}

}  // namespace

Tensor AudioFeatures(const AudioClip &clip, const audio::ApcEncoder &apc,
                     const std::string &cache_dir) {
  std::string cache_path;
  if (!cache_dir.empty()) {
    char name[64];
    std::snprintf(name, sizeof(name), "feat_%016llx.adst",
                  static_cast<unsigned long long>(FeatureCacheKey(clip, apc)));
    cache_path = (fs::path(cache_dir) / name).string();
    if (fs::exists(cache_path)) return container::ReadMatrix(cache_path);
  }
  const audio::MelSpectrogram mel = audio::ComputeLogMel(clip);
  const Tensor aligned = audio::AlignAudioToVideo(apc.Encode(mel));
  if (!cache_path.empty()) {
    fs::create_directories(cache_dir);
    container::WriteMatrix(cache_path, aligned);
  }
  return aligned;
}

AnimateResult Animate(const std::string &audio_path,
                      const std::string &source_image_path,
                      const std::string &checkpoint_dir,
                      const std::string &out_dir, const AnimateOptions &opts) {
  const Checkpoint ckpt{checkpoint_dir};
  for (const std::string &p :
       {ckpt.ApcPath(), ckpt.MotionPath(), ckpt.GeneratorPath()})
    if (!fs::exists(p)) throw IoError("missing checkpoint file: " + p);
  if (!fs::exists(audio_path)) throw IoError("missing audio: " + audio_path);
  if (!fs::exists(source_image_path))
    throw IoError("missing source image: " + source_image_path);

  audio::ApcEncoder apc;
  apc.Load(ckpt.ApcPath());
  motion::MotionModel model;
  model.Load(ckpt.MotionPath());
  renderer::GeneratorNet generator;
  generator.Load(ckpt.GeneratorPath());

  const AudioClip clip = ReadWav(audio_path);
  const Image source = ReadPng(source_image_path);
  ADST_CHECK(source.channels == 3 && source.height == facialmap::kMapSize &&
                 source.width == facialmap::kMapSize,
             "source image must be 512x512 RGB");

  Landmarks68 neutral;
  if (fs::exists(ckpt.NeutralPath())) {
    const LandmarkSequence seq =
        geometry::ReadLandmarkSequence(ckpt.NeutralPath());
    ADST_CHECK(!seq.empty(), "neutral landmark file is empty");
    neutral = seq.front();
  } else {
    neutral = geometry::SynthFace(geometry::FaceParams{});
  }

  stylemap::ISPSet isp;
  for (int i = 0; i < stylemap::kNumReferences; ++i)
    isp.images[i] =
        fs::exists(ckpt.IspPath(i)) ? ReadPng(ckpt.IspPath(i)) : source;

  const Tensor features = AudioFeatures(clip, apc, CacheDir());
  const motion::DisplacementSequence deltas = model.me.Forward(features);
  Rng rng(opts.seed);
  const auto poses = model.Rollout(features, motion::PoseHistory(), rng);

  AnimateResult result;
  result.landmarks = motion::ComposeLandmarks(
      neutral, deltas, poses, motion::DefaultMouthEyeIndices());

  fs::create_directories(out_dir);
  geometry::WriteLandmarkSequence((fs::path(out_dir) / "landmarks.jsonl").string(),
                                  result.landmarks);

  int64_t n_render = static_cast<int64_t>(result.landmarks.size());
  if (opts.max_render_frames >= 0)
    n_render = std::min<int64_t>(n_render, opts.max_render_frames);
  const facialmap::CameraMatrix camera = facialmap::OrthographicCamera();
  for (int64_t t = 0; t < n_render; ++t) {
    renderer::GeneratorInput input;
    input.source = source;
    input.facial_map = facialmap::RasterizeFacialMap(result.landmarks[t], camera);
    input.isp = isp;
    const Image frame = generator.Generate(input);
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%05lld.png",
                  static_cast<long long>(t));
    WritePng((fs::path(out_dir) / name).string(), frame);
    ++result.frames_written;
  }
  return result;
}

SmokeResult RunSmokePipeline(const SmokeConfig &cfg) {
  ADST_CHECK(!cfg.work_dir.empty(), "smoke pipeline needs a work dir");
  ADST_CHECK(cfg.duration_s >= 1.0, "smoke duration must be >= 1 s");
  fs::create_directories(cfg.work_dir);
  Rng rng(cfg.seed);
  SmokeResult result;

  const dataharness::SyntheticStyle style_a = dataharness::StyleByName("ballad");
  const dataharness::SyntheticStyle style_b = dataharness::StyleByName("rap");
  const dataharness::SyntheticSample sample_a = dataharness::SynthGenerate(
      style_a, cfg.duration_s, cfg.seed + 1, /*render_frames=*/true);
  const dataharness::SyntheticSample sample_b =
      dataharness::SynthGenerate(style_b, cfg.duration_s, cfg.seed + 2);

  // Stage 1: audio encoder.
  const audio::MelSpectrogram mel_a = audio::ComputeLogMel(sample_a.audio);
  audio::ApcEncoder apc(rng);
  {
    nn::Adam opt(nn::VarsOf(apc.Params()));
    for (int i = 0; i < cfg.apc_steps; ++i)
      result.apc_losses.push_back(apc.TrainStep(mel_a, 3, &opt, 1e-4));
  }

  auto features_for = [&](const AudioClip &clip, size_t n_landmarks) {
    Tensor f = audio::AlignAudioToVideo(
        apc.Encode(audio::ComputeLogMel(clip)));
    const int64_t n = std::min<int64_t>(f.dim(0),
                                        static_cast<int64_t>(n_landmarks));
    return TakeRows(f, n);
  };

  // Stage 2: motion generator on style A.
  const Landmarks68 neutral = geometry::SynthFace(geometry::FaceParams{});
  const std::vector<int> me_idx = motion::DefaultMouthEyeIndices();
  motion::DisplacementSequence deltas_a;
  std::vector<std::array<double, 6>> poses_a;
  motion::DecomposeLandmarks(neutral, sample_a.landmarks, me_idx, &deltas_a,
                             &poses_a);
  Tensor feat_a = features_for(sample_a.audio, sample_a.landmarks.size());
  const int64_t ta = feat_a.dim(0);
  Tensor truth_deltas = TakeRows(deltas_a.deltas, ta);
  Tensor truth_poses({ta, motion::kPoseDim});
  for (int64_t t = 0; t < ta; ++t)
    for (int c = 0; c < motion::kPoseDim; ++c)
      truth_poses.at(t, c) = poses_a[t][c];

  motion::MotionModel model(motion::kDefaultKMe, rng);
  {
    nn::Adam opt(nn::VarsOf(model.Params()));
    for (int i = 0; i < cfg.motion_steps; ++i)
      result.motion_losses.push_back(
          model.TrainStep(feat_a, truth_deltas, truth_poses, 1, &opt, 1e-4));
  }

  // Stage 3: one-sample GAN training for the renderer.
  const std::vector<stylemap::MotionTemplate> templates =
      stylemap::DefaultMotionTemplates();
  const stylemap::StyleReferenceSet refs = stylemap::SelectStyleReferences(
      sample_a.frames, sample_a.landmarks, templates);
  renderer::GeneratorNet generator(rng);
  renderer::PatchDiscriminator discriminator(rng);
  const renderer::PerceptualNet perceptual;
  {
    nn::Adam opt_g(nn::VarsOf(generator.Params()));
    nn::Adam opt_d(nn::VarsOf(discriminator.Params()));
    for (int i = 0; i < cfg.gan_steps; ++i) {
      const size_t t = static_cast<size_t>(i) % sample_a.frames.size();
      renderer::GanSample gan;
      gan.input.source = sample_a.frames[0];
      gan.input.facial_map = facialmap::RasterizeFacialMap(
          sample_a.landmarks[t], facialmap::OrthographicCamera());
      for (int r = 0; r < stylemap::kNumReferences; ++r)
        gan.input.isp.images[r] = refs.frames[r];
      gan.target = sample_a.frames[t];
      gan.matched_style =
          refs.frames[renderer::RetrieveMatchedStyleIndex(sample_a.landmarks[t],
                                                          refs)];
      gan.weights = facialmap::BuildWeightMask(sample_a.landmarks[t]);
      const renderer::GanStepResult step = renderer::TrainStepGan(
          gan, &generator, &discriminator, perceptual, &opt_g, &opt_d, 1e-5,
          1e-5);
      result.gan_losses.push_back(step.loss_g);
    }
  }

  // Stage 4: style transfer toward style B.
  Tensor feat_b = features_for(sample_b.audio, sample_b.landmarks.size());
  LandmarkSequence ref_b(sample_b.landmarks.begin(),
                         sample_b.landmarks.begin() + feat_b.dim(0));
  transfer::StyleTransferNet f(rng);
  transfer::TransferConfig tcfg;
  tcfg.epochs = cfg.transfer_epochs;
  tcfg.steps_per_epoch = 2;
  tcfg.frames_per_step = 4;
  tcfg.pose_samples = 1;
  const transfer::TransferResult tres =
      transfer::RunTransfer(&model, &f, feat_b, ref_b, neutral, tcfg, rng);
  result.transfer_losses = tres.epoch_losses;

  // Stage 5: checkpoint, animate on the style-B audio, evaluate.
  const Checkpoint ckpt{(fs::path(cfg.work_dir) / "ckpt").string()};
  fs::create_directories(ckpt.dir);
  apc.Save(ckpt.ApcPath());
  model.Save(ckpt.MotionPath());
  generator.Save(ckpt.GeneratorPath());
  geometry::WriteLandmarkSequence(ckpt.NeutralPath(), {neutral});
  for (int r = 0; r < stylemap::kNumReferences; ++r)
    WritePng(ckpt.IspPath(r), refs.frames[r]);

  const std::string audio_b = (fs::path(cfg.work_dir) / "style_b.wav").string();
  const std::string source_png = (fs::path(cfg.work_dir) / "source.png").string();
  WriteWav(audio_b, sample_b.audio);
  WritePng(source_png, sample_a.frames[0]);

  AnimateOptions aopts;
  aopts.seed = cfg.seed + 3;
  aopts.max_render_frames = cfg.render_frames;
  const AnimateResult animated =
      Animate(audio_b, source_png, ckpt.dir,
              (fs::path(cfg.work_dir) / "out").string(), aopts);

  const metrics::MetricReport report =
      metrics::Evaluate(ref_b, animated.landmarks);
  result.report_json = report.ToJson();
  return result;
}

}  // namespace pipeline
}  // namespace adst
