// tools/adst_main.cc

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

// Subcommand front end: synth-data, train-apc, train-motion,
// train-generator, build-isp, transfer, animate, evaluate.
// Exit codes: 0 success, 1 validation error, 2 I/O error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adst/dataharness.h"
#include "adst/metrics.h"
#include "adst/pipeline.h"
#include "adst/transfer.h"

namespace fs = std::filesystem;
using namespace adst;

namespace {

struct TrainData {
  std::vector<dataharness::SyntheticSample> samples;
};

// Per-sample supervision: aligned audio features with decomposed
// displacement/pose targets, all truncated to a common length.
struct MotionSupervision {
  Tensor features, deltas, poses;
};

MotionSupervision MakeSupervision(const dataharness::SyntheticSample &sample,
                                  const audio::ApcEncoder &apc,
                                  const Landmarks68 &neutral) {
  Tensor feat = pipeline::AudioFeatures(sample.audio, apc, pipeline::CacheDir());
  motion::DisplacementSequence d;
  std::vector<std::array<double, 6>> p;
  motion::DecomposeLandmarks(neutral, sample.landmarks,
                             motion::DefaultMouthEyeIndices(), &d, &p);
  const int64_t t = std::min<int64_t>(feat.dim(0), d.deltas.dim(0));
  auto take = [t](const Tensor &m) {
    return Tensor::FromData({t, m.dim(1)},
                            {m.data(), m.data() + t * m.dim(1)});
  };
  MotionSupervision out;
  out.features = take(feat);
  out.deltas = take(d.deltas);
  out.poses = Tensor({t, motion::kPoseDim});
  for (int64_t i = 0; i < t; ++i)
    for (int c = 0; c < motion::kPoseDim; ++c) out.poses.at(i, c) = p[i][c];
  return out;
}

std::vector<Image> ReadFrameDir(const std::string &dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<std::string> paths;
  for (const auto &e : fs::directory_iterator(dir))
    if (e.path().extension() == ".png") paths.push_back(e.path().string());
  std::sort(paths.begin(), paths.end());
  std::vector<Image> frames;
  for (const auto &p : paths) frames.push_back(ReadPng(p));
  return frames;
}

int RunSynthData(const std::string &out, const std::string &style_name,
                 double duration, int count, bool render, uint64_t seed) {
  ADST_CHECK(count >= 1, "--count must be >= 1");
  std::vector<dataharness::SyntheticStyle> styles;
  if (style_name.empty())
    styles = dataharness::BuiltinStyles();
  else
    styles.push_back(dataharness::StyleByName(style_name));
  std::vector<dataharness::SyntheticSample> samples;
  uint64_t k = 0;
  for (const auto &style : styles)
    for (int i = 0; i < count; ++i)
      samples.push_back(
          dataharness::SynthGenerate(style, duration, seed + k++, render));
  const std::string manifest = (fs::path(out) / "manifest.json").string();
  dataharness::SaveDataset(manifest, samples);
  std::cout << "wrote " << samples.size() << " samples to " << manifest << "\n";
  return 0;
}

int RunTrainApc(const std::string &data, const std::string &out, int steps,
                double lr, int offset, uint64_t seed) {
  const auto samples = dataharness::LoadDataset(data);
  ADST_CHECK(!samples.empty(), "dataset is empty");
  std::vector<audio::MelSpectrogram> mels;
  for (const auto &s : samples) mels.push_back(audio::ComputeLogMel(s.audio));
  Rng rng(seed);
  audio::ApcEncoder apc(rng);
  nn::Adam opt(nn::VarsOf(apc.Params()));
  for (int i = 0; i < steps; ++i) {
    const double loss = apc.TrainStep(mels[i % mels.size()], offset, &opt, lr);
    std::cout << "step " << i << " loss " << loss << "\n";
  }
  fs::create_directories(out);
  apc.Save(pipeline::Checkpoint{out}.ApcPath());
  return 0;
}

int RunTrainMotion(const std::string &data, const std::string &apc_dir,
                   const std::string &out, int steps, double lr,
                   int pose_samples, uint64_t seed) {
  const auto samples = dataharness::LoadDataset(data);
  ADST_CHECK(!samples.empty(), "dataset is empty");
  const std::string apc_path = pipeline::Checkpoint{apc_dir}.ApcPath();
  if (!fs::exists(apc_path)) throw IoError("missing checkpoint file: " + apc_path);
  audio::ApcEncoder apc;
  apc.Load(apc_path);
  const Landmarks68 neutral = geometry::SynthFace(geometry::FaceParams{});
  std::vector<MotionSupervision> sup;
  for (const auto &s : samples) sup.push_back(MakeSupervision(s, apc, neutral));
  Rng rng(seed);
  motion::MotionModel model(motion::kDefaultKMe, rng);
  nn::Adam opt(nn::VarsOf(model.Params()));
  for (int i = 0; i < steps; ++i) {
    const auto &s = sup[i % sup.size()];
    const double loss =
        model.TrainStep(s.features, s.deltas, s.poses, pose_samples, &opt, lr);
    std::cout << "step " << i << " loss " << loss << "\n";
  }
  fs::create_directories(out);
  model.Save(pipeline::Checkpoint{out}.MotionPath());
  geometry::WriteLandmarkSequence(pipeline::Checkpoint{out}.NeutralPath(),
                                  {neutral});
  return 0;
}

int RunTrainGenerator(const std::string &data, const std::string &out,
                      int steps, double lr_g, double lr_d, uint64_t seed) {
  const auto samples = dataharness::LoadDataset(data, /*load_frames=*/true);
  ADST_CHECK(!samples.empty(), "dataset is empty");
  for (const auto &s : samples)
    ADST_CHECK(!s.frames.empty(), "train-generator needs rendered frames");
  const auto templates = stylemap::DefaultMotionTemplates();
  std::vector<stylemap::StyleReferenceSet> refs;
  for (const auto &s : samples)
    refs.push_back(
        stylemap::SelectStyleReferences(s.frames, s.landmarks, templates));
  Rng rng(seed);
  renderer::GeneratorNet g(rng);
  renderer::PatchDiscriminator d(rng);
  const renderer::PerceptualNet perceptual;
  nn::Adam opt_g(nn::VarsOf(g.Params()));
  nn::Adam opt_d(nn::VarsOf(d.Params()));
  const auto camera = facialmap::OrthographicCamera();
  for (int i = 0; i < steps; ++i) {
    const size_t si = static_cast<size_t>(i) % samples.size();
    const auto &s = samples[si];
    const size_t t = static_cast<size_t>(i / samples.size()) % s.frames.size();
    renderer::GanSample gan;
    gan.input.source = s.frames[0];
    gan.input.facial_map = facialmap::RasterizeFacialMap(s.landmarks[t], camera);
    for (int r = 0; r < stylemap::kNumReferences; ++r)
      gan.input.isp.images[r] = refs[si].frames[r];
    gan.target = s.frames[t];
    gan.matched_style =
        refs[si].frames[renderer::RetrieveMatchedStyleIndex(s.landmarks[t],
                                                            refs[si])];
    gan.weights = facialmap::BuildWeightMask(s.landmarks[t]);
    const auto step =
        renderer::TrainStepGan(gan, &g, &d, perceptual, &opt_g, &opt_d, lr_g,
                               lr_d);
    std::cout << "step " << i << " loss_g " << step.loss_g << " loss_d "
              << step.loss_d << " l_pw " << step.l_pw << "\n";
  }
  fs::create_directories(out);
  g.Save(pipeline::Checkpoint{out}.GeneratorPath());
  return 0;
}

int RunBuildIsp(const std::string &data, const std::string &neutral_image,
                const std::string &out, uint64_t seed) {
  const auto samples = dataharness::LoadDataset(data, /*load_frames=*/true);
  ADST_CHECK(!samples.empty(), "dataset is empty");
  ADST_CHECK(!samples[0].frames.empty(), "build-isp needs rendered frames");
  if (!fs::exists(neutral_image))
    throw IoError("missing neutral image: " + neutral_image);
  const Image neutral = ReadPng(neutral_image);
  Rng rng(seed);
  stylemap::KeypointExtractor extractor(stylemap::kWarpKeypoints, rng);
  stylemap::PoseExpressionNet pose_net(stylemap::kWarpKeypoints, rng);
  stylemap::IntermediateGenerator generator(rng);
  const auto [c, pose] = stylemap::Disentangle(neutral, extractor, pose_net);
  const auto refs = stylemap::SelectStyleReferences(
      samples[0].frames, samples[0].landmarks,
      stylemap::DefaultMotionTemplates());
  const stylemap::ISPSet isp =
      stylemap::BuildIsp(neutral, c, pose, refs, pose_net, generator);
  fs::create_directories(out);
  const pipeline::Checkpoint ckpt{out};
  for (int r = 0; r < stylemap::kNumReferences; ++r)
    WritePng(ckpt.IspPath(r), isp.images[r]);
  std::cout << "wrote " << stylemap::kNumReferences << " style patterns to "
            << out << "\n";
  return 0;
}

int RunTransferCmd(const std::string &audio_path, const std::string &reference,
                   const std::string &checkpoint, const std::string &out,
                   const std::string &style_name, const std::string &gamma_mode,
                   double gamma, int epochs, uint64_t seed) {
  const pipeline::Checkpoint in{checkpoint};
  for (const std::string &p : {in.ApcPath(), in.MotionPath()})
    if (!fs::exists(p)) throw IoError("missing checkpoint file: " + p);
  if (!fs::exists(audio_path)) throw IoError("missing audio: " + audio_path);
  if (!fs::exists(reference))
    throw IoError("missing landmark file: " + reference);

  audio::ApcEncoder apc;
  apc.Load(in.ApcPath());
  motion::MotionModel model;
  model.Load(in.MotionPath());
  LandmarkSequence ref = geometry::ReadLandmarkSequence(reference);
  Tensor feat =
      pipeline::AudioFeatures(ReadWav(audio_path), apc, pipeline::CacheDir());
  const int64_t t = std::min<int64_t>(feat.dim(0),
                                      static_cast<int64_t>(ref.size()));
  ADST_CHECK(t > 0, "transfer: empty reference");
  feat = Tensor::FromData({t, feat.dim(1)},
                          {feat.data(), feat.data() + t * feat.dim(1)});
  ref.resize(t);

  Landmarks68 neutral;
  if (fs::exists(in.NeutralPath()))
    neutral = geometry::ReadLandmarkSequence(in.NeutralPath()).at(0);
  else
    neutral = geometry::SynthFace(geometry::FaceParams{});

  transfer::TransferConfig cfg;
  cfg.epochs = epochs;
  cfg.gamma = gamma;
  if (gamma_mode == "fixed")
    cfg.gamma_mode = transfer::GammaMode::kFixed;
  else if (gamma_mode == "uniform")
    cfg.gamma_mode = transfer::GammaMode::kUniform;
  else
    throw ValidationError("gamma mode must be fixed or uniform");

  Rng rng(seed);
  transfer::StyleTransferNet f(rng);
  const transfer::TransferResult res =
      transfer::RunTransfer(&model, &f, feat, ref, neutral, cfg, rng);
  for (size_t e = 0; e < res.epoch_losses.size(); ++e)
    std::cout << "epoch " << e << " loss " << res.epoch_losses[e] << "\n";
  std::cout << "l_mg pre " << res.pre_l_mg << " post " << res.post_l_mg << "\n";

  fs::create_directories(out);
  const pipeline::Checkpoint outc{out};
  model.Save(outc.MotionPath());
  geometry::WriteLandmarkSequence(outc.NeutralPath(), {neutral});
  transfer::TransferManifest manifest;
  manifest.style_name = style_name;
  manifest.reference_landmark_file = reference;
  manifest.audio_file = audio_path;
  manifest.epochs = epochs;
  manifest.gamma_mode = gamma_mode;
  manifest.seed = seed;
  transfer::WriteTransferManifest(
      (fs::path(out) / "transfer_manifest.json").string(), manifest);
  return 0;
}

int RunAnimate(const std::string &audio_path, const std::string &image,
               const std::string &checkpoint, const std::string &out,
               int max_frames, uint64_t seed) {
  pipeline::AnimateOptions opts;
  opts.seed = seed;
  opts.max_render_frames = max_frames;
  const pipeline::AnimateResult res =
      pipeline::Animate(audio_path, image, checkpoint, out, opts);
  std::cout << "wrote " << res.landmarks.size() << " landmark frames, "
            << res.frames_written << " images to " << out << "\n";
  return 0;
}

int RunEvaluate(const std::string &ref_path, const std::string &gen_path,
                const std::string &frames_dir, const std::string &out) {
  if (!fs::exists(ref_path))
    throw IoError("missing landmark file: " + ref_path);
  if (!fs::exists(gen_path))
    throw IoError("missing landmark file: " + gen_path);
  const LandmarkSequence ref = geometry::ReadLandmarkSequence(ref_path);
  const LandmarkSequence gen = geometry::ReadLandmarkSequence(gen_path);
  std::vector<Image> frames;
  if (!frames_dir.empty()) frames = ReadFrameDir(frames_dir);
  const metrics::MetricReport report = metrics::Evaluate(ref, gen, frames);
  const std::string json = report.ToJson();
  if (out.empty()) {
    std::cout << json << "\n";
  } else {
    std::ofstream f(out);
    if (!f) throw IoError("cannot open for writing: " + out);
    f << json << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"style-aware audio-driven talking head toolkit"};
  app.require_subcommand(1);

  uint64_t seed = 0;
  std::string config_path, out_dir, data, style, checkpoint, apc_dir;
  std::string audio_path, image_path, reference, frames_dir, report_out;
  std::string gamma_mode = "uniform";
  double duration = 4.0, lr = -1.0, gamma = 0.5;
  int count = 1, steps = 50, offset = 3, pose_samples = 2, epochs = 6;
  int max_frames = -1;
  bool render = false;

  auto add_common = [&](CLI::App *cmd) {
    cmd->add_option("--seed", seed, "RNG seed");
    cmd->add_option("--config", config_path, "key=value training config");
  };

  CLI::App *synth = app.add_subcommand("synth-data", "generate a synthetic dataset");
  synth->add_option("--out", out_dir)->required();
  synth->add_option("--style", style, "builtin style name (default: all)");
  synth->add_option("--duration", duration);
  synth->add_option("--count", count, "samples per style");
  synth->add_flag("--render", render, "also render frames");
  add_common(synth);

  CLI::App *tapc = app.add_subcommand("train-apc", "train the audio encoder");
  tapc->add_option("--data", data)->required();
  tapc->add_option("--out", out_dir)->required();
  tapc->add_option("--steps", steps);
  tapc->add_option("--lr", lr);
  tapc->add_option("--offset", offset, "future-frame prediction offset");
  add_common(tapc);

  CLI::App *tmot = app.add_subcommand("train-motion", "train the motion generator");
  tmot->add_option("--data", data)->required();
  tmot->add_option("--apc", apc_dir, "checkpoint dir with apc.adst")->required();
  tmot->add_option("--out", out_dir)->required();
  tmot->add_option("--steps", steps);
  tmot->add_option("--lr", lr);
  tmot->add_option("--pose-samples", pose_samples);
  add_common(tmot);

  CLI::App *tgen = app.add_subcommand("train-generator", "train the renderer GAN");
  tgen->add_option("--data", data)->required();
  tgen->add_option("--out", out_dir)->required();
  tgen->add_option("--steps", steps);
  tgen->add_option("--lr", lr);
  add_common(tgen);

  CLI::App *isp = app.add_subcommand("build-isp", "build intermediate style patterns");
  isp->add_option("--data", data)->required();
  isp->add_option("--neutral-image", image_path)->required();
  isp->add_option("--out", out_dir)->required();
  add_common(isp);

  CLI::App *tr = app.add_subcommand("transfer", "style-transfer fine-tuning");
  tr->add_option("--audio", audio_path)->required();
  tr->add_option("--reference", reference)->required();
  tr->add_option("--checkpoint", checkpoint)->required();
  tr->add_option("--out", out_dir)->required();
  tr->add_option("--style-name", style);
  tr->add_option("--gamma-mode", gamma_mode, "fixed | uniform");
  tr->add_option("--gamma", gamma);
  tr->add_option("--epochs", epochs);
  add_common(tr);

  CLI::App *anim = app.add_subcommand("animate", "audio + image -> frames");
  anim->add_option("--audio", audio_path)->required();
  anim->add_option("--image", image_path)->required();
  anim->add_option("--checkpoint", checkpoint)->required();
  anim->add_option("--out", out_dir)->required();
  anim->add_option("--max-frames", max_frames, "-1 = all, 0 = landmarks only");
  add_common(anim);

  CLI::App *ev = app.add_subcommand("evaluate", "landmark files -> metric report");
  ev->add_option("reference", reference)->required();
  ev->add_option("generated", data)->required();
  ev->add_option("--frames", frames_dir, "PNG dir for CPBD");
  ev->add_option("--out", report_out, "report path (default stdout)");

  try {
    app.parse(argc, argv);

    renderer::TrainingConfig cfg;
    if (!config_path.empty()) cfg = renderer::TrainingConfig::Load(config_path);

    if (app.got_subcommand(synth))
      return RunSynthData(out_dir, style, duration, count, render, seed);
    if (app.got_subcommand(tapc))
      return RunTrainApc(data, out_dir, steps, lr > 0 ? lr : cfg.lr_audio,
                         offset, seed);
    if (app.got_subcommand(tmot))
      return RunTrainMotion(data, apc_dir, out_dir, steps,
                            lr > 0 ? lr : cfg.lr_motion, pose_samples, seed);
    if (app.got_subcommand(tgen))
      return RunTrainGenerator(data, out_dir, steps,
                               lr > 0 ? lr : cfg.lr_generator,
                               cfg.lr_discriminator, seed);
    if (app.got_subcommand(isp))
      return RunBuildIsp(data, image_path, out_dir, seed);
    if (app.got_subcommand(tr))
      return RunTransferCmd(audio_path, reference, checkpoint, out_dir, style,
                            gamma_mode, gamma, epochs, seed);
    if (app.got_subcommand(anim))
      return RunAnimate(audio_path, image_path, checkpoint, out_dir, max_frames,
                        seed);
    if (app.got_subcommand(ev))
      return RunEvaluate(reference, data, frames_dir, report_out);
    return 1;
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // help -> 0, anything else -> validation
  } catch (const IoError &e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
