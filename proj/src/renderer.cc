// adst/renderer.cc

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

#include "adst/renderer.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "adst/container.h"

namespace adst {
namespace renderer {

Tensor GeneratorInput::ToTensor() const {
  ADST_CHECK(source.channels == 3 && source.height == 512 && source.width == 512,
             "GeneratorInput: source must be 512x512 RGB");
  for (const auto &im : isp.images)
    ADST_CHECK(im.channels == 3 && im.height == 512 && im.width == 512,
               "GeneratorInput: ISP images must be 512x512 RGB");
  const int64_t plane = 512 * 512;
  Tensor t({kInputChannels, 512, 512});
  double *p = t.data();
  std::copy(source.data.begin(), source.data.end(), p);
  p += 3 * plane;
  for (int c = 0; c < 3; ++c)
    for (int64_t i = 0; i < plane; ++i)
      p[c * plane + i] = facial_map.pixels[i];
  p += 3 * plane;
  for (const auto &im : isp.images) {
    std::copy(im.data.begin(), im.data.end(), p);
    p += 3 * plane;
  }
  return t;
}

Tensor ImageToSigned(const Image &im) {
  Tensor t = im.ToTensor();
  for (int64_t i = 0; i < t.numel(); ++i) t.data()[i] = 2.0 * t.data()[i] - 1.0;
  return t;
}

Image SignedToImage(const Tensor &t) {
  Image im = Image::FromTensor(t);
  for (double &v : im.data) v = std::clamp((v + 1.0) / 2.0, 0.0, 1.0);
  return im;
}

GeneratorNet::Residual::Residual(int64_t ch, Rng &rng)
    : reduce(ch, ch / 4, 1, 1, 0, rng),
      conv(ch / 4, ch / 4, 3, 1, 1, rng),
      expand(ch / 4, ch, 1, 1, 0, rng) {}

ag::Var GeneratorNet::Residual::Forward(const ag::Var &x) const {
  ag::Var h = ag::Relu(reduce.Forward(x));
  h = ag::Relu(conv.Forward(h));
  h = expand.Forward(h);
  return ag::Relu(ag::Add(x, h));
}

void GeneratorNet::Residual::Params(const std::string &prefix,
                                    nn::ParamMap *out) const {
  reduce.Params(prefix + ".reduce", out);
  conv.Params(prefix + ".conv", out);
  expand.Params(prefix + ".expand", out);
}

namespace {
constexpr int64_t kEncCh[8] = {64, 128, 256, 512, 512, 512, 512, 512};
constexpr int64_t kDecCh[8] = {256, 128, 128, 64, 48, 32, 24, 8};
constexpr int64_t kSkipCh = 32;
}  // namespace

GeneratorNet::GeneratorNet(Rng &rng) {
  int64_t in = kInputChannels;
  for (int i = 0; i < 8; ++i) {
    enc[i] = nn::Conv2dLayer(in, kEncCh[i], 4, 2, 1, rng);
    in = kEncCh[i];
  }
  for (int i = 0; i < 7; ++i) res[i] = Residual(kEncCh[i + 1], rng);
  // Skip projections from the 64/32/16/8 px encoder outputs.
  for (int i = 0; i < 4; ++i)
    skip[i] = nn::Conv2dLayer(kEncCh[2 + i], kSkipCh, 1, 1, 0, rng);
  const int64_t dec_in[8] = {kEncCh[7],
                             kDecCh[0] + kSkipCh,   // 8 px
                             kDecCh[1] + kSkipCh,   // 16 px
                             kDecCh[2] + kSkipCh,   // 32 px
                             kDecCh[3] + kSkipCh,   // 64 px
                             kDecCh[4], kDecCh[5], kDecCh[6]};
  for (int i = 0; i < 8; ++i)
    dec[i] = nn::Conv2dLayer(dec_in[i], kDecCh[i], 3, 1, 1, rng);
  out = nn::Conv2dLayer(kDecCh[7], 3, 3, 1, 1, rng);
}

ag::Var GeneratorNet::ForwardVar(const ag::Var &x) const {
  ADST_CHECK(x->value.rank() == 3 && x->value.dim(0) == kInputChannels &&
                 x->value.dim(1) == 512 && x->value.dim(2) == 512,
             "GeneratorNet: input must be [18,512,512]");
  std::array<ag::Var, 8> e;
  ag::Var h = x;
  for (int i = 0; i < 8; ++i) {
    h = ag::Relu(enc[i].Forward(h));
    if (i >= 1) h = res[i - 1].Forward(h);
    e[i] = h;
  }
  // Decoder: skips re-enter at the 8..64 px scales.
  h = e[7];
  for (int i = 0; i < 8; ++i) {
    h = ag::UpsampleNearest2(h);
    if (i >= 1 && i <= 4) {
      const ag::Var s = skip[4 - i].Forward(e[6 - i]);
      h = ag::ConcatAxis0({h, s});
    }
    h = ag::Relu(dec[i].Forward(h));
  }
  return ag::Tanh(out.Forward(h));
}

Image GeneratorNet::Generate(const GeneratorInput &input) const {
  return SignedToImage(ForwardVar(ag::Constant(input.ToTensor()))->value);
}

std::vector<std::pair<int64_t, int64_t>> GeneratorNet::EncoderShapes() const {
  std::vector<std::pair<int64_t, int64_t>> shapes;
  ag::Var h = ag::Constant(Tensor({kInputChannels, 512, 512}));
  for (int i = 0; i < 8; ++i) {
    h = ag::Relu(enc[i].Forward(h));
    if (i >= 1) h = res[i - 1].Forward(h);
    shapes.emplace_back(h->value.dim(0), h->value.dim(1));
  }
  return shapes;
}

nn::ParamMap GeneratorNet::Params() const {
  nn::ParamMap p;
  for (int i = 0; i < 8; ++i) enc[i].Params("enc" + std::to_string(i), &p);
  for (int i = 0; i < 7; ++i) res[i].Params("res" + std::to_string(i), &p);
  for (int i = 0; i < 4; ++i) skip[i].Params("skip" + std::to_string(i), &p);
  for (int i = 0; i < 8; ++i) dec[i].Params("dec" + std::to_string(i), &p);
  out.Params("out", &p);
  return p;
}

void GeneratorNet::Save(const std::string &path) const {
  container::WriteCheckpoint(path, nn::StateDict(Params()));
}

void GeneratorNet::Load(const std::string &path) {
  const auto state = container::ReadCheckpoint(path);
  if (!enc[0].w) {
    Rng rng(0);  // shapes only; weights are overwritten below
    *this = GeneratorNet(rng);
  }
  nn::LoadStateDict(Params(), state);
}

PatchDiscriminator::PatchDiscriminator(Rng &rng)
    : c1(3, 32, 4, 2, 1, rng),
      c2(32, 64, 4, 2, 1, rng),
      c3(64, 64, 4, 2, 1, rng),
      c4(64, 1, 4, 1, 0, rng) {}

std::pair<ag::Var, std::vector<ag::Var>> PatchDiscriminator::ForwardVar(
    const ag::Var &x) const {
  std::vector<ag::Var> taps;
  ag::Var h = ag::LeakyRelu(c1.Forward(x), 0.2);
  taps.push_back(h);
  h = ag::LeakyRelu(c2.Forward(h), 0.2);
  taps.push_back(h);
  h = ag::LeakyRelu(c3.Forward(h), 0.2);
  taps.push_back(h);
  return {c4.Forward(h), taps};
}

nn::ParamMap PatchDiscriminator::Params() const {
  nn::ParamMap p;
  c1.Params("c1", &p);
  c2.Params("c2", &p);
  c3.Params("c3", &p);
  c4.Params("c4", &p);
  return p;
}

void PatchDiscriminator::Save(const std::string &path) const {
  container::WriteCheckpoint(path, nn::StateDict(Params()));
}

void PatchDiscriminator::Load(const std::string &path) {
  const auto state = container::ReadCheckpoint(path);
  if (!c1.w) {
    Rng rng(0);  // shapes only; weights are overwritten below
    *this = PatchDiscriminator(rng);
  }
  nn::LoadStateDict(Params(), state);
}

PerceptualNet::PerceptualNet() {
  Rng rng(kSeed);
  p1 = nn::Conv2dLayer(3, 8, 3, 1, 1, rng);
  p2 = nn::Conv2dLayer(3, 8, 3, 1, 1, rng);
  p3 = nn::Conv2dLayer(3, 8, 3, 1, 1, rng);
  for (auto *layer : {&p1, &p2, &p3}) {
    layer->w->requires_grad = false;
    layer->b->requires_grad = false;
  }
}

std::vector<ag::Var> PerceptualNet::Features(const ag::Var &x) const {
  const ag::Var half = ag::AvgPool2(x, 2);
  const ag::Var quarter = ag::AvgPool2(x, 4);
  return {ag::Tanh(p1.Forward(x)), ag::Tanh(p2.Forward(half)),
          ag::Tanh(p3.Forward(quarter))};
}

ag::Var LossDiscriminator(const ag::Var &real_scores,
                          const ag::Var &fake_scores) {
  const ag::Var real_term = ag::Mean(ag::Square(ag::AddScalar(real_scores, -1.0)));
  const ag::Var fake_term = ag::Mean(ag::Square(fake_scores));
  return ag::Add(real_term, fake_term);
}

double LossDiscriminatorValue(const Tensor &real_scores,
                              const Tensor &fake_scores) {
  return LossDiscriminator(ag::Constant(real_scores),
                           ag::Constant(fake_scores))
      ->value.at({0});
}

namespace {

ag::Var MeanAbsDiff(const ag::Var &a, const ag::Var &b) {
  return ag::Mean(ag::Abs(ag::Sub(a, b)));
}

ag::Var MeanOver(const std::vector<ag::Var> &terms) {
  ag::Var acc = terms[0];
  for (size_t i = 1; i < terms.size(); ++i) acc = ag::Add(acc, terms[i]);
  return ag::MulScalar(acc, 1.0 / terms.size());
}

}  // namespace

GeneratorLossTerms LossGenerator(const ag::Var &fake_scores,
                                 const ag::Var &fake_img,
                                 const ag::Var &real_img,
                                 const std::vector<ag::Var> &d_feats_fake,
                                 const std::vector<ag::Var> &d_feats_real,
                                 const PerceptualNet &perceptual) {
  ADST_CHECK(d_feats_fake.size() == d_feats_real.size(),
             "LossGenerator: feature tap count mismatch");
  const ag::Var l_a = ag::Mean(ag::Square(ag::AddScalar(fake_scores, -1.0)));
  const ag::Var l_pw = MeanAbsDiff(fake_img, real_img);

  const auto pf = perceptual.Features(fake_img);
  const auto pr = perceptual.Features(real_img);
  std::vector<ag::Var> p_terms;
  for (size_t i = 0; i < pf.size(); ++i)
    p_terms.push_back(MeanAbsDiff(pf[i], pr[i]));
  const ag::Var l_p = MeanOver(p_terms);

  std::vector<ag::Var> f_terms;
  for (size_t i = 0; i < d_feats_fake.size(); ++i)
    f_terms.push_back(MeanAbsDiff(d_feats_fake[i], d_feats_real[i]));
  const ag::Var l_f = MeanOver(f_terms);

  GeneratorLossTerms terms;
  terms.total = ag::Add(
      ag::Add(l_a, ag::MulScalar(l_pw, 100.0)),
      ag::Add(ag::MulScalar(l_p, 10.0), l_f));
  terms.l_a = l_a->value.at({0});
  terms.l_pw = l_pw->value.at({0});
  terms.l_p = l_p->value.at({0});
  terms.l_f = l_f->value.at({0});
  return terms;
}

ag::Var LossStylePhotometric(const ag::Var &gen_img, const ag::Var &matched_img,
                             const facialmap::WeightMask &w) {
  const auto &s = gen_img->value.shape();
  ADST_CHECK(s.size() == 3 && s[1] == facialmap::kMapSize &&
                 s[2] == facialmap::kMapSize,
             "LossStylePhotometric: images must be [C,512,512]");
  ADST_CHECK(gen_img->value.SameShape(matched_img->value),
             "LossStylePhotometric: shape mismatch");
  const int64_t plane = facialmap::kMapSize * facialmap::kMapSize;
  Tensor w3(s);
  for (int64_t c = 0; c < s[0]; ++c)
    std::copy(w.weights.begin(), w.weights.end(), w3.data() + c * plane);
  const ag::Var weighted =
      ag::Mul(ag::Constant(w3), ag::Abs(ag::Sub(gen_img, matched_img)));
  return ag::MulScalar(ag::Sum(weighted), 1.0 / plane);
}

int RetrieveMatchedStyleIndex(const Landmarks68 &gen_landmarks,
                              const stylemap::StyleReferenceSet &references) {
  double best = std::numeric_limits<double>::infinity();
  int best_idx = 0;
  for (int i = 0; i < stylemap::kNumReferences; ++i) {
    double acc = 0.0;
    for (int p = 0; p < Landmarks68::kPoints; ++p) {
      const double dx = gen_landmarks.x(p) - references.landmarks[i].x(p);
      const double dy = gen_landmarks.y(p) - references.landmarks[i].y(p);
      const double dz = gen_landmarks.z(p) - references.landmarks[i].z(p);
      acc += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    if (acc < best) {
      best = acc;
      best_idx = i;
    }
  }
  return best_idx;
}

GanStepResult TrainStepGan(const GanSample &sample, GeneratorNet *g,
                           PatchDiscriminator *d,
                           const PerceptualNet &perceptual, nn::Adam *opt_g,
                           nn::Adam *opt_d, double lr_g, double lr_d) {
  const Tensor input = sample.input.ToTensor();
  const Tensor real = ImageToSigned(sample.target);
  const Tensor matched = ImageToSigned(sample.matched_style);

  const ag::Var fake = g->ForwardVar(ag::Constant(input));

  GanStepResult result;
  {
    opt_d->ZeroGrad();
    const auto [real_scores, real_taps] = d->ForwardVar(ag::Constant(real));
    const auto [fake_scores, fake_taps] =
        d->ForwardVar(ag::Constant(fake->value));
    (void)real_taps;
    (void)fake_taps;
    const ag::Var loss_d = LossDiscriminator(real_scores, fake_scores);
    ag::Backward(loss_d);
    opt_d->Step(lr_d, 10.0);
    result.loss_d = loss_d->value.at({0});
  }
  {
    opt_g->ZeroGrad();
    const ag::Var real_c = ag::Constant(real);
    const auto [fake_scores, fake_taps] = d->ForwardVar(fake);
    const auto [real_scores, real_taps] = d->ForwardVar(real_c);
    (void)real_scores;
    GeneratorLossTerms terms = LossGenerator(fake_scores, fake, real_c,
                                             fake_taps, real_taps, perceptual);
    const ag::Var l_sp =
        LossStylePhotometric(fake, ag::Constant(matched), sample.weights);
    const ag::Var total = ag::Add(terms.total, l_sp);
    ag::Backward(total);
    opt_g->Step(lr_g, 10.0);
    result.loss_g = total->value.at({0});
    result.l_a = terms.l_a;
    result.l_pw = terms.l_pw;
    result.l_p = terms.l_p;
    result.l_f = terms.l_f;
    result.l_sp = l_sp->value.at({0});
  }
  return result;
}

TrainingConfig TrainingConfig::Load(const std::string &path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config: " + path);
  TrainingConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    ADST_CHECK(eq != std::string::npos,
               "config line " + std::to_string(line_no) + " is not key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto as_double = [&key, &value]() {
      try {
        return std::stod(value);
      } catch (const std::logic_error &) {
        throw ValidationError("bad value for config key " + key + ": " + value);
      }
    };
    auto as_int = [&key, &value]() {
      try {
        return std::stoi(value);
      } catch (const std::logic_error &) {
        throw ValidationError("bad value for config key " + key + ": " + value);
      }
    };
    if (key == "lr_generator")
      cfg.lr_generator = as_double();
    else if (key == "lr_discriminator")
      cfg.lr_discriminator = as_double();
    else if (key == "lr_audio")
      cfg.lr_audio = as_double();
    else if (key == "lr_motion")
      cfg.lr_motion = as_double();
    else if (key == "lr_stylemap")
      cfg.lr_stylemap = as_double();
    else if (key == "batch_generator")
      cfg.batch_generator = as_int();
    else if (key == "batch_other")
      cfg.batch_other = as_int();
    else if (key == "lambda_pw")
      cfg.lambda_pw = as_double();
    else if (key == "lambda_p")
      cfg.lambda_p = as_double();
    else if (key == "lambda_f")
      cfg.lambda_f = as_double();
    else
      throw ValidationError("unknown config key: " + key);
  }
  ADST_CHECK(cfg.lr_generator > 0 && cfg.lr_discriminator > 0 &&
                 cfg.lr_audio > 0 && cfg.lr_motion > 0 && cfg.lr_stylemap > 0,
             "config: learning rates must be positive");
  return cfg;
}

void TrainingConfig::Save(const std::string &path) const {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << "lr_generator = " << lr_generator << "\n"
    << "lr_discriminator = " << lr_discriminator << "\n"
    << "lr_audio = " << lr_audio << "\n"
    << "lr_motion = " << lr_motion << "\n"
    << "lr_stylemap = " << lr_stylemap << "\n"
    << "batch_generator = " << batch_generator << "\n"
    << "batch_other = " << batch_other << "\n"
    << "lambda_pw = " << lambda_pw << "\n"
    << "lambda_p = " << lambda_p << "\n"
    << "lambda_f = " << lambda_f << "\n";
  if (!f) throw IoError("write failed: " + path);
}

}  // namespace renderer
}  // namespace adst
