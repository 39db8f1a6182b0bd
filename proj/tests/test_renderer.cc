// tests/test_renderer.cc

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>

#include "adst/renderer.h"
#include "doctest.h"
#include "testutil.h"

using namespace adst;
using namespace adst::renderer;

namespace {

Image Noise512(Rng &rng) {
  Image im(3, 512, 512);
  for (double &v : im.data) v = UniformReal(rng, 0.0, 1.0);
  return im;
}

GeneratorInput MakeInput(Rng &rng) {
  GeneratorInput in;
  in.source = Noise512(rng);
  in.facial_map.at(100, 200) = 1;
  for (auto &im : in.isp.images) im = Noise512(rng);
  return in;
}

}  // namespace

TEST_CASE("generator input tensor stacks source, map, isp planes") {
  Rng rng(80);
  const GeneratorInput in = MakeInput(rng);
  const Tensor t = in.ToTensor();
  REQUIRE(t.dim(0) == kInputChannels);
  REQUIRE(t.dim(1) == 512);
  REQUIRE(t.dim(2) == 512);
  CHECK(t.at({0, 7, 9}) == in.source.at(0, 7, 9));
  CHECK(t.at({2, 7, 9}) == in.source.at(2, 7, 9));
  // The binary map is replicated across three channels.
  for (int64_t c = 3; c < 6; ++c) {
    CHECK(t.at({c, 100, 200}) == 1.0);
    CHECK(t.at({c, 100, 201}) == 0.0);
  }
  for (int i = 0; i < 4; ++i)
    CHECK(t.at({6 + 3 * i, 11, 13}) == in.isp.images[i].at(0, 11, 13));
}

TEST_CASE("signed image conversion round trips and clamps") {
  Rng rng(81);
  Image im(3, 4, 4);
  for (double &v : im.data) v = UniformReal(rng, 0.0, 1.0);
  const Tensor s = ImageToSigned(im);
  for (int64_t i = 0; i < s.numel(); ++i) {
    CHECK(s[i] >= -1.0);
    CHECK(s[i] <= 1.0);
  }
  const Image back = SignedToImage(s);
  for (size_t i = 0; i < im.data.size(); ++i)
    CHECK(back.data[i] == doctest::Approx(im.data[i]).epsilon(1e-12));
  Tensor wild = s;
  wild[0] = 9.0;
  wild[1] = -9.0;
  const Image clamped = SignedToImage(wild);
  CHECK(clamped.data[0] == 1.0);
  CHECK(clamped.data[1] == 0.0);
}

TEST_CASE("encoder halves resolution 8 times with pinned widths") {
  Rng rng(82);
  GeneratorNet g(rng);
  const auto shapes = g.EncoderShapes();
  const std::vector<std::pair<int64_t, int64_t>> want = {
      {64, 256}, {128, 128}, {256, 64}, {512, 32},
      {512, 16}, {512, 8},   {512, 4},  {512, 2}};
  REQUIRE(shapes.size() == want.size());
  for (size_t i = 0; i < want.size(); ++i) {
    CHECK(shapes[i].first == want[i].first);
    CHECK(shapes[i].second == want[i].second);
  }
}

TEST_CASE("lsgan losses hit their analytic values") {
  Tensor ones({1, 2, 2}), zeros({1, 2, 2});
  for (int64_t i = 0; i < 4; ++i) ones[i] = 1.0;
  CHECK(LossDiscriminatorValue(ones, zeros) == doctest::Approx(0.0));
  CHECK(LossDiscriminatorValue(zeros, ones) == doctest::Approx(2.0));
  Tensor half({1, 2, 2});
  for (int64_t i = 0; i < 4; ++i) half[i] = 0.5;
  CHECK(LossDiscriminatorValue(half, half) == doctest::Approx(0.5));
}

TEST_CASE("generator loss combines terms with weights 1/100/10/1") {
  Rng rng(83);
  PerceptualNet perceptual;
  Tensor fake_t = Tensor::Randn({3, 8, 8}, rng);
  Tensor real_t = Tensor::Randn({3, 8, 8}, rng);
  Tensor scores({1, 2, 2});
  for (int64_t i = 0; i < 4; ++i) scores[i] = UniformReal(rng, -1, 1);
  const ag::Var fake = ag::Constant(fake_t);
  const ag::Var real = ag::Constant(real_t);
  std::vector<ag::Var> taps_f = {ag::Constant(Tensor::Randn({2, 4, 4}, rng))};
  std::vector<ag::Var> taps_r = {ag::Constant(Tensor::Randn({2, 4, 4}, rng))};

  const auto terms = LossGenerator(ag::Constant(scores), fake, real, taps_f,
                                   taps_r, perceptual);
  CHECK(terms.total->value.at({0}) ==
        doctest::Approx(terms.l_a + 100.0 * terms.l_pw + 10.0 * terms.l_p +
                        terms.l_f)
            .epsilon(1e-12));
  // Identical images zero the pixel and perceptual terms.
  const auto same = LossGenerator(ag::Constant(scores), fake, fake, taps_f,
                                  taps_f, perceptual);
  CHECK(same.l_pw == doctest::Approx(0.0));
  CHECK(same.l_p == doctest::Approx(0.0));
  CHECK(same.l_f == doctest::Approx(0.0));

  // Differentiable end to end through every term.
  CHECK(testutil::MaxGradError(fake_t, [&](const ag::Var &v) {
          return LossGenerator(ag::Constant(scores), v, real, taps_f, taps_r,
                               perceptual)
              .total;
        }, rng, 12) < 1e-5);
}

TEST_CASE("photometric style loss weights pixels by region") {
  facialmap::WeightMask mask;
  mask.at(10, 20) = 5.0;
  mask.at(30, 40) = 3.0;
  Tensor gen({3, 512, 512}), matched({3, 512, 512});
  for (int64_t c = 0; c < 3; ++c) {
    gen.at({c, 10, 20}) = 0.1;  // |diff| 0.1 under weight 5
    gen.at({c, 30, 40}) = 0.2;  // |diff| 0.2 under weight 3
    gen.at({c, 50, 60}) = 0.9;  // unweighted region contributes nothing
  }
  const double plane = 512.0 * 512.0;
  const ag::Var loss =
      LossStylePhotometric(ag::Constant(gen), ag::Constant(matched), mask);
  CHECK(loss->value.at({0}) ==
        doctest::Approx(3.0 * (5.0 * 0.1 + 3.0 * 0.2) / plane).epsilon(1e-12));

  Tensor small({3, 8, 8});
  CHECK_THROWS_AS(LossStylePhotometric(ag::Constant(small), ag::Constant(small),
                                       mask),
                  ValidationError);
}

TEST_CASE("matched style retrieval picks the nearest reference") {
  stylemap::StyleReferenceSet refs;
  geometry::FaceParams fp;
  for (int i = 0; i < stylemap::kNumReferences; ++i) {
    fp.mouth_open = 0.3 * i;
    refs.landmarks[i] = geometry::SynthFace(fp);
  }
  fp.mouth_open = 0.62;  // closest to reference 2 (0.6)
  CHECK(RetrieveMatchedStyleIndex(geometry::SynthFace(fp), refs) == 2);
  fp.mouth_open = 0.0;
  CHECK(RetrieveMatchedStyleIndex(geometry::SynthFace(fp), refs) == 0);
  // Equidistant references tie to the lowest index.
  stylemap::StyleReferenceSet flat;
  for (int i = 0; i < stylemap::kNumReferences; ++i)
    flat.landmarks[i] = refs.landmarks[0];
  CHECK(RetrieveMatchedStyleIndex(refs.landmarks[1], flat) == 0);
}

TEST_CASE("perceptual net is frozen and identical across instances") {
  PerceptualNet a, b;
  CHECK(a.p1.w->requires_grad == false);
  CHECK(a.p1.b->requires_grad == false);
  for (int64_t i = 0; i < a.p1.w->value.numel(); ++i)
    CHECK(a.p1.w->value[i] == b.p1.w->value[i]);
  for (int64_t i = 0; i < a.p3.w->value.numel(); ++i)
    CHECK(a.p3.w->value[i] == b.p3.w->value[i]);
}

TEST_CASE("one adversarial step updates both players") {
  Rng rng(84);
  GeneratorNet g(rng);
  PatchDiscriminator d(rng);
  PerceptualNet perceptual;
  GanSample sample;
  sample.input = MakeInput(rng);
  sample.target = Noise512(rng);
  sample.matched_style = sample.target;
  sample.weights = facialmap::WeightMask();

  nn::Adam opt_g(nn::VarsOf(g.Params()));
  nn::Adam opt_d(nn::VarsOf(d.Params()));
  const double w_before = g.enc[0].w->value[0];
  const double d_before = d.c1.w->value[0];
  const GanStepResult r =
      TrainStepGan(sample, &g, &d, perceptual, &opt_g, &opt_d, 1e-4, 1e-4);
  CHECK(std::isfinite(r.loss_g));
  CHECK(std::isfinite(r.loss_d));
  CHECK(r.l_pw >= 0.0);
  CHECK(r.l_p >= 0.0);
  CHECK(r.l_f >= 0.0);
  CHECK(r.l_sp == doctest::Approx(0.0));  // empty weight mask
  CHECK(g.enc[0].w->value[0] != w_before);
  CHECK(d.c1.w->value[0] != d_before);
}

TEST_CASE("training config round trips and rejects unknown keys") {
  const std::string dir = testutil::ScratchDir("renderer_cfg");
  TrainingConfig cfg;
  cfg.lr_generator = 3e-5;
  cfg.batch_generator = 4;
  cfg.lambda_pw = 50.0;
  cfg.Save(dir + "/c.cfg");
  const TrainingConfig back = TrainingConfig::Load(dir + "/c.cfg");
  CHECK(back.lr_generator == doctest::Approx(3e-5));
  CHECK(back.batch_generator == 4);
  CHECK(back.lambda_pw == doctest::Approx(50.0));
  CHECK(back.lr_motion == doctest::Approx(cfg.lr_motion));

  {
    std::FILE *f = std::fopen((dir + "/bad.cfg").c_str(), "wb");
    std::fputs("# comment line\nlr_generator = 1e-4\nwat = 3\n", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(TrainingConfig::Load(dir + "/bad.cfg"), ValidationError);
  {
    std::FILE *f = std::fopen((dir + "/nan.cfg").c_str(), "wb");
    std::fputs("lr_generator = fast\n", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(TrainingConfig::Load(dir + "/nan.cfg"), ValidationError);
  CHECK_THROWS_AS(TrainingConfig::Load(dir + "/missing.cfg"), IoError);
}

TEST_CASE("generator and discriminator checkpoints restore weights") {
  const std::string dir = testutil::ScratchDir("renderer_ckpt");
  Rng rng(85);
  GeneratorNet g(rng);
  g.Save(dir + "/g.adst");
  GeneratorNet g2;
  g2.Load(dir + "/g.adst");
  const auto sa = nn::StateDict(g.Params());
  const auto sb = nn::StateDict(g2.Params());
  REQUIRE(sa.size() == sb.size());
  for (const auto &[name, t] : sa) {
    const Tensor &u = sb.at(name);
    REQUIRE(t.numel() == u.numel());
    double worst = 0.0;
    for (int64_t i = 0; i < t.numel(); ++i)
      worst = std::max(worst, std::fabs(t[i] - u[i]) /
                                  std::max(1.0, std::fabs(t[i])));
    CHECK(worst < 1e-6);
  }

  PatchDiscriminator d(rng);
  d.Save(dir + "/d.adst");
  PatchDiscriminator d2;
  d2.Load(dir + "/d.adst");
  CHECK(d2.c4.w->value.dim(0) == 1);
  for (int64_t i = 0; i < d.c1.w->value.numel(); ++i)
    CHECK(d.c1.w->value[i] == doctest::Approx(d2.c1.w->value[i]).epsilon(1e-6));
}
