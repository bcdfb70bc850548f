#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "styleprior/glotrain.hpp"
#include "styleprior/priors.hpp"
#include "styleprior/sprites.hpp"

using namespace styleprior;

namespace {

GeneratorConfig micro_config() {
  GeneratorConfig cfg;
  cfg.latent_dim = 6;
  cfg.mapping_depth = 2;
  cfg.base_resolution = 4;
  cfg.final_resolution = 8;
  cfg.stage_channels = {10, 8};
  return cfg;
}

const TrainResult& trained_fixture() {
  static TrainResult r = [] {
    std::vector<Tensor> images;
    for (const auto& s : make_dataset(6, 51, 8)) images.push_back(s.image);
    TrainConfig tc;
    tc.epochs = 600;
    tc.batch_size = 3;
    tc.seed = 53;
    return train_glo(images, micro_config(), tc, FeatureExtractor::random_conv(1001));
  }();
  return r;
}

Tensor apply_mask(const Tensor& img, const Tensor& mask) {
  std::vector<double> out(img.data_vec());
  const int r = img.dim(1);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < r * r; ++i)
      out[static_cast<std::size_t>(c) * r * r + i] *= mask.data()[i];
  return Tensor(img.shape(), std::move(out));
}

}  // namespace

TEST_CASE("square mask: shape, ratio, validation") {
  Tensor mask = make_square_mask(32, 7);
  validate_mask(mask);
  int zeros = 0;
  for (int i = 0; i < mask.numel(); ++i)
    if (mask.data()[i] == 0.0) ++zeros;
  CHECK(zeros == 8 * 8);  // side R/4

  Tensor bad = Tensor::zeros({1, 8, 8});
  CHECK_THROWS_AS(validate_mask(bad), ValidationError);
  Tensor frac = Tensor::full({1, 8, 8}, 0.5);
  CHECK_THROWS_AS(validate_mask(frac), ValidationError);

  // seeded placement is deterministic
  CHECK(make_square_mask(32, 7).data_vec() == make_square_mask(32, 7).data_vec());
  CHECK(make_square_mask(32, 7).data_vec() != make_square_mask(32, 8).data_vec());
}

TEST_CASE("all-ones mask reproduces the plain inversion objective") {
  const TrainResult& tr = trained_fixture();
  Tensor target = make_dataset(1, 61, 8)[0].image;
  FeatureExtractor phi = FeatureExtractor::random_conv(1001);
  InversionConfig cfg;
  cfg.strategy = Strategy::PerLayer;
  cfg.iterations = 40;

  Tensor ones = Tensor::full({1, 8, 8}, 1.0);
  InpaintResult ip = inpaint(tr.gen, target, ones, phi, cfg, &target);
  InversionResult plain = invert(tr.gen, target, phi, cfg);
  CHECK(ip.inversion.loss == plain.loss);  // bit-identical objective
  REQUIRE(ip.inversion.loss_curve.size() == plain.loss_curve.size());
  for (std::size_t i = 0; i < plain.loss_curve.size(); ++i)
    CHECK(ip.inversion.loss_curve[i].second == plain.loss_curve[i].second);
  CHECK(ip.masked_error == 0.0);  // nothing missing
}

TEST_CASE("inpainting preserves observed pixels exactly") {
  const TrainResult& tr = trained_fixture();
  Tensor gt = make_dataset(1, 63, 8)[0].image;
  Tensor mask = make_square_mask(8, 3);
  Tensor corrupted = apply_mask(gt, mask);
  FeatureExtractor phi = FeatureExtractor::random_conv(1001);
  InversionConfig cfg;
  cfg.strategy = Strategy::PerLayer;
  cfg.iterations = 120;

  InpaintResult res = inpaint(tr.gen, corrupted, mask, phi, cfg, &gt);
  const int r = 8;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < r * r; ++i)
      if (mask.data()[i] == 1.0)
        CHECK(res.output.data()[c * r * r + i] == corrupted.data()[c * r * r + i]);
  CHECK(std::isfinite(res.masked_error));
  CHECK(std::isfinite(res.raw_error));
}

TEST_CASE("generator prior beats mean-fill on a model-generated image") {
  const TrainResult& tr = trained_fixture();
  const GeneratorConfig& cfg = tr.gen.config();
  Rng rng(71);
  Tensor z({cfg.latent_dim}, rng.normal_vec(static_cast<std::size_t>(cfg.latent_dim), 0.4));
  Tensor gt = tr.gen.synthesize(replicate(z, cfg.style_layers()));
  Tensor mask = make_square_mask(8, 5);
  Tensor corrupted = apply_mask(gt, mask);

  FeatureExtractor phi = FeatureExtractor::random_conv(1001);
  InversionConfig icfg;
  icfg.strategy = Strategy::PerLayer;
  icfg.iterations = 400;
  InpaintResult res = inpaint(tr.gen, corrupted, mask, phi, icfg, &gt);

  Tensor meanfill = baseline_meanfill(corrupted, mask);
  const double base_err = detail::region_l1(meanfill, gt, mask, true);
  CHECK(res.masked_error < base_err);
}

TEST_CASE("mean-fill baseline basics") {
  Tensor img = Tensor::full({3, 8, 8}, 0.25);
  Tensor mask = make_square_mask(8, 11);
  CHECK(baseline_meanfill(img, mask).data_vec() == img.data_vec());  // constant image

  Tensor ones = Tensor::full({1, 8, 8}, 1.0);
  Rng rng(73);
  Tensor noisy({3, 8, 8}, rng.normal_vec(3 * 64, 0.3));
  CHECK(baseline_meanfill(noisy, ones).data_vec() == noisy.data_vec());  // all observed

  CHECK(baseline_meanfill(noisy, mask).data_vec() == baseline_meanfill(noisy, mask).data_vec());
}

TEST_CASE("k=1 super-resolution equals plain inversion") {
  const TrainResult& tr = trained_fixture();
  Tensor target = make_dataset(1, 67, 8)[0].image;
  FeatureExtractor phi = FeatureExtractor::random_conv(1001);
  InversionConfig cfg;
  cfg.strategy = Strategy::PerLayer;
  cfg.iterations = 40;

  SRSpec spec;
  spec.factor = 1;
  SRResult sr = super_resolve(tr.gen, target, spec, phi, cfg, &target);
  InversionResult plain = invert(tr.gen, target, phi, cfg);
  CHECK(sr.inversion.loss == plain.loss);
  CHECK(sr.output.data_vec() == plain.image.data_vec());
}

TEST_CASE("super-resolution: consistency beats the zero-code image") {
  const TrainResult& tr = trained_fixture();
  const GeneratorConfig& cfg = tr.gen.config();
  Rng rng(79);
  Tensor z({cfg.latent_dim}, rng.normal_vec(static_cast<std::size_t>(cfg.latent_dim), 0.4));
  Tensor gt = tr.gen.synthesize(replicate(z, cfg.style_layers()));
  Tensor lr = downsample_avg(gt, 2);

  FeatureExtractor phi = FeatureExtractor::random_conv(1001);
  InversionConfig icfg;
  icfg.strategy = Strategy::PerLayer;
  icfg.iterations = 400;
  SRSpec spec;
  spec.factor = 2;
  SRResult sr = super_resolve(tr.gen, lr, spec, phi, icfg, &gt);
  CHECK(sr.consistency_residual < sr.zero_code_residual);
  CHECK(std::isfinite(sr.full_res_error));

  CHECK_THROWS_AS(super_resolve(tr.gen, gt, spec, phi, icfg), DimensionError);
}

TEST_CASE("sr residual along the best-iterate curve is monotone under pixel features") {
  // with the pixel-identity objective the recorded best-so-far losses are
  // exactly the downsample-consistency residual (up to the sum/mean factor)
  const TrainResult& tr = trained_fixture();
  const GeneratorConfig& cfg = tr.gen.config();
  Rng rng(83);
  Tensor z({cfg.latent_dim}, rng.normal_vec(static_cast<std::size_t>(cfg.latent_dim), 0.4));
  Tensor gt = tr.gen.synthesize(replicate(z, cfg.style_layers()));
  Tensor lr = downsample_avg(gt, 2);

  InversionConfig icfg;
  icfg.strategy = Strategy::PerLayer;
  icfg.iterations = 150;
  icfg.record_every = 1;
  SRSpec spec;
  spec.factor = 2;
  SRResult sr = super_resolve(tr.gen, lr, spec, FeatureExtractor::pixel_identity(), icfg);
  for (std::size_t i = 1; i < sr.inversion.loss_curve.size(); ++i)
    CHECK(sr.inversion.loss_curve[i].second <= sr.inversion.loss_curve[i - 1].second);
  CHECK(sr.consistency_residual ==
        doctest::Approx(sr.inversion.loss_curve.back().second / lr.numel()).epsilon(1e-12));
}

TEST_CASE("upsampling baselines") {
  Rng rng(89);
  Tensor lr({3, 4, 4}, rng.normal_vec(3 * 16, 0.4));
  CHECK(baseline_upsample(lr, 1, UpsampleMode::Nearest).data_vec() == lr.data_vec());
  CHECK(baseline_upsample(lr, 1, UpsampleMode::Bilinear).data_vec() == lr.data_vec());

  Tensor constant = Tensor::full({3, 4, 4}, 0.6);
  for (auto mode : {UpsampleMode::Nearest, UpsampleMode::Bilinear}) {
    Tensor up = baseline_upsample(constant, 2, mode);
    REQUIRE(up.shape() == std::vector<int>{3, 8, 8});
    for (int i = 0; i < up.numel(); ++i) CHECK(up.data()[i] == doctest::Approx(0.6));
  }

  Tensor single({1, 1, 1}, {0.3});
  Tensor up = baseline_upsample(single, 4, UpsampleMode::Nearest);
  for (int i = 0; i < up.numel(); ++i) CHECK(up.data()[i] == doctest::Approx(0.3));

  // nearest replication of blocks
  Tensor two({1, 1, 2}, {1.0, -1.0});
  Tensor up2 = baseline_upsample(two, 2, UpsampleMode::Nearest);
  CHECK(up2.data()[0] == 1.0);
  CHECK(up2.data()[1] == 1.0);
  CHECK(up2.data()[2] == -1.0);
  CHECK(up2.data()[3] == -1.0);
}
