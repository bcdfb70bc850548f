#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "styleprior/adam.hpp"
#include "styleprior/ops.hpp"
#include "styleprior/parallel.hpp"
#include "styleprior/rng.hpp"
#include "styleprior/stylegen.hpp"

namespace styleprior {

// Frozen feature map standing in for a pretrained perceptual network.
// RandomConvFeatures stacks raw pixels with three strided random conv
// activations; each block is divided by its element count so no single
// resolution dominates the L1 objective.
class FeatureExtractor {
 public:
  enum class Kind { PixelIdentity, RandomConvFeatures };

  static FeatureExtractor pixel_identity() {
    FeatureExtractor fe;
    fe.kind_ = Kind::PixelIdentity;
    return fe;
  }

  static FeatureExtractor random_conv(std::uint64_t seed) {
    FeatureExtractor fe;
    fe.kind_ = Kind::RandomConvFeatures;
    fe.seed_ = seed;
    Rng rng(seed);
    const int chans[4] = {3, 16, 32, 32};
    for (int l = 0; l < 3; ++l) {
      const int cin = chans[l], cout = chans[l + 1];
      const double std_he = std::sqrt(2.0 / (9.0 * cin));
      fe.conv_w_.push_back(Tensor({cout, cin, 3, 3},
                                  rng.normal_vec(static_cast<std::size_t>(cout) * cin * 9, std_he)));
      fe.conv_b_.push_back(Tensor::zeros({cout}));
    }
    return fe;
  }

  Kind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }

  // Differentiable w.r.t. the image; the extractor itself is frozen.
  Tensor features(const Tensor& image) const {
    if (image.ndim() != 3 || image.dim(0) != 3 || image.dim(1) != image.dim(2))
      throw DimensionError("features: image must be [3,R,R]");
    if (kind_ == Kind::PixelIdentity) return flatten(image);

    std::vector<Tensor> blocks;
    blocks.push_back(scale(flatten(image), 1.0 / static_cast<double>(image.numel())));
    Tensor x = image;
    for (std::size_t l = 0; l < conv_w_.size(); ++l) {
      x = leaky_relu(conv2d(x, conv_w_[l], conv_b_[l], 1, 2), kLeakyAlpha);
      blocks.push_back(scale(flatten(x), 1.0 / static_cast<double>(x.numel())));
    }
    return concat(blocks);
  }

 private:
  Kind kind_ = Kind::PixelIdentity;
  std::uint64_t seed_ = 0;
  std::vector<Tensor> conv_w_, conv_b_;
};

// ||phi(a) - phi(b)||_1, evaluated without building feature tensors twice.
inline double feature_distance(const FeatureExtractor& phi, const Tensor& a, const Tensor& b) {
  return l1_norm(phi.features(a), phi.features(b)).value();
}

struct InversionConfig {
  Strategy strategy = Strategy::PerLayer;
  double lr = 0.001;
  int iterations = 1000;
  int record_every = 10;
  int loss_order = 1;  // L1; the only supported metric order

  void validate() const {
    if (!(lr > 0.0)) throw ValidationError("inversion: lr must be positive");
    if (iterations < 1) throw ValidationError("inversion: iterations must be >= 1");
    if (record_every < 1) throw ValidationError("inversion: record_every must be >= 1");
    if (loss_order != 1) throw ValidationError("inversion: only loss order 1 is supported");
  }
};

struct InversionResult {
  LatentCode code;                                  // strategy-shaped optimum
  LayerCodes layer_codes;                           // expanded per-layer form
  std::vector<std::pair<int, double>> loss_curve;   // (iteration, best-so-far loss)
  Tensor image;                                     // synthesis at the optimum
  double loss = 0.0;                                // re-evaluated at the optimum
};

namespace detail {

// Shared latent optimizer. transform is applied to the generated image
// inside the objective (identity for plain inversion, masking for
// inpainting, downsampling for super-resolution); target_features are
// precomputed from the equally transformed target.
inline InversionResult optimize_latent(const StyleGenerator& gen_in, const FeatureExtractor& phi,
                                       const InversionConfig& cfg,
                                       const std::function<Tensor(const Tensor&)>& transform,
                                       const Tensor& target_features) {
  cfg.validate();
  // Optimization runs against a frozen generator; detach a private copy if
  // the caller's is still trainable so parallel inversions never touch
  // shared gradient buffers.
  std::optional<StyleGenerator> detached;
  if (gen_in.any_trainable()) detached = gen_in.clone_frozen();
  const StyleGenerator& gen = detached ? *detached : gen_in;
  const GeneratorConfig& gc = gen.config();
  const int L = gc.style_layers();
  const int d = gc.latent_dim;

  // free variables, zero-initialized
  std::vector<Tensor> vars;
  switch (cfg.strategy) {
    case Strategy::Noise:
    case Strategy::Global:
      vars.push_back(Tensor::zeros({d}, true));
      break;
    case Strategy::PerLayer:
      for (int l = 0; l < L; ++l) vars.push_back(Tensor::zeros({d}, true));
      break;
  }
  std::vector<std::pair<std::string, Tensor>> named;
  for (std::size_t i = 0; i < vars.size(); ++i)
    named.emplace_back("code." + std::to_string(i), vars[i]);
  AdamConfig acfg;
  acfg.lr = cfg.lr;
  AdamState opt(named, acfg);

  auto expand = [&]() -> LayerCodes {
    switch (cfg.strategy) {
      case Strategy::Noise: return replicate(gen.map(vars[0]), L);
      case Strategy::Global: return replicate(vars[0], L);
      default: return vars;
    }
  };
  auto forward = [&]() -> Tensor {
    return l1_norm(phi.features(transform(gen.synthesize(expand()))), target_features);
  };

  double best_loss = 0.0;
  std::vector<std::vector<double>> best_vars;
  InversionResult res;

  for (int it = 1; it <= cfg.iterations; ++it) {
    Tensor loss = forward();
    const double value = loss.value();
    if (!std::isfinite(value))
      throw OptimError("inversion: non-finite loss at iteration " + std::to_string(it));
    if (it == 1 || value < best_loss) {
      best_loss = value;
      best_vars.clear();
      for (const Tensor& v : vars) best_vars.push_back(v.data_vec());
    }
    if (it == 1 || it % cfg.record_every == 0 || it == cfg.iterations)
      res.loss_curve.emplace_back(it, best_loss);
    if (it < cfg.iterations) {
      backward(loss);
      opt.step();
    }
  }

  // restore the best iterate and re-evaluate it
  for (std::size_t i = 0; i < vars.size(); ++i) vars[i].data_vec() = best_vars[i];
  LayerCodes final_codes = expand();
  Tensor image = gen.synthesize(final_codes);
  res.loss = l1_norm(phi.features(transform(image)), target_features).value();
  res.image = image.clone();
  res.layer_codes.reserve(final_codes.size());
  for (const Tensor& c : final_codes) res.layer_codes.push_back(c.clone());
  res.code.kind = cfg.strategy;
  for (const Tensor& v : vars) res.code.codes.push_back(v.clone());
  return res;
}

}  // namespace detail

// Latent optimization of ||phi(G(code)) - phi(I)||_1 over the strategy's
// free variables; generator parameters stay frozen.
inline InversionResult invert(const StyleGenerator& gen, const Tensor& image,
                              const FeatureExtractor& phi, const InversionConfig& cfg) {
  const int r = gen.config().final_resolution;
  if (image.ndim() != 3 || image.dim(0) != 3 || image.dim(1) != r || image.dim(2) != r)
    throw DimensionError("invert: image must match the generator resolution");
  image.validate_finite("inversion target");
  Tensor target = phi.features(image);
  return detail::optimize_latent(gen, phi, cfg, [](const Tensor& x) { return x; }, target);
}

struct ReconstructionSummary {
  std::vector<double> optimize_losses;  // objective phi, at the optimum
  std::vector<double> eval_losses;      // evaluation phi, on the final images
  double mean_optimize = 0.0;
  double mean_eval = 0.0;
};

// Runs invert on each image; optimization and reporting use different
// frozen feature seeds so the score is not the training measure.
inline ReconstructionSummary evaluate_reconstruction(const StyleGenerator& gen,
                                                     const std::vector<Tensor>& images,
                                                     const FeatureExtractor& phi_opt,
                                                     const InversionConfig& cfg,
                                                     const FeatureExtractor& phi_eval,
                                                     int jobs = 1) {
  ReconstructionSummary s;
  s.optimize_losses.resize(images.size());
  s.eval_losses.resize(images.size());
  parallel_for_indexed(static_cast<int>(images.size()), jobs, [&](int i) {
    InversionResult r = invert(gen, images[static_cast<std::size_t>(i)], phi_opt, cfg);
    s.optimize_losses[static_cast<std::size_t>(i)] = r.loss;
    s.eval_losses[static_cast<std::size_t>(i)] =
        feature_distance(phi_eval, r.image, images[static_cast<std::size_t>(i)]);
  });
  for (double v : s.optimize_losses) s.mean_optimize += v;
  for (double v : s.eval_losses) s.mean_eval += v;
  if (!images.empty()) {
    s.mean_optimize /= static_cast<double>(images.size());
    s.mean_eval /= static_cast<double>(images.size());
  }
  return s;
}

}  // namespace styleprior
