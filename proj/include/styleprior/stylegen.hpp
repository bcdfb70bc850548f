#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "styleprior/ops.hpp"
#include "styleprior/rng.hpp"
#include "styleprior/tensor.hpp"

namespace styleprior {

constexpr double kLeakyAlpha = 0.2;
constexpr double kAdainEps = 1e-5;

enum class Strategy { Noise, Global, PerLayer };

inline const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Noise: return "noise";
    case Strategy::Global: return "global";
    case Strategy::PerLayer: return "per-layer";
  }
  return "?";
}

struct GeneratorConfig {
  int latent_dim = 32;
  int mapping_depth = 4;
  int base_resolution = 4;
  int final_resolution = 32;
  std::vector<int> stage_channels = {64, 64, 32, 16};
  int out_channels = 3;

  int stages() const { return static_cast<int>(stage_channels.size()); }

  // Two conv + AdaIN sites per resolution stage.
  int style_layers() const { return 2 * stages(); }

  void validate() const {
    if (latent_dim <= 0 || mapping_depth <= 0 || base_resolution <= 0 ||
        final_resolution <= 0 || out_channels <= 0 || stage_channels.empty())
      throw ValidationError("generator config: all dimensions must be positive");
    for (int c : stage_channels)
      if (c <= 0) throw ValidationError("generator config: channels must be positive");
    int r = base_resolution;
    for (int s = 1; s < stages(); ++s) r *= 2;
    if (r != final_resolution)
      throw ValidationError("generator config: final_resolution must equal base_resolution * 2^(stages-1)");
  }

  std::int64_t parameter_count() const {
    const std::int64_t d = latent_dim;
    std::int64_t total = mapping_depth * (d * d + d);
    total += static_cast<std::int64_t>(stage_channels[0]) * base_resolution * base_resolution;  // c0
    for (int s = 0; s < stages(); ++s) {
      const std::int64_t cin = s == 0 ? stage_channels[0] : stage_channels[s - 1];
      const std::int64_t c = stage_channels[s];
      total += c * cin * 9 + c;  // first conv
      total += c * c * 9 + c;    // second conv
      total += 2 * (2 * c * d + 2 * c);  // two style projections, d -> 2C
    }
    total += static_cast<std::int64_t>(out_channels) * stage_channels.back() + out_channels;  // 1x1 to RGB
    return total;
  }
};

// Per-layer style codes, one vector of length latent_dim per AdaIN site.
using LayerCodes = std::vector<Tensor>;

struct LatentCode {
  Strategy kind = Strategy::Global;
  std::vector<Tensor> codes;  // Noise/Global: one entry; PerLayer: L entries
};

class StyleGenerator {
 public:
  StyleGenerator() = default;

  StyleGenerator(GeneratorConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng(seed);
    const int d = cfg_.latent_dim;

    for (int i = 0; i < cfg_.mapping_depth; ++i) {
      map_w_.push_back(Tensor({d, d}, rng.normal_vec(static_cast<std::size_t>(d) * d,
                                                     1.0 / std::sqrt(static_cast<double>(d)))));
      map_b_.push_back(Tensor::zeros({d}));
    }

    c0_ = Tensor({cfg_.stage_channels[0], cfg_.base_resolution, cfg_.base_resolution},
                 rng.normal_vec(static_cast<std::size_t>(cfg_.stage_channels[0]) *
                                cfg_.base_resolution * cfg_.base_resolution));

    for (int s = 0; s < cfg_.stages(); ++s) {
      const int cin0 = s == 0 ? cfg_.stage_channels[0] : cfg_.stage_channels[s - 1];
      const int c = cfg_.stage_channels[s];
      const int cins[2] = {cin0, c};
      for (int j = 0; j < 2; ++j) {
        const double std_he = std::sqrt(2.0 / (9.0 * cins[j]));
        conv_w_.push_back(Tensor({c, cins[j], 3, 3},
                                 rng.normal_vec(static_cast<std::size_t>(c) * cins[j] * 9, std_he)));
        conv_b_.push_back(Tensor::zeros({c}));
        // style projection starts near the identity AdaIN: scale 1, offset 0
        style_w_.push_back(Tensor({2 * c, d}, rng.normal_vec(static_cast<std::size_t>(2 * c) * d,
                                                             0.2 / std::sqrt(static_cast<double>(d)))));
        std::vector<double> sb(static_cast<std::size_t>(2 * c), 0.0);
        for (int i = 0; i < c; ++i) sb[static_cast<std::size_t>(i)] = 1.0;
        style_b_.push_back(Tensor({2 * c}, std::move(sb)));
      }
    }

    const int clast = cfg_.stage_channels.back();
    rgb_w_ = Tensor({cfg_.out_channels, clast, 1, 1},
                    rng.normal_vec(static_cast<std::size_t>(cfg_.out_channels) * clast,
                                   std::sqrt(1.0 / clast)));
    rgb_b_ = Tensor::zeros({cfg_.out_channels});
  }

  const GeneratorConfig& config() const { return cfg_; }

  // Stable name -> tensor manifest; order is the serialization order.
  std::vector<std::pair<std::string, Tensor>> parameters() const {
    std::vector<std::pair<std::string, Tensor>> out;
    for (std::size_t i = 0; i < map_w_.size(); ++i) {
      out.emplace_back("map." + std::to_string(i) + ".w", map_w_[i]);
      out.emplace_back("map." + std::to_string(i) + ".b", map_b_[i]);
    }
    out.emplace_back("c0", c0_);
    for (std::size_t i = 0; i < conv_w_.size(); ++i) {
      out.emplace_back("conv." + std::to_string(i) + ".w", conv_w_[i]);
      out.emplace_back("conv." + std::to_string(i) + ".b", conv_b_[i]);
      out.emplace_back("style." + std::to_string(i) + ".w", style_w_[i]);
      out.emplace_back("style." + std::to_string(i) + ".b", style_b_[i]);
    }
    out.emplace_back("rgb.w", rgb_w_);
    out.emplace_back("rgb.b", rgb_b_);
    return out;
  }

  void set_trainable(bool on) {
    for (auto& [name, t] : parameters()) {
      (void)name;
      t.set_requires_grad(on);
    }
  }

  bool any_trainable() const {
    for (const auto& [name, t] : parameters()) {
      (void)name;
      if (t.requires_grad()) return true;
    }
    return false;
  }

  // Deep copy with gradients disabled; safe to share across threads.
  StyleGenerator clone_frozen() const {
    StyleGenerator g;
    g.cfg_ = cfg_;
    g.c0_ = c0_.clone();
    for (const Tensor& t : map_w_) g.map_w_.push_back(t.clone());
    for (const Tensor& t : map_b_) g.map_b_.push_back(t.clone());
    for (const Tensor& t : conv_w_) g.conv_w_.push_back(t.clone());
    for (const Tensor& t : conv_b_) g.conv_b_.push_back(t.clone());
    for (const Tensor& t : style_w_) g.style_w_.push_back(t.clone());
    for (const Tensor& t : style_b_) g.style_b_.push_back(t.clone());
    g.rgb_w_ = rgb_w_.clone();
    g.rgb_b_ = rgb_b_.clone();
    return g;
  }

  Tensor map(const Tensor& s) const {
    if (s.ndim() != 1 || s.dim(0) != cfg_.latent_dim)
      throw DimensionError("map: noise code must have length latent_dim");
    Tensor z = s;
    for (int i = 0; i < cfg_.mapping_depth; ++i) {
      z = linear(z, map_w_[static_cast<std::size_t>(i)], map_b_[static_cast<std::size_t>(i)]);
      if (i + 1 < cfg_.mapping_depth) z = leaky_relu(z, kLeakyAlpha);
    }
    return z;
  }

  Tensor synthesize(const LayerCodes& codes) const {
    const int L = cfg_.style_layers();
    if (static_cast<int>(codes.size()) != L)
      throw DimensionError("synthesize: expected exactly " + std::to_string(L) + " layer codes");
    for (const Tensor& c : codes)
      if (c.ndim() != 1 || c.dim(0) != cfg_.latent_dim)
        throw DimensionError("synthesize: each layer code must have length latent_dim");

    Tensor x = c0_;
    int site = 0;
    for (int s = 0; s < cfg_.stages(); ++s) {
      if (s > 0) x = upsample2x(x);
      for (int j = 0; j < 2; ++j, ++site) {
        const std::size_t i = static_cast<std::size_t>(site);
        x = conv2d(x, conv_w_[i], conv_b_[i], 1);
        const int c = cfg_.stage_channels[s];
        Tensor style = linear(codes[i], style_w_[i], style_b_[i]);
        Tensor sc = slice(style, 0, c);
        Tensor of = slice(style, c, c);
        x = adain(x, sc, of, kAdainEps);
        x = leaky_relu(x, kLeakyAlpha);
      }
    }
    x = conv2d(x, rgb_w_, rgb_b_, 0);
    return tanh_op(x);
  }

  Tensor generate(const Tensor& s) const {
    return synthesize(replicate(map(s), cfg_.style_layers()));
  }

  Tensor style_mix(const LayerCodes& a, const LayerCodes& b, int crossover) const {
    const int L = cfg_.style_layers();
    if (crossover < 0 || crossover > L)
      throw ValidationError("style_mix: crossover must be in [0, L]");
    if (static_cast<int>(a.size()) != L || static_cast<int>(b.size()) != L)
      throw DimensionError("style_mix: both code stacks must have L entries");
    LayerCodes mixed;
    mixed.reserve(static_cast<std::size_t>(L));
    for (int i = 0; i < L; ++i)
      mixed.push_back(i < crossover ? a[static_cast<std::size_t>(i)] : b[static_cast<std::size_t>(i)]);
    return synthesize(mixed);
  }

  static LayerCodes replicate(const Tensor& z, int layers) {
    if (layers < 1) throw ValidationError("replicate: layer count must be >= 1");
    return LayerCodes(static_cast<std::size_t>(layers), z);
  }

 private:
  GeneratorConfig cfg_;
  Tensor c0_;
  std::vector<Tensor> map_w_, map_b_;
  std::vector<Tensor> conv_w_, conv_b_;
  std::vector<Tensor> style_w_, style_b_;  // one projection per AdaIN site
  Tensor rgb_w_, rgb_b_;
};

inline LayerCodes replicate(const Tensor& z, int layers) {
  return StyleGenerator::replicate(z, layers);
}

inline LayerCodes zero_codes(const GeneratorConfig& cfg, bool requires_grad = false) {
  LayerCodes codes;
  for (int i = 0; i < cfg.style_layers(); ++i)
    codes.push_back(Tensor::zeros({cfg.latent_dim}, requires_grad));
  return codes;
}

}  // namespace styleprior
