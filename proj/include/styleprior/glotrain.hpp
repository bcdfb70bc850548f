#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include "styleprior/adam.hpp"
#include "styleprior/image_io.hpp"
#include "styleprior/invert.hpp"
#include "styleprior/ops.hpp"
#include "styleprior/rng.hpp"
#include "styleprior/stylegen.hpp"

namespace styleprior {

struct TrainConfig {
  int epochs = 300;
  int batch_size = 16;
  double param_lr = 1e-3;
  double code_lr = 1e-2;
  double mix_prob = 0.5;  // per-batch chance of swapping a code suffix between two images
  std::uint64_t seed = 1;

  void validate() const {
    if (epochs < 1) throw ValidationError("train: epochs must be >= 1");
    if (batch_size < 1) throw ValidationError("train: batch size must be >= 1");
    if (!(param_lr > 0.0) || !(code_lr > 0.0))
      throw ValidationError("train: learning rates must be positive");
    if (!(mix_prob >= 0.0 && mix_prob <= 1.0))
      throw ValidationError("train: mixing probability must be in [0,1]");
  }
};

struct TrainResult {
  StyleGenerator gen;
  std::vector<Tensor> codes;       // per-image global codes, frozen
  std::vector<double> epoch_loss;  // mean objective per epoch
};

namespace detail {

inline void renormalize_code(Tensor& code, double radius) {
  double* d = code.data();
  const std::int64_t n = code.numel();
  double sq = 0.0;
  for (std::int64_t i = 0; i < n; ++i) sq += d[i] * d[i];
  const double norm = std::sqrt(sq);
  if (norm == 0.0) return;
  const double f = radius / norm;
  for (std::int64_t i = 0; i < n; ++i) d[i] *= f;
}

}  // namespace detail

// Generative latent optimization: per-image global codes and generator
// parameters descend the feature-space L1 reconstruction loss together.
// Codes are projected back onto the sqrt(d) sphere after every step. A
// random suffix of style layers is occasionally swapped between two batch
// members so the synthesis network never assumes one shared code across
// layers.
inline TrainResult train_glo(const std::vector<Tensor>& images, const GeneratorConfig& gcfg,
                             const TrainConfig& tcfg, const FeatureExtractor& phi) {
  tcfg.validate();
  gcfg.validate();
  if (images.empty()) throw ValidationError("train: dataset is empty");
  const int n = static_cast<int>(images.size());
  const int d = gcfg.latent_dim;
  const int L = gcfg.style_layers();
  const double radius = std::sqrt(static_cast<double>(d));

  Rng rng(tcfg.seed);
  const std::uint64_t gen_seed = rng.next_u64();

  TrainResult out;
  out.gen = StyleGenerator(gcfg, gen_seed);
  out.gen.set_trainable(true);

  out.codes.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Tensor c({d}, rng.normal_vec(static_cast<std::size_t>(d)), true);
    detail::renormalize_code(c, radius);
    out.codes.push_back(c);
  }

  // frozen targets; the feature extractor never changes during training
  std::vector<Tensor> targets;
  targets.reserve(static_cast<std::size_t>(n));
  for (const Tensor& img : images) {
    img.validate_finite("training image");
    targets.push_back(phi.features(img).clone());
  }

  AdamConfig pc;
  pc.lr = tcfg.param_lr;
  AdamState param_opt(out.gen.parameters(), pc);
  AdamConfig cc;
  cc.lr = tcfg.code_lr;
  std::vector<AdamState> code_opt;
  code_opt.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    code_opt.emplace_back(
        std::vector<std::pair<std::string, Tensor>>{{"code." + std::to_string(i), out.codes[i]}},
        cc);

  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  auto params = out.gen.parameters();
  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_sum = 0.0;
    for (int start = 0; start < n; start += tcfg.batch_size) {
      const int bs = std::min(tcfg.batch_size, n - start);

      int mix_a = -1, mix_b = -1, crossover = 0;
      if (bs >= 2 && L >= 2 && rng.uniform01() < tcfg.mix_prob) {
        mix_a = rng.uniform_int(bs);
        mix_b = rng.uniform_int(bs - 1);
        if (mix_b >= mix_a) ++mix_b;
        crossover = 1 + rng.uniform_int(L - 1);
      }

      for (int p = 0; p < bs; ++p) {
        const int i = order[static_cast<std::size_t>(start + p)];
        LayerCodes codes;
        if (p == mix_a || p == mix_b) {
          const int partner = order[static_cast<std::size_t>(start + (p == mix_a ? mix_b : mix_a))];
          for (int l = 0; l < L; ++l)
            codes.push_back(l < crossover ? out.codes[static_cast<std::size_t>(i)]
                                          : out.codes[static_cast<std::size_t>(partner)]);
        } else {
          codes = replicate(out.codes[static_cast<std::size_t>(i)], L);
        }
        Tensor loss = l1_norm(phi.features(out.gen.synthesize(codes)),
                              targets[static_cast<std::size_t>(i)]);
        const double value = loss.value();
        if (!std::isfinite(value))
          throw OptimError("training diverged (non-finite loss) at epoch " + std::to_string(epoch));
        epoch_sum += value;
        backward(loss);
      }

      const double inv_bs = 1.0 / static_cast<double>(bs);
      for (auto& [name, t] : params) {
        (void)name;
        for (double& g : t.impl()->grad) g *= inv_bs;
      }
      param_opt.step();
      for (int p = 0; p < bs; ++p) {
        const int i = order[static_cast<std::size_t>(start + p)];
        code_opt[static_cast<std::size_t>(i)].step();
        detail::renormalize_code(out.codes[static_cast<std::size_t>(i)], radius);
      }
    }
    out.epoch_loss.push_back(epoch_sum / static_cast<double>(n));
  }

  out.gen.set_trainable(false);
  for (Tensor& c : out.codes) c.set_requires_grad(false);
  return out;
}

// Plain per-image reconstruction losses of the training pairs.
inline std::vector<double> reconstruct_train_set(const StyleGenerator& gen,
                                                 const std::vector<Tensor>& codes,
                                                 const std::vector<Tensor>& images,
                                                 const FeatureExtractor& phi) {
  if (codes.size() != images.size())
    throw DimensionError("reconstruct_train_set: codes and images must pair up");
  std::vector<double> losses;
  losses.reserve(images.size());
  const int L = gen.config().style_layers();
  for (std::size_t i = 0; i < images.size(); ++i) {
    Tensor img = gen.synthesize(replicate(codes[i], L));
    losses.push_back(feature_distance(phi, img, images[i]));
  }
  return losses;
}

// ---- checkpoint file: magic, version, config block, shape manifest,
// little-endian float64 blob, training codes, loss history ----

constexpr char kCheckpointMagic[9] = "SPRIORCK";
constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  GeneratorConfig config;
  std::vector<std::string> param_names;
  std::vector<std::vector<int>> param_shapes;
  std::vector<std::vector<double>> param_data;
  std::vector<std::vector<double>> codes;
  std::vector<double> loss_history;
};

namespace detail {

inline void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_i32(std::string& s, std::int32_t v) { put_u32(s, static_cast<std::uint32_t>(v)); }

inline void put_f64s(std::string& s, const std::vector<double>& v) {
  static_assert(sizeof(double) == 8);
  const std::size_t off = s.size();
  s.resize(off + v.size() * 8);
  std::memcpy(s.data() + off, v.data(), v.size() * 8);
}

struct Cursor {
  const std::string& s;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > s.size()) throw IoError("checkpoint: truncated file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[pos + static_cast<std::size_t>(i)])) << (8 * i);
    pos += 4;
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string v = s.substr(pos, n);
    pos += n;
    return v;
  }
  std::vector<double> f64s(std::size_t n) {
    need(n * 8);
    std::vector<double> v(n);
    std::memcpy(v.data(), s.data() + pos, n * 8);
    pos += n * 8;
    return v;
  }
};

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& ck) {
  std::string s;
  s.append(kCheckpointMagic, 8);
  detail::put_u32(s, ck.version);
  detail::put_i32(s, ck.config.latent_dim);
  detail::put_i32(s, ck.config.mapping_depth);
  detail::put_i32(s, ck.config.base_resolution);
  detail::put_i32(s, ck.config.final_resolution);
  detail::put_i32(s, ck.config.out_channels);
  detail::put_u32(s, static_cast<std::uint32_t>(ck.config.stage_channels.size()));
  for (int c : ck.config.stage_channels) detail::put_i32(s, c);

  detail::put_u32(s, static_cast<std::uint32_t>(ck.param_names.size()));
  for (std::size_t i = 0; i < ck.param_names.size(); ++i) {
    detail::put_u32(s, static_cast<std::uint32_t>(ck.param_names[i].size()));
    s.append(ck.param_names[i]);
    detail::put_u32(s, static_cast<std::uint32_t>(ck.param_shapes[i].size()));
    for (int dsz : ck.param_shapes[i]) detail::put_i32(s, dsz);
  }
  for (const auto& data : ck.param_data) detail::put_f64s(s, data);

  detail::put_u32(s, static_cast<std::uint32_t>(ck.codes.size()));
  detail::put_u32(s, ck.codes.empty() ? 0u : static_cast<std::uint32_t>(ck.codes[0].size()));
  for (const auto& c : ck.codes) detail::put_f64s(s, c);

  detail::put_u32(s, static_cast<std::uint32_t>(ck.loss_history.size()));
  detail::put_f64s(s, ck.loss_history);
  return s;
}

inline Checkpoint deserialize_checkpoint(const std::string& s) {
  detail::Cursor c{s};
  if (c.bytes(8) != std::string(kCheckpointMagic, 8))
    throw IoError("checkpoint: bad magic string");
  Checkpoint ck;
  ck.version = c.u32();
  if (ck.version != kCheckpointVersion)
    throw IoError("checkpoint: unsupported format version " + std::to_string(ck.version));
  ck.config.latent_dim = c.i32();
  ck.config.mapping_depth = c.i32();
  ck.config.base_resolution = c.i32();
  ck.config.final_resolution = c.i32();
  ck.config.out_channels = c.i32();
  const std::uint32_t nstages = c.u32();
  if (nstages == 0 || nstages > 16) throw IoError("checkpoint: implausible stage count");
  ck.config.stage_channels.clear();
  for (std::uint32_t i = 0; i < nstages; ++i) ck.config.stage_channels.push_back(c.i32());
  ck.config.validate();

  const std::uint32_t nparams = c.u32();
  std::vector<std::size_t> counts;
  for (std::uint32_t i = 0; i < nparams; ++i) {
    const std::uint32_t name_len = c.u32();
    if (name_len > 256) throw IoError("checkpoint: implausible name length");
    ck.param_names.push_back(c.bytes(name_len));
    const std::uint32_t ndim = c.u32();
    if (ndim == 0 || ndim > 4) throw IoError("checkpoint: implausible tensor rank");
    std::vector<int> shape;
    std::size_t count = 1;
    for (std::uint32_t k = 0; k < ndim; ++k) {
      const int dsz = c.i32();
      if (dsz <= 0) throw IoError("checkpoint: bad tensor dimension");
      shape.push_back(dsz);
      count *= static_cast<std::size_t>(dsz);
    }
    ck.param_shapes.push_back(std::move(shape));
    counts.push_back(count);
  }
  for (std::uint32_t i = 0; i < nparams; ++i) ck.param_data.push_back(c.f64s(counts[i]));

  const std::uint32_t ncodes = c.u32();
  const std::uint32_t code_dim = c.u32();
  for (std::uint32_t i = 0; i < ncodes; ++i) ck.codes.push_back(c.f64s(code_dim));

  const std::uint32_t nhist = c.u32();
  ck.loss_history = c.f64s(nhist);
  if (c.pos != s.size()) throw IoError("checkpoint: trailing bytes");
  return ck;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  write_file_atomic(path, serialize_checkpoint(ck));
}

inline Checkpoint load_checkpoint(const std::string& path) {
  return deserialize_checkpoint(read_file(path));
}

inline Checkpoint make_checkpoint(const StyleGenerator& gen, const std::vector<Tensor>& codes,
                                  const std::vector<double>& loss_history) {
  Checkpoint ck;
  ck.config = gen.config();
  for (const auto& [name, t] : gen.parameters()) {
    ck.param_names.push_back(name);
    ck.param_shapes.push_back(t.shape());
    ck.param_data.push_back(t.data_vec());
  }
  for (const Tensor& code : codes) ck.codes.push_back(code.data_vec());
  ck.loss_history = loss_history;
  return ck;
}

// Rebuilds the generator; the stored manifest must match the architecture
// implied by the stored config.
inline StyleGenerator generator_from_checkpoint(const Checkpoint& ck) {
  StyleGenerator gen(ck.config, 0);
  auto params = gen.parameters();
  if (params.size() != ck.param_names.size())
    throw IoError("checkpoint: parameter manifest does not match the config");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].first != ck.param_names[i])
      throw IoError("checkpoint: unexpected parameter name '" + ck.param_names[i] + "'");
    if (params[i].second.shape() != ck.param_shapes[i])
      throw IoError("checkpoint: shape mismatch for '" + ck.param_names[i] + "'");
    params[i].second.data_vec() = ck.param_data[i];
  }
  return gen;
}

}  // namespace styleprior
