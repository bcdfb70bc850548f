#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "styleprior/invert.hpp"
#include "styleprior/rng.hpp"
#include "styleprior/stylegen.hpp"

namespace styleprior {

// Square of missing pixels with side R/4 at a seeded random location.
// Mask convention: 1 = observed, 0 = missing.
inline Tensor make_square_mask(int resolution, std::uint64_t seed) {
  if (resolution < 4) throw ValidationError("mask: resolution must be >= 4");
  const int side = resolution / 4;
  Rng rng(seed);
  const int x0 = rng.uniform_int(resolution - side + 1);
  const int y0 = rng.uniform_int(resolution - side + 1);
  std::vector<double> m(static_cast<std::size_t>(resolution) * resolution, 1.0);
  for (int y = y0; y < y0 + side; ++y)
    for (int x = x0; x < x0 + side; ++x) m[static_cast<std::size_t>(y) * resolution + x] = 0.0;
  return Tensor({1, resolution, resolution}, std::move(m));
}

inline void validate_mask(const Tensor& mask) {
  if (mask.ndim() != 3 || mask.dim(0) != 1 || mask.dim(1) != mask.dim(2))
    throw DimensionError("mask must be [1,R,R]");
  bool any_observed = false;
  for (int i = 0; i < mask.numel(); ++i) {
    const double v = mask.data()[i];
    if (v != 0.0 && v != 1.0) throw ValidationError("mask values must be exactly 0 or 1");
    if (v == 1.0) any_observed = true;
  }
  if (!any_observed)
    throw ValidationError(
        "degenerate mask: no observed pixels (loss is identically minimal for every code)");
}

namespace detail {

inline Tensor mask_to_channels(const Tensor& mask, int channels) {
  const int r = mask.dim(1);
  std::vector<double> m3(static_cast<std::size_t>(channels) * r * r);
  for (int c = 0; c < channels; ++c)
    for (int i = 0; i < r * r; ++i)
      m3[static_cast<std::size_t>(c) * r * r + i] = mask.data()[i];
  return Tensor({channels, r, r}, std::move(m3));
}

// Mean absolute error over the selected pixels (all channels).
inline double region_l1(const Tensor& a, const Tensor& b, const Tensor& mask, bool over_missing) {
  const int r = a.dim(1);
  double acc = 0.0;
  std::int64_t count = 0;
  for (int c = 0; c < a.dim(0); ++c)
    for (int i = 0; i < r * r; ++i) {
      const bool missing = mask.data()[i] == 0.0;
      if (missing != over_missing) continue;
      acc += std::fabs(a.data()[c * r * r + i] - b.data()[c * r * r + i]);
      ++count;
    }
  return count ? acc / static_cast<double>(count) : 0.0;
}

}  // namespace detail

struct InpaintResult {
  InversionResult inversion;
  Tensor output;      // observed pixels kept verbatim, missing filled from G(z*)
  Tensor raw_output;  // plain G(z*)
  double masked_error = std::numeric_limits<double>::quiet_NaN();  // vs ground truth, missing px
  double raw_error = std::numeric_limits<double>::quiet_NaN();     // whole-image error of G(z*)
};

// Minimizes ||phi(m . G(z)) - phi(m . corrupted)||_1; the mask is applied in
// pixel space before feature extraction.
inline InpaintResult inpaint(const StyleGenerator& gen, const Tensor& corrupted, const Tensor& mask,
                             const FeatureExtractor& phi, const InversionConfig& cfg,
                             const Tensor* ground_truth = nullptr) {
  const int r = gen.config().final_resolution;
  if (corrupted.ndim() != 3 || corrupted.dim(0) != 3 || corrupted.dim(1) != r || corrupted.dim(2) != r)
    throw DimensionError("inpaint: image must match the generator resolution");
  validate_mask(mask);
  if (mask.dim(1) != r) throw DimensionError("inpaint: mask resolution mismatch");

  Tensor mask3 = detail::mask_to_channels(mask, 3);
  Tensor target = phi.features(mul(corrupted, mask3));
  InpaintResult res;
  res.inversion = detail::optimize_latent(
      gen, phi, cfg, [mask3](const Tensor& x) { return mul(x, mask3); }, target);
  res.raw_output = res.inversion.image;

  std::vector<double> composited(static_cast<std::size_t>(3) * r * r);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < r * r; ++i) {
      const std::size_t idx = static_cast<std::size_t>(c) * r * r + i;
      composited[idx] = mask.data()[i] == 1.0 ? corrupted.data()[idx] : res.raw_output.data()[idx];
    }
  res.output = Tensor({3, r, r}, std::move(composited));

  if (ground_truth) {
    res.masked_error = detail::region_l1(res.output, *ground_truth, mask, true);
    res.raw_error = l1_loss(res.raw_output, *ground_truth).value();
  }
  return res;
}

// Missing pixels take the per-channel mean of the observed pixels.
inline Tensor baseline_meanfill(const Tensor& corrupted, const Tensor& mask) {
  validate_mask(mask);
  const int r = corrupted.dim(1);
  std::vector<double> out(corrupted.data_vec());
  for (int c = 0; c < corrupted.dim(0); ++c) {
    double mean = 0.0;
    std::int64_t count = 0;
    for (int i = 0; i < r * r; ++i)
      if (mask.data()[i] == 1.0) {
        mean += corrupted.data()[c * r * r + i];
        ++count;
      }
    mean /= static_cast<double>(count);
    for (int i = 0; i < r * r; ++i)
      if (mask.data()[i] == 0.0) out[static_cast<std::size_t>(c) * r * r + i] = mean;
  }
  return Tensor(corrupted.shape(), std::move(out));
}

struct SRSpec {
  int factor = 4;
};

struct SRResult {
  InversionResult inversion;
  Tensor output;  // G(z*) at full resolution
  double consistency_residual = 0.0;  // ||D_k(output) - lr||_1 (mean)
  double zero_code_residual = 0.0;    // same residual for the zero-code image
  double full_res_error = std::numeric_limits<double>::quiet_NaN();  // vs ground truth
};

// Minimizes ||phi(D_k(G(z))) - phi(lr)||_1 where D_k is k x k block
// averaging.
inline SRResult super_resolve(const StyleGenerator& gen, const Tensor& lr_image, const SRSpec& spec,
                              const FeatureExtractor& phi, const InversionConfig& cfg,
                              const Tensor* ground_truth = nullptr) {
  const int r = gen.config().final_resolution;
  const int k = spec.factor;
  if (k < 1 || r % k != 0) throw DimensionError("super_resolve: factor must divide the resolution");
  if (lr_image.ndim() != 3 || lr_image.dim(0) != 3 || lr_image.dim(1) != r / k ||
      lr_image.dim(2) != r / k)
    throw DimensionError("super_resolve: low-resolution input must be [3,R/k,R/k]");

  Tensor target = phi.features(lr_image);
  SRResult res;
  res.inversion = detail::optimize_latent(
      gen, phi, cfg, [k](const Tensor& x) { return downsample_avg(x, k); }, target);
  res.output = res.inversion.image;
  res.consistency_residual = l1_loss(downsample_avg(res.output, k), lr_image).value();
  Tensor zero_img = gen.synthesize(zero_codes(gen.config()));
  res.zero_code_residual = l1_loss(downsample_avg(zero_img, k), lr_image).value();
  if (ground_truth) res.full_res_error = l1_loss(res.output, *ground_truth).value();
  return res;
}

enum class UpsampleMode { Nearest, Bilinear };

// Plain interpolation baselines for the super-resolution comparison.
inline Tensor baseline_upsample(const Tensor& lr, int k, UpsampleMode mode) {
  if (lr.ndim() != 3) throw DimensionError("baseline_upsample: input must be [C,H,W]");
  if (k < 1) throw DimensionError("baseline_upsample: factor must be >= 1");
  const int c = lr.dim(0), h = lr.dim(1), w = lr.dim(2);
  const int ho = h * k, wo = w * k;
  std::vector<double> out(static_cast<std::size_t>(c) * ho * wo);
  for (int ch = 0; ch < c; ++ch) {
    const double* src = lr.data() + static_cast<std::size_t>(ch) * h * w;
    double* dst = out.data() + static_cast<std::size_t>(ch) * ho * wo;
    for (int y = 0; y < ho; ++y)
      for (int x = 0; x < wo; ++x) {
        if (mode == UpsampleMode::Nearest) {
          dst[y * wo + x] = src[(y / k) * w + x / k];
        } else {
          // sample centers, edges clamped
          const double sy = (y + 0.5) / k - 0.5;
          const double sx = (x + 0.5) / k - 0.5;
          const int y0 = std::max(0, std::min(h - 1, static_cast<int>(std::floor(sy))));
          const int x0 = std::max(0, std::min(w - 1, static_cast<int>(std::floor(sx))));
          const int y1 = std::min(h - 1, y0 + 1);
          const int x1 = std::min(w - 1, x0 + 1);
          const double fy = std::max(0.0, std::min(1.0, sy - y0));
          const double fx = std::max(0.0, std::min(1.0, sx - x0));
          const double top = src[y0 * w + x0] * (1.0 - fx) + src[y0 * w + x1] * fx;
          const double bot = src[y1 * w + x0] * (1.0 - fx) + src[y1 * w + x1] * fx;
          dst[y * wo + x] = top * (1.0 - fy) + bot * fy;
        }
      }
  }
  return Tensor({c, ho, wo}, std::move(out));
}

}  // namespace styleprior
