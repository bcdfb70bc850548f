#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "styleprior/glotrain.hpp"
#include "styleprior/image_io.hpp"
#include "styleprior/invert.hpp"
#include "styleprior/parallel.hpp"
#include "styleprior/priors.hpp"
#include "styleprior/sprites.hpp"

namespace styleprior {

// Fixed seeds for the frozen feature extractors: optimization and scoring
// use different draws so evaluation never happens on the training measure.
constexpr std::uint64_t kPhiOptimizeSeed = 1001;
constexpr std::uint64_t kPhiEvaluateSeed = 2002;

struct EvalSettings {
  int suite_size = 20;
  std::uint64_t suite_seed = 424242;  // held-out sprites, disjoint from training seeds
  InversionConfig inversion;          // strategy field is ignored where all three run
  int sr_factor = 4;
  std::uint64_t mask_seed = 9000;     // per-image mask seed = mask_seed + index
  int jobs = 1;
};

inline std::vector<Tensor> held_out_suite(const EvalSettings& s, int resolution) {
  std::vector<Tensor> images;
  for (const auto& sample : make_dataset(s.suite_size, s.suite_seed, resolution))
    images.push_back(sample.image);
  return images;
}

// --- strategy comparison (Noise / Global / Per-Layer) ---

struct StrategyEval {
  std::vector<double> noise, global, per_layer;  // evaluation-phi losses per image
  double mean_noise = 0.0, mean_global = 0.0, mean_per_layer = 0.0;
};

inline StrategyEval run_strategy_eval(const StyleGenerator& gen, const std::vector<Tensor>& images,
                                      const EvalSettings& s) {
  FeatureExtractor phi_opt = FeatureExtractor::random_conv(kPhiOptimizeSeed);
  FeatureExtractor phi_eval = FeatureExtractor::random_conv(kPhiEvaluateSeed);
  StrategyEval out;
  for (Strategy strat : {Strategy::Noise, Strategy::Global, Strategy::PerLayer}) {
    InversionConfig cfg = s.inversion;
    cfg.strategy = strat;
    ReconstructionSummary sum =
        evaluate_reconstruction(gen, images, phi_opt, cfg, phi_eval, s.jobs);
    switch (strat) {
      case Strategy::Noise:
        out.noise = sum.eval_losses;
        out.mean_noise = sum.mean_eval;
        break;
      case Strategy::Global:
        out.global = sum.eval_losses;
        out.mean_global = sum.mean_eval;
        break;
      case Strategy::PerLayer:
        out.per_layer = sum.eval_losses;
        out.mean_per_layer = sum.mean_eval;
        break;
    }
  }
  return out;
}

// --- inpainting vs mean-fill ---

struct InpaintEval {
  std::vector<double> generator_error, meanfill_error;  // masked-region L1 vs ground truth
  double mean_generator = 0.0, mean_meanfill = 0.0;
  int generator_wins = 0;
  bool observed_preserved = true;  // compositing contract across the whole suite
};

inline InpaintEval run_inpaint_eval(const StyleGenerator& gen, const std::vector<Tensor>& images,
                                    const EvalSettings& s) {
  FeatureExtractor phi_opt = FeatureExtractor::random_conv(kPhiOptimizeSeed);
  const int r = gen.config().final_resolution;
  InpaintEval out;
  out.generator_error.resize(images.size());
  out.meanfill_error.resize(images.size());
  std::vector<char> preserved(images.size(), 1);
  InversionConfig cfg = s.inversion;
  cfg.strategy = Strategy::PerLayer;

  parallel_for_indexed(static_cast<int>(images.size()), s.jobs, [&](int i) {
    const Tensor& gt = images[static_cast<std::size_t>(i)];
    Tensor mask = make_square_mask(r, s.mask_seed + static_cast<std::uint64_t>(i));
    Tensor corrupted = mul(gt, detail::mask_to_channels(mask, 3)).clone();
    InpaintResult res = inpaint(gen, corrupted, mask, phi_opt, cfg, &gt);
    out.generator_error[static_cast<std::size_t>(i)] = res.masked_error;
    Tensor filled = baseline_meanfill(corrupted, mask);
    out.meanfill_error[static_cast<std::size_t>(i)] = detail::region_l1(filled, gt, mask, true);
    for (int c = 0; c < 3 && preserved[static_cast<std::size_t>(i)]; ++c)
      for (int p = 0; p < r * r; ++p)
        if (mask.data()[p] == 1.0 &&
            res.output.data()[c * r * r + p] != corrupted.data()[c * r * r + p]) {
          preserved[static_cast<std::size_t>(i)] = 0;
          break;
        }
  });
  for (std::size_t i = 0; i < images.size(); ++i) {
    out.mean_generator += out.generator_error[i];
    out.mean_meanfill += out.meanfill_error[i];
    if (out.generator_error[i] < out.meanfill_error[i]) ++out.generator_wins;
    if (!preserved[i]) out.observed_preserved = false;
  }
  if (!images.empty()) {
    out.mean_generator /= static_cast<double>(images.size());
    out.mean_meanfill /= static_cast<double>(images.size());
  }
  return out;
}

// --- super-resolution vs interpolation ---

struct SREval {
  std::vector<double> generator_error, nearest_error, bilinear_error;  // full-res L1 vs truth
  std::vector<double> residual, zero_code_residual;                    // downsample consistency
  double mean_generator = 0.0, mean_nearest = 0.0, mean_bilinear = 0.0;
  int residual_wins = 0;  // instances where the output residual beats the zero-code residual
};

inline SREval run_sr_eval(const StyleGenerator& gen, const std::vector<Tensor>& images,
                          const EvalSettings& s) {
  FeatureExtractor phi_opt = FeatureExtractor::random_conv(kPhiOptimizeSeed);
  SREval out;
  const std::size_t n = images.size();
  out.generator_error.resize(n);
  out.nearest_error.resize(n);
  out.bilinear_error.resize(n);
  out.residual.resize(n);
  out.zero_code_residual.resize(n);
  InversionConfig cfg = s.inversion;
  cfg.strategy = Strategy::PerLayer;
  SRSpec spec;
  spec.factor = s.sr_factor;

  parallel_for_indexed(static_cast<int>(n), s.jobs, [&](int i) {
    const Tensor& gt = images[static_cast<std::size_t>(i)];
    Tensor lr = downsample_avg(gt, spec.factor).clone();
    SRResult res = super_resolve(gen, lr, spec, phi_opt, cfg, &gt);
    out.generator_error[static_cast<std::size_t>(i)] = res.full_res_error;
    out.residual[static_cast<std::size_t>(i)] = res.consistency_residual;
    out.zero_code_residual[static_cast<std::size_t>(i)] = res.zero_code_residual;
    out.nearest_error[static_cast<std::size_t>(i)] =
        l1_loss(baseline_upsample(lr, spec.factor, UpsampleMode::Nearest), gt).value();
    out.bilinear_error[static_cast<std::size_t>(i)] =
        l1_loss(baseline_upsample(lr, spec.factor, UpsampleMode::Bilinear), gt).value();
  });
  for (std::size_t i = 0; i < n; ++i) {
    out.mean_generator += out.generator_error[i];
    out.mean_nearest += out.nearest_error[i];
    out.mean_bilinear += out.bilinear_error[i];
    if (out.residual[i] < out.zero_code_residual[i]) ++out.residual_wins;
  }
  if (n) {
    out.mean_generator /= static_cast<double>(n);
    out.mean_nearest /= static_cast<double>(n);
    out.mean_bilinear /= static_cast<double>(n);
  }
  return out;
}

// --- report files ---

inline void write_strategy_csv(const std::string& path, const StrategyEval& e) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < e.per_layer.size(); ++i)
    rows.push_back({std::to_string(i), format_double(e.noise[i]), format_double(e.global[i]),
                    format_double(e.per_layer[i])});
  rows.push_back({"mean", format_double(e.mean_noise), format_double(e.mean_global),
                  format_double(e.mean_per_layer)});
  write_csv(path, {"image", "noise", "global", "per_layer"}, rows);
}

inline void write_inpaint_csv(const std::string& path, const InpaintEval& e) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < e.generator_error.size(); ++i)
    rows.push_back({std::to_string(i), format_double(e.generator_error[i]),
                    format_double(e.meanfill_error[i])});
  rows.push_back({"mean", format_double(e.mean_generator), format_double(e.mean_meanfill)});
  write_csv(path, {"image", "generator_prior", "mean_fill"}, rows);
}

inline void write_sr_csv(const std::string& path, const SREval& e) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < e.generator_error.size(); ++i)
    rows.push_back({std::to_string(i), format_double(e.generator_error[i]),
                    format_double(e.nearest_error[i]), format_double(e.bilinear_error[i]),
                    format_double(e.residual[i]), format_double(e.zero_code_residual[i])});
  rows.push_back({"mean", format_double(e.mean_generator), format_double(e.mean_nearest),
                  format_double(e.mean_bilinear), "", ""});
  write_csv(path, {"image", "generator_prior", "nearest", "bilinear", "residual",
                   "zero_code_residual"},
            rows);
}

inline std::string eval_report_text(const StrategyEval& st, const InpaintEval& ip,
                                    const SREval& sr) {
  std::string t;
  t += "Reconstruction error by inversion strategy (held-out suite, evaluation features)\n";
  t += "  noise      " + format_fixed(st.mean_noise) + "\n";
  t += "  global     " + format_fixed(st.mean_global) + "\n";
  t += "  per-layer  " + format_fixed(st.mean_per_layer) + "\n";
  const bool order_ok = st.mean_per_layer < st.mean_global && st.mean_global < st.mean_noise;
  t += std::string("  ordering per-layer < global < noise: ") + (order_ok ? "yes" : "NO") + "\n\n";

  t += "Inpainting, masked-region L1 error\n";
  t += "  generator prior  " + format_fixed(ip.mean_generator) + "\n";
  t += "  mean fill        " + format_fixed(ip.mean_meanfill) + "\n";
  t += "  generator wins   " + std::to_string(ip.generator_wins) + "/" +
       std::to_string(ip.generator_error.size()) + "\n";
  t += std::string("  observed pixels preserved: ") + (ip.observed_preserved ? "yes" : "NO") +
       "\n\n";

  t += "Super-resolution, full-resolution L1 error\n";
  t += "  generator prior  " + format_fixed(sr.mean_generator) + "\n";
  t += "  nearest          " + format_fixed(sr.mean_nearest) + "\n";
  t += "  bilinear         " + format_fixed(sr.mean_bilinear) + "\n";
  t += "  residual beats zero-code image on " + std::to_string(sr.residual_wins) + "/" +
       std::to_string(sr.generator_error.size()) + " instances\n";
  return t;
}

}  // namespace styleprior
