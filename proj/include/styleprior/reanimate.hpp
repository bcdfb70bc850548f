#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "styleprior/invert.hpp"
#include "styleprior/parallel.hpp"
#include "styleprior/sprites.hpp"
#include "styleprior/stylegen.hpp"

namespace styleprior {

// Plain per-layer code stack for latent arithmetic (no tape involvement).
using CodeStack = std::vector<std::vector<double>>;

inline CodeStack to_code_stack(const LayerCodes& codes) {
  CodeStack out;
  out.reserve(codes.size());
  for (const Tensor& c : codes) out.push_back(c.data_vec());
  return out;
}

inline LayerCodes to_layer_codes(const CodeStack& stack) {
  LayerCodes out;
  out.reserve(stack.size());
  for (const auto& c : stack) out.push_back(Tensor({static_cast<int>(c.size())}, c));
  return out;
}

namespace detail {

inline CodeStack zero_like(const CodeStack& s) {
  CodeStack out(s.size());
  for (std::size_t l = 0; l < s.size(); ++l) out[l].assign(s[l].size(), 0.0);
  return out;
}

inline void accumulate(CodeStack& acc, const CodeStack& x, double w) {
  for (std::size_t l = 0; l < acc.size(); ++l)
    for (std::size_t i = 0; i < acc[l].size(); ++i) acc[l][i] += w * x[l][i];
}

inline double stack_norm(const CodeStack& s) {
  double sq = 0.0;
  for (const auto& layer : s)
    for (double v : layer) sq += v * v;
  return std::sqrt(sq);
}

}  // namespace detail

// Per-frame inverted codes of a source video, with the trajectory mean as
// the identity code and per-frame deviations as pose deltas.
struct LatentTrajectory {
  std::vector<CodeStack> frames;
  CodeStack identity;            // arithmetic mean over frames
  std::vector<CodeStack> deltas; // frames[i] - identity

  void compute_derived() {
    if (frames.empty()) throw ValidationError("trajectory: no frames");
    identity = detail::zero_like(frames[0]);
    const double w = 1.0 / static_cast<double>(frames.size());
    for (const CodeStack& f : frames) detail::accumulate(identity, f, w);
    deltas.assign(frames.size(), detail::zero_like(frames[0]));
    for (std::size_t i = 0; i < frames.size(); ++i)
      for (std::size_t l = 0; l < identity.size(); ++l)
        for (std::size_t k = 0; k < identity[l].size(); ++k)
          deltas[i][l][k] = frames[i][l][k] - identity[l][k];
  }
};

struct TransferConfig {
  double pose_scale = 1.0;      // alpha
  bool normalize_pose = false;  // rescale each delta to alpha * median delta norm
  int smoothing_window = 5;     // centered moving average, odd

  void validate() const {
    if (!(pose_scale >= 0.0)) throw ValidationError("transfer: pose scale must be >= 0");
    if (smoothing_window < 1 || smoothing_window % 2 == 0)
      throw ValidationError("transfer: smoothing window must be odd and >= 1");
  }
};

// Per-layer inversion of every source frame.
inline LatentTrajectory build_trajectory(const StyleGenerator& gen,
                                         const std::vector<Tensor>& frames,
                                         const FeatureExtractor& phi, const InversionConfig& cfg,
                                         int jobs = 1) {
  if (frames.empty()) throw ValidationError("build_trajectory: no frames");
  LatentTrajectory traj;
  traj.frames.resize(frames.size());
  parallel_for_indexed(static_cast<int>(frames.size()), jobs, [&](int i) {
    try {
      InversionResult r = invert(gen, frames[static_cast<std::size_t>(i)], phi, cfg);
      traj.frames[static_cast<std::size_t>(i)] = to_code_stack(r.layer_codes);
    } catch (const std::exception& e) {
      throw OptimError("frame " + std::to_string(i) + ": " + e.what());
    }
  });
  traj.compute_derived();
  return traj;
}

// Identity code of a target: a single still's inverted code, or the mean
// over a list of stills.
inline CodeStack target_identity(const StyleGenerator& gen, const std::vector<Tensor>& stills,
                                 const FeatureExtractor& phi, const InversionConfig& cfg,
                                 int jobs = 1) {
  if (stills.empty()) throw ValidationError("target_identity: no images");
  std::vector<CodeStack> codes(stills.size());
  parallel_for_indexed(static_cast<int>(stills.size()), jobs, [&](int i) {
    codes[static_cast<std::size_t>(i)] =
        to_code_stack(invert(gen, stills[static_cast<std::size_t>(i)], phi, cfg).layer_codes);
  });
  CodeStack mean = detail::zero_like(codes[0]);
  const double w = 1.0 / static_cast<double>(codes.size());
  for (const CodeStack& c : codes) detail::accumulate(mean, c, w);
  return mean;
}

// Centered moving average with the window clipped at sequence edges.
inline std::vector<CodeStack> smooth(const std::vector<CodeStack>& deltas, int window) {
  if (window < 1 || window % 2 == 0)
    throw ValidationError("smooth: window must be odd and >= 1");
  if (deltas.empty() || window == 1) return deltas;
  const int n = static_cast<int>(deltas.size());
  const int half = window / 2;
  std::vector<CodeStack> out(deltas.size(), detail::zero_like(deltas[0]));
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - half);
    const int hi = std::min(n - 1, i + half);
    const double w = 1.0 / static_cast<double>(hi - lo + 1);
    for (int j = lo; j <= hi; ++j)
      detail::accumulate(out[static_cast<std::size_t>(i)], deltas[static_cast<std::size_t>(j)], w);
  }
  return out;
}

// z_target_i = z_target_id + dz_i, with optional rescaling of every delta
// to pose_scale times the median source delta norm.
inline std::vector<CodeStack> transfer(const CodeStack& target_id,
                                       const std::vector<CodeStack>& deltas,
                                       const TransferConfig& cfg) {
  cfg.validate();
  std::vector<CodeStack> prepared = deltas;
  if (cfg.normalize_pose && !deltas.empty()) {
    std::vector<double> norms;
    norms.reserve(deltas.size());
    for (const CodeStack& d : deltas) norms.push_back(detail::stack_norm(d));
    std::vector<double> sorted = norms;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median =
        n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    for (std::size_t i = 0; i < prepared.size(); ++i) {
      const double norm = norms[i];
      const double f = norm > 0.0 ? cfg.pose_scale * median / norm : 0.0;
      for (auto& layer : prepared[i])
        for (double& v : layer) v *= f;
    }
  }
  std::vector<CodeStack> out;
  out.reserve(prepared.size());
  for (const CodeStack& d : prepared) {
    CodeStack code = target_id;
    detail::accumulate(code, d, 1.0);
    out.push_back(std::move(code));
  }
  return out;
}

inline std::vector<Tensor> render_video(const StyleGenerator& gen,
                                        const std::vector<CodeStack>& codes, int jobs = 1) {
  std::vector<Tensor> out(codes.size());
  parallel_for_indexed(static_cast<int>(codes.size()), jobs, [&](int i) {
    out[static_cast<std::size_t>(i)] =
        gen.synthesize(to_layer_codes(codes[static_cast<std::size_t>(i)])).clone();
  });
  return out;
}

struct FidelityReport {
  double r_x = 0.0, r_y = 0.0, r_rotation = 0.0;
  bool x_degenerate = false, y_degenerate = false, rotation_degenerate = false;
  double identity_accuracy = 0.0;
  std::vector<Factors> source_factors, output_factors;
};

namespace detail {

inline bool all_equal(const std::vector<double>& v) {
  for (double x : v)
    if (x != v[0]) return false;
  return true;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b, bool& degenerate) {
  if (all_equal(a) || all_equal(b)) {
    degenerate = true;  // zero variance: correlation undefined, reported as 0
    return 0.0;
  }
  degenerate = false;
  const std::size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace detail

// Pose transfer fidelity via the sprite factor oracle: Pearson correlation
// between estimated source and output poses, plus the fraction of output
// frames whose estimated identity lands on the target identity's grid cell.
inline FidelityReport reanimation_fidelity(const std::vector<Tensor>& source_frames,
                                           const std::vector<Tensor>& output_frames,
                                           const IdentityFactors& target_identity_factors) {
  if (source_frames.size() != output_frames.size() || source_frames.empty())
    throw DimensionError("reanimation_fidelity: sequences must be non-empty and equal length");
  if (source_frames[0].shape() != output_frames[0].shape())
    throw DimensionError("reanimation_fidelity: resolution mismatch");

  FidelityReport rep;
  const std::size_t n = source_frames.size();
  rep.source_factors.resize(n);
  rep.output_factors.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    rep.source_factors[i] = estimate_factors(source_frames[i]);
    rep.output_factors[i] = estimate_factors(output_frames[i]);
  }

  std::vector<double> sx(n), sy(n), sr(n), ox(n), oy(n), orot(n);
  for (std::size_t i = 0; i < n; ++i) {
    sx[i] = rep.source_factors[i].pose.x;
    sy[i] = rep.source_factors[i].pose.y;
    sr[i] = rep.source_factors[i].pose.rotation;
    ox[i] = rep.output_factors[i].pose.x;
    oy[i] = rep.output_factors[i].pose.y;
    orot[i] = rep.output_factors[i].pose.rotation;
  }
  rep.r_x = detail::pearson(sx, ox, rep.x_degenerate);
  rep.r_y = detail::pearson(sy, oy, rep.y_degenerate);
  rep.r_rotation = detail::pearson(sr, orot, rep.rotation_degenerate);

  const IdentityFactors target_cell = nearest_grid_identity(target_identity_factors);
  int hits = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (same_grid_identity(rep.output_factors[i].identity, target_cell)) ++hits;
  rep.identity_accuracy = static_cast<double>(hits) / static_cast<double>(n);
  return rep;
}

// Mean L2 distance between consecutive code stacks; smoothing should lower it.
inline double mean_frame_distance(const std::vector<CodeStack>& codes) {
  if (codes.size() < 2) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 1; i < codes.size(); ++i) {
    double sq = 0.0;
    for (std::size_t l = 0; l < codes[i].size(); ++l)
      for (std::size_t k = 0; k < codes[i][l].size(); ++k) {
        const double d = codes[i][l][k] - codes[i - 1][l][k];
        sq += d * d;
      }
    acc += std::sqrt(sq);
  }
  return acc / static_cast<double>(codes.size() - 1);
}

}  // namespace styleprior
