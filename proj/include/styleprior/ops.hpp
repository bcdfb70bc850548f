#pragma once

#include <cmath>
#include <vector>

#include "styleprior/tensor.hpp"

namespace styleprior {

namespace detail {

inline void require(bool cond, const char* msg) {
  if (!cond) throw DimensionError(msg);
}

}  // namespace detail

// Cross-correlation over [C_in,H,W] with kernel [C_out,C_in,k,k].
// H' = (H + 2*padding - k) / stride + 1. stride 1 keeps same-size output
// when padding = (k-1)/2.
inline Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
                     int padding, int stride = 1) {
  detail::require(input.ndim() == 3, "conv2d: input must be [C,H,W]");
  detail::require(kernel.ndim() == 4, "conv2d: kernel must be [Co,Ci,k,k]");
  detail::require(bias.ndim() == 1, "conv2d: bias must be [Co]");
  const int ci = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int co = kernel.dim(0), k = kernel.dim(2);
  detail::require(kernel.dim(1) == ci, "conv2d: kernel input channels mismatch");
  detail::require(kernel.dim(3) == k, "conv2d: kernel must be square");
  detail::require(k % 2 == 1, "conv2d: kernel size must be odd");
  detail::require(bias.dim(0) == co, "conv2d: bias size mismatch");
  detail::require(padding >= 0 && stride >= 1, "conv2d: bad padding/stride");
  const int ho = (h + 2 * padding - k) / stride + 1;
  const int wo = (w + 2 * padding - k) / stride + 1;
  detail::require(h + 2 * padding >= k && w + 2 * padding >= k, "conv2d: kernel larger than padded input");

  std::vector<double> out(static_cast<std::size_t>(co) * ho * wo);
  const double* in = input.data();
  const double* kd = kernel.data();
  const double* bd = bias.data();

  for (int oc = 0; oc < co; ++oc) {
    double* plane = out.data() + static_cast<std::size_t>(oc) * ho * wo;
    for (int i = 0; i < ho * wo; ++i) plane[i] = bd[oc];
    for (int icn = 0; icn < ci; ++icn) {
      const double* in_plane = in + static_cast<std::size_t>(icn) * h * w;
      const double* kslab = kd + (static_cast<std::size_t>(oc) * ci + icn) * k * k;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const double wgt = kslab[ky * k + kx];
          if (stride == 1) {
            const int ox_lo = std::max(0, padding - kx);
            const int ox_hi = std::min(wo, w + padding - kx);
            if (ox_hi <= ox_lo) continue;
            for (int oy = 0; oy < ho; ++oy) {
              const int iy = oy + ky - padding;
              if (iy < 0 || iy >= h) continue;
              const double* src = in_plane + static_cast<std::size_t>(iy) * w + (ox_lo + kx - padding);
              double* dst = plane + static_cast<std::size_t>(oy) * wo + ox_lo;
              const int n = ox_hi - ox_lo;
              for (int i = 0; i < n; ++i) dst[i] += wgt * src[i];
            }
          } else {
            for (int oy = 0; oy < ho; ++oy) {
              const int iy = oy * stride + ky - padding;
              if (iy < 0 || iy >= h) continue;
              for (int ox = 0; ox < wo; ++ox) {
                const int ix = ox * stride + kx - padding;
                if (ix < 0 || ix >= w) continue;
                plane[oy * wo + ox] += wgt * in_plane[iy * w + ix];
              }
            }
          }
        }
      }
    }
  }

  return detail::make_op_output(
      {co, ho, wo}, std::move(out), {input, kernel, bias},
      [input, kernel, bias, ci, h, w, co, k, ho, wo, padding, stride](detail::TensorImpl& o) {
        const double* g = o.grad.data();
        const double* in = input.data();
        const double* kd = kernel.data();
        double* gin = detail::grad_sink(*input.impl());
        double* gk = detail::grad_sink(*kernel.impl());
        double* gb = detail::grad_sink(*bias.impl());

        if (gb) {
          for (int oc = 0; oc < co; ++oc) {
            const double* gp = g + static_cast<std::size_t>(oc) * ho * wo;
            double acc = 0.0;
            for (int i = 0; i < ho * wo; ++i) acc += gp[i];
            gb[oc] += acc;
          }
        }
        if (!gin && !gk) return;
        for (int oc = 0; oc < co; ++oc) {
          const double* gp = g + static_cast<std::size_t>(oc) * ho * wo;
          for (int icn = 0; icn < ci; ++icn) {
            const double* in_plane = in + static_cast<std::size_t>(icn) * h * w;
            const double* kslab = kd + (static_cast<std::size_t>(oc) * ci + icn) * k * k;
            double* gin_plane = gin ? gin + static_cast<std::size_t>(icn) * h * w : nullptr;
            double* gk_slab = gk ? gk + (static_cast<std::size_t>(oc) * ci + icn) * k * k : nullptr;
            for (int ky = 0; ky < k; ++ky) {
              for (int kx = 0; kx < k; ++kx) {
                const double wgt = kslab[ky * k + kx];
                double kacc = 0.0;
                if (stride == 1) {
                  const int ox_lo = std::max(0, padding - kx);
                  const int ox_hi = std::min(wo, w + padding - kx);
                  if (ox_hi <= ox_lo) continue;
                  const int n = ox_hi - ox_lo;
                  for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy + ky - padding;
                    if (iy < 0 || iy >= h) continue;
                    const double* grow = gp + static_cast<std::size_t>(oy) * wo + ox_lo;
                    const std::size_t in_off = static_cast<std::size_t>(iy) * w + (ox_lo + kx - padding);
                    if (gin_plane) {
                      double* dst = gin_plane + in_off;
                      for (int i = 0; i < n; ++i) dst[i] += wgt * grow[i];
                    }
                    if (gk_slab) {
                      const double* src = in_plane + in_off;
                      for (int i = 0; i < n; ++i) kacc += grow[i] * src[i];
                    }
                  }
                } else {
                  for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * stride + ky - padding;
                    if (iy < 0 || iy >= h) continue;
                    for (int ox = 0; ox < wo; ++ox) {
                      const int ix = ox * stride + kx - padding;
                      if (ix < 0 || ix >= w) continue;
                      const double gv = gp[oy * wo + ox];
                      if (gin_plane) gin_plane[iy * w + ix] += wgt * gv;
                      if (gk_slab) kacc += gv * in_plane[iy * w + ix];
                    }
                  }
                }
                if (gk_slab) gk_slab[ky * k + kx] += kacc;
              }
            }
          }
        }
      });
}

// Per-channel normalization to zero mean / unit variance (population variance
// over H*W), then learned scale and offset.
inline Tensor adain(const Tensor& x, const Tensor& scale, const Tensor& bias, double eps) {
  detail::require(x.ndim() == 3, "adain: input must be [C,H,W]");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  detail::require(scale.ndim() == 1 && scale.dim(0) == c, "adain: scale must be [C]");
  detail::require(bias.ndim() == 1 && bias.dim(0) == c, "adain: bias must be [C]");
  if (eps <= 0.0) throw ValidationError("adain: eps must be positive");

  const int n = h * w;
  const double* xd = x.data();
  const double* sd = scale.data();
  const double* bd = bias.data();
  std::vector<double> out(static_cast<std::size_t>(c) * n);
  std::vector<double> mean(c), inv_std(c);

  for (int ch = 0; ch < c; ++ch) {
    const double* xp = xd + static_cast<std::size_t>(ch) * n;
    double mu = 0.0;
    for (int i = 0; i < n; ++i) mu += xp[i];
    mu /= n;
    double var = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = xp[i] - mu;
      var += d * d;
    }
    var /= n;
    const double inv = 1.0 / std::sqrt(var + eps);
    mean[ch] = mu;
    inv_std[ch] = inv;
    double* op = out.data() + static_cast<std::size_t>(ch) * n;
    const double s = sd[ch], b = bd[ch];
    for (int i = 0; i < n; ++i) op[i] = s * ((xp[i] - mu) * inv) + b;
  }

  return detail::make_op_output(
      {c, h, w}, std::move(out), {x, scale, bias},
      [x, scale, bias, c, n, mean, inv_std](detail::TensorImpl& o) {
        const double* g = o.grad.data();
        const double* xd = x.data();
        const double* sd = scale.data();
        double* gx = detail::grad_sink(*x.impl());
        double* gs = detail::grad_sink(*scale.impl());
        double* gb = detail::grad_sink(*bias.impl());
        for (int ch = 0; ch < c; ++ch) {
          const double* xp = xd + static_cast<std::size_t>(ch) * n;
          const double* gp = g + static_cast<std::size_t>(ch) * n;
          const double mu = mean[ch], inv = inv_std[ch], s = sd[ch];
          double sum_g = 0.0, sum_gxh = 0.0;
          for (int i = 0; i < n; ++i) {
            const double xh = (xp[i] - mu) * inv;
            sum_g += gp[i];
            sum_gxh += gp[i] * xh;
          }
          if (gb) gb[ch] += sum_g;
          if (gs) gs[ch] += sum_gxh;
          if (gx) {
            double* gxp = gx + static_cast<std::size_t>(ch) * n;
            const double mg = sum_g / n, mgx = sum_gxh / n, a = s * inv;
            for (int i = 0; i < n; ++i) {
              const double xh = (xp[i] - mu) * inv;
              gxp[i] += a * (gp[i] - mg - xh * mgx);
            }
          }
        }
      });
}

// out = weight * x + bias with weight [m,n], x [n].
inline Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  detail::require(x.ndim() == 1, "linear: input must be a vector");
  detail::require(weight.ndim() == 2, "linear: weight must be [m,n]");
  detail::require(bias.ndim() == 1, "linear: bias must be a vector");
  const int n = x.dim(0), m = weight.dim(0);
  detail::require(weight.dim(1) == n, "linear: weight columns must match input size");
  detail::require(bias.dim(0) == m, "linear: bias size mismatch");

  std::vector<double> out(m);
  const double* xd = x.data();
  const double* wd = weight.data();
  const double* bd = bias.data();
  for (int i = 0; i < m; ++i) {
    const double* row = wd + static_cast<std::size_t>(i) * n;
    double acc = bd[i];
    for (int j = 0; j < n; ++j) acc += row[j] * xd[j];
    out[i] = acc;
  }

  return detail::make_op_output(
      {m}, std::move(out), {x, weight, bias},
      [x, weight, bias, m, n](detail::TensorImpl& o) {
        const double* g = o.grad.data();
        const double* xd = x.data();
        const double* wd = weight.data();
        double* gx = detail::grad_sink(*x.impl());
        double* gw = detail::grad_sink(*weight.impl());
        double* gb = detail::grad_sink(*bias.impl());
        for (int i = 0; i < m; ++i) {
          const double gi = g[i];
          if (gb) gb[i] += gi;
          const double* row = wd + static_cast<std::size_t>(i) * n;
          if (gx)
            for (int j = 0; j < n; ++j) gx[j] += gi * row[j];
          if (gw) {
            double* grow = gw + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) grow[j] += gi * xd[j];
          }
        }
      });
}

// Elementwise max(x, alpha*x); slope alpha is used at x == 0.
inline Tensor leaky_relu(const Tensor& x, double alpha) {
  std::vector<double> out(x.data_vec());
  for (double& v : out)
    if (v < 0.0) v *= alpha;
  return detail::make_op_output(
      x.shape(), std::move(out), {x},
      [x, alpha](detail::TensorImpl& o) {
        double* gx = detail::grad_sink(*x.impl());
        if (!gx) return;
        const double* g = o.grad.data();
        const double* xd = x.data();
        const std::size_t n = o.data.size();
        for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * (xd[i] > 0.0 ? 1.0 : alpha);
      });
}

inline Tensor tanh_op(const Tensor& x) {
  std::vector<double> out(x.data_vec());
  for (double& v : out) v = std::tanh(v);
  Tensor result = detail::make_op_output(
      x.shape(), std::move(out), {x},
      [x](detail::TensorImpl& o) {
        double* gx = detail::grad_sink(*x.impl());
        if (!gx) return;
        const double* g = o.grad.data();
        const double* y = o.data.data();
        const std::size_t n = o.data.size();
        for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
      });
  return result;
}

// Nearest-neighbor 2x upsampling; the gradient of each input pixel sums its
// 2x2 output block.
inline Tensor upsample2x(const Tensor& x) {
  detail::require(x.ndim() == 3, "upsample2x: input must be [C,H,W]");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  std::vector<double> out(static_cast<std::size_t>(c) * 4 * h * w);
  const double* xd = x.data();
  for (int ch = 0; ch < c; ++ch) {
    const double* xp = xd + static_cast<std::size_t>(ch) * h * w;
    double* op = out.data() + static_cast<std::size_t>(ch) * 4 * h * w;
    const int wo = 2 * w;
    for (int y = 0; y < h; ++y) {
      for (int xi = 0; xi < w; ++xi) {
        const double v = xp[y * w + xi];
        double* d = op + (2 * y) * wo + 2 * xi;
        d[0] = v;
        d[1] = v;
        d[wo] = v;
        d[wo + 1] = v;
      }
    }
  }
  return detail::make_op_output(
      {c, 2 * h, 2 * w}, std::move(out), {x},
      [x, c, h, w](detail::TensorImpl& o) {
        double* gx = detail::grad_sink(*x.impl());
        if (!gx) return;
        const double* g = o.grad.data();
        const int wo = 2 * w;
        for (int ch = 0; ch < c; ++ch) {
          const double* gp = g + static_cast<std::size_t>(ch) * 4 * h * w;
          double* gxp = gx + static_cast<std::size_t>(ch) * h * w;
          for (int y = 0; y < h; ++y)
            for (int xi = 0; xi < w; ++xi) {
              const double* s = gp + (2 * y) * wo + 2 * xi;
              gxp[y * w + xi] += s[0] + s[1] + s[wo] + s[wo + 1];
            }
        }
      });
}

// Non-overlapping k x k block mean. Requires k to divide both H and W.
inline Tensor downsample_avg(const Tensor& x, int k) {
  detail::require(x.ndim() == 3, "downsample_avg: input must be [C,H,W]");
  if (k < 1) throw DimensionError("downsample_avg: factor must be >= 1");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h % k != 0 || w % k != 0)
    throw DimensionError("downsample_avg: factor must divide height and width");
  const int ho = h / k, wo = w / k;
  const double norm = 1.0 / (static_cast<double>(k) * k);
  std::vector<double> out(static_cast<std::size_t>(c) * ho * wo);
  const double* xd = x.data();
  for (int ch = 0; ch < c; ++ch) {
    const double* xp = xd + static_cast<std::size_t>(ch) * h * w;
    double* op = out.data() + static_cast<std::size_t>(ch) * ho * wo;
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        double acc = 0.0;
        for (int dy = 0; dy < k; ++dy) {
          const double* row = xp + static_cast<std::size_t>(oy * k + dy) * w + ox * k;
          for (int dx = 0; dx < k; ++dx) acc += row[dx];
        }
        op[oy * wo + ox] = acc * norm;
      }
  }
  return detail::make_op_output(
      {c, ho, wo}, std::move(out), {x},
      [x, c, h, w, k, ho, wo, norm](detail::TensorImpl& o) {
        double* gx = detail::grad_sink(*x.impl());
        if (!gx) return;
        const double* g = o.grad.data();
        for (int ch = 0; ch < c; ++ch) {
          const double* gp = g + static_cast<std::size_t>(ch) * ho * wo;
          double* gxp = gx + static_cast<std::size_t>(ch) * h * w;
          for (int oy = 0; oy < ho; ++oy)
            for (int ox = 0; ox < wo; ++ox) {
              const double gv = gp[oy * wo + ox] * norm;
              for (int dy = 0; dy < k; ++dy) {
                double* row = gxp + static_cast<std::size_t>(oy * k + dy) * w + ox * k;
                for (int dx = 0; dx < k; ++dx) row[dx] += gv;
              }
            }
        }
      });
}

namespace detail {

inline Tensor abs_diff_reduce(const Tensor& a, const Tensor& b, bool mean) {
  require(a.shape() == b.shape(), "l1: shape mismatch");
  const std::size_t n = static_cast<std::size_t>(a.numel());
  const double* ad = a.data();
  const double* bd = b.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::fabs(ad[i] - bd[i]);
  const double scale = mean ? 1.0 / static_cast<double>(n) : 1.0;
  return make_op_output(
      {1}, {acc * scale}, {a, b},
      [a, b, n, scale](TensorImpl& o) {
        const double g0 = o.grad[0] * scale;
        const double* ad = a.data();
        const double* bd = b.data();
        double* ga = grad_sink(*a.impl());
        double* gb = grad_sink(*b.impl());
        for (std::size_t i = 0; i < n; ++i) {
          const double d = ad[i] - bd[i];
          const double s = d > 0.0 ? g0 : (d < 0.0 ? -g0 : 0.0);
          if (ga) ga[i] += s;
          if (gb) gb[i] -= s;
        }
      });
}

}  // namespace detail

// Mean absolute difference.
inline Tensor l1_loss(const Tensor& a, const Tensor& b) {
  return detail::abs_diff_reduce(a, b, true);
}

// Sum of absolute differences (the L1 norm of a - b).
inline Tensor l1_norm(const Tensor& a, const Tensor& b) {
  return detail::abs_diff_reduce(a, b, false);
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::require(a.shape() == b.shape(), "mul: shape mismatch");
  const std::size_t n = static_cast<std::size_t>(a.numel());
  std::vector<double> out(n);
  const double* ad = a.data();
  const double* bd = b.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = ad[i] * bd[i];
  return detail::make_op_output(
      a.shape(), std::move(out), {a, b},
      [a, b, n](detail::TensorImpl& o) {
        const double* g = o.grad.data();
        const double* ad = a.data();
        const double* bd = b.data();
        double* ga = detail::grad_sink(*a.impl());
        double* gb = detail::grad_sink(*b.impl());
        for (std::size_t i = 0; i < n; ++i) {
          if (ga) ga[i] += g[i] * bd[i];
          if (gb) gb[i] += g[i] * ad[i];
        }
      });
}

inline Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.data_vec());
  for (double& v : out) v *= factor;
  return detail::make_op_output(
      x.shape(), std::move(out), {x},
      [x, factor](detail::TensorImpl& o) {
        double* gx = detail::grad_sink(*x.impl());
        if (!gx) return;
        const double* g = o.grad.data();
        const std::size_t n = o.data.size();
        for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * factor;
      });
}

// Contiguous range of the flattened tensor, returned as a vector.
inline Tensor slice(const Tensor& x, int start, int len) {
  detail::require(start >= 0 && len >= 1 && start + len <= x.numel(), "slice: range out of bounds");
  std::vector<double> out(x.data() + start, x.data() + start + len);
  return detail::make_op_output(
      {len}, std::move(out), {x},
      [x, start, len](detail::TensorImpl& o) {
        double* gx = detail::grad_sink(*x.impl());
        if (!gx) return;
        const double* g = o.grad.data();
        for (int i = 0; i < len; ++i) gx[start + i] += g[i];
      });
}

inline Tensor concat(const std::vector<Tensor>& parts) {
  detail::require(!parts.empty(), "concat: no inputs");
  std::size_t total = 0;
  for (const Tensor& p : parts) total += static_cast<std::size_t>(p.numel());
  std::vector<double> out;
  out.reserve(total);
  for (const Tensor& p : parts) out.insert(out.end(), p.data(), p.data() + p.numel());
  std::vector<std::size_t> sizes;
  for (const Tensor& p : parts) sizes.push_back(static_cast<std::size_t>(p.numel()));
  return detail::make_op_output(
      {static_cast<int>(total)}, std::move(out), parts,
      [parts, sizes](detail::TensorImpl& o) {
        const double* g = o.grad.data();
        std::size_t off = 0;
        for (std::size_t pi = 0; pi < parts.size(); ++pi) {
          double* gp = detail::grad_sink(*parts[pi].impl());
          if (gp)
            for (std::size_t i = 0; i < sizes[pi]; ++i) gp[i] += g[off + i];
          off += sizes[pi];
        }
      });
}

inline Tensor reshape(const Tensor& x, std::vector<int> shape) {
  detail::require(detail::shape_numel(shape) == x.numel(), "reshape: element count mismatch");
  std::vector<double> out(x.data_vec());
  return detail::make_op_output(
      std::move(shape), std::move(out), {x},
      [x](detail::TensorImpl& o) {
        double* gx = detail::grad_sink(*x.impl());
        if (!gx) return;
        const double* g = o.grad.data();
        const std::size_t n = o.data.size();
        for (std::size_t i = 0; i < n; ++i) gx[i] += g[i];
      });
}

inline Tensor flatten(const Tensor& x) {
  return reshape(x, {static_cast<int>(x.numel())});
}

}  // namespace styleprior
