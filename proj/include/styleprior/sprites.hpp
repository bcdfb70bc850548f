#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "styleprior/image_io.hpp"
#include "styleprior/rng.hpp"
#include "styleprior/tensor.hpp"

namespace styleprior {

enum class ShapeKind { Disk = 0, Square = 1, Triangle = 2 };

// Identity factors pick what the sprite is, pose factors pick where it is.
// `size` is the diameter of the shape's bounding circle as a fraction of the
// image side, so sprites never clip at the border for in-range positions.
struct IdentityFactors {
  ShapeKind shape = ShapeKind::Disk;
  double hue = 0.0;   // [0,1), periodic
  double size = 0.3;  // [0.2,0.4]
};

struct PoseFactors {
  double x = 0.5;        // [0.25,0.75] fraction of image
  double y = 0.5;        // [0.25,0.75]
  double rotation = 0.0;  // [0,2*pi); no-op for disks
};

struct Factors {
  IdentityFactors identity;
  PoseFactors pose;
};

struct SpriteSample {
  Tensor image;  // [3,R,R] in [-1,1]
  Factors factors;
};

constexpr double kSpriteSizeMin = 0.2;
constexpr double kSpriteSizeMax = 0.4;
constexpr double kSpritePosMin = 0.25;
constexpr double kSpritePosMax = 0.75;
constexpr double kTwoPi = 6.28318530717958647692528676655900577;

inline void validate_factors(const Factors& f) {
  const auto& id = f.identity;
  const auto& p = f.pose;
  if (id.shape != ShapeKind::Disk && id.shape != ShapeKind::Square && id.shape != ShapeKind::Triangle)
    throw ValidationError("factors: unknown shape kind");
  if (!(id.hue >= 0.0 && id.hue < 1.0)) throw ValidationError("factors: hue out of [0,1)");
  if (!(id.size >= kSpriteSizeMin && id.size <= kSpriteSizeMax))
    throw ValidationError("factors: size out of [0.2,0.4]");
  if (!(p.x >= kSpritePosMin && p.x <= kSpritePosMax) ||
      !(p.y >= kSpritePosMin && p.y <= kSpritePosMax))
    throw ValidationError("factors: position out of [0.25,0.75]");
  if (!(p.rotation >= 0.0 && p.rotation < kTwoPi))
    throw ValidationError("factors: rotation out of [0,2pi)");
}

// Fully saturated hue wheel (HSV with s = v = 1), returned in [0,1].
inline std::array<double, 3> hue_to_rgb(double hue) {
  const double h6 = hue * 6.0;
  const int sector = static_cast<int>(h6) % 6;
  const double f = h6 - std::floor(h6);
  switch (sector) {
    case 0: return {1.0, f, 0.0};
    case 1: return {1.0 - f, 1.0, 0.0};
    case 2: return {0.0, 1.0, f};
    case 3: return {0.0, 1.0 - f, 1.0};
    case 4: return {f, 0.0, 1.0};
    default: return {1.0, 0.0, 1.0 - f};
  }
}

namespace detail {

// Point-in-shape test in the shape's local frame (origin at center, already
// rotated). `radius` is the bounding-circle radius in pixels.
inline bool inside_shape(ShapeKind kind, double lx, double ly, double radius) {
  switch (kind) {
    case ShapeKind::Disk:
      return lx * lx + ly * ly <= radius * radius;
    case ShapeKind::Square: {
      const double half = radius / 1.41421356237309514547462185873883;
      return std::fabs(lx) <= half && std::fabs(ly) <= half;
    }
    case ShapeKind::Triangle: {
      // equilateral, vertex pointing up (negative y is up in image space)
      const double v0x = 0.0, v0y = -radius;
      const double v1x = radius * 0.86602540378443859658830206171842, v1y = radius * 0.5;
      const double v2x = -v1x, v2y = v1y;
      auto edge = [&](double ax, double ay, double bx, double by) {
        return (bx - ax) * (ly - ay) - (by - ay) * (lx - ax);
      };
      const double e0 = edge(v0x, v0y, v1x, v1y);
      const double e1 = edge(v1x, v1y, v2x, v2y);
      const double e2 = edge(v2x, v2y, v0x, v0y);
      return e0 >= 0.0 && e1 >= 0.0 && e2 >= 0.0;
    }
  }
  return false;
}

}  // namespace detail

// Anti-aliased render: 4x4 subsamples per pixel, colored shape over a
// neutral mid-gray background.
inline Tensor render(const Factors& f, int resolution) {
  validate_factors(f);
  if (resolution < 8) throw ValidationError("render: resolution must be >= 8");
  const int r = resolution;
  const double cx = f.pose.x * r;
  const double cy = f.pose.y * r;
  const double radius = f.identity.size * r * 0.5;
  const double cosr = std::cos(f.pose.rotation);
  const double sinr = std::sin(f.pose.rotation);
  const std::array<double, 3> rgb01 = hue_to_rgb(f.identity.hue);
  const double fg[3] = {rgb01[0] * 2.0 - 1.0, rgb01[1] * 2.0 - 1.0, rgb01[2] * 2.0 - 1.0};

  std::vector<double> data(static_cast<std::size_t>(3) * r * r, 0.0);  // gray background

  const int x_lo = std::max(0, static_cast<int>(std::floor(cx - radius - 1.0)));
  const int x_hi = std::min(r - 1, static_cast<int>(std::ceil(cx + radius + 1.0)));
  const int y_lo = std::max(0, static_cast<int>(std::floor(cy - radius - 1.0)));
  const int y_hi = std::min(r - 1, static_cast<int>(std::ceil(cy + radius + 1.0)));

  for (int py = y_lo; py <= y_hi; ++py) {
    for (int px = x_lo; px <= x_hi; ++px) {
      int hits = 0;
      for (int sy = 0; sy < 4; ++sy)
        for (int sx = 0; sx < 4; ++sx) {
          const double sxp = px + (sx + 0.5) / 4.0 - cx;
          const double syp = py + (sy + 0.5) / 4.0 - cy;
          // rotate the sample into the shape frame (inverse rotation)
          const double lx = cosr * sxp + sinr * syp;
          const double ly = -sinr * sxp + cosr * syp;
          if (detail::inside_shape(f.identity.shape, lx, ly, radius)) ++hits;
        }
      if (hits == 0) continue;
      const double cov = hits / 16.0;
      for (int c = 0; c < 3; ++c)
        data[(static_cast<std::size_t>(c) * r + py) * r + px] = cov * fg[c];
    }
  }
  return Tensor({3, r, r}, std::move(data));
}

// Draw order is fixed: shape, hue, size, x, y, rotation.
inline Factors sample_factors(Rng& rng) {
  Factors f;
  f.identity.shape = static_cast<ShapeKind>(rng.uniform_int(3));
  f.identity.hue = rng.uniform01();
  f.identity.size = rng.uniform(kSpriteSizeMin, kSpriteSizeMax);
  f.pose.x = rng.uniform(kSpritePosMin, kSpritePosMax);
  f.pose.y = rng.uniform(kSpritePosMin, kSpritePosMax);
  f.pose.rotation = rng.uniform(0.0, kTwoPi);
  return f;
}

inline std::vector<SpriteSample> make_dataset(int n, std::uint64_t seed, int resolution = 32) {
  if (n <= 0) throw ValidationError("make_dataset: n must be positive");
  Rng rng(seed);
  std::vector<SpriteSample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Factors f = sample_factors(rng);
    out.push_back({render(f, resolution), f});
  }
  return out;
}

// Fixed identity, pose given per frame index.
inline std::vector<SpriteSample> make_trajectory(const IdentityFactors& identity,
                                                 const std::function<PoseFactors(int)>& pose_path,
                                                 int frames, int resolution = 32) {
  if (frames <= 1) throw ValidationError("make_trajectory: need at least 2 frames");
  std::vector<SpriteSample> out;
  out.reserve(static_cast<std::size_t>(frames));
  for (int i = 0; i < frames; ++i) {
    Factors f{identity, pose_path(i)};
    out.push_back({render(f, resolution), f});
  }
  return out;
}

namespace detail {

// Rendered factor grid for brute-force nearest-neighbor estimation.
// Eight values per continuous factor dimension; hue and rotation are
// periodic so their pitch is range/8, the rest use inclusive endpoints.
struct FactorGrid {
  int resolution;
  std::vector<Factors> entries;
  std::vector<std::uint8_t> images;  // entries.size() * 3*R*R, quantized like PNG output

  explicit FactorGrid(int res) : resolution(res) {
    const int n_per = 8;
    std::vector<double> hues(n_per), sizes(n_per), xs(n_per), ys(n_per), rots(n_per);
    for (int i = 0; i < n_per; ++i) {
      hues[i] = static_cast<double>(i) / n_per;
      sizes[i] = kSpriteSizeMin + (kSpriteSizeMax - kSpriteSizeMin) * i / (n_per - 1);
      xs[i] = kSpritePosMin + (kSpritePosMax - kSpritePosMin) * i / (n_per - 1);
      ys[i] = xs[i];
      rots[i] = kTwoPi * i / n_per;
    }
    const std::size_t count = static_cast<std::size_t>(3) * n_per * n_per * n_per * n_per * n_per;
    entries.reserve(count);
    const std::size_t stride = static_cast<std::size_t>(3) * res * res;
    images.resize(count * stride);
    std::size_t idx = 0;
    for (int sh = 0; sh < 3; ++sh)
      for (double hue : hues)
        for (double size : sizes)
          for (double x : xs)
            for (double y : ys)
              for (double rot : rots) {
                Factors f;
                f.identity = {static_cast<ShapeKind>(sh), hue, size};
                f.pose = {x, y, rot};
                entries.push_back(f);
                Tensor img = render(f, res);
                std::uint8_t* dst = images.data() + idx * stride;
                const double* src = img.data();
                for (std::size_t i = 0; i < stride; ++i) dst[i] = pixel_to_u8(src[i]);
                ++idx;
              }
  }
};

inline const FactorGrid& factor_grid(int resolution) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<FactorGrid>> grids;
  std::lock_guard<std::mutex> lock(mu);
  auto it = grids.find(resolution);
  if (it == grids.end())
    it = grids.emplace(resolution, std::make_unique<FactorGrid>(resolution)).first;
  return *it->second;
}

}  // namespace detail

// Brute-force oracle: nearest grid render under pixel L1 distance, computed
// on 8-bit quantized images. Ties resolve to the first grid index, which
// also pins the (degenerate) rotation of disks to zero.
inline Factors estimate_factors(const Tensor& image) {
  if (image.ndim() != 3 || image.dim(0) != 3 || image.dim(1) != image.dim(2))
    throw DimensionError("estimate_factors: image must be [3,R,R]");
  const int res = image.dim(1);
  const detail::FactorGrid& grid = detail::factor_grid(res);
  const std::size_t stride = static_cast<std::size_t>(3) * res * res;
  std::vector<std::uint8_t> q(stride);
  for (std::size_t i = 0; i < stride; ++i) q[i] = pixel_to_u8(image.data()[i]);

  std::size_t best = 0;
  std::uint64_t best_d = ~0ULL;
  for (std::size_t e = 0; e < grid.entries.size(); ++e) {
    const std::uint8_t* g = grid.images.data() + e * stride;
    std::uint64_t d = 0;
    for (std::size_t i = 0; i < stride; ++i)
      d += static_cast<std::uint64_t>(g[i] > q[i] ? g[i] - q[i] : q[i] - g[i]);
    if (d < best_d) {
      best_d = d;
      best = e;
    }
  }
  return grid.entries[best];
}

// Snap identity factors to the oracle grid (hue by circular distance).
inline IdentityFactors nearest_grid_identity(const IdentityFactors& id) {
  const int n_per = 8;
  IdentityFactors out = id;
  double best = 1e9;
  for (int i = 0; i < n_per; ++i) {
    const double g = static_cast<double>(i) / n_per;
    double d = std::fabs(id.hue - g);
    d = std::min(d, 1.0 - d);
    if (d < best) {
      best = d;
      out.hue = g;
    }
  }
  best = 1e9;
  for (int i = 0; i < n_per; ++i) {
    const double g = kSpriteSizeMin + (kSpriteSizeMax - kSpriteSizeMin) * i / (n_per - 1);
    const double d = std::fabs(id.size - g);
    if (d < best) {
      best = d;
      out.size = g;
    }
  }
  return out;
}

inline bool same_grid_identity(const IdentityFactors& a, const IdentityFactors& b) {
  return a.shape == b.shape && a.hue == b.hue && a.size == b.size;
}

// --- dataset directory format: PNG files plus manifest.txt, one line per
// sample: filename shape hue size x y rotation (6 decimal places) ---

inline std::string sprite_filename(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sprite_%06d.png", index);
  return buf;
}

inline void save_dataset(const std::string& dir, const std::vector<SpriteSample>& samples) {
  std::string manifest;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::string name = sprite_filename(static_cast<int>(i));
    write_png_rgb(dir + "/" + name, samples[i].image);
    const Factors& f = samples[i].factors;
    manifest += name;
    manifest += " " + std::to_string(static_cast<int>(f.identity.shape));
    manifest += " " + format_fixed(f.identity.hue);
    manifest += " " + format_fixed(f.identity.size);
    manifest += " " + format_fixed(f.pose.x);
    manifest += " " + format_fixed(f.pose.y);
    manifest += " " + format_fixed(f.pose.rotation);
    manifest += "\n";
  }
  write_file_atomic(dir + "/manifest.txt", manifest);
}

// Images come back as stored on disk (8-bit quantized), factors from the
// manifest.
inline std::vector<SpriteSample> load_dataset(const std::string& dir) {
  const std::string manifest = read_file(dir + "/manifest.txt");
  std::vector<SpriteSample> out;
  std::size_t pos = 0;
  while (pos < manifest.size()) {
    std::size_t eol = manifest.find('\n', pos);
    if (eol == std::string::npos) eol = manifest.size();
    const std::string line = manifest.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    char name[256];
    int shape;
    Factors f;
    if (std::sscanf(line.c_str(), "%255s %d %lf %lf %lf %lf %lf", name, &shape, &f.identity.hue,
                    &f.identity.size, &f.pose.x, &f.pose.y, &f.pose.rotation) != 7)
      throw IoError("dataset manifest: malformed line: " + line);
    f.identity.shape = static_cast<ShapeKind>(shape);
    out.push_back({read_png_rgb(dir + "/" + name), f});
  }
  return out;
}

}  // namespace styleprior
