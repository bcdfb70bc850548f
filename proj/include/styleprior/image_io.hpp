#pragma once

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "styleprior/tensor.hpp"

namespace styleprior {

// Pixel values map linearly between [-1,1] and 8-bit, round half to even.
inline std::uint8_t pixel_to_u8(double v) {
  double scaled = (v + 1.0) * 0.5 * 255.0;
  if (scaled <= 0.0) return 0;
  if (scaled >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::nearbyint(scaled));
}

inline double u8_to_pixel(std::uint8_t b) {
  return static_cast<double>(b) / 255.0 * 2.0 - 1.0;
}

inline std::string read_file(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open " + path);
  std::string out;
  char buf[65536];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, n);
  const bool bad = std::ferror(f) != 0;
  std::fclose(f);
  if (bad) throw IoError("read failed for " + path);
  return out;
}

// All artifacts go through a .tmp file and a rename, so a crash never
// leaves a partial file under the final name.
inline void write_file_atomic(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  std::FILE* f = std::fopen(tmp.c_str(), "wb");
  if (!f) throw IoError("cannot create " + tmp);
  const std::size_t n = std::fwrite(bytes.data(), 1, bytes.size(), f);
  const bool bad = n != bytes.size() || std::fclose(f) != 0;
  if (bad) {
    std::remove(tmp.c_str());
    throw IoError("write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw IoError("rename failed for " + path);
  }
}

namespace detail {

inline void append_be32(std::string& s, std::uint32_t v) {
  s.push_back(static_cast<char>((v >> 24) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>(v & 0xff));
}

inline std::uint32_t read_be32(const unsigned char* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

inline void append_chunk(std::string& out, const char type[4], const std::string& payload) {
  append_be32(out, static_cast<std::uint32_t>(payload.size()));
  const std::size_t crc_start = out.size();
  out.append(type, 4);
  out.append(payload);
  const uLong crc = ::crc32(::crc32(0L, Z_NULL, 0),
                            reinterpret_cast<const Bytef*>(out.data() + crc_start),
                            static_cast<uInt>(out.size() - crc_start));
  append_be32(out, static_cast<std::uint32_t>(crc));
}

inline std::string zlib_deflate(const std::string& raw) {
  uLongf bound = ::compressBound(static_cast<uLong>(raw.size()));
  std::string out(bound, '\0');
  if (::compress2(reinterpret_cast<Bytef*>(out.data()), &bound,
                  reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                  6) != Z_OK)
    throw IoError("png: deflate failed");
  out.resize(bound);
  return out;
}

inline std::string zlib_inflate(const std::string& compressed, std::size_t expected) {
  std::string out(expected, '\0');
  uLongf got = static_cast<uLongf>(expected);
  const int rc = ::uncompress(reinterpret_cast<Bytef*>(out.data()), &got,
                              reinterpret_cast<const Bytef*>(compressed.data()),
                              static_cast<uLong>(compressed.size()));
  if (rc != Z_OK || got != expected) throw IoError("png: inflate failed or size mismatch");
  return out;
}

inline int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

// In-place reconstruction of filtered scanlines; bpp in bytes (>= 1).
inline void unfilter_scanlines(std::vector<std::uint8_t>& raw, int height, int stride, int bpp) {
  std::vector<std::uint8_t> prev(static_cast<std::size_t>(stride), 0);
  for (int y = 0; y < height; ++y) {
    std::uint8_t* row = raw.data() + static_cast<std::size_t>(y) * (stride + 1);
    const int filter = row[0];
    std::uint8_t* cur = row + 1;
    for (int i = 0; i < stride; ++i) {
      const int a = i >= bpp ? cur[i - bpp] : 0;
      const int b = prev[static_cast<std::size_t>(i)];
      const int c = i >= bpp ? prev[static_cast<std::size_t>(i - bpp)] : 0;
      int v = cur[i];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default: throw IoError("png: unknown filter type");
      }
      cur[i] = static_cast<std::uint8_t>(v & 0xff);
    }
    std::memcpy(prev.data(), cur, static_cast<std::size_t>(stride));
  }
}

struct PngImage {
  int width = 0, height = 0, bit_depth = 0, color_type = 0;
  std::vector<std::uint8_t> pixels;  // unfiltered scanline payload, stride bytes per row
  int stride = 0;
};

inline PngImage decode_png(const std::string& bytes) {
  static const unsigned char sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
  if (bytes.size() < 8 || std::memcmp(bytes.data(), sig, 8) != 0)
    throw IoError("png: bad signature");
  PngImage img;
  std::string idat;
  std::size_t pos = 8;
  bool saw_ihdr = false, saw_iend = false;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
    const std::uint32_t len = read_be32(p);
    if (pos + 12 + len > bytes.size()) throw IoError("png: truncated chunk");
    const std::string type = bytes.substr(pos + 4, 4);
    const char* payload = bytes.data() + pos + 8;
    if (type == "IHDR") {
      if (len != 13) throw IoError("png: bad IHDR");
      const unsigned char* h = reinterpret_cast<const unsigned char*>(payload);
      img.width = static_cast<int>(read_be32(h));
      img.height = static_cast<int>(read_be32(h + 4));
      img.bit_depth = h[8];
      img.color_type = h[9];
      if (h[10] != 0 || h[11] != 0) throw IoError("png: unsupported compression/filter method");
      if (h[12] != 0) throw IoError("png: interlaced images are not supported");
      saw_ihdr = true;
    } else if (type == "IDAT") {
      idat.append(payload, len);
    } else if (type == "IEND") {
      saw_iend = true;
      break;
    }
    pos += 12 + len;
  }
  if (!saw_ihdr || !saw_iend) throw IoError("png: missing IHDR or IEND");
  if (img.width <= 0 || img.height <= 0) throw IoError("png: bad dimensions");

  int channels;
  switch (img.color_type) {
    case 0: channels = 1; break;
    case 2: channels = 3; break;
    default: throw IoError("png: only grayscale and RGB color types are supported");
  }
  if (img.bit_depth != 8 && !(img.bit_depth == 1 && img.color_type == 0))
    throw IoError("png: only 8-bit (and 1-bit grayscale) depths are supported");

  const int bits_per_px = channels * img.bit_depth;
  img.stride = (img.width * bits_per_px + 7) / 8;
  const std::size_t expected = static_cast<std::size_t>(img.height) * (img.stride + 1);
  std::string raw = zlib_inflate(idat, expected);
  std::vector<std::uint8_t> data(raw.begin(), raw.end());
  const int bpp = std::max(1, bits_per_px / 8);
  unfilter_scanlines(data, img.height, img.stride, bpp);
  img.pixels.resize(static_cast<std::size_t>(img.height) * img.stride);
  for (int y = 0; y < img.height; ++y)
    std::memcpy(img.pixels.data() + static_cast<std::size_t>(y) * img.stride,
                data.data() + static_cast<std::size_t>(y) * (img.stride + 1) + 1,
                static_cast<std::size_t>(img.stride));
  return img;
}

inline std::string encode_png(int width, int height, int bit_depth, int color_type,
                              const std::vector<std::uint8_t>& rows, int stride) {
  std::string out;
  static const unsigned char sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
  out.append(reinterpret_cast<const char*>(sig), 8);
  std::string ihdr;
  append_be32(ihdr, static_cast<std::uint32_t>(width));
  append_be32(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(static_cast<char>(bit_depth));
  ihdr.push_back(static_cast<char>(color_type));
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  append_chunk(out, "IHDR", ihdr);

  std::string raw;
  raw.reserve(static_cast<std::size_t>(height) * (stride + 1));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);  // no per-row filtering
    raw.append(reinterpret_cast<const char*>(rows.data() + static_cast<std::size_t>(y) * stride),
               static_cast<std::size_t>(stride));
  }
  append_chunk(out, "IDAT", zlib_deflate(raw));
  append_chunk(out, "IEND", "");
  return out;
}

}  // namespace detail

inline void write_png_rgb(const std::string& path, const Tensor& image) {
  if (image.ndim() != 3 || image.dim(0) != 3)
    throw DimensionError("write_png_rgb: image must be [3,H,W]");
  const int h = image.dim(1), w = image.dim(2);
  std::vector<std::uint8_t> rows(static_cast<std::size_t>(h) * w * 3);
  const double* d = image.data();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        rows[(static_cast<std::size_t>(y) * w + x) * 3 + c] =
            pixel_to_u8(d[(static_cast<std::size_t>(c) * h + y) * w + x]);
  write_file_atomic(path, detail::encode_png(w, h, 8, 2, rows, w * 3));
}

inline Tensor read_png_rgb(const std::string& path) {
  detail::PngImage img = detail::decode_png(read_file(path));
  std::vector<double> data(static_cast<std::size_t>(3) * img.height * img.width);
  if (img.color_type == 2 && img.bit_depth == 8) {
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        for (int c = 0; c < 3; ++c)
          data[(static_cast<std::size_t>(c) * img.height + y) * img.width + x] =
              u8_to_pixel(img.pixels[static_cast<std::size_t>(y) * img.stride + x * 3 + c]);
  } else if (img.color_type == 0 && img.bit_depth == 8) {
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        const double v = u8_to_pixel(img.pixels[static_cast<std::size_t>(y) * img.stride + x]);
        for (int c = 0; c < 3; ++c)
          data[(static_cast<std::size_t>(c) * img.height + y) * img.width + x] = v;
      }
  } else {
    throw IoError("read_png_rgb: unsupported pixel format in " + path);
  }
  return Tensor({3, img.height, img.width}, std::move(data));
}

// Binary masks persist as 1-bit grayscale PNG; 1 = observed pixel.
inline void write_png_mask(const std::string& path, const Tensor& mask) {
  if (mask.ndim() != 3 || mask.dim(0) != 1)
    throw DimensionError("write_png_mask: mask must be [1,H,W]");
  const int h = mask.dim(1), w = mask.dim(2);
  const int stride = (w + 7) / 8;
  std::vector<std::uint8_t> rows(static_cast<std::size_t>(h) * stride, 0);
  const double* d = mask.data();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double v = d[static_cast<std::size_t>(y) * w + x];
      if (v != 0.0 && v != 1.0) throw ValidationError("write_png_mask: mask values must be 0 or 1");
      if (v == 1.0)
        rows[static_cast<std::size_t>(y) * stride + x / 8] |=
            static_cast<std::uint8_t>(0x80 >> (x % 8));
    }
  write_file_atomic(path, detail::encode_png(w, h, 1, 0, rows, stride));
}

inline Tensor read_png_mask(const std::string& path) {
  detail::PngImage img = detail::decode_png(read_file(path));
  if (img.color_type != 0) throw IoError("read_png_mask: mask must be grayscale: " + path);
  std::vector<double> data(static_cast<std::size_t>(img.height) * img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      std::uint8_t v;
      if (img.bit_depth == 1)
        v = (img.pixels[static_cast<std::size_t>(y) * img.stride + x / 8] >> (7 - x % 8)) & 1;
      else
        v = img.pixels[static_cast<std::size_t>(y) * img.stride + x] >= 128 ? 1 : 0;
      data[static_cast<std::size_t>(y) * img.width + x] = v;
    }
  return Tensor({1, img.height, img.width}, std::move(data));
}

// Shortest decimal form that round-trips a double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_fixed(double v, int places = 6) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", places, v);
  return buf;
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out.push_back(',');
    out += header[i];
  }
  out.push_back('\n');
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out.push_back(',');
      out += row[i];
    }
    out.push_back('\n');
  }
  write_file_atomic(path, out);
}

}  // namespace styleprior
