#pragma once

#include <png.h>

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "depthstill/geometry.hpp"
#include "depthstill/imageproc.hpp"
#include "depthstill/warp.hpp"

namespace depthstill {

namespace detail {

inline void append_u32le(std::vector<uint8_t>& buf, uint32_t v) {
  buf.push_back(static_cast<uint8_t>(v));
  buf.push_back(static_cast<uint8_t>(v >> 8));
  buf.push_back(static_cast<uint8_t>(v >> 16));
  buf.push_back(static_cast<uint8_t>(v >> 24));
}

inline uint32_t get_u32le(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

inline uint32_t get_u32be(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) << 24 | static_cast<uint32_t>(p[1]) << 16 |
         static_cast<uint32_t>(p[2]) << 8 | static_cast<uint32_t>(p[3]);
}

inline void append_f32le(std::vector<uint8_t>& buf, float f) {
  append_u32le(buf, std::bit_cast<uint32_t>(f));
}

inline float get_f32le(const uint8_t* p) { return std::bit_cast<float>(get_u32le(p)); }
inline float get_f32be(const uint8_t* p) { return std::bit_cast<float>(get_u32be(p)); }

inline std::vector<uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open file");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (!in.good() && !in.eof()) throw std::runtime_error(path + ": read error");
  return bytes;
}

inline void write_file_bytes(const std::string& path, const void* data, size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open file for writing");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw std::runtime_error(path + ": write error");
}

/// Decoded PNG before interpretation: 8- or 16-bit samples, alpha stripped,
/// palettes expanded. 16-bit samples are kept big-endian as stored.
struct RawPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<uint8_t> bytes;

  uint16_t sample16(size_t index) const {
    return static_cast<uint16_t>(bytes[2 * index] << 8 | bytes[2 * index + 1]);
  }
};

inline RawPng read_raw_png(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw std::runtime_error(path + ": cannot open file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw std::runtime_error(path + ": cannot initialize PNG reader");
  }
  RawPng out;
  std::vector<png_bytep> rows;
  // libpng reports errors by longjmp back to this point; clean up and
  // rethrow as an exception.
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw std::runtime_error(path + ": failed to decode PNG");
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const size_t rowbytes = png_get_rowbytes(png, info);
  out.bytes.resize(rowbytes * static_cast<size_t>(out.height));
  rows.resize(static_cast<size_t>(out.height));
  for (int y = 0; y < out.height; ++y) rows[static_cast<size_t>(y)] = out.bytes.data() + rowbytes * static_cast<size_t>(y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return out;
}

inline void write_raw_png(const std::string& path, int width, int height, int channels,
                          int bit_depth, const std::vector<uint8_t>& bytes) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error(path + ": cannot open file for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error(path + ": cannot initialize PNG writer");
  }
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error(path + ": failed to encode PNG");
  }
  png_init_io(png, fp);
  // Fixed settings so identical pixels always produce identical files.
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const size_t rowbytes = static_cast<size_t>(width) * static_cast<size_t>(channels) * (bit_depth / 8);
  rows.resize(static_cast<size_t>(height));
  for (int y = 0; y < height; ++y)
    rows[static_cast<size_t>(y)] = const_cast<png_bytep>(bytes.data()) + rowbytes * static_cast<size_t>(y);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace detail

/// Read an 8-bit grayscale or RGB PNG. Palettes are expanded and alpha is
/// stripped; 16-bit images are rejected.
inline Image read_image(const std::string& path) {
  detail::RawPng raw = detail::read_raw_png(path);
  if (raw.bit_depth != 8)
    throw std::runtime_error(path + ": unsupported " + std::to_string(raw.bit_depth) +
                             "-bit image (expected 8-bit)");
  if (raw.channels != 1 && raw.channels != 3)
    throw std::runtime_error(path + ": unsupported channel count " +
                             std::to_string(raw.channels));
  return Image{raw.width, raw.height, raw.channels, std::move(raw.bytes)};
}

inline void write_image(const std::string& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3)
    throw std::invalid_argument("write_image: image must have 1 or 3 channels");
  if (image.values.size() != image.pixel_count() * static_cast<size_t>(image.channels))
    throw std::invalid_argument("write_image: buffer size does not match dimensions");
  detail::write_raw_png(path, image.width, image.height, image.channels, 8, image.values);
}

/// Masks are stored as 8-bit grayscale PNG with values 0 and 255 only;
/// anything else in the file is treated as corruption.
inline BinaryMask read_mask(const std::string& path) {
  detail::RawPng raw = detail::read_raw_png(path);
  if (raw.bit_depth != 8 || raw.channels != 1)
    throw std::runtime_error(path + ": mask must be an 8-bit single-channel PNG");
  BinaryMask mask{raw.width, raw.height, std::move(raw.bytes)};
  for (size_t i = 0; i < mask.values.size(); ++i) {
    if (mask.values[i] == 0) continue;
    if (mask.values[i] == 255) {
      mask.values[i] = 1;
      continue;
    }
    throw std::runtime_error(path + ": mask contains value " +
                             std::to_string(mask.values[i]) + " (expected 0 or 255)");
  }
  return mask;
}

inline void write_mask(const std::string& path, const BinaryMask& mask) {
  std::vector<uint8_t> bytes(mask.values.size());
  for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = mask.values[i] ? 255 : 0;
  detail::write_raw_png(path, mask.width, mask.height, 1, 8, bytes);
}

/// Read a segmentation label PNG (8- or 16-bit, single channel). Nonzero
/// file values become instance labels compacted to 1..N in order of first
/// appearance in row-major scan; zero stays background.
inline InstanceSet read_instances(const std::string& path) {
  detail::RawPng raw = detail::read_raw_png(path);
  if (raw.channels != 1)
    throw std::runtime_error(path + ": instance map must be a single-channel PNG");
  const size_t n = static_cast<size_t>(raw.width) * static_cast<size_t>(raw.height);
  InstanceSet out{raw.width, raw.height, std::vector<int32_t>(n, 0), 0};
  std::unordered_map<uint32_t, int32_t> compact;
  for (size_t i = 0; i < n; ++i) {
    const uint32_t v = raw.bit_depth == 16 ? raw.sample16(i) : raw.bytes[i];
    if (v == 0) continue;
    auto [it, inserted] = compact.try_emplace(v, out.count + 1);
    if (inserted) ++out.count;
    out.labels[i] = it->second;
  }
  return out;
}

enum class DepthEncoding { Pfm, Png16 };

/// Grayscale PFM. A negative scale flag means little-endian samples with
/// bottom-up rows; a positive flag means big-endian with top-down rows. The
/// returned map is always top-left origin regardless of what the file used.
/// The flag's magnitude is not applied to the values.
inline DepthMap read_pfm(const std::string& path) {
  const std::vector<uint8_t> bytes = detail::read_file_bytes(path);
  size_t pos = 0;
  auto token = [&]() -> std::string {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    const size_t begin = pos;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) ++pos;
    if (begin == pos) throw std::runtime_error(path + ": truncated PFM header");
    return std::string(bytes.begin() + static_cast<std::ptrdiff_t>(begin),
                       bytes.begin() + static_cast<std::ptrdiff_t>(pos));
  };
  const std::string magic = token();
  if (magic == "PF") throw std::runtime_error(path + ": color PFM is not supported");
  if (magic != "Pf") throw std::runtime_error(path + ": not a grayscale PFM file");
  int w = 0, h = 0;
  double scale = 0.0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    scale = std::stod(token());
  } catch (const std::exception&) {
    throw std::runtime_error(path + ": malformed PFM header");
  }
  if (w < 1 || h < 1) throw std::runtime_error(path + ": invalid PFM dimensions");
  if (scale == 0.0) throw std::runtime_error(path + ": invalid PFM scale flag");
  ++pos;  // single whitespace byte separates the header from the samples
  const size_t need = static_cast<size_t>(w) * static_cast<size_t>(h) * 4;
  if (pos > bytes.size() || bytes.size() - pos != need)
    throw std::runtime_error(path + ": PFM payload size mismatch");

  const bool little = scale < 0.0;
  const bool bottom_up = scale < 0.0;
  DepthMap out = DepthMap::constant(w, h, 0.0);
  for (int row = 0; row < h; ++row) {
    const int y = bottom_up ? h - 1 - row : row;
    const uint8_t* src = bytes.data() + pos + static_cast<size_t>(row) * w * 4;
    for (int x = 0; x < w; ++x)
      out.at(x, y) = little ? detail::get_f32le(src + 4 * x) : detail::get_f32be(src + 4 * x);
  }
  return out;
}

inline void write_pfm(const std::string& path, const DepthMap& depth, bool bottom_up = true) {
  std::vector<uint8_t> buf;
  const std::string header = "Pf\n" + std::to_string(depth.width) + " " +
                             std::to_string(depth.height) + "\n" +
                             (bottom_up ? "-1.0" : "1.0") + "\n";
  buf.insert(buf.end(), header.begin(), header.end());
  for (int row = 0; row < depth.height; ++row) {
    const int y = bottom_up ? depth.height - 1 - row : row;
    for (int x = 0; x < depth.width; ++x) {
      const float f = static_cast<float>(depth.at(x, y));
      if (bottom_up) {
        detail::append_f32le(buf, f);
      } else {
        const uint32_t u = std::bit_cast<uint32_t>(f);
        buf.push_back(static_cast<uint8_t>(u >> 24));
        buf.push_back(static_cast<uint8_t>(u >> 16));
        buf.push_back(static_cast<uint8_t>(u >> 8));
        buf.push_back(static_cast<uint8_t>(u));
      }
    }
  }
  detail::write_file_bytes(path, buf.data(), buf.size());
}

/// Read a depth map and validate it: every value must be finite and > 0.
/// Png16 files store value * scale as 16-bit integers.
inline DepthMap read_depth(const std::string& path, DepthEncoding encoding,
                           double png16_scale = 256.0) {
  DepthMap out;
  if (encoding == DepthEncoding::Pfm) {
    out = read_pfm(path);
  } else {
    detail::RawPng raw = detail::read_raw_png(path);
    if (raw.bit_depth != 16 || raw.channels != 1)
      throw std::runtime_error(path + ": expected a 16-bit single-channel depth PNG");
    if (!(png16_scale > 0.0))
      throw std::invalid_argument("read_depth: png16_scale must be > 0");
    out = DepthMap::constant(raw.width, raw.height, 0.0);
    for (size_t i = 0; i < out.values.size(); ++i)
      out.values[i] = raw.sample16(i) / png16_scale;
  }
  size_t bad = 0;
  for (double v : out.values)
    if (!std::isfinite(v) || v <= 0.0) ++bad;
  if (bad > 0)
    throw std::runtime_error(path + ": " + std::to_string(bad) +
                             " non-positive or non-finite depth values");
  return out;
}

inline constexpr float kFloMagic = 202021.25f;
inline constexpr float kFloInvalidSentinel = 1e9f;
inline constexpr float kFloInvalidThreshold = 1e8f;

/// Middlebury .flo: magic float, int32 width and height, then interleaved
/// float32 (u, v) row-major, everything little-endian. Invalid pixels are
/// written as the 1e9 sentinel in both components.
inline void write_flo(const std::string& path, const FlowField& flow) {
  std::vector<uint8_t> buf;
  buf.reserve(12 + flow.size() * 8);
  detail::append_f32le(buf, kFloMagic);
  detail::append_u32le(buf, static_cast<uint32_t>(flow.width));
  detail::append_u32le(buf, static_cast<uint32_t>(flow.height));
  for (size_t i = 0; i < flow.size(); ++i) {
    if (flow.valid[i]) {
      detail::append_f32le(buf, static_cast<float>(flow.u[i]));
      detail::append_f32le(buf, static_cast<float>(flow.v[i]));
    } else {
      detail::append_f32le(buf, kFloInvalidSentinel);
      detail::append_f32le(buf, kFloInvalidSentinel);
    }
  }
  detail::write_file_bytes(path, buf.data(), buf.size());
}

inline FlowField read_flo(const std::string& path) {
  const std::vector<uint8_t> bytes = detail::read_file_bytes(path);
  if (bytes.size() < 12) throw std::runtime_error(path + ": truncated .flo file");
  if (detail::get_f32le(bytes.data()) != kFloMagic)
    throw std::runtime_error(path + ": bad .flo magic number");
  const int32_t w = static_cast<int32_t>(detail::get_u32le(bytes.data() + 4));
  const int32_t h = static_cast<int32_t>(detail::get_u32le(bytes.data() + 8));
  if (w < 1 || h < 1 || w > (1 << 20) || h > (1 << 20))
    throw std::runtime_error(path + ": implausible .flo dimensions");
  const size_t n = static_cast<size_t>(w) * static_cast<size_t>(h);
  if (bytes.size() != 12 + n * 8)
    throw std::runtime_error(path + ": .flo payload size mismatch");
  FlowField flow = FlowField::zeros(w, h);
  for (size_t i = 0; i < n; ++i) {
    const float u = detail::get_f32le(bytes.data() + 12 + i * 8);
    const float v = detail::get_f32le(bytes.data() + 16 + i * 8);
    if (std::isfinite(u) && std::isfinite(v) && std::abs(u) <= kFloInvalidThreshold &&
        std::abs(v) <= kFloInvalidThreshold) {
      flow.u[i] = u;
      flow.v[i] = v;
      flow.valid[i] = 1;
    }
  }
  return flow;
}

namespace detail {

inline uint16_t kitti_encode(double value, size_t pixel, const std::string& path) {
  // Quantized to 1/64 pixel around the 32768 origin; ties round away from
  // zero so the mapping is symmetric for positive and negative flow.
  if (!(std::abs(value) < 512.0))
    throw std::runtime_error(path + ": flow value " + std::to_string(value) + " at pixel " +
                             std::to_string(pixel) + " outside the representable range (|v| < 512)");
  const long q = 32768L + std::lround(64.0 * value);
  if (q < 0 || q > 65535)
    throw std::runtime_error(path + ": flow value " + std::to_string(value) + " at pixel " +
                             std::to_string(pixel) + " does not fit 16 bits after quantization");
  return static_cast<uint16_t>(q);
}

}  // namespace detail

/// KITTI flow PNG: 16-bit RGB where R and G store u and v as
/// round(value * 64 + 32768) and B holds the validity flag. Invalid pixels
/// are written as all-zero samples.
inline void write_kitti_flow(const std::string& path, const FlowField& flow) {
  std::vector<uint8_t> bytes(flow.size() * 6, 0);
  for (size_t i = 0; i < flow.size(); ++i) {
    uint16_t s[3] = {0, 0, 0};
    if (flow.valid[i]) {
      s[0] = detail::kitti_encode(flow.u[i], i, path);
      s[1] = detail::kitti_encode(flow.v[i], i, path);
      s[2] = 1;
    }
    for (int c = 0; c < 3; ++c) {
      bytes[i * 6 + 2 * static_cast<size_t>(c)] = static_cast<uint8_t>(s[c] >> 8);
      bytes[i * 6 + 2 * static_cast<size_t>(c) + 1] = static_cast<uint8_t>(s[c]);
    }
  }
  detail::write_raw_png(path, flow.width, flow.height, 3, 16, bytes);
}

inline FlowField read_kitti_flow(const std::string& path) {
  detail::RawPng raw = detail::read_raw_png(path);
  if (raw.bit_depth != 16 || raw.channels != 3)
    throw std::runtime_error(path + ": expected a 16-bit RGB flow PNG");
  FlowField flow = FlowField::zeros(raw.width, raw.height);
  for (size_t i = 0; i < flow.size(); ++i) {
    if (raw.sample16(i * 3 + 2) == 0) continue;
    flow.u[i] = (raw.sample16(i * 3) - 32768.0) / 64.0;
    flow.v[i] = (raw.sample16(i * 3 + 1) - 32768.0) / 64.0;
    flow.valid[i] = 1;
  }
  return flow;
}

}  // namespace depthstill
