#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

#include "depthstill/geometry.hpp"

namespace depthstill {

/// 8-bit image, 1 (grayscale) or 3 (RGB) interleaved channels.
/// Row-major, top-left origin.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<uint8_t> values;

  static Image zeros(int width, int height, int channels) {
    return Image{width, height, channels,
                 std::vector<uint8_t>(static_cast<size_t>(width) * height * channels, 0)};
  }

  uint8_t& at(int x, int y, int c) {
    return values[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  uint8_t at(int x, int y, int c) const {
    return values[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  size_t pixel_count() const { return static_cast<size_t>(width) * height; }
};

/// Per-pixel boolean mask stored as 0/1 bytes. Row-major, top-left origin.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> values;

  static BinaryMask filled(int width, int height, bool value) {
    return BinaryMask{width, height,
                      std::vector<uint8_t>(static_cast<size_t>(width) * height, value ? 1 : 0)};
  }

  uint8_t& at(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
  uint8_t at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
  size_t size() const { return values.size(); }
};

/// Edge-preserving depth smoothing. The window is truncated at the image
/// border; no padding values are invented. The output at each pixel is
/// clamped to its window's value range, so a constant map stays constant
/// bit for bit and no iteration can overshoot the local extrema.
inline DepthMap bilateral_filter_depth(const DepthMap& depth, int kernel, double sigma_space,
                                       double sigma_value, int iterations) {
  if (kernel < 1 || kernel % 2 == 0)
    throw std::invalid_argument("bilateral_filter_depth: kernel must be odd and >= 1");
  if (!(sigma_space > 0.0) || !(sigma_value > 0.0))
    throw std::invalid_argument("bilateral_filter_depth: sigmas must be > 0");
  if (iterations < 0)
    throw std::invalid_argument("bilateral_filter_depth: iterations must be >= 0");

  const int w = depth.width, h = depth.height;
  const int half = kernel / 2;
  const double inv2ss = 1.0 / (2.0 * sigma_space * sigma_space);
  const double inv2sv = 1.0 / (2.0 * sigma_value * sigma_value);

  std::vector<double> spatial(static_cast<size_t>(kernel) * kernel);
  for (int dy = -half; dy <= half; ++dy)
    for (int dx = -half; dx <= half; ++dx)
      spatial[static_cast<size_t>(dy + half) * kernel + (dx + half)] =
          std::exp(-(dx * dx + dy * dy) * inv2ss);

  DepthMap cur = depth;
  DepthMap next = depth;
  for (int it = 0; it < iterations; ++it) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double center = cur.at(x, y);
        double acc = 0.0, wsum = 0.0;
        double lo = center, hi = center;
        for (int dy = -half; dy <= half; ++dy) {
          const int ny = y + dy;
          if (ny < 0 || ny >= h) continue;
          const double* srow = &spatial[static_cast<size_t>(dy + half) * kernel];
          for (int dx = -half; dx <= half; ++dx) {
            const int nx = x + dx;
            if (nx < 0 || nx >= w) continue;
            const double v = cur.at(nx, ny);
            const double dv = v - center;
            const double wgt = srow[dx + half] * std::exp(-dv * dv * inv2sv);
            acc += wgt * dv;
            wsum += wgt;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
          }
        }
        next.at(x, y) = std::clamp(center + acc / wsum, lo, hi);
      }
    }
    std::swap(cur, next);
  }
  return cur;
}

/// Morphological dilation with a square structuring element.
inline BinaryMask dilate(const BinaryMask& mask, int kernel) {
  if (kernel < 1 || kernel % 2 == 0)
    throw std::invalid_argument("dilate: kernel must be odd and >= 1");
  const int w = mask.width, h = mask.height;
  const int half = kernel / 2;
  BinaryMask out = BinaryMask::filled(w, h, false);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      const int y0 = std::max(0, y - half), y1 = std::min(h - 1, y + half);
      const int x0 = std::max(0, x - half), x1 = std::min(w - 1, x + half);
      for (int ny = y0; ny <= y1; ++ny)
        for (int nx = x0; nx <= x1; ++nx) out.at(nx, ny) = 1;
    }
  }
  return out;
}

/// Fill the pixels where fill_mask is false by fast-marching from the known
/// region inward, in ascending distance-to-boundary order (ties broken by
/// row-major index, which makes the fill order fully deterministic). Each
/// filled pixel is a weighted average of already-known pixels within
/// `radius`, weighted by alignment with the marching direction, inverse
/// squared distance, and closeness in arrival time. Known pixels are
/// returned untouched.
inline Image inpaint(const Image& image, const BinaryMask& fill_mask, int radius) {
  if (image.width != fill_mask.width || image.height != fill_mask.height)
    throw std::invalid_argument("inpaint: mask dimensions do not match image");
  if (radius < 1) throw std::invalid_argument("inpaint: radius must be >= 1");
  const int w = image.width, h = image.height, nch = image.channels;
  const size_t n = static_cast<size_t>(w) * h;

  size_t known_count = 0;
  for (size_t i = 0; i < n; ++i) known_count += fill_mask.values[i] ? 1 : 0;
  if (known_count == 0)
    throw std::runtime_error("inpaint: mask leaves no known pixels to fill from");

  Image out = image;
  if (known_count == n) return out;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  enum : uint8_t { Known = 0, Band = 1, Unknown = 2 };
  std::vector<uint8_t> state(n);
  std::vector<double> dist(n);
  for (size_t i = 0; i < n; ++i) {
    state[i] = fill_mask.values[i] ? Known : Unknown;
    dist[i] = fill_mask.values[i] ? 0.0 : kInf;
  }

  // Distance update on the unit grid from frozen neighbours only.
  auto solve = [&](int x, int y) {
    const size_t i = static_cast<size_t>(y) * w + x;
    double a = kInf, b = kInf;
    if (x > 0 && state[i - 1] == Known) a = dist[i - 1];
    if (x + 1 < w && state[i + 1] == Known) a = std::min(a, dist[i + 1]);
    if (y > 0 && state[i - w] == Known) b = dist[i - w];
    if (y + 1 < h && state[i + w] == Known) b = std::min(b, dist[i + w]);
    if (a > b) std::swap(a, b);
    if (a == kInf) return kInf;
    if (b == kInf || b - a >= 1.0) return a + 1.0;
    return 0.5 * (a + b + std::sqrt(2.0 - (b - a) * (b - a)));
  };

  using Node = std::pair<double, size_t>;
  std::priority_queue<Node, std::vector<Node>, std::greater<Node>> heap;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t i = static_cast<size_t>(y) * w + x;
      if (state[i] != Unknown) continue;
      const bool at_front = (x > 0 && state[i - 1] == Known) ||
                            (x + 1 < w && state[i + 1] == Known) ||
                            (y > 0 && state[i - w] == Known) ||
                            (y + 1 < h && state[i + w] == Known);
      if (!at_front) continue;
      dist[i] = solve(x, y);
      state[i] = Band;
      heap.push({dist[i], i});
    }
  }

  const int r2 = radius * radius;
  auto estimate = [&](int x, int y, size_t i) {
    // Marching direction: gradient of the arrival time, one-sided where a
    // neighbour has not been reached yet.
    const double tp = dist[i];
    double gx = 0.0, gy = 0.0;
    {
      const bool l = x > 0 && dist[i - 1] < kInf, r = x + 1 < w && dist[i + 1] < kInf;
      if (l && r) gx = 0.5 * (dist[i + 1] - dist[i - 1]);
      else if (r) gx = dist[i + 1] - tp;
      else if (l) gx = tp - dist[i - 1];
      const bool u = y > 0 && dist[i - w] < kInf, d = y + 1 < h && dist[i + w] < kInf;
      if (u && d) gy = 0.5 * (dist[i + w] - dist[i - w]);
      else if (d) gy = dist[i + w] - tp;
      else if (u) gy = tp - dist[i - w];
    }
    const double glen = std::hypot(gx, gy);
    double acc[3] = {0.0, 0.0, 0.0};
    double wsum = 0.0;
    const int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
    const int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
    for (int qy = y0; qy <= y1; ++qy) {
      for (int qx = x0; qx <= x1; ++qx) {
        const int dx = x - qx, dy = y - qy;
        const int d2 = dx * dx + dy * dy;
        if (d2 == 0 || d2 > r2) continue;
        const size_t q = static_cast<size_t>(qy) * w + qx;
        if (state[q] != Known) continue;
        double dir = 1.0;
        if (glen > 0.0) {
          dir = std::abs(dx * gx + dy * gy) / (std::sqrt(static_cast<double>(d2)) * glen);
          if (dir < 1e-6) dir = 1e-6;
        }
        const double wgt = dir * (1.0 / d2) * (1.0 / (1.0 + std::abs(tp - dist[q])));
        wsum += wgt;
        for (int c = 0; c < nch; ++c) acc[c] += wgt * out.values[q * nch + c];
      }
    }
    for (int c = 0; c < nch; ++c) {
      const long v = std::lround(acc[c] / wsum);
      out.values[i * nch + c] = static_cast<uint8_t>(std::clamp(v, 0L, 255L));
    }
  };

  while (!heap.empty()) {
    const auto [t, i] = heap.top();
    heap.pop();
    if (state[i] != Band || t != dist[i]) continue;  // stale entry
    const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
    estimate(x, y, i);
    state[i] = Known;
    const int nx4[4] = {x - 1, x + 1, x, x};
    const int ny4[4] = {y, y, y - 1, y + 1};
    for (int k = 0; k < 4; ++k) {
      const int nx = nx4[k], ny = ny4[k];
      if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
      const size_t j = static_cast<size_t>(ny) * w + nx;
      if (state[j] == Known) continue;
      const double tj = solve(nx, ny);
      if (tj < dist[j]) {
        dist[j] = tj;
        state[j] = Band;
        heap.push({tj, j});
      }
    }
  }
  return out;
}

/// Bilinear sample of one channel at a fractional position. The sampling
/// footprint is clamped to the image, so callers may pass positions up to
/// and including the last row/column.
inline double sample_bilinear(const Image& img, double x, double y, int c) {
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, img.width - 1), y1 = std::min(y0 + 1, img.height - 1);
  const double ax = x - x0, ay = y - y0;
  const double v00 = img.at(x0, y0, c), v10 = img.at(x1, y0, c);
  const double v01 = img.at(x0, y1, c), v11 = img.at(x1, y1, c);
  return (1.0 - ay) * ((1.0 - ax) * v00 + ax * v10) + ay * ((1.0 - ax) * v01 + ax * v11);
}

}  // namespace depthstill
