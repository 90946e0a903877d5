#pragma once

// Shared helpers for the unit and acceptance tests: temporary directories,
// procedural test imagery with natural-image statistics (smooth, band
// limited), plausible depth fields, and synthetic blob segmentations.

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "depthstill/depthstill.hpp"

namespace testutil {

struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("depthstill_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string str() const { return path.string(); }
  std::string sub(const std::string& name) const {
    const auto p = path / name;
    std::filesystem::create_directories(p);
    return p.string();
  }
};

// Smooth test image: a few low-frequency cosine waves per channel. Periods
// stay above ~24 px so bilinear resampling error is small, as in natural
// photographs dominated by low frequencies.
inline depthstill::Image natural_image(uint64_t seed, int w, int h, int channels = 3) {
  depthstill::SplitMix64 rng(seed * 0x100000001B3ULL + 17);
  struct Wave {
    double ax, ay, phase, amp;
  };
  std::vector<Wave> waves(6);
  for (Wave& wv : waves) {
    wv.ax = rng.uniform(-1.0, 1.0) * 2.0 * std::numbers::pi / 24.0;
    wv.ay = rng.uniform(-1.0, 1.0) * 2.0 * std::numbers::pi / 24.0;
    wv.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    wv.amp = rng.uniform(8.0, 22.0);
  }
  depthstill::Image img = depthstill::Image::zeros(w, h, channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c) {
        double v = 128.0;
        for (const Wave& wv : waves) v += wv.amp * std::cos(wv.ax * x + wv.ay * y + wv.phase + 1.7 * c);
        img.at(x, y, c) = static_cast<uint8_t>(std::clamp(v, 0.0, 255.0));
      }
  return img;
}

// Smooth strictly positive depth field, suitable as raw metric depth input.
inline depthstill::DepthMap plausible_depth(uint64_t seed, int w, int h) {
  depthstill::SplitMix64 rng(seed * 0x9E3779B97F4A7C15ULL + 99);
  struct Wave {
    double ax, ay, phase, amp;
  };
  std::vector<Wave> waves(4);
  for (Wave& wv : waves) {
    wv.ax = rng.uniform(-1.0, 1.0) * 2.0 * std::numbers::pi / 32.0;
    wv.ay = rng.uniform(-1.0, 1.0) * 2.0 * std::numbers::pi / 32.0;
    wv.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    wv.amp = rng.uniform(2.0, 8.0);
  }
  const double base = rng.uniform(25.0, 45.0);
  const double tilt = rng.uniform(-0.05, 0.05);
  depthstill::DepthMap d = depthstill::DepthMap::constant(w, h, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v = base + tilt * y;
      for (const Wave& wv : waves) v += wv.amp * std::cos(wv.ax * x + wv.ay * y + wv.phase);
      d.at(x, y) = std::max(v, 1.0);
    }
  return d;
}

// Rectangular blobs labelled 1..count (later labels drawn on top).
inline depthstill::InstanceSet blob_instances(uint64_t seed, int w, int h, int count) {
  depthstill::SplitMix64 rng(seed ^ 0xABCDEF12345ULL);
  depthstill::InstanceSet set{w, h, std::vector<int32_t>(static_cast<size_t>(w) * h, 0), count};
  for (int32_t label = 1; label <= count; ++label) {
    const int bw = std::max(2, static_cast<int>(rng.uniform(0.15, 0.4) * w));
    const int bh = std::max(2, static_cast<int>(rng.uniform(0.15, 0.4) * h));
    const int x0 = static_cast<int>(rng.uniform(0.0, static_cast<double>(w - bw)));
    const int y0 = static_cast<int>(rng.uniform(0.0, static_cast<double>(h - bh)));
    for (int y = y0; y < y0 + bh; ++y)
      for (int x = x0; x < x0 + bw; ++x) set.labels[static_cast<size_t>(y) * w + x] = label;
  }
  return set;
}

// Write a complete generation corpus: images, matching PFM depths, and (for
// every even-indexed image, when requested) an instance label PNG.
inline void write_corpus(const std::string& images_dir, const std::string& depths_dir,
                         const std::string& instances_dir, int n_images, int w, int h,
                         uint64_t seed0 = 1000) {
  char name[32];
  for (int i = 0; i < n_images; ++i) {
    std::snprintf(name, sizeof(name), "img_%03d", i);
    const std::string stem = name;
    depthstill::write_image(images_dir + "/" + stem + ".png",
                            natural_image(seed0 + static_cast<uint64_t>(i), w, h));
    depthstill::write_pfm(depths_dir + "/" + stem + ".pfm",
                          plausible_depth(seed0 + 500 + static_cast<uint64_t>(i), w, h));
    if (!instances_dir.empty() && i % 2 == 0) {
      const depthstill::InstanceSet set =
          blob_instances(seed0 + 900 + static_cast<uint64_t>(i), w, h, 3);
      std::vector<uint8_t> bytes(set.labels.size());
      for (size_t k = 0; k < bytes.size(); ++k)
        bytes[k] = static_cast<uint8_t>(set.labels[k]);
      depthstill::detail::write_raw_png(instances_dir + "/" + stem + ".png", w, h, 1, 8, bytes);
    }
  }
}

// Full byte map of a directory (top level only), for tree comparisons.
inline std::map<std::string, std::vector<uint8_t>> tree_bytes(const std::string& dir) {
  std::map<std::string, std::vector<uint8_t>> out;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file())
      out[e.path().filename().string()] = depthstill::detail::read_file_bytes(e.path().string());
  return out;
}

}  // namespace testutil
