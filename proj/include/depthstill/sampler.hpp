#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

#include "depthstill/geometry.hpp"

namespace depthstill {

namespace detail {

// Finalizer of the splitmix64 generator. Also used to hash task indices
// into per-task seeds.
inline uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

}  // namespace detail

/// splitmix64 generator. The exact bit stream is part of the output
/// contract: datasets must reproduce bit for bit across platforms, so no
/// standard-library distribution (whose algorithms may vary) is involved
/// anywhere in the sampling path.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += detail::kGolden;
    return detail::mix64(state_);
  }

  /// Uniform double in [0, 1), using the top 53 bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

 private:
  uint64_t state_;
};

/// Seed for one (image, motion) task. Mixes the indices into the base seed
/// so every task draws from an independent stream regardless of how work is
/// scheduled across threads.
inline uint64_t task_seed(uint64_t base_seed, uint64_t image_index, uint64_t motion_index) {
  uint64_t h = detail::mix64(base_seed + detail::kGolden * (image_index + 1));
  return detail::mix64(h + detail::kGolden * (motion_index + 1));
}

/// Symmetric sampling ranges for one rigid motion: translations drawn from
/// [-translation, translation], Euler angles from [-rotation, rotation].
struct MotionRanges {
  double translation = 0.0;
  double rotation = 0.0;
};

struct MotionSample {
  EulerAngles angles;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

/// Draw one rigid motion. The draw order (tx, ty, tz, rx, ry, rz) is part of
/// the output contract.
inline MotionSample sample_motion(SplitMix64& rng, const MotionRanges& ranges) {
  if (!(ranges.translation >= 0.0) || !(ranges.rotation >= 0.0) ||
      !std::isfinite(ranges.translation) || !std::isfinite(ranges.rotation))
    throw std::invalid_argument("sample_motion: ranges must be finite and >= 0");
  MotionSample s;
  s.translation.x() = rng.uniform(-ranges.translation, ranges.translation);
  s.translation.y() = rng.uniform(-ranges.translation, ranges.translation);
  s.translation.z() = rng.uniform(-ranges.translation, ranges.translation);
  s.angles.rx = rng.uniform(-ranges.rotation, ranges.rotation);
  s.angles.ry = rng.uniform(-ranges.rotation, ranges.rotation);
  s.angles.rz = rng.uniform(-ranges.rotation, ranges.rotation);
  return s;
}

/// Draw an independent object motion: small deltas are drawn (same order as
/// sample_motion) and added to the camera motion parameters, then the summed
/// parameters are turned into a rigid transform.
inline RigidMotion sample_object_motion(SplitMix64& rng, const MotionSample& camera,
                                        const MotionRanges& delta_ranges) {
  const MotionSample d = sample_motion(rng, delta_ranges);
  const EulerAngles angles{camera.angles.rx + d.angles.rx, camera.angles.ry + d.angles.ry,
                           camera.angles.rz + d.angles.rz};
  return motion_from_params(angles, camera.translation + d.translation);
}

/// Everything that controls generation. The defaults are the validated
/// operating point for COCO-like imagery with monocular depth: depth range
/// [1, 100], focals at 0.58 of the image dimensions, camera translations
/// within +-0.2 and rotations within +-10 degrees, object deltas at half /
/// quarter of that, two moving objects, two rounds of 5x5 bilateral depth
/// smoothing, 3x3 collision dilation.
struct GenerationConfig {
  uint64_t base_seed = 1;
  int motions_per_image = 1;
  double focal_scale = 0.58;
  DepthMode depth_mode = DepthMode::Metric;
  double depth_png_scale = 256.0;
  double camera_translation_range = 0.2;
  double camera_rotation_range = std::numbers::pi / 18.0;
  double object_translation_range = 0.1;
  double object_rotation_range = std::numbers::pi / 36.0;
  int n_objects = 2;
  int bilateral_kernel = 5;
  int bilateral_iterations = 2;
  double bilateral_sigma_space = 1.0;
  double bilateral_sigma_value = 5.0;
  int dilation_kernel = 3;
  int inpaint_radius = 3;
  bool write_flo = true;
  bool write_kitti = false;
  bool write_depth = false;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace detail

inline void validate_config(const GenerationConfig& c) {
  auto bad = [](const std::string& what) {
    throw std::invalid_argument("config: " + what);
  };
  if (c.motions_per_image < 1) bad("motions_per_image must be >= 1");
  if (!(c.focal_scale > 0.0)) bad("focal_scale must be > 0");
  if (!(c.depth_png_scale > 0.0)) bad("depth_png_scale must be > 0");
  if (c.camera_translation_range < 0.0 || c.camera_rotation_range < 0.0 ||
      c.object_translation_range < 0.0 || c.object_rotation_range < 0.0)
    bad("motion ranges must be >= 0");
  if (c.n_objects < 0) bad("n_objects must be >= 0");
  if (c.bilateral_kernel < 1 || c.bilateral_kernel % 2 == 0)
    bad("bilateral_kernel must be odd and >= 1");
  if (c.bilateral_iterations < 0) bad("bilateral_iterations must be >= 0");
  if (!(c.bilateral_sigma_space > 0.0) || !(c.bilateral_sigma_value > 0.0))
    bad("bilateral sigmas must be > 0");
  if (c.dilation_kernel < 1 || c.dilation_kernel % 2 == 0)
    bad("dilation_kernel must be odd and >= 1");
  if (c.inpaint_radius < 1) bad("inpaint_radius must be >= 1");
}

/// Canonical text form: one "key = value" line per field, fixed order,
/// doubles with enough digits to round-trip. Written into the manifest so a
/// dataset records the exact configuration that produced it.
inline std::string config_to_text(const GenerationConfig& c) {
  std::ostringstream out;
  out << "base_seed = " << c.base_seed << '\n'
      << "motions_per_image = " << c.motions_per_image << '\n'
      << "focal_scale = " << detail::format_double(c.focal_scale) << '\n'
      << "depth_mode = " << (c.depth_mode == DepthMode::Metric ? "metric" : "inverse") << '\n'
      << "depth_png_scale = " << detail::format_double(c.depth_png_scale) << '\n'
      << "camera_translation_range = " << detail::format_double(c.camera_translation_range) << '\n'
      << "camera_rotation_range = " << detail::format_double(c.camera_rotation_range) << '\n'
      << "object_translation_range = " << detail::format_double(c.object_translation_range) << '\n'
      << "object_rotation_range = " << detail::format_double(c.object_rotation_range) << '\n'
      << "n_objects = " << c.n_objects << '\n'
      << "bilateral_kernel = " << c.bilateral_kernel << '\n'
      << "bilateral_iterations = " << c.bilateral_iterations << '\n'
      << "bilateral_sigma_space = " << detail::format_double(c.bilateral_sigma_space) << '\n'
      << "bilateral_sigma_value = " << detail::format_double(c.bilateral_sigma_value) << '\n'
      << "dilation_kernel = " << c.dilation_kernel << '\n'
      << "inpaint_radius = " << c.inpaint_radius << '\n'
      << "write_flo = " << (c.write_flo ? "true" : "false") << '\n'
      << "write_kitti = " << (c.write_kitti ? "true" : "false") << '\n'
      << "write_depth = " << (c.write_depth ? "true" : "false") << '\n';
  return out.str();
}

/// Parse "key = value" lines. '#' starts a comment, blank lines are skipped,
/// unknown keys and malformed values are errors (a typo silently producing a
/// differently-configured dataset would be far worse than a hard stop).
inline GenerationConfig parse_config(const std::string& text) {
  GenerationConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto fail = [&lineno](const std::string& what) {
    throw std::runtime_error("config line " + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const size_t hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) fail("expected 'key = value'");

    try {
      auto as_double = [&] { size_t pos; double v = std::stod(value, &pos);
                             if (pos != value.size()) throw std::invalid_argument(value);
                             return v; };
      auto as_int = [&] { size_t pos; int v = std::stoi(value, &pos);
                          if (pos != value.size()) throw std::invalid_argument(value);
                          return v; };
      auto as_bool = [&] {
        if (value == "true") return true;
        if (value == "false") return false;
        throw std::invalid_argument(value);
      };
      if (key == "base_seed") {
        size_t pos;
        c.base_seed = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
      } else if (key == "motions_per_image") c.motions_per_image = as_int();
      else if (key == "focal_scale") c.focal_scale = as_double();
      else if (key == "depth_mode") {
        if (value == "metric") c.depth_mode = DepthMode::Metric;
        else if (value == "inverse") c.depth_mode = DepthMode::Inverse;
        else fail("depth_mode must be 'metric' or 'inverse'");
      } else if (key == "depth_png_scale") c.depth_png_scale = as_double();
      else if (key == "camera_translation_range") c.camera_translation_range = as_double();
      else if (key == "camera_rotation_range") c.camera_rotation_range = as_double();
      else if (key == "object_translation_range") c.object_translation_range = as_double();
      else if (key == "object_rotation_range") c.object_rotation_range = as_double();
      else if (key == "n_objects") c.n_objects = as_int();
      else if (key == "bilateral_kernel") c.bilateral_kernel = as_int();
      else if (key == "bilateral_iterations") c.bilateral_iterations = as_int();
      else if (key == "bilateral_sigma_space") c.bilateral_sigma_space = as_double();
      else if (key == "bilateral_sigma_value") c.bilateral_sigma_value = as_double();
      else if (key == "dilation_kernel") c.dilation_kernel = as_int();
      else if (key == "inpaint_radius") c.inpaint_radius = as_int();
      else if (key == "write_flo") c.write_flo = as_bool();
      else if (key == "write_kitti") c.write_kitti = as_bool();
      else if (key == "write_depth") c.write_depth = as_bool();
      else fail("unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      fail("invalid value '" + value + "' for key '" + key + "'");
    } catch (const std::out_of_range&) {
      fail("value '" + value + "' out of range for key '" + key + "'");
    }
  }
  validate_config(c);
  return c;
}

inline GenerationConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace depthstill
