#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace depthstill {

// Transformed depth at or below this threshold counts as behind the camera;
// also guards the inverse-depth conversion against division by zero.
inline constexpr double kDepthEps = 1e-6;

/// Pinhole camera model, pixel units, no distortion.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
};

/// Plausible fixed intrinsics for an uncalibrated image: focals proportional
/// to the image dimensions, optical center at the image middle.
inline CameraIntrinsics intrinsics_from_dims(int width, int height, double focal_scale) {
  if (width < 1 || height < 1)
    throw std::invalid_argument("intrinsics_from_dims: dimensions must be >= 1");
  if (!std::isfinite(focal_scale) || focal_scale <= 0.0)
    throw std::invalid_argument("intrinsics_from_dims: focal_scale must be > 0");
  CameraIntrinsics k;
  k.fx = focal_scale * width;
  k.fy = focal_scale * height;
  k.cx = 0.5 * width;
  k.cy = 0.5 * height;
  k.width = width;
  k.height = height;
  return k;
}

/// Rotation angles in radians about the camera x, y and z axes.
struct EulerAngles {
  double rx = 0.0;
  double ry = 0.0;
  double rz = 0.0;
};

/// Fixed-axis X-then-Y-then-Z rotation: R = Rz * Ry * Rx. The composition
/// order is part of the output contract.
inline Eigen::Matrix3d rotation_from_euler(const EulerAngles& a) {
  if (!std::isfinite(a.rx) || !std::isfinite(a.ry) || !std::isfinite(a.rz))
    throw std::invalid_argument("rotation_from_euler: angles must be finite");
  const double cx = std::cos(a.rx), sx = std::sin(a.rx);
  const double cy = std::cos(a.ry), sy = std::sin(a.ry);
  const double cz = std::cos(a.rz), sz = std::sin(a.rz);
  Eigen::Matrix3d rx, ry, rz;
  rx << 1, 0, 0,
        0, cx, -sx,
        0, sx, cx;
  ry << cy, 0, sy,
        0, 1, 0,
        -sy, 0, cy;
  rz << cz, -sz, 0,
        sz, cz, 0,
        0, 0, 1;
  return rz * ry * rx;
}

/// Rigid transform applied to camera-space points: X' = R * X + t.
/// Translation is expressed in depth units.
struct RigidMotion {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidMotion identity() { return {}; }

  bool is_identity() const {
    return (rotation.array() == Eigen::Matrix3d::Identity().array()).all() &&
           (translation.array() == 0.0).all();
  }
};

inline RigidMotion motion_from_params(const EulerAngles& angles,
                                      const Eigen::Vector3d& translation) {
  return RigidMotion{rotation_from_euler(angles), translation};
}

/// Dense per-pixel scene depth. Row-major, top-left origin.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  static DepthMap constant(int width, int height, double value) {
    return DepthMap{width, height,
                    std::vector<double>(static_cast<size_t>(width) * height, value)};
  }

  double& at(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
  double at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
  size_t size() const { return values.size(); }
};

enum class DepthMode { Metric, Inverse };

/// Rescale a raw depth prediction into the [1, 100] working range. Inverse
/// mode converts network outputs in the inverse-depth domain first. A
/// constant map normalizes to the range midpoint.
inline DepthMap normalize_depth(const DepthMap& raw, DepthMode mode) {
  if (raw.values.empty())
    throw std::invalid_argument("normalize_depth: empty depth map");
  DepthMap out{raw.width, raw.height, raw.values};
  for (double v : out.values) {
    if (!std::isfinite(v))
      throw std::invalid_argument("normalize_depth: non-finite depth value");
    if (mode == DepthMode::Metric && v <= 0.0)
      throw std::invalid_argument("normalize_depth: non-positive depth value in metric mode");
  }
  if (mode == DepthMode::Inverse) {
    for (double& v : out.values) v = 1.0 / std::max(v, kDepthEps);
  }
  auto [mn_it, mx_it] = std::minmax_element(out.values.begin(), out.values.end());
  const double mn = *mn_it, mx = *mx_it;
  if (mx > mn) {
    const double scale = 99.0 / (mx - mn);
    for (double& v : out.values) v = 1.0 + (v - mn) * scale;
  } else {
    for (double& v : out.values) v = 50.5;
  }
  return out;
}

/// Per-pixel displacement from the source view to the synthesized view,
/// plus a per-pixel validity flag. u is horizontal, v vertical, in pixels.
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<double> u;
  std::vector<double> v;
  std::vector<uint8_t> valid;

  static FlowField zeros(int width, int height) {
    const size_t n = static_cast<size_t>(width) * height;
    return FlowField{width, height, std::vector<double>(n, 0.0),
                     std::vector<double>(n, 0.0), std::vector<uint8_t>(n, 0)};
  }
  size_t size() const { return u.size(); }
};

struct FlowWithDepth {
  FlowField flow;
  DepthMap z_after;  // transformed per-pixel depth, used for z-buffering
};

namespace detail {

// Shared projection kernel: back-project each pixel with its depth, apply
// the per-pixel rigid motion, reproject. motion_index(x, y) selects into
// `motions`. Exactly-identity motions take a shortcut so that zero motion
// produces exactly zero flow.
template <class MotionIndexFn>
FlowWithDepth project_pixels(const DepthMap& depth, const CameraIntrinsics& K,
                             const std::vector<RigidMotion>& motions,
                             MotionIndexFn&& motion_index) {
  const int w = depth.width, h = depth.height;
  FlowWithDepth out;
  out.flow = FlowField::zeros(w, h);
  out.z_after = DepthMap::constant(w, h, 0.0);

  struct Prepared {
    Eigen::Matrix3d R;
    Eigen::Vector3d t;
    bool ident;
  };
  std::vector<Prepared> prep;
  prep.reserve(motions.size());
  for (const RigidMotion& m : motions)
    prep.push_back({m.rotation, m.translation, m.is_identity()});

  size_t i = 0;
  for (int y = 0; y < h; ++y) {
    const double yc = (y - K.cy) / K.fy;
    for (int x = 0; x < w; ++x, ++i) {
      const double d = depth.values[i];
      const Prepared& m = prep[motion_index(x, y)];
      if (m.ident) {
        out.z_after.values[i] = d;
        out.flow.valid[i] = d > kDepthEps;
        continue;
      }
      const double xc = (x - K.cx) / K.fx;
      const Eigen::Vector3d moved = m.R * Eigen::Vector3d(d * xc, d * yc, d) + m.t;
      const double z = moved.z();
      out.z_after.values[i] = z;
      if (z > kDepthEps) {
        out.flow.u[i] = K.fx * moved.x() / z + K.cx - x;
        out.flow.v[i] = K.fy * moved.y() / z + K.cy - y;
        out.flow.valid[i] = 1;
      }
    }
  }
  return out;
}

}  // namespace detail

/// Dense flow induced by a single rigid camera motion over the whole scene.
/// Returns the flow field and the per-pixel transformed depth. Pixels whose
/// transformed depth falls at or behind the camera are marked invalid.
inline FlowWithDepth flow_from_depth(const DepthMap& depth, const CameraIntrinsics& K,
                                     const RigidMotion& motion) {
  if (depth.width != K.width || depth.height != K.height)
    throw std::invalid_argument("flow_from_depth: intrinsics do not match depth dimensions");
  const std::vector<RigidMotion> motions{motion};
  return detail::project_pixels(depth, K, motions, [](int, int) { return 0; });
}

}  // namespace depthstill
