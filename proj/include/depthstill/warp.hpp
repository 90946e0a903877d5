#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "depthstill/geometry.hpp"
#include "depthstill/imageproc.hpp"

namespace depthstill {

/// Per-pixel segmentation labels: 0 is background, 1..count are instances.
/// Row-major, top-left origin. An empty label buffer means "no segmentation",
/// i.e. everything is background.
struct InstanceSet {
  int width = 0;
  int height = 0;
  std::vector<int32_t> labels;
  int count = 0;

  int32_t at(int x, int y) const { return labels[static_cast<size_t>(y) * width + x]; }
};

/// Keep the n instances with the largest pixel counts (ties prefer the lower
/// original label) and renumber them 1..n in decreasing size order.
/// Everything else becomes background.
inline InstanceSet select_largest_instances(const InstanceSet& instances, int n) {
  if (n < 0) throw std::invalid_argument("select_largest_instances: n must be >= 0");
  InstanceSet out{instances.width, instances.height, {}, 0};
  if (instances.labels.empty() || n == 0 || instances.count == 0) {
    out.labels.assign(instances.labels.size(), 0);
    return out;
  }

  std::vector<int64_t> sizes(static_cast<size_t>(instances.count) + 1, 0);
  for (int32_t l : instances.labels) {
    if (l < 0 || l > instances.count)
      throw std::invalid_argument("select_largest_instances: label out of range");
    ++sizes[static_cast<size_t>(l)];
  }

  std::vector<int32_t> order;
  for (int32_t l = 1; l <= instances.count; ++l)
    if (sizes[static_cast<size_t>(l)] > 0) order.push_back(l);
  std::sort(order.begin(), order.end(), [&](int32_t a, int32_t b) {
    if (sizes[static_cast<size_t>(a)] != sizes[static_cast<size_t>(b)])
      return sizes[static_cast<size_t>(a)] > sizes[static_cast<size_t>(b)];
    return a < b;
  });
  const int kept = std::min<int>(n, static_cast<int>(order.size()));

  std::vector<int32_t> remap(static_cast<size_t>(instances.count) + 1, 0);
  for (int k = 0; k < kept; ++k) remap[static_cast<size_t>(order[static_cast<size_t>(k)])] = k + 1;

  out.count = kept;
  out.labels.resize(instances.labels.size());
  for (size_t i = 0; i < instances.labels.size(); ++i)
    out.labels[i] = remap[static_cast<size_t>(instances.labels[i])];
  return out;
}

/// Dense flow where background pixels follow the camera motion and each
/// listed instance follows its own rigid motion instead. Labels without an
/// entry in instance_motions fall back to the camera motion. With no
/// instances this reduces to flow_from_depth exactly.
inline FlowWithDepth composite_instance_flow(
    const DepthMap& depth, const CameraIntrinsics& K, const RigidMotion& camera_motion,
    const InstanceSet& instances,
    const std::vector<std::pair<int32_t, RigidMotion>>& instance_motions) {
  if (depth.width != K.width || depth.height != K.height)
    throw std::invalid_argument("composite_instance_flow: intrinsics do not match depth dimensions");
  if (!instances.labels.empty() &&
      (instances.width != depth.width || instances.height != depth.height))
    throw std::invalid_argument("composite_instance_flow: instance map dimensions do not match depth");

  std::vector<RigidMotion> motions{camera_motion};
  std::vector<size_t> label_to_motion(static_cast<size_t>(instances.count) + 1, 0);
  for (const auto& [label, motion] : instance_motions) {
    if (label < 1 || label > instances.count)
      throw std::invalid_argument("composite_instance_flow: unknown instance label " +
                                  std::to_string(label));
    label_to_motion[static_cast<size_t>(label)] = motions.size();
    motions.push_back(motion);
  }

  if (instances.labels.empty())
    return detail::project_pixels(depth, K, motions, [](int, int) { return size_t{0}; });
  const int w = instances.width;
  const int32_t* labels = instances.labels.data();
  return detail::project_pixels(depth, K, motions, [&](int x, int y) {
    return label_to_motion[static_cast<size_t>(labels[static_cast<size_t>(y) * w + x])];
  });
}

/// Result of splatting the source image into the novel view.
/// Pixels not covered by any splat (hole == false) carry zeros in image1 and
/// zbuffer; they are placeholders awaiting inpainting.
struct WarpResult {
  Image image1;
  BinaryMask collision;  // true where two or more sources landed
  BinaryMask hole;       // true where at least one source landed
  DepthMap zbuffer;      // winning transformed depth where covered, else 0
};

/// Forward-warp image0 along the flow. Each valid source pixel is splatted
/// onto the nearest integer target (round half away from zero); targets
/// outside the image are dropped. Where several sources collide, the one
/// with the smallest transformed depth wins, ties going to the smallest
/// row-major source index, so results do not depend on traversal order.
inline WarpResult forward_warp(const Image& image0, const FlowField& flow,
                               const DepthMap& z_after) {
  if (flow.width != image0.width || flow.height != image0.height)
    throw std::invalid_argument("forward_warp: flow dimensions do not match image");
  if (z_after.width != image0.width || z_after.height != image0.height)
    throw std::invalid_argument("forward_warp: depth dimensions do not match image");
  const int w = image0.width, h = image0.height, nch = image0.channels;
  const size_t n = static_cast<size_t>(w) * h;

  std::vector<uint32_t> hits(n, 0);
  std::vector<double> best_z(n, 0.0);
  std::vector<size_t> best_src(n, std::numeric_limits<size_t>::max());

  size_t i = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x, ++i) {
      if (!flow.valid[i]) continue;
      const long tx = std::lround(x + flow.u[i]);
      const long ty = std::lround(y + flow.v[i]);
      if (tx < 0 || tx >= w || ty < 0 || ty >= h) continue;
      const size_t t = static_cast<size_t>(ty) * w + static_cast<size_t>(tx);
      const double z = z_after.values[i];
      ++hits[t];
      if (hits[t] == 1 || z < best_z[t]) {
        best_z[t] = z;
        best_src[t] = i;
      }
    }
  }

  WarpResult out;
  out.image1 = Image::zeros(w, h, nch);
  out.collision = BinaryMask::filled(w, h, false);
  out.hole = BinaryMask::filled(w, h, false);
  out.zbuffer = DepthMap::constant(w, h, 0.0);
  for (size_t t = 0; t < n; ++t) {
    if (hits[t] == 0) continue;
    out.hole.values[t] = 1;
    out.collision.values[t] = hits[t] >= 2;
    out.zbuffer.values[t] = best_z[t];
    const size_t s = best_src[t];
    for (int c = 0; c < nch; ++c) out.image1.values[t * nch + c] = image0.values[s * nch + c];
  }
  return out;
}

/// Derive the final coverage masks from a warp: dilate the collision mask,
/// and keep a covered pixel only where the dilation added nothing, so that
/// pixels adjacent to collisions are treated as unreliable and re-filled.
/// Returns (covered, covered-and-reliable).
inline std::pair<BinaryMask, BinaryMask> hole_masks(const WarpResult& warped,
                                                    int dilation_kernel) {
  const BinaryMask grown = dilate(warped.collision, dilation_kernel);
  BinaryMask reliable = warped.hole;
  for (size_t i = 0; i < reliable.values.size(); ++i) {
    const bool unchanged = grown.values[i] == warped.collision.values[i];
    reliable.values[i] = reliable.values[i] && unchanged;
  }
  return {warped.hole, reliable};
}

struct SynthesisParams {
  int dilation_kernel = 3;
  int inpaint_radius = 3;
};

/// A complete synthesized training sample.
struct SynthesizedSample {
  Image image1;           // novel view, holes and unreliable pixels filled in
  FlowField flow;         // dense source-to-novel-view flow
  BinaryMask collision;   // multiple sources landed here
  BinaryMask hole;        // at least one source landed here
  BinaryMask hole_prime;  // covered and not adjacent to a collision
};

/// Full single-image pipeline: composite per-pixel motions into a flow,
/// forward-warp, derive masks, then inpaint everything that is not reliably
/// covered in the novel view.
inline SynthesizedSample synthesize_pair(
    const Image& image0, const DepthMap& depth, const CameraIntrinsics& K,
    const RigidMotion& camera_motion, const InstanceSet& instances,
    const std::vector<std::pair<int32_t, RigidMotion>>& instance_motions,
    const SynthesisParams& params) {
  if (image0.width != depth.width || image0.height != depth.height)
    throw std::invalid_argument("synthesize_pair: image dimensions do not match depth");
  FlowWithDepth projected =
      composite_instance_flow(depth, K, camera_motion, instances, instance_motions);
  WarpResult warped = forward_warp(image0, projected.flow, projected.z_after);
  auto [hole, hole_prime] = hole_masks(warped, params.dilation_kernel);
  SynthesizedSample sample;
  sample.image1 = inpaint(warped.image1, hole_prime, params.inpaint_radius);
  sample.flow = std::move(projected.flow);
  sample.collision = std::move(warped.collision);
  sample.hole = std::move(hole);
  sample.hole_prime = std::move(hole_prime);
  return sample;
}

}  // namespace depthstill
