// Minimal library walkthrough: build a synthetic scene, synthesize the novel
// view for one random camera motion, and write all outputs of one training
// sample into ./demo_out.

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "depthstill/depthstill.hpp"

using namespace depthstill;

int main() {
  const int w = 320, h = 240;

  // A smooth test card and a slanted depth plane with a raised box in it.
  Image image = Image::zeros(w, h, 3);
  DepthMap depth = DepthMap::constant(w, h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      image.at(x, y, 0) = static_cast<uint8_t>(128 + 100 * std::sin(0.05 * x));
      image.at(x, y, 1) = static_cast<uint8_t>(128 + 100 * std::sin(0.04 * y));
      image.at(x, y, 2) = static_cast<uint8_t>(128 + 100 * std::sin(0.03 * (x + y)));
      depth.at(x, y) = 20.0 + 0.05 * y;
      if (x > 120 && x < 200 && y > 80 && y < 160) depth.at(x, y) = 8.0;
    }
  }
  depth = normalize_depth(depth, DepthMode::Metric);

  // The box moves on its own, everything else follows the camera.
  InstanceSet instances{w, h, std::vector<int32_t>(static_cast<size_t>(w) * h, 0), 1};
  for (int y = 81; y < 160; ++y)
    for (int x = 121; x < 200; ++x) instances.labels[static_cast<size_t>(y) * w + x] = 1;

  SplitMix64 rng(7);
  const MotionSample camera = sample_motion(rng, MotionRanges{0.2, std::numbers::pi / 18});
  const RigidMotion camera_motion = motion_from_params(camera.angles, camera.translation);
  const RigidMotion box_motion =
      sample_object_motion(rng, camera, MotionRanges{0.1, std::numbers::pi / 36});

  const CameraIntrinsics K = intrinsics_from_dims(w, h, 0.58);
  const SynthesizedSample sample =
      synthesize_pair(image, depth, K, camera_motion, instances, {{1, box_motion}},
                      SynthesisParams{});

  std::filesystem::create_directories("demo_out");
  const SamplePaths paths = sample_paths("demo_out", "card", 0);
  write_image(paths.image0, image);
  write_image(paths.image1, sample.image1);
  write_flo(paths.flow_flo, sample.flow);
  write_mask(paths.mask_collision, sample.collision);
  write_mask(paths.mask_hole, sample.hole);
  write_mask(paths.mask_hole_prime, sample.hole_prime);

  size_t holes = 0;
  for (uint8_t covered : sample.hole.values) holes += covered ? 0 : 1;
  std::printf("wrote demo_out/%s_* (%zu of %d pixels were holes before inpainting)\n",
              paths.prefix.c_str(), holes, w * h);
  return 0;
}
