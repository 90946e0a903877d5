#pragma once

// Single-header entry point: synthesize optical-flow training pairs from a
// still image plus a depth map by simulating rigid camera and object motion.

#include "depthstill/dataset.hpp"
#include "depthstill/formats.hpp"
#include "depthstill/geometry.hpp"
#include "depthstill/imageproc.hpp"
#include "depthstill/metrics.hpp"
#include "depthstill/sampler.hpp"
#include "depthstill/warp.hpp"

namespace depthstill {
inline constexpr const char* kVersion = "0.1.0";
}
