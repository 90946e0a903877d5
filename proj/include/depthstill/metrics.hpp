#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "depthstill/geometry.hpp"

namespace depthstill {

/// Aggregate endpoint-error statistics over the pixels the ground truth
/// marks valid.
struct FlowErrorReport {
  double epe = 0.0;       // mean endpoint error in pixels
  double rate_gt3 = 0.0;  // fraction with endpoint error > 3 px
  double fl = 0.0;        // fraction with error > 3 px and > 5% of magnitude
  size_t n_valid = 0;
};

inline FlowErrorReport evaluate(const FlowField& pred, const FlowField& gt) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw std::invalid_argument("evaluate: flow dimensions do not match");
  FlowErrorReport r;
  double sum = 0.0;
  size_t over3 = 0, fl = 0;
  for (size_t i = 0; i < gt.size(); ++i) {
    if (!gt.valid[i]) continue;
    const double du = pred.u[i] - gt.u[i];
    const double dv = pred.v[i] - gt.v[i];
    const double err = std::hypot(du, dv);
    const double mag = std::hypot(gt.u[i], gt.v[i]);
    sum += err;
    if (err > 3.0) {
      ++over3;
      if (err / std::max(mag, 1e-9) > 0.05) ++fl;
    }
    ++r.n_valid;
  }
  if (r.n_valid == 0) throw std::runtime_error("evaluate: ground truth has no valid pixels");
  r.epe = sum / static_cast<double>(r.n_valid);
  r.rate_gt3 = static_cast<double>(over3) / static_cast<double>(r.n_valid);
  r.fl = static_cast<double>(fl) / static_cast<double>(r.n_valid);
  return r;
}

inline std::string report_line(const FlowErrorReport& r) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "epe=%.6f gt3=%.6f fl=%.6f n=%zu", r.epe, r.rate_gt3, r.fl,
                r.n_valid);
  return buf;
}

}  // namespace depthstill
