#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "depthstill/formats.hpp"
#include "depthstill/metrics.hpp"
#include "depthstill/sampler.hpp"
#include "depthstill/warp.hpp"

namespace depthstill {

/// One unit of work: one source image under one sampled motion. The seed is
/// fixed at planning time so results do not depend on scheduling.
struct JobEntry {
  std::string stem;
  std::string image_path;
  std::string depth_path;
  std::string instance_path;  // empty when no segmentation is available
  uint64_t image_index = 0;
  uint64_t motion_index = 0;
  uint64_t seed = 0;
};

struct JobManifest {
  GenerationConfig config;
  std::vector<JobEntry> entries;
};

struct JobPlan {
  JobManifest manifest;
  std::vector<std::string> failures;  // images that could not be paired with inputs
};

/// Enumerate the corpus and pair every image with its depth map (same stem,
/// .pfm preferred over .png) and optional instance map. Image indices follow
/// the sorted filename order of all images found, so adding or removing an
/// unrelated depth file never renumbers existing samples.
inline JobPlan plan_jobs(const std::string& images_dir, const std::string& depths_dir,
                         const std::string& instances_dir, const GenerationConfig& config) {
  namespace fs = std::filesystem;
  validate_config(config);
  if (!fs::is_directory(images_dir))
    throw std::runtime_error(images_dir + ": not a directory");
  if (!fs::is_directory(depths_dir))
    throw std::runtime_error(depths_dir + ": not a directory");
  if (!instances_dir.empty() && !fs::is_directory(instances_dir))
    throw std::runtime_error(instances_dir + ": not a directory");

  std::vector<fs::path> images;
  for (const auto& e : fs::directory_iterator(images_dir))
    if (e.is_regular_file() && e.path().extension() == ".png") images.push_back(e.path());
  std::sort(images.begin(), images.end());
  if (images.empty()) throw std::runtime_error(images_dir + ": no .png images found");

  JobPlan plan;
  plan.manifest.config = config;
  uint64_t image_index = 0;
  for (const auto& img : images) {
    const std::string stem = img.stem().string();
    const uint64_t idx = image_index++;
    fs::path depth = fs::path(depths_dir) / (stem + ".pfm");
    if (!fs::exists(depth)) depth = fs::path(depths_dir) / (stem + ".png");
    if (!fs::exists(depth)) {
      plan.failures.push_back(stem + ": no depth map (" + stem + ".pfm or " + stem +
                              ".png) in " + depths_dir);
      continue;
    }
    std::string instance_path;
    if (!instances_dir.empty()) {
      const fs::path inst = fs::path(instances_dir) / (stem + ".png");
      if (fs::exists(inst)) instance_path = inst.string();
    }
    for (int m = 0; m < config.motions_per_image; ++m) {
      JobEntry e;
      e.stem = stem;
      e.image_path = img.string();
      e.depth_path = depth.string();
      e.instance_path = instance_path;
      e.image_index = idx;
      e.motion_index = static_cast<uint64_t>(m);
      e.seed = task_seed(config.base_seed, idx, static_cast<uint64_t>(m));
      plan.manifest.entries.push_back(std::move(e));
    }
  }
  return plan;
}

/// All output files of one sample share the "<stem>_m<k>" prefix.
struct SamplePaths {
  std::string prefix;
  std::string image0;
  std::string image1;
  std::string flow_flo;
  std::string flow_kitti;
  std::string mask_collision;
  std::string mask_hole;
  std::string mask_hole_prime;
  std::string depth_pfm;
};

inline SamplePaths sample_paths(const std::string& out_dir, const std::string& stem,
                                uint64_t motion_index) {
  char tag[24];
  std::snprintf(tag, sizeof(tag), "_m%02llu", static_cast<unsigned long long>(motion_index));
  SamplePaths p;
  p.prefix = stem + tag;
  const std::string base = (std::filesystem::path(out_dir) / p.prefix).string();
  p.image0 = base + "_im0.png";
  p.image1 = base + "_im1.png";
  p.flow_flo = base + "_flow.flo";
  p.flow_kitti = base + "_flow.png";
  p.mask_collision = base + "_mask_coll.png";
  p.mask_hole = base + "_mask_hole.png";
  p.mask_hole_prime = base + "_mask_holep.png";
  p.depth_pfm = base + "_depth.pfm";
  return p;
}

/// The manifest records the resolved configuration and the full job list
/// (incl. per-task seeds) before any sample is synthesized, so a generated
/// dataset always carries the recipe that produced it.
inline void write_manifest(const std::string& path, const JobManifest& manifest) {
  std::ostringstream out;
  out << "# generation manifest\n[config]\n"
      << config_to_text(manifest.config) << "[entries]\n";
  for (const JobEntry& e : manifest.entries)
    out << e.image_index << '\t' << e.motion_index << '\t' << e.seed << '\t' << e.stem << '\t'
        << e.image_path << '\t' << e.depth_path << '\t'
        << (e.instance_path.empty() ? "-" : e.instance_path) << '\n';
  const std::string text = out.str();
  detail::write_file_bytes(path, text.data(), text.size());
}

struct EntryResult {
  bool ok = false;
  std::string message;
  double hole_fraction = 0.0;       // novel-view pixels no source landed on
  double collision_fraction = 0.0;  // novel-view pixels hit more than once
};

/// Synthesize and write one sample. All failures are reported through the
/// result rather than thrown, so one broken input never aborts a batch.
inline EntryResult run_entry(const JobEntry& entry, const GenerationConfig& config,
                             const std::string& out_dir) {
  EntryResult res;
  try {
    const Image image0 = read_image(entry.image_path);
    const bool is_pfm = std::filesystem::path(entry.depth_path).extension() == ".pfm";
    DepthMap depth = read_depth(entry.depth_path,
                                is_pfm ? DepthEncoding::Pfm : DepthEncoding::Png16,
                                config.depth_png_scale);
    if (depth.width != image0.width || depth.height != image0.height)
      throw std::runtime_error(entry.depth_path + ": depth dimensions do not match image");
    depth = normalize_depth(depth, config.depth_mode);
    depth = bilateral_filter_depth(depth, config.bilateral_kernel, config.bilateral_sigma_space,
                                   config.bilateral_sigma_value, config.bilateral_iterations);

    InstanceSet instances;
    if (!entry.instance_path.empty()) {
      instances = read_instances(entry.instance_path);
      if (instances.width != image0.width || instances.height != image0.height)
        throw std::runtime_error(entry.instance_path +
                                 ": instance map dimensions do not match image");
      instances = select_largest_instances(instances, config.n_objects);
    }

    // Draw order per task: camera translation and rotation first, then one
    // object motion per kept instance in label order. This order is part of
    // the output contract.
    SplitMix64 rng(entry.seed);
    const MotionSample camera = sample_motion(
        rng, MotionRanges{config.camera_translation_range, config.camera_rotation_range});
    const RigidMotion camera_motion = motion_from_params(camera.angles, camera.translation);
    std::vector<std::pair<int32_t, RigidMotion>> instance_motions;
    for (int32_t label = 1; label <= instances.count; ++label)
      instance_motions.emplace_back(
          label, sample_object_motion(rng, camera,
                                      MotionRanges{config.object_translation_range,
                                                   config.object_rotation_range}));

    const CameraIntrinsics K =
        intrinsics_from_dims(image0.width, image0.height, config.focal_scale);
    const SynthesizedSample sample =
        synthesize_pair(image0, depth, K, camera_motion, instances, instance_motions,
                        SynthesisParams{config.dilation_kernel, config.inpaint_radius});

    const SamplePaths paths = sample_paths(out_dir, entry.stem, entry.motion_index);
    write_image(paths.image0, image0);
    write_image(paths.image1, sample.image1);
    if (config.write_flo) write_flo(paths.flow_flo, sample.flow);
    if (config.write_kitti) write_kitti_flow(paths.flow_kitti, sample.flow);
    write_mask(paths.mask_collision, sample.collision);
    write_mask(paths.mask_hole, sample.hole);
    write_mask(paths.mask_hole_prime, sample.hole_prime);
    if (config.write_depth) write_pfm(paths.depth_pfm, depth);

    size_t holes = 0, collisions = 0;
    for (size_t i = 0; i < sample.hole.values.size(); ++i) {
      holes += sample.hole.values[i] ? 0 : 1;
      collisions += sample.collision.values[i] ? 1 : 0;
    }
    const double n = static_cast<double>(sample.hole.values.size());
    res.hole_fraction = static_cast<double>(holes) / n;
    res.collision_fraction = static_cast<double>(collisions) / n;
    res.ok = true;
  } catch (const std::exception& e) {
    res.ok = false;
    res.message = e.what();
  }
  return res;
}

namespace detail {

/// Run fn(0..n-1) on `jobs` threads pulling indices from a shared counter.
/// fn must not throw (task-level failures are data, not exceptions).
template <class Fn>
void parallel_for(size_t n, int jobs, Fn&& fn) {
  const size_t workers = std::min<size_t>(n, static_cast<size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> cursor{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (size_t i = cursor.fetch_add(1); i < n; i = cursor.fetch_add(1)) fn(i);
    });
  for (std::thread& th : pool) th.join();
}

inline int resolve_jobs(int jobs) {
  if (jobs > 0) return jobs;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace detail

struct GenerateSummary {
  size_t n_planned = 0;  // samples attempted (images paired x motions)
  size_t n_ok = 0;
  size_t n_failed = 0;  // failed samples plus images that could not be paired
  std::vector<std::string> failures;
  double mean_hole_fraction = 0.0;
  double mean_collision_fraction = 0.0;
  double wall_seconds = 0.0;
  int jobs_used = 1;

  bool all_ok() const { return n_failed == 0; }
};

/// Generate the whole dataset. The output tree depends only on the inputs
/// and the configuration, never on the worker count or scheduling: every
/// sample's seed is fixed in the manifest before any worker starts, samples
/// write only their own files, and the manifest is written up front.
/// Timing lives in the returned summary only, so reruns stay byte-identical.
inline GenerateSummary generate(const std::string& images_dir, const std::string& depths_dir,
                                const std::string& instances_dir, const std::string& out_dir,
                                const GenerationConfig& config, int jobs = 0) {
  const auto t0 = std::chrono::steady_clock::now();
  JobPlan plan = plan_jobs(images_dir, depths_dir, instances_dir, config);
  std::filesystem::create_directories(out_dir);
  write_manifest((std::filesystem::path(out_dir) / "manifest.txt").string(), plan.manifest);

  const std::vector<JobEntry>& entries = plan.manifest.entries;
  std::vector<EntryResult> results(entries.size());
  const int jobs_used = detail::resolve_jobs(jobs);
  detail::parallel_for(entries.size(), jobs_used,
                       [&](size_t i) { results[i] = run_entry(entries[i], config, out_dir); });

  GenerateSummary s;
  s.n_planned = entries.size();
  s.jobs_used = jobs_used;
  s.failures = std::move(plan.failures);
  for (size_t i = 0; i < results.size(); ++i) {
    if (results[i].ok) {
      ++s.n_ok;
      s.mean_hole_fraction += results[i].hole_fraction;
      s.mean_collision_fraction += results[i].collision_fraction;
    } else {
      s.failures.push_back(sample_paths("", entries[i].stem, entries[i].motion_index).prefix +
                           ": " + results[i].message);
    }
  }
  s.n_failed = s.failures.size();
  if (s.n_ok > 0) {
    s.mean_hole_fraction /= static_cast<double>(s.n_ok);
    s.mean_collision_fraction /= static_cast<double>(s.n_ok);
  }
  s.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return s;
}

/// Median absolute difference, per channel, between the source image and the
/// novel view sampled back along the flow. Only pixels whose whole bilinear
/// footprint is reliably covered (hole_prime set, no collision) are counted.
struct PhotoStats {
  double median[3] = {0.0, 0.0, 0.0};
  int channels = 0;
  size_t n = 0;

  double worst() const {
    double m = 0.0;
    for (int c = 0; c < channels; ++c) m = std::max(m, median[c]);
    return m;
  }
};

inline PhotoStats photometric_roundtrip(const Image& im0, const Image& im1,
                                        const FlowField& flow, const BinaryMask& hole_prime,
                                        const BinaryMask& collision) {
  if (im0.width != im1.width || im0.height != im1.height || im0.channels != im1.channels ||
      flow.width != im0.width || flow.height != im0.height ||
      hole_prime.width != im0.width || hole_prime.height != im0.height ||
      collision.width != im0.width || collision.height != im0.height)
    throw std::invalid_argument("photometric_roundtrip: dimensions do not match");

  const int w = im0.width, h = im0.height, nch = im0.channels;
  std::vector<double> diffs[3];
  auto reliable = [&](int x, int y) {
    const size_t i = static_cast<size_t>(y) * w + x;
    return hole_prime.values[i] && !collision.values[i];
  };
  size_t i = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x, ++i) {
      if (!flow.valid[i]) continue;
      const double qx = x + flow.u[i], qy = y + flow.v[i];
      if (qx < 0.0 || qx > w - 1 || qy < 0.0 || qy > h - 1) continue;
      const int x0 = static_cast<int>(std::floor(qx)), y0 = static_cast<int>(std::floor(qy));
      const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
      if (!reliable(x0, y0) || !reliable(x1, y0) || !reliable(x0, y1) || !reliable(x1, y1))
        continue;
      for (int c = 0; c < nch; ++c)
        diffs[c].push_back(
            std::abs(im0.values[i * nch + c] - sample_bilinear(im1, qx, qy, c)));
    }
  }

  PhotoStats stats;
  stats.channels = nch;
  stats.n = diffs[0].size();
  for (int c = 0; c < nch && stats.n > 0; ++c) {
    auto mid = diffs[c].begin() + static_cast<std::ptrdiff_t>(stats.n / 2);
    std::nth_element(diffs[c].begin(), mid, diffs[c].end());
    stats.median[c] = *mid;
  }
  return stats;
}

inline constexpr double kPhotometricMedianTol = 10.0;

struct SampleReport {
  std::string prefix;
  bool ok = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<SampleReport> samples;
  size_t n_pass = 0;
  size_t n_fail = 0;

  bool all_pass() const { return n_fail == 0 && n_pass > 0; }
};

/// Re-read a generated dataset and check each sample's internal consistency:
/// matching dimensions, mask algebra (reliable implies covered), finite flow
/// at valid pixels, and the photometric round trip staying within tolerance.
inline VerifyReport verify(const std::string& out_dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(out_dir)) throw std::runtime_error(out_dir + ": not a directory");
  const std::string suffix = "_flow.flo";
  std::vector<std::string> prefixes;
  for (const auto& e : fs::directory_iterator(out_dir)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    if (name.size() > suffix.size() && name.ends_with(suffix))
      prefixes.push_back(name.substr(0, name.size() - suffix.size()));
  }
  std::sort(prefixes.begin(), prefixes.end());
  if (prefixes.empty())
    throw std::runtime_error(out_dir + ": no samples found (*_flow.flo)");

  VerifyReport report;
  for (const std::string& prefix : prefixes) {
    SampleReport sr;
    sr.prefix = prefix;
    const std::string base = (fs::path(out_dir) / prefix).string();
    try {
      const Image im0 = read_image(base + "_im0.png");
      const Image im1 = read_image(base + "_im1.png");
      const FlowField flow = read_flo(base + "_flow.flo");
      const BinaryMask collision = read_mask(base + "_mask_coll.png");
      const BinaryMask hole = read_mask(base + "_mask_hole.png");
      const BinaryMask hole_prime = read_mask(base + "_mask_holep.png");

      if (im0.width != im1.width || im0.height != im1.height ||
          im0.channels != im1.channels || flow.width != im0.width ||
          flow.height != im0.height || collision.width != im0.width ||
          collision.height != im0.height || hole.width != im0.width ||
          hole.height != im0.height || hole_prime.width != im0.width ||
          hole_prime.height != im0.height)
        throw std::runtime_error("file dimensions do not match across the sample");

      bool algebra_ok = true;
      for (size_t i = 0; i < hole.values.size(); ++i)
        if (hole_prime.values[i] && !hole.values[i]) algebra_ok = false;

      bool flow_ok = true;
      for (size_t i = 0; i < flow.size(); ++i)
        if (flow.valid[i] && (!std::isfinite(flow.u[i]) || !std::isfinite(flow.v[i])))
          flow_ok = false;

      const PhotoStats photo = photometric_roundtrip(im0, im1, flow, hole_prime, collision);
      const bool photo_ok = photo.n > 0 && photo.worst() <= kPhotometricMedianTol;

      sr.ok = algebra_ok && flow_ok && photo_ok;
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "mask_algebra=%s flow=%s photometric=%s (median %.2f over %zu px)",
                    algebra_ok ? "ok" : "FAIL", flow_ok ? "ok" : "FAIL",
                    photo_ok ? "ok" : "FAIL", photo.worst(), photo.n);
      sr.detail = buf;
    } catch (const std::exception& e) {
      sr.ok = false;
      sr.detail = e.what();
    }
    ++(sr.ok ? report.n_pass : report.n_fail);
    report.samples.push_back(std::move(sr));
  }
  return report;
}

struct EvalReport {
  std::vector<std::string> lines;  // one line per ground-truth file
  FlowErrorReport total;           // pixel-weighted aggregate over all files
  size_t n_files = 0;
  bool ok = false;
};

/// Evaluate predicted flow files against ground truth: every *.flo in gt_dir
/// must have an identically named prediction in pred_dir.
inline EvalReport evaluate_dirs(const std::string& pred_dir, const std::string& gt_dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(pred_dir)) throw std::runtime_error(pred_dir + ": not a directory");
  if (!fs::is_directory(gt_dir)) throw std::runtime_error(gt_dir + ": not a directory");

  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(gt_dir))
    if (e.is_regular_file() && e.path().extension() == ".flo")
      names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  if (names.empty()) throw std::runtime_error(gt_dir + ": no .flo files found");

  EvalReport report;
  report.ok = true;
  double err_sum = 0.0;
  size_t over3 = 0, fl = 0, n_total = 0;
  for (const std::string& name : names) {
    const std::string pred_path = (fs::path(pred_dir) / name).string();
    const std::string gt_path = (fs::path(gt_dir) / name).string();
    try {
      if (!fs::exists(pred_path)) throw std::runtime_error(name + ": missing prediction");
      const FlowField pred = read_flo(pred_path);
      const FlowField gt = read_flo(gt_path);
      const FlowErrorReport r = evaluate(pred, gt);
      report.lines.push_back(name + " " + report_line(r));
      const double n = static_cast<double>(r.n_valid);
      err_sum += r.epe * n;
      over3 += static_cast<size_t>(std::llround(r.rate_gt3 * n));
      fl += static_cast<size_t>(std::llround(r.fl * n));
      n_total += r.n_valid;
      ++report.n_files;
    } catch (const std::exception& e) {
      report.lines.push_back(std::string("FAIL ") + e.what());
      report.ok = false;
    }
  }
  if (n_total > 0) {
    report.total.epe = err_sum / static_cast<double>(n_total);
    report.total.rate_gt3 = static_cast<double>(over3) / static_cast<double>(n_total);
    report.total.fl = static_cast<double>(fl) / static_cast<double>(n_total);
    report.total.n_valid = n_total;
  }
  return report;
}

}  // namespace depthstill
