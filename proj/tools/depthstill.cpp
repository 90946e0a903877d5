// Command-line front end: generate a dataset from an image + depth corpus,
// re-verify a generated dataset, or score predicted flow against ground
// truth. Exit code 0 means every requested sample succeeded / every check
// passed.

#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "depthstill/depthstill.hpp"

namespace {

int run_generate(const std::string& config_path, const std::string& images_dir,
                 const std::string& depths_dir, const std::string& instances_dir,
                 const std::string& out_dir, int jobs) {
  const depthstill::GenerationConfig config = depthstill::load_config(config_path);
  const depthstill::GenerateSummary s =
      depthstill::generate(images_dir, depths_dir, instances_dir, out_dir, config, jobs);
  for (const std::string& f : s.failures) std::fprintf(stderr, "FAIL %s\n", f.c_str());
  std::printf("generated %zu/%zu samples (%zu failed) with %d worker%s in %.2fs\n", s.n_ok,
              s.n_planned, s.n_failed, s.jobs_used, s.jobs_used == 1 ? "" : "s",
              s.wall_seconds);
  std::printf("mean hole fraction %.4f, mean collision fraction %.4f\n",
              s.mean_hole_fraction, s.mean_collision_fraction);
  return s.all_ok() ? 0 : 1;
}

int run_verify(const std::string& out_dir) {
  const depthstill::VerifyReport report = depthstill::verify(out_dir);
  for (const depthstill::SampleReport& sr : report.samples)
    std::printf("%s %s: %s\n", sr.ok ? "ok  " : "FAIL", sr.prefix.c_str(), sr.detail.c_str());
  std::printf("verified %zu samples: %zu passed, %zu failed\n", report.samples.size(),
              report.n_pass, report.n_fail);
  return report.all_pass() ? 0 : 1;
}

int run_eval(const std::string& pred_dir, const std::string& gt_dir) {
  const depthstill::EvalReport report = depthstill::evaluate_dirs(pred_dir, gt_dir);
  for (const std::string& line : report.lines) std::printf("%s\n", line.c_str());
  std::printf("total (%zu files) %s\n", report.n_files,
              depthstill::report_line(report.total).c_str());
  return report.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthesize optical-flow training pairs from single images and depth maps"};
  app.set_version_flag("--version", depthstill::kVersion);
  app.require_subcommand(1);

  std::string config_path, images_dir, depths_dir, instances_dir, out_dir;
  std::string pred_dir, gt_dir;
  int jobs = 0;  // 0 = one worker per hardware thread

  CLI::App* generate = app.add_subcommand("generate", "synthesize a dataset");
  generate->add_option("--config", config_path, "generation config file")
      ->required()
      ->check(CLI::ExistingFile);
  generate->add_option("--images", images_dir, "directory with source .png images")
      ->required();
  generate->add_option("--depths", depths_dir,
                       "directory with per-image depth maps (<stem>.pfm or 16-bit <stem>.png)")
      ->required();
  generate->add_option("--instances", instances_dir,
                       "optional directory with per-image instance label PNGs");
  generate->add_option("--out", out_dir, "output dataset directory")->required();
  generate->add_option("--jobs", jobs, "worker threads (default: all hardware threads)")
      ->envname("DEPTHSTILL_JOBS");

  CLI::App* verify = app.add_subcommand("verify", "re-check a generated dataset");
  verify->add_option("--out", out_dir, "dataset directory to verify")->required();

  CLI::App* eval = app.add_subcommand("eval", "score predicted flow against ground truth");
  eval->add_option("--pred", pred_dir, "directory with predicted .flo files")->required();
  eval->add_option("--gt", gt_dir, "directory with ground-truth .flo files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed())
      return run_generate(config_path, images_dir, depths_dir, instances_dir, out_dir, jobs);
    if (verify->parsed()) return run_verify(out_dir);
    if (eval->parsed()) return run_eval(pred_dir, gt_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
