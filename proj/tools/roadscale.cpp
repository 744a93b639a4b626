// roadscale command-line front end.
//
//   roadscale synth   --config C --out DIR
//   roadscale recover --config C --in DIR --out DIR
//   roadscale eval    --est F --ref F --out report.json
//   roadscale plot    --traj F [--traj F ...] --out plot.svg
//
// Exit codes: 0 success, 2 config error, 3 input parse error, 4 pipeline failure.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "roadscale/config.hpp"
#include "roadscale/errors.hpp"
#include "roadscale/pipeline.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kInputError = 3;
constexpr int kPipelineError = 4;

int exit_code(roadscale::ErrorCode code) {
  using roadscale::ErrorCode;
  switch (code) {
    case ErrorCode::ConfigError:
      return kConfigError;
    case ErrorCode::ParseError:
    case ErrorCode::UnsupportedFormat:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::IoError:
    case ErrorCode::InvalidRotation:
    case ErrorCode::LengthMismatch:
      return kInputError;
    default:
      return kPipelineError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metric scale recovery for monocular VO from the camera height above the road"};
  app.require_subcommand(1);

  std::string config_path, in_dir, out_path, est_path, ref_path;
  std::vector<std::string> traj_paths;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic sequence with ground truth");
  synth->add_option("--config", config_path, "Config file")->required();
  synth->add_option("--out", out_path, "Output directory")->required();

  auto* recover = app.add_subcommand("recover", "Recover per-frame scale and write the scaled trajectory");
  recover->add_option("--config", config_path, "Config file")->required();
  recover->add_option("--in", in_dir, "Input directory (matches/, masks/, poses_vo.txt)")->required();
  recover->add_option("--out", out_path, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "ATE / RPE report of an estimate against a reference");
  eval->add_option("--est", est_path, "Estimated trajectory (KITTI format)")->required();
  eval->add_option("--ref", ref_path, "Reference trajectory (KITTI format)")->required();
  eval->add_option("--out", out_path, "Report JSON")->required();

  auto* plot = app.add_subcommand("plot", "Top-down SVG of one or more trajectories");
  plot->add_option("--traj", traj_paths, "Trajectory file (repeatable)")->required();
  plot->add_option("--out", out_path, "Output SVG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  try {
    if (*synth) {
      roadscale::run_synth(roadscale::load_config(config_path), out_path);
    } else if (*recover) {
      const auto result = roadscale::run_recover(roadscale::load_config(config_path), in_dir, out_path);
      std::cout << "recovered " << result.frames.size() << " frame pairs\n";
    } else if (*eval) {
      const auto report = roadscale::run_eval(est_path, ref_path, out_path);
      std::cout << "ATE " << report.ate_rmse_m << " m, RPE " << report.rpe_trans_percent << " %, "
                << report.rpe_rot_deg_per_m << " deg/m\n";
    } else if (*plot) {
      std::vector<std::filesystem::path> paths(traj_paths.begin(), traj_paths.end());
      roadscale::run_plot(paths, out_path);
    }
  } catch (const roadscale::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kPipelineError;
  }
  return 0;
}
