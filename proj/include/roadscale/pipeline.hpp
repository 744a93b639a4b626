#pragma once

// The command-level pipelines: synth, recover, eval and plot.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "roadscale/config.hpp"
#include "roadscale/evaluation.hpp"
#include "roadscale/motion.hpp"
#include "roadscale/road_selection.hpp"
#include "roadscale/scale_recovery.hpp"

namespace roadscale {

namespace fs = std::filesystem;

/// Everything the recover stage sees for the frame pair (k, k + 1).
struct FrameInput {
  std::vector<Correspondence> matches;
  LabelMask mask;                  // labels of frame k
  std::optional<Posed> vo_motion;  // P_k⁻¹·P_{k+1} of the unscaled trajectory
};

struct FrameReport {
  int index = 0;
  FrameScale scale;
  Posed relative_motion = Posed::Identity();  // P_k⁻¹·P_{k+1} before scaling
  std::size_t n_matches = 0;
  std::size_t n_static = 0;
  std::size_t n_motion_inliers = 0;
  std::size_t n_triangulated = 0;
  std::size_t n_road = 0;
  std::size_t n_voted = 0;
  std::size_t n_selected = 0;
  /// Indices into FrameInput::matches of the road-mask points entering selection.
  std::vector<std::size_t> candidate_ids;
  /// Indices into FrameInput::matches of the points handed to the plane fit.
  std::vector<std::size_t> selected_ids;
  std::string note;
};

/// 64-bit seed of the per-frame random stages.
std::uint64_t frame_seed(std::uint64_t seed, int frame);

/// Sequential per-frame scale recovery. Frames must be fed in order.
class ScaleRecoveryPipeline {
 public:
  explicit ScaleRecoveryPipeline(PipelineConfig config);

  FrameReport process(const FrameInput& input);

  const std::vector<FrameReport>& reports() const { return reports_; }
  /// Scaled trajectory chained from identity over the frames processed so far.
  Trajectory trajectory() const;

 private:
  PipelineConfig config_;
  CameraModeld cam_;
  FrameScaleState state_;
  std::optional<Posed> last_motion_;
  std::vector<FrameReport> reports_;
};

std::string format_scales_csv(const std::vector<FrameReport>& reports);
std::string format_run_log(const PipelineConfig& config, const std::vector<FrameReport>& reports);

/// Writes poses_gt.txt, poses_vo.txt, matches/, masks/ and classes/ under `out`.
void run_synth(const PipelineConfig& config, const fs::path& out);

struct RecoverResult {
  Trajectory trajectory;
  std::vector<FrameReport> frames;
};

/// Reads matches/, masks/ (and poses_vo.txt for the vo motion source) from `in`;
/// writes trajectory.txt, scales.csv and run.log to `out`.
RecoverResult run_recover(const PipelineConfig& config, const fs::path& in, const fs::path& out);

std::string format_report_json(const MetricsReport& report);
MetricsReport run_eval(const fs::path& estimate, const fs::path& reference, const fs::path& out);

/// Top-down (x, z) overlay, one polyline per trajectory.
std::string render_svg(const std::vector<Trajectory>& trajectories);
/// `trajectory,frame,x,y,z`, positions formatted like the pose files.
std::string format_positions_csv(const std::vector<Trajectory>& trajectories);
/// Writes the SVG and a CSV with the same stem next to it.
void run_plot(const std::vector<fs::path>& trajectories, const fs::path& out_svg);

}  // namespace roadscale
