#pragma once

// Flat `key = value` configuration shared by the synth and recover commands.

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>

#include "roadscale/motion.hpp"
#include "roadscale/scale_recovery.hpp"
#include "roadscale/synth.hpp"

namespace roadscale {

/// Where the frame-to-frame motion comes from. `vo` reads an unscaled VO trajectory
/// (poses_vo.txt) and only recovers its scale; `essential` estimates the motion from
/// the correspondences.
enum class MotionSource { Vo, Essential };

std::string_view to_string(MotionSource s);

struct PipelineConfig {
  // camera, image size, road label and all synth parameters live here
  SceneSpec scene;
  std::set<std::uint8_t> dynamic_labels{2};

  double theta0_deg = 5.0;
  int beta_a = 1;
  std::size_t window_q = 5;
  double filter_sigma = 5.0;
  std::size_t min_points = 12;
  std::uint64_t seed = 0;

  RansacParams essential;
  PlaneRansacParams plane;
  MotionSource motion_source = MotionSource::Vo;
  bool pnp_refine = true;

  /// synth only: the VO trajectory written next to the ground truth is divided by this.
  double global_scale = 1.0;

  CameraModeld camera() const { return scene.camera(); }
  double theta0_rad() const;
  void validate() const;
};

/// Throws ConfigError (with a line number where one applies) on unknown keys,
/// duplicates, malformed values or failed validation.
PipelineConfig parse_config(std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(format_config(c)) reproduces c.
std::string format_config(const PipelineConfig& config);

}  // namespace roadscale
