#pragma once

// Deterministic synthetic driving sequences with ground truth: a camera at a
// known height over a locally planar road, off-road clutter, moving objects,
// noisy two-view correspondences and rasterized label masks.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "roadscale/geometry.hpp"
#include "roadscale/motion.hpp"
#include "roadscale/road_selection.hpp"

namespace roadscale {

enum class SegmentKind { Straight, Arc, Slope };

/// `value` is the total yaw change in degrees for arcs and the grade in percent for slopes.
struct TrajectorySegment {
  SegmentKind kind = SegmentKind::Straight;
  int frames = 0;
  double value = 0.0;
};

/// Parses "straight:60, arc:50:30, slope:50:5".
std::vector<TrajectorySegment> parse_trajectory(std::string_view text);
std::string format_trajectory(const std::vector<TrajectorySegment>& segments);

enum class PointClass : std::uint8_t { Road = 0, Clutter = 1, Dynamic = 2 };

std::string_view to_string(PointClass c);

struct SceneSpec {
  // virtual camera
  double fx = 700.0, fy = 700.0, cx = 640.0, cy = 360.0;
  int image_width = 1280, image_height = 720;
  double camera_height_m = 1.65;

  // road corridor in front of each camera
  double plane_extent_m = 30.0;
  double road_half_width_m = 5.0;
  double min_depth_m = 3.0;

  int n_road_points = 300;
  int n_clutter_points = 150;
  double clutter_height_min_m = 0.3;
  double clutter_height_max_m = 3.0;
  /// Share of clutter placed over the road footprint, where some of it is
  /// covered by road-labeled pixels (segmentation leaks).
  double clutter_on_road_fraction = 0.5;
  int n_dynamic_points = 50;
  double dynamic_velocity_mps = 8.0;
  double pixel_noise_px = 0.5;

  std::vector<TrajectorySegment> trajectory{{SegmentKind::Straight, 100, 0.0}};
  int n_frames = 100;
  double speed_mps = 10.0;
  double frame_rate_hz = 10.0;
  std::uint64_t seed = 0;

  std::uint8_t background_label = 0;
  std::uint8_t road_label = 1;
  std::uint8_t dynamic_label = 2;

  CameraModeld camera() const { return {fx, fy, cx, cy, camera_height_m}; }
  void validate() const;
};

/// Ground truth for the frame pair (index, index + 1).
struct FrameTruth {
  int index = 0;
  Posed pose_prev_gt;  // world-from-camera, metric
  Posed pose_gt;
  std::vector<Correspondence> matches;
  std::vector<PointClass> classes;
  std::vector<Vector3d> points_prev;  // in the index camera frame, metric (dynamic points at their index-time position)
  LabelMask mask;                     // labels of frame `index`
  double true_scale = 1.0;
};

struct SyntheticSequence {
  SceneSpec spec;
  std::vector<Posed> poses_gt;    // n_frames
  std::vector<FrameTruth> frames;  // n_frames - 1
};

/// Ground-truth camera poses for the parametric path.
std::vector<Posed> generate_trajectory(const SceneSpec& spec);

/// Road/background label image for a camera level with its local road plane.
LabelMask rasterize_road(const SceneSpec& spec);

SyntheticSequence generate_sequence(const SceneSpec& spec);

/// What a monocular system would hand over: the same geometry divided by a global scale.
struct UnscaledReconstruction {
  double global_scale = 1.0;
  std::vector<Posed> vo_poses;                       // translations divided by the scale
  std::vector<Posed> relative_motions;               // P_k⁻¹·P_{k+1}
  std::vector<std::vector<Vector3d>> clouds;         // points_prev divided by the scale
};

UnscaledReconstruction unscale(const SyntheticSequence& seq, double global_scale);

}  // namespace roadscale
