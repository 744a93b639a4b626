#pragma once

// Trajectory accuracy: Umeyama alignment, ATE, KITTI-style RPE.

#include <array>
#include <span>
#include <vector>

#include "roadscale/geometry.hpp"

namespace roadscale {

/// World-from-camera poses in frame order.
using Trajectory = std::vector<Posed>;

struct MetricsReport {
  double ate_rmse_m = 0.0;
  double rpe_trans_percent = 0.0;
  double rpe_rot_deg_per_m = 0.0;
  Similarityd aligned_similarity;
  std::size_t n_frames = 0;
};

struct RpeResult {
  double trans_percent = 0.0;
  double rot_deg_per_m = 0.0;
  std::size_t segments = 0;
  std::vector<double> lengths;  // subsequence lengths actually used
};

inline constexpr std::array<double, 8> kKittiSegmentLengths{100, 200, 300, 400, 500, 600, 700, 800};

/// Closed-form least-squares similarity taking source positions onto target positions.
Similarityd umeyama(std::span<const Vector3d> source, std::span<const Vector3d> target, bool with_scale);

/// Similarity mapping the estimate's camera positions onto the reference's.
Similarityd umeyama_align(const Trajectory& estimate, const Trajectory& reference, bool with_scale);

/// RMSE of position differences, optionally after 7-DOF alignment.
double ate(const Trajectory& estimate, const Trajectory& reference, bool align);

/// Cumulative path length of the camera positions.
std::vector<double> trajectory_distances(const Trajectory& traj);

/// KITTI odometry RPE. Every frame is a start candidate; the segment ends at the first frame
/// whose reference arc length exceeds start + length. When no standard length fits, the
/// lengths i·L/8 (i = 1..8) of the total reference length L are used instead.
RpeResult rpe_kitti(const Trajectory& estimate, const Trajectory& reference);

MetricsReport evaluate(const Trajectory& estimate, const Trajectory& reference);

}  // namespace roadscale
