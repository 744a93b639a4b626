#pragma once

// Road-plane fitting and metric scale from the mounted camera height, with
// sliding-window Gaussian + median smoothing of the per-frame scales.

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "roadscale/geometry.hpp"

namespace roadscale {

/// n·X = h with |n| = 1 and n_y > 0.
struct PlaneModel {
  Vector3d n = Vector3d::UnitY();
  double h = 0.0;

  double distance(const Vector3d& X) const { return n.dot(X) - h; }
};

struct PlaneRansacParams {
  int iterations = 200;
  double dist_tol = 0.02;
  std::size_t min_inliers = 6;
};

struct PlaneFit {
  PlaneModel plane;
  std::vector<bool> inliers;
  std::size_t inlier_count = 0;
};

/// Planes through (almost) the camera center cannot define a height ratio.
inline constexpr double kMinPlaneHeight = 1e-6;

/// Least-squares plane: smallest eigenvector of the centered scatter, offset through the centroid.
PlaneModel fit_plane_least_squares(std::span<const Vector3d> points);

PlaneFit fit_plane_ransac(std::span<const Vector3d> points, std::uint64_t seed, const PlaneRansacParams& params = {});
PlaneFit fit_plane_ransac(std::span<const TrackedPointd> points, std::uint64_t seed,
                          const PlaneRansacParams& params = {});

/// camera height / plane offset.
double scale_from_plane(const PlaneModel& plane, const CameraModeld& cam);

/// FIFO of the most recent raw per-frame scales.
class ScaleQueue {
 public:
  explicit ScaleQueue(std::size_t capacity = 5, double sigma = 5.0);

  void push(double scale);
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  std::size_t capacity() const { return capacity_; }
  double sigma() const { return sigma_; }
  const std::deque<double>& values() const { return values_; }

 private:
  std::size_t capacity_;
  double sigma_;
  std::deque<double> values_;
};

/// Centered, normalized Gaussian weights of half-width (length − 1) / 2.
std::vector<double> gaussian_kernel(std::size_t length, double sigma);

/// Gaussian smoothing (reflective boundary) followed by the lower median.
double mixed_filter(std::span<const double> values, double sigma);
double mixed_filter(const ScaleQueue& queue);

enum class ScaleMode { Fit, ReusePlane, ReuseScale, Provisional };

std::string_view to_string(ScaleMode mode);

struct FrameScaleState {
  explicit FrameScaleState(std::size_t min_points = 12, std::size_t window = 5, double sigma = 5.0);

  std::optional<PlaneModel> last_plane;  // reconstruction units
  std::optional<double> last_scale;
  std::size_t min_points;
  ScaleQueue queue;
  PlaneRansacParams ransac;
};

struct FrameScale {
  double raw_scale = 1.0;
  double filtered_scale = 1.0;
  ScaleMode mode = ScaleMode::Provisional;
  std::size_t plane_inliers = 0;
};

/// One step of the per-frame scale estimator. `road_points` are expressed in
/// units where the frame baseline has length 1; `baseline` is that length in
/// reconstruction units (1 when the reconstruction itself is unit-baseline).
/// Must be called in frame order.
FrameScale recover_frame_scale(FrameScaleState& state, std::span<const TrackedPointd> road_points,
                               const CameraModeld& cam, std::uint64_t seed, double baseline = 1.0);

/// Carries the previous estimate forward without looking at points.
FrameScale reuse_frame_scale(FrameScaleState& state);

/// Multiplies each relative motion's translation by its scale and chains from identity.
/// `relative_motions[k]` is P_k⁻¹·P_{k+1}; the result has one more pose than motions.
std::vector<Posed> apply_scales(std::span<const Posed> relative_motions, std::span<const double> scales);

}  // namespace roadscale
