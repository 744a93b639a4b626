#pragma once

// Road-point selection from triangulated features: label-mask filtering,
// depth-consistency voting over a Delaunay mesh, and the road-model pitch gate.

#include <cstdint>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "roadscale/delaunay.hpp"
#include "roadscale/geometry.hpp"
#include "roadscale/motion.hpp"

namespace roadscale {

/// Row-major 8-bit class image.
class LabelMask {
 public:
  LabelMask() = default;
  LabelMask(int width, int height, std::vector<std::uint8_t> labels, std::uint8_t road_label = 1,
            std::set<std::uint8_t> dynamic_labels = {2});

  int width() const { return width_; }
  int height() const { return height_; }
  std::uint8_t road_label() const { return road_label_; }
  const std::set<std::uint8_t>& dynamic_labels() const { return dynamic_labels_; }
  const std::vector<std::uint8_t>& labels() const { return labels_; }

  void set_semantics(std::uint8_t road_label, std::set<std::uint8_t> dynamic_labels);

  std::uint8_t at(int x, int y) const { return labels_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)]; }
  std::uint8_t& at(int x, int y) { return labels_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)]; }

  /// Label under a sub-pixel position (round half up), or nothing when outside the image.
  std::optional<std::uint8_t> lookup(const Pixeld& p) const;

  bool is_road(const Pixeld& p) const;
  bool is_dynamic(const Pixeld& p) const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> labels_;
  std::uint8_t road_label_ = 1;
  std::set<std::uint8_t> dynamic_labels_{2};
};

struct TrianglePlane {
  Vector3d n = Vector3d::UnitY();
  double h = 0.0;
  double theta = std::numbers::pi / 2;  // pitch, asin(n_y)
};

struct RoadSelectionParams {
  double theta0_rad = 5.0 * std::numbers::pi / 180.0;
  int beta_a = 1;
};

/// Drops pixels that land on a dynamic label or outside the mask.
std::vector<Pixeld> filter_dynamic(std::span<const Pixeld> features, const LabelMask& mask);

/// Same filter applied to correspondences, judged by the frame t-1 pixel.
std::vector<Correspondence> filter_dynamic(std::span<const Correspondence> matches, const LabelMask& mask);

/// Keeps points whose frame t-1 pixel lands on the road label.
std::vector<TrackedPointd> filter_road(std::span<const TrackedPointd> points, const LabelMask& mask);

/// (v_p − v_q)·(d_p − d_q). Non-positive for any two points of a ground plane below the camera.
double depth_consistency_sigma(const TrackedPointd& p, const TrackedPointd& q);

/// Per-point net votes over all triangle edges (one update per edge occurrence).
std::vector<int> vote_ledger(std::span<const TrackedPointd> points, std::span<const Triangle> triangles);

/// Keeps points with net vote ≥ beta_a.
std::vector<TrackedPointd> vote_select(std::span<const TrackedPointd> points, std::span<const Triangle> triangles,
                                       int beta_a);

/// Delaunay over the frame t-1 pixels followed by vote_select.
std::vector<TrackedPointd> depth_consistency_select(std::span<const TrackedPointd> points, int beta_a);

/// Unit normal with n_y > 0 through the three vertices, offset n·X, and pitch asin(n_y).
TrianglePlane triangle_plane(std::span<const TrackedPointd> points, const Triangle& tri);

/// asin(−t_y/|t|), or NaN for a zero vector.
double motion_pitch(const Vector3d& t_dir);

/// Camera pitch from a rotation, |atan(−R₃₂/R₃₃)| (π/2 when R₃₃ = 0). Not used by the pipeline,
/// which assumes a level-mounted camera.
double camera_pitch(const Matrix3d& R);

/// | |θ_r| − |θ_i| |.
double pitch_residual(double theta_road, double theta_triangle);

/// Re-triangulates the points and keeps every vertex of a triangle whose pitch
/// agrees with the motion-derived road pitch to within theta0.
std::vector<TrackedPointd> road_model_select(std::span<const TrackedPointd> points, const Vector3d& t_dir,
                                             double theta0_rad);

}  // namespace roadscale
