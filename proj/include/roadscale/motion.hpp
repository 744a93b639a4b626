#pragma once

// Two-view relative motion: normalized eight-point essential matrix inside
// RANSAC, cheirality-based decomposition, DLT triangulation, and Gauss-Newton
// PnP refinement.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "roadscale/geometry.hpp"

namespace roadscale {

struct Correspondence {
  Pixeld a;  // frame t-1
  Pixeld b;  // frame t
};

struct RansacParams {
  int iterations = 200;
  double sampson_px = 1.0;
  double min_disparity = 1.0;
  double confidence = 0.999;
};

struct EssentialModel {
  Matrix3d E = Matrix3d::Zero();
  std::vector<bool> inlier_mask;

  std::size_t inlier_count() const;
};

/// Motion taking points from the t-1 camera frame into the t camera frame:
/// X_t = R·X_{t-1} + t_dir·baseline. `t_dir` has unit length.
struct RelativeMotion {
  Matrix3d R = Matrix3d::Identity();
  Vector3d t_dir = Vector3d::UnitZ();

  Posed pose(double baseline = 1.0) const { return Posed(R, t_dir * baseline); }
};

/// Squared Sampson distance (px²) of a pixel pair under fundamental matrix F.
double sampson_distance_sq(const Matrix3d& F, const Pixeld& a, const Pixeld& b);

/// Pixel-space fundamental matrix K⁻ᵀ·E·K⁻¹.
Matrix3d fundamental_from_essential(const Matrix3d& E, const CameraModeld& cam);

/// Essential matrix [t]×·R of a motion.
Matrix3d essential_from_motion(const Matrix3d& R, const Vector3d& t);

/// Unconstrained normalized eight-point solve on ≥ 8 correspondences, projected
/// onto the essential manifold (two equal singular values, third zero).
Matrix3d eight_point(std::span<const Correspondence> matches, const CameraModeld& cam);

/// Median pixel disparity left after removing the best-fit pure rotation
/// between bearing vectors. Near zero for a stationary or purely rotating camera.
double rotation_compensated_disparity(std::span<const Correspondence> matches, const CameraModeld& cam);

EssentialModel estimate_essential(std::span<const Correspondence> matches, const CameraModeld& cam,
                                  std::uint64_t seed, const RansacParams& params = {});

/// The four (R, t) factorizations of an essential matrix, in a fixed order.
std::vector<RelativeMotion> essential_candidates(const Matrix3d& E);

/// Picks the candidate with the most points in front of both cameras.
/// Only correspondences flagged in `model.inlier_mask` participate (all when the mask is empty).
RelativeMotion decompose_essential(const EssentialModel& model, std::span<const Correspondence> matches,
                                   const CameraModeld& cam);

/// Linear triangulation of one correspondence under `motion` (frame t-1 -> t).
/// Returns false when the rays are parallel or the point is not in front of both views.
bool triangulate_point(const Posed& motion, const CameraModeld& cam, const Correspondence& m, Vector3d& X);

/// DLT triangulation in the t-1 camera frame. Degenerate or behind-camera points are dropped;
/// each output keeps the index of its correspondence in `id`.
std::vector<TrackedPointd> triangulate(const Posed& motion, std::span<const Correspondence> matches,
                                       const CameraModeld& cam);
std::vector<TrackedPointd> triangulate(const RelativeMotion& motion, std::span<const Correspondence> matches,
                                       const CameraModeld& cam);

struct PnPResult {
  Posed pose;
  int iterations = 0;
  /// Sum of squared reprojection residuals after each accepted iteration, starting with the initial cost.
  std::vector<double> cost_history;
};

/// Stacked 2N×6 Jacobian of the reprojection residuals with respect to a left
/// perturbation (δω, δt): R ← exp(δω)·R, t ← exp(δω)·t + δt.
Eigen::MatrixXd pnp_jacobian(const Posed& pose, std::span<const Vector3d> points, const CameraModeld& cam);

/// Stacked reprojection residuals π(R·X + t) − x.
Eigen::VectorXd pnp_residuals(const Posed& pose, std::span<const Vector3d> points, std::span<const Pixeld> observations,
                              const CameraModeld& cam);

PnPResult refine_pose_pnp(std::span<const Vector3d> points, std::span<const Pixeld> observations,
                          const CameraModeld& cam, const Posed& initial);

}  // namespace roadscale
