#include "roadscale/scale_recovery.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

namespace roadscale {

namespace {

PlaneModel oriented(Vector3d n, const Vector3d& centroid) {
  if (n.y() < 0.0) n = -n;
  return {n, n.dot(centroid)};
}

std::size_t mark_inliers(const PlaneModel& plane, std::span<const Vector3d> points, double tol,
                         std::vector<bool>* mask) {
  std::size_t n = 0;
  if (mask) mask->assign(points.size(), false);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (std::abs(plane.distance(points[i])) <= tol) {
      ++n;
      if (mask) (*mask)[i] = true;
    }
  }
  return n;
}

}  // namespace

PlaneModel fit_plane_least_squares(std::span<const Vector3d> points) {
  if (points.size() < 3) throw Error(ErrorCode::TooFewPoints, "plane fit needs at least 3 points");
  Vector3d centroid = Vector3d::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  Matrix3d scatter = Matrix3d::Zero();
  for (const auto& p : points) {
    const Vector3d d = p - centroid;
    scatter += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Matrix3d> eig(scatter);
  const auto& ev = eig.eigenvalues();  // ascending
  if (ev(1) <= 1e-12 * std::max(ev(2), 1e-300)) throw Error(ErrorCode::AllCollinear, "points lie on a line");
  return oriented(eig.eigenvectors().col(0), centroid);
}

PlaneFit fit_plane_ransac(std::span<const Vector3d> points, std::uint64_t seed, const PlaneRansacParams& params) {
  if (points.size() < 3) throw Error(ErrorCode::TooFewPoints, "plane RANSAC needs at least 3 points");

  // collinearity of the whole set
  {
    Vector3d centroid = Vector3d::Zero();
    for (const auto& p : points) centroid += p;
    centroid /= static_cast<double>(points.size());
    Matrix3d scatter = Matrix3d::Zero();
    for (const auto& p : points) scatter += (p - centroid) * (p - centroid).transpose();
    Eigen::SelfAdjointEigenSolver<Matrix3d> eig(scatter, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues()(1) <= 1e-12 * std::max(eig.eigenvalues()(2), 1e-300)) {
      throw Error(ErrorCode::AllCollinear, "points lie on a line");
    }
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
  PlaneModel best;
  std::size_t best_count = 0;
  for (int iter = 0; iter < params.iterations; ++iter) {
    std::array<std::size_t, 3> s{pick(rng), pick(rng), pick(rng)};
    if (s[0] == s[1] || s[1] == s[2] || s[0] == s[2]) continue;
    const Vector3d& a = points[s[0]];
    const Vector3d n = (points[s[1]] - a).cross(points[s[2]] - a);
    const double norm = n.norm();
    if (!(norm > 1e-12)) continue;
    const PlaneModel candidate = oriented(n / norm, a);
    const std::size_t count = mark_inliers(candidate, points, params.dist_tol, nullptr);
    if (count > best_count) {
      best_count = count;
      best = candidate;
    }
  }
  if (best_count < std::max<std::size_t>(params.min_inliers, 3)) {
    throw Error(ErrorCode::NoConsensus, "best plane has " + std::to_string(best_count) + " inliers");
  }

  std::vector<bool> mask;
  mark_inliers(best, points, params.dist_tol, &mask);
  std::vector<Vector3d> inliers;
  inliers.reserve(best_count);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (mask[i]) inliers.push_back(points[i]);
  }

  PlaneFit fit;
  try {
    fit.plane = fit_plane_least_squares(inliers);
  } catch (const Error&) {
    fit.plane = best;
  }
  fit.inlier_count = mark_inliers(fit.plane, points, params.dist_tol, &fit.inliers);
  return fit;
}

PlaneFit fit_plane_ransac(std::span<const TrackedPointd> points, std::uint64_t seed, const PlaneRansacParams& params) {
  std::vector<Vector3d> xyz;
  xyz.reserve(points.size());
  for (const auto& p : points) xyz.push_back(p.point3d);
  return fit_plane_ransac(std::span<const Vector3d>(xyz), seed, params);
}

double scale_from_plane(const PlaneModel& plane, const CameraModeld& cam) {
  if (!(plane.h > kMinPlaneHeight)) throw Error(ErrorCode::NonPositiveHeight, "plane offset " + std::to_string(plane.h));
  return cam.camera_height_m() / plane.h;
}

ScaleQueue::ScaleQueue(std::size_t capacity, double sigma) : capacity_(capacity), sigma_(sigma) {
  if (capacity == 0) throw Error(ErrorCode::InvalidArgument, "scale window must hold at least one value");
  if (!(sigma > 0)) throw Error(ErrorCode::InvalidArgument, "filter sigma must be positive");
}

void ScaleQueue::push(double scale) {
  if (!(scale > 0) || !std::isfinite(scale)) throw Error(ErrorCode::InvalidArgument, "scales must be positive");
  values_.push_back(scale);
  while (values_.size() > capacity_) values_.pop_front();
}

std::vector<double> gaussian_kernel(std::size_t length, double sigma) {
  const std::ptrdiff_t r = static_cast<std::ptrdiff_t>((length - 1) / 2);
  std::vector<double> w(static_cast<std::size_t>(2 * r + 1));
  double sum = 0.0;
  for (std::ptrdiff_t k = -r; k <= r; ++k) {
    const double v = std::exp(-static_cast<double>(k * k) / (2.0 * sigma * sigma));
    w[static_cast<std::size_t>(k + r)] = v;
    sum += v;
  }
  for (auto& v : w) v /= sum;
  return w;
}

double mixed_filter(std::span<const double> values, double sigma) {
  if (values.empty()) throw Error(ErrorCode::EmptyQueue, "no scales to filter");
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(values.size());
  const auto w = gaussian_kernel(values.size(), sigma);
  const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(w.size() / 2);
  // half-sample symmetric reflection: (c b a | a b c | c b a)
  const auto reflect = [n](std::ptrdiff_t i) {
    if (i < 0) return -i - 1;
    if (i >= n) return 2 * n - i - 1;
    return i;
  };
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());

  std::vector<double> smoothed(values.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double center = values[static_cast<std::size_t>(i)];
    double acc = 0.0;
    for (std::ptrdiff_t k = -r; k <= r; ++k) {
      acc += w[static_cast<std::size_t>(k + r)] * (values[static_cast<std::size_t>(reflect(i + k))] - center);
    }
    smoothed[static_cast<std::size_t>(i)] = std::clamp(center + acc, *lo, *hi);
  }
  const auto mid = smoothed.begin() + (n - 1) / 2;
  std::nth_element(smoothed.begin(), mid, smoothed.end());
  return *mid;
}

double mixed_filter(const ScaleQueue& queue) {
  const std::vector<double> v(queue.values().begin(), queue.values().end());
  return mixed_filter(v, queue.sigma());
}

std::string_view to_string(ScaleMode mode) {
  switch (mode) {
    case ScaleMode::Fit: return "fit";
    case ScaleMode::ReusePlane: return "reuse_plane";
    case ScaleMode::ReuseScale: return "reuse_scale";
    case ScaleMode::Provisional: return "provisional";
  }
  return "unknown";
}

FrameScaleState::FrameScaleState(std::size_t min_points_, std::size_t window, double sigma)
    : min_points(min_points_), queue(window, sigma) {
  if (min_points < 3) throw Error(ErrorCode::InvalidArgument, "min_points must be at least 3");
}

FrameScale reuse_frame_scale(FrameScaleState& state) {
  FrameScale out;
  if (state.last_scale) {
    out.mode = ScaleMode::ReuseScale;
    out.raw_scale = *state.last_scale;
  } else {
    out.mode = ScaleMode::Provisional;
    out.raw_scale = 1.0;
  }
  out.filtered_scale = state.queue.empty() ? out.raw_scale : mixed_filter(state.queue);
  return out;
}

FrameScale recover_frame_scale(FrameScaleState& state, std::span<const TrackedPointd> road_points,
                               const CameraModeld& cam, std::uint64_t seed, double baseline) {
  if (!(baseline > 0) || !std::isfinite(baseline)) throw Error(ErrorCode::InvalidArgument, "baseline must be positive");

  FrameScale out;
  bool have_raw = false;
  if (road_points.size() >= state.min_points) {
    try {
      const PlaneFit fit = fit_plane_ransac(road_points, seed, state.ransac);
      const PlaneModel plane{fit.plane.n, fit.plane.h * baseline};
      out.raw_scale = scale_from_plane(plane, cam);
      out.mode = ScaleMode::Fit;
      out.plane_inliers = fit.inlier_count;
      state.last_plane = plane;
      have_raw = true;
    } catch (const Error&) {
      // too little structure this frame: fall through to the previous plane
    }
  }
  if (!have_raw && state.last_plane) {
    out.raw_scale = scale_from_plane(*state.last_plane, cam);
    out.mode = ScaleMode::ReusePlane;
    have_raw = true;
  }
  if (!have_raw) return reuse_frame_scale(state);

  state.queue.push(out.raw_scale);
  state.last_scale = out.raw_scale;
  out.filtered_scale = mixed_filter(state.queue);
  return out;
}

std::vector<Posed> apply_scales(std::span<const Posed> relative_motions, std::span<const double> scales) {
  if (relative_motions.size() != scales.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(relative_motions.size()) + " motions vs " +
                                               std::to_string(scales.size()) + " scales");
  }
  std::vector<Posed> trajectory;
  trajectory.reserve(relative_motions.size() + 1);
  trajectory.push_back(Posed::Identity());
  for (std::size_t k = 0; k < relative_motions.size(); ++k) {
    const Posed step(relative_motions[k].R(), relative_motions[k].t() * scales[k]);
    trajectory.push_back(compose(trajectory.back(), step));
  }
  return trajectory;
}

}  // namespace roadscale
