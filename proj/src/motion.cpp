#include "roadscale/motion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/SVD>

namespace roadscale {

namespace {

constexpr int kMinimalSample = 8;

// Similarity that moves the centroid to the origin and sets the mean distance to sqrt(2).
Matrix3d hartley_transform(const std::vector<Vector2d>& pts) {
  Vector2d centroid = Vector2d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  const double s = mean_dist > 0 ? std::sqrt(2.0) / mean_dist : 1.0;
  Matrix3d T;
  T << s, 0, -s * centroid.x(), 0, s, -s * centroid.y(), 0, 0, 1;
  return T;
}

Matrix3d project_to_essential(const Matrix3d& M) {
  Eigen::JacobiSVD<Matrix3d> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d diag(1.0, 1.0, 0.0);
  return svd.matrixU() * diag.asDiagonal() * svd.matrixV().transpose();
}

double median_in_place(std::vector<double>& v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

std::size_t count_inliers(const Matrix3d& F, std::span<const Correspondence> matches, double thresh_sq,
                          std::vector<bool>* mask) {
  std::size_t n = 0;
  if (mask) mask->assign(matches.size(), false);
  for (std::size_t i = 0; i < matches.size(); ++i) {
    if (sampson_distance_sq(F, matches[i].a, matches[i].b) <= thresh_sq) {
      ++n;
      if (mask) (*mask)[i] = true;
    }
  }
  return n;
}

int required_iterations(double inlier_ratio, double confidence, int cap) {
  if (inlier_ratio >= 1.0) return 1;
  if (inlier_ratio <= 0.0) return cap;
  const double denom = std::log(1.0 - std::pow(inlier_ratio, kMinimalSample));
  if (denom >= 0.0) return cap;
  const double n = std::ceil(std::log(1.0 - confidence) / denom);
  return static_cast<int>(std::min<double>(n, cap));
}

}  // namespace

std::size_t EssentialModel::inlier_count() const {
  return static_cast<std::size_t>(std::count(inlier_mask.begin(), inlier_mask.end(), true));
}

double sampson_distance_sq(const Matrix3d& F, const Pixeld& a, const Pixeld& b) {
  const Vector3d xa = a.homogeneous();
  const Vector3d xb = b.homogeneous();
  const Vector3d Fa = F * xa;
  const Vector3d Ftb = F.transpose() * xb;
  const double num = xb.dot(Fa);
  const double den = Fa.x() * Fa.x() + Fa.y() * Fa.y() + Ftb.x() * Ftb.x() + Ftb.y() * Ftb.y();
  if (den <= 0.0) return std::numeric_limits<double>::infinity();
  return num * num / den;
}

Matrix3d fundamental_from_essential(const Matrix3d& E, const CameraModeld& cam) {
  const Matrix3d Kinv = cam.K_inverse();
  return Kinv.transpose() * E * Kinv;
}

Matrix3d essential_from_motion(const Matrix3d& R, const Vector3d& t) { return skew(t) * R; }

Matrix3d eight_point(std::span<const Correspondence> matches, const CameraModeld& cam) {
  if (matches.size() < kMinimalSample) {
    throw Error(ErrorCode::InsufficientMatches, "eight-point needs at least 8 correspondences");
  }
  std::vector<Vector2d> pa, pb;
  pa.reserve(matches.size());
  pb.reserve(matches.size());
  for (const auto& m : matches) {
    pa.push_back(cam.normalize(m.a).head<2>());
    pb.push_back(cam.normalize(m.b).head<2>());
  }
  const Matrix3d Ta = hartley_transform(pa);
  const Matrix3d Tb = hartley_transform(pb);

  Eigen::MatrixXd A(static_cast<Eigen::Index>(matches.size()), 9);
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const Vector3d xa = Ta * pa[i].homogeneous();
    const Vector3d xb = Tb * pb[i].homogeneous();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) A(static_cast<Eigen::Index>(i), 3 * r + c) = xb(r) * xa(c);
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::VectorXd e = svd.matrixV().col(8);
  Matrix3d En;
  En << e(0), e(1), e(2), e(3), e(4), e(5), e(6), e(7), e(8);
  return project_to_essential(Tb.transpose() * En * Ta);
}

double rotation_compensated_disparity(std::span<const Correspondence> matches, const CameraModeld& cam) {
  if (matches.empty()) return 0.0;
  Matrix3d H = Matrix3d::Zero();
  std::vector<Vector3d> ba, bb;
  ba.reserve(matches.size());
  bb.reserve(matches.size());
  for (const auto& m : matches) {
    ba.push_back(cam.normalize(m.a).normalized());
    bb.push_back(cam.normalize(m.b).normalized());
    H += bb.back() * ba.back().transpose();
  }
  Eigen::JacobiSVD<Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3d D = Matrix3d::Identity();
  D(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  const Matrix3d R = svd.matrixU() * D * svd.matrixV().transpose();

  std::vector<double> disparity(matches.size());
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const Vector3d r = R * ba[i];
    if (r.z() <= 0.0) {
      disparity[i] = std::numeric_limits<double>::infinity();
      continue;
    }
    const Pixeld predicted = project(cam, r);
    disparity[i] = (predicted.vec() - matches[i].b.vec()).norm();
  }
  return median_in_place(disparity);
}

EssentialModel estimate_essential(std::span<const Correspondence> matches, const CameraModeld& cam,
                                  std::uint64_t seed, const RansacParams& params) {
  if (matches.size() < kMinimalSample) {
    throw Error(ErrorCode::InsufficientMatches,
                std::to_string(matches.size()) + " correspondences, need " + std::to_string(kMinimalSample));
  }
  if (rotation_compensated_disparity(matches, cam) < params.min_disparity) {
    throw Error(ErrorCode::DegenerateConfiguration, "no parallax between frames");
  }

  const double thresh_sq = params.sampson_px * params.sampson_px;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> indices(matches.size());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  std::vector<Correspondence> sample(kMinimalSample);

  Matrix3d best_E = Matrix3d::Zero();
  std::size_t best_count = 0;
  int needed = params.iterations;
  for (int iter = 0; iter < needed && iter < params.iterations; ++iter) {
    // partial Fisher-Yates: first 8 entries become the sample
    for (int k = 0; k < kMinimalSample; ++k) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k), indices.size() - 1);
      std::swap(indices[static_cast<std::size_t>(k)], indices[pick(rng)]);
      sample[static_cast<std::size_t>(k)] = matches[indices[static_cast<std::size_t>(k)]];
    }
    const Matrix3d E = eight_point(sample, cam);
    const std::size_t n = count_inliers(fundamental_from_essential(E, cam), matches, thresh_sq, nullptr);
    if (n > best_count) {
      best_count = n;
      best_E = E;
      needed = required_iterations(static_cast<double>(n) / static_cast<double>(matches.size()),
                                   params.confidence, params.iterations);
    }
  }

  EssentialModel model;
  count_inliers(fundamental_from_essential(best_E, cam), matches, thresh_sq, &model.inlier_mask);
  if (best_count >= static_cast<std::size_t>(kMinimalSample)) {
    std::vector<Correspondence> inliers;
    inliers.reserve(best_count);
    for (std::size_t i = 0; i < matches.size(); ++i) {
      if (model.inlier_mask[i]) inliers.push_back(matches[i]);
    }
    const Matrix3d refit = eight_point(inliers, cam);
    std::vector<bool> refit_mask;
    const std::size_t n = count_inliers(fundamental_from_essential(refit, cam), matches, thresh_sq, &refit_mask);
    if (n >= best_count) {
      best_E = refit;
      model.inlier_mask = std::move(refit_mask);
    }
  }
  model.E = best_E;
  return model;
}

std::vector<RelativeMotion> essential_candidates(const Matrix3d& E) {
  Eigen::JacobiSVD<Matrix3d> svd(E, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3d U = svd.matrixU();
  Matrix3d V = svd.matrixV();
  if (U.determinant() < 0) U = -U;
  if (V.determinant() < 0) V = -V;
  Matrix3d W;
  W << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Matrix3d R1 = U * W * V.transpose();
  const Matrix3d R2 = U * W.transpose() * V.transpose();
  const Vector3d t = U.col(2).normalized();
  return {{R1, t}, {R1, -t}, {R2, t}, {R2, -t}};
}

RelativeMotion decompose_essential(const EssentialModel& model, std::span<const Correspondence> matches,
                                   const CameraModeld& cam) {
  const bool use_all = model.inlier_mask.empty();
  if (!use_all && model.inlier_mask.size() != matches.size()) {
    throw Error(ErrorCode::LengthMismatch, "inlier mask does not match correspondences");
  }
  const auto candidates = essential_candidates(model.E);
  std::vector<std::size_t> counts(candidates.size(), 0);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const Posed motion = candidates[c].pose();
    Vector3d X;
    for (std::size_t i = 0; i < matches.size(); ++i) {
      if (!use_all && !model.inlier_mask[i]) continue;
      if (triangulate_point(motion, cam, matches[i], X)) ++counts[c];
    }
  }
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return counts[x] > counts[y]; });
  if (counts[order[0]] == counts[order[1]]) {
    throw Error(ErrorCode::CheiralityAmbiguous, "two decompositions explain the same number of points");
  }
  return candidates[order[0]];
}

bool triangulate_point(const Posed& motion, const CameraModeld& cam, const Correspondence& m, Vector3d& X) {
  const Vector3d xa = cam.normalize(m.a);
  const Vector3d xb = cam.normalize(m.b);
  const Matrix3d& R = motion.R();
  const Vector3d& t = motion.t();

  // parallel rays carry no depth (e.g. a match sitting on the epipole)
  const Vector3d ray_a = xa.normalized();
  const Vector3d ray_b = (R.transpose() * xb).normalized();
  if (ray_a.cross(ray_b).norm() < 1e-12) return false;

  Eigen::Matrix<double, 3, 4> P2;
  P2.leftCols<3>() = R;
  P2.col(3) = t;
  Eigen::Matrix4d A;
  A.row(0) << -1, 0, xa.x(), 0;
  A.row(1) << 0, -1, xa.y(), 0;
  A.row(2) = xb.x() * P2.row(2) - P2.row(0);
  A.row(3) = xb.y() * P2.row(2) - P2.row(1);
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(A, Eigen::ComputeFullV);
  const Eigen::Vector4d h = svd.matrixV().col(3);
  if (std::abs(h(3)) < 1e-14 * h.head<3>().norm()) return false;
  X = h.head<3>() / h(3);
  if (!X.allFinite() || X.z() <= 0.0) return false;
  return (R * X + t).z() > 0.0;
}

std::vector<TrackedPointd> triangulate(const Posed& motion, std::span<const Correspondence> matches,
                                       const CameraModeld& cam) {
  std::vector<TrackedPointd> out;
  out.reserve(matches.size());
  Vector3d X;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    if (!triangulate_point(motion, cam, matches[i], X)) continue;
    out.push_back({matches[i].a, matches[i].b, X, i});
  }
  return out;
}

std::vector<TrackedPointd> triangulate(const RelativeMotion& motion, std::span<const Correspondence> matches,
                                       const CameraModeld& cam) {
  return triangulate(motion.pose(), matches, cam);
}

Eigen::VectorXd pnp_residuals(const Posed& pose, std::span<const Vector3d> points, std::span<const Pixeld> observations,
                              const CameraModeld& cam) {
  if (points.size() != observations.size()) throw Error(ErrorCode::LengthMismatch, "points vs observations");
  Eigen::VectorXd r(2 * static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Pixeld p = project(cam, Vector3d(pose * points[i]));
    r(2 * static_cast<Eigen::Index>(i)) = p.u - observations[i].u;
    r(2 * static_cast<Eigen::Index>(i) + 1) = p.v - observations[i].v;
  }
  return r;
}

Eigen::MatrixXd pnp_jacobian(const Posed& pose, std::span<const Vector3d> points, const CameraModeld& cam) {
  Eigen::MatrixXd J(2 * static_cast<Eigen::Index>(points.size()), 6);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vector3d p = pose * points[i];
    if (p.z() <= 0.0) throw Error(ErrorCode::NonPositiveDepth, "point behind camera in PnP");
    const double iz = 1.0 / p.z();
    Eigen::Matrix<double, 2, 3> dpi;
    dpi << cam.fx() * iz, 0, -cam.fx() * p.x() * iz * iz, 0, cam.fy() * iz, -cam.fy() * p.y() * iz * iz;
    Eigen::Matrix<double, 3, 6> dp;
    dp.leftCols<3>() = -skew(p);
    dp.rightCols<3>() = Matrix3d::Identity();
    J.middleRows<2>(2 * static_cast<Eigen::Index>(i)) = dpi * dp;
  }
  return J;
}

namespace {

Posed apply_update(const Posed& pose, const Eigen::Matrix<double, 6, 1>& delta) {
  const Matrix3d dR = exp_so3(Vector3d(delta.head<3>()));
  return Posed(dR * pose.R(), dR * pose.t() + delta.tail<3>());
}

double pnp_cost(const Posed& pose, std::span<const Vector3d> points, std::span<const Pixeld> observations,
                const CameraModeld& cam) {
  double cost = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vector3d p = pose * points[i];
    if (p.z() <= 0.0) return std::numeric_limits<double>::infinity();
    const Pixeld q = project(cam, p);
    cost += (q.vec() - observations[i].vec()).squaredNorm();
  }
  return cost;
}

}  // namespace

PnPResult refine_pose_pnp(std::span<const Vector3d> points, std::span<const Pixeld> observations,
                          const CameraModeld& cam, const Posed& initial) {
  constexpr int kMaxIterations = 50;
  constexpr int kMaxHalvings = 40;
  constexpr double kStepTolerance = 1e-10;
  if (points.size() != observations.size()) throw Error(ErrorCode::LengthMismatch, "points vs observations");
  if (points.size() < 4) throw Error(ErrorCode::TooFewPoints, "PnP needs at least 4 points");

  PnPResult result{initial, 0, {}};
  double cost = pnp_cost(initial, points, observations, cam);
  if (!std::isfinite(cost)) throw Error(ErrorCode::NonPositiveDepth, "initial pose puts points behind the camera");
  result.cost_history.push_back(cost);

  for (int iter = 0; iter < kMaxIterations; ++iter) {
    const Eigen::MatrixXd J = pnp_jacobian(result.pose, points, cam);
    const Eigen::VectorXd r = pnp_residuals(result.pose, points, observations, cam);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv(0) <= 0.0 || sv(5) < 1e-10 * sv(0)) {
      throw Error(ErrorCode::SingularNormalEquations, "reprojection Jacobian is rank deficient");
    }
    Eigen::Matrix<double, 6, 1> delta = -svd.solve(r);

    // halve the step until the cost stops increasing
    bool accepted = false;
    for (int h = 0; h < kMaxHalvings; ++h) {
      const Posed candidate = apply_update(result.pose, delta);
      const double c = pnp_cost(candidate, points, observations, cam);
      if (c <= cost) {
        result.pose = candidate;
        cost = c;
        accepted = true;
        break;
      }
      delta *= 0.5;
    }
    if (!accepted) break;
    result.iterations = iter + 1;
    result.cost_history.push_back(cost);
    if (delta.norm() < kStepTolerance) break;
  }
  return result;
}

}  // namespace roadscale
