#include "roadscale/evaluation.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/SVD>

namespace roadscale {

namespace {

std::vector<Vector3d> positions(const Trajectory& traj) {
  std::vector<Vector3d> p;
  p.reserve(traj.size());
  for (const auto& pose : traj) p.push_back(pose.t());
  return p;
}

void require_same_length(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "trajectories have " + std::to_string(a.size()) + " and " + std::to_string(b.size()) + " poses");
  }
}

double relative_rotation_angle(const Matrix3d& a, const Matrix3d& b) {
  return Eigen::Quaterniond(a).angularDistance(Eigen::Quaterniond(b));
}

}  // namespace

Similarityd umeyama(std::span<const Vector3d> source, std::span<const Vector3d> target, bool with_scale) {
  if (source.size() != target.size()) throw Error(ErrorCode::LengthMismatch, "point sets differ in size");
  const std::size_t n = source.size();
  if (n < 3) throw Error(ErrorCode::DegenerateGeometry, "alignment needs at least 3 positions");
  if (std::equal(source.begin(), source.end(), target.begin())) return Similarityd();

  Vector3d mu_s = Vector3d::Zero(), mu_t = Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mu_s += source[i];
    mu_t += target[i];
  }
  mu_s /= static_cast<double>(n);
  mu_t /= static_cast<double>(n);

  Matrix3d cov = Matrix3d::Zero();
  Matrix3d src_scatter = Matrix3d::Zero();
  double var_s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vector3d ds = source[i] - mu_s;
    cov += (target[i] - mu_t) * ds.transpose();
    src_scatter += ds * ds.transpose();
    var_s += ds.squaredNorm();
  }
  cov /= static_cast<double>(n);
  var_s /= static_cast<double>(n);

  Eigen::JacobiSVD<Matrix3d> src_svd(src_scatter);
  const auto& ssv = src_svd.singularValues();
  if (!(ssv(0) > 0.0) || ssv(1) <= 1e-12 * ssv(0)) {
    throw Error(ErrorCode::DegenerateGeometry, "positions are collinear");
  }

  Eigen::JacobiSVD<Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3d S = Matrix3d::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0) S(2, 2) = -1.0;
  const Matrix3d R = svd.matrixU() * S * svd.matrixV().transpose();
  const double scale = with_scale ? (svd.singularValues().asDiagonal() * S).trace() / var_s : 1.0;
  const Vector3d t = mu_t - scale * R * mu_s;
  return Similarityd(scale, R, t);
}

Similarityd umeyama_align(const Trajectory& estimate, const Trajectory& reference, bool with_scale) {
  require_same_length(estimate, reference);
  const auto src = positions(estimate);
  const auto dst = positions(reference);
  return umeyama(src, dst, with_scale);
}

double ate(const Trajectory& estimate, const Trajectory& reference, bool align) {
  require_same_length(estimate, reference);
  if (estimate.empty()) throw Error(ErrorCode::InvalidArgument, "empty trajectory");
  const Similarityd sim = align ? umeyama_align(estimate, reference, true) : Similarityd();
  double sum = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    sum += (sim * estimate[i].t() - reference[i].t()).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(estimate.size()));
}

std::vector<double> trajectory_distances(const Trajectory& traj) {
  std::vector<double> dist;
  dist.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    dist.push_back(i == 0 ? 0.0 : dist.back() + (traj[i].t() - traj[i - 1].t()).norm());
  }
  return dist;
}

namespace {

struct SegmentSums {
  double trans_ratio_sum = 0.0;
  double angle_sum = 0.0;
  double length_sum = 0.0;
  std::size_t count = 0;
};

SegmentSums accumulate_segments(const Trajectory& estimate, const Trajectory& reference,
                                const std::vector<double>& dist, std::span<const double> lengths,
                                std::vector<double>& used) {
  SegmentSums sums;
  const std::size_t n = reference.size();
  for (const double len : lengths) {
    bool any = false;
    std::size_t last = 0;
    for (std::size_t first = 0; first < n; ++first) {
      // first frame whose arc length exceeds the segment length
      last = std::max(last, first);
      while (last < n && !(dist[last] > dist[first] + len)) ++last;
      if (last >= n) break;
      const Posed delta_ref = compose(invert(reference[first]), reference[last]);
      const Posed delta_est = compose(invert(estimate[first]), estimate[last]);
      const Posed err = compose(invert(delta_ref), delta_est);
      sums.trans_ratio_sum += err.t().norm() / len;
      sums.angle_sum += relative_rotation_angle(delta_ref.R(), delta_est.R());
      sums.length_sum += len;
      ++sums.count;
      any = true;
    }
    if (any) used.push_back(len);
  }
  return sums;
}

}  // namespace

RpeResult rpe_kitti(const Trajectory& estimate, const Trajectory& reference) {
  require_same_length(estimate, reference);
  const auto dist = trajectory_distances(reference);
  RpeResult result;
  SegmentSums sums = accumulate_segments(estimate, reference, dist, kKittiSegmentLengths, result.lengths);
  if (sums.count == 0) {
    const double total = dist.empty() ? 0.0 : dist.back();
    std::vector<double> fallback;
    for (int i = 1; i <= 8; ++i) {
      if (total > 0.0) fallback.push_back(total * i / 8.0);
    }
    sums = accumulate_segments(estimate, reference, dist, fallback, result.lengths);
  }
  if (sums.count == 0) throw Error(ErrorCode::PathTooShort, "reference path has no usable subsequence");
  result.segments = sums.count;
  result.trans_percent = 100.0 * sums.trans_ratio_sum / static_cast<double>(sums.count);
  result.rot_deg_per_m = (sums.angle_sum / sums.length_sum) * 180.0 / std::numbers::pi;
  return result;
}

MetricsReport evaluate(const Trajectory& estimate, const Trajectory& reference) {
  require_same_length(estimate, reference);
  MetricsReport report;
  report.n_frames = estimate.size();
  try {
    report.aligned_similarity = umeyama_align(estimate, reference, true);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateGeometry) throw;
    // collinear or too-short paths: compare without alignment
    report.aligned_similarity = Similarityd();
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    sum += (report.aligned_similarity * estimate[i].t() - reference[i].t()).squaredNorm();
  }
  report.ate_rmse_m = estimate.empty() ? 0.0 : std::sqrt(sum / static_cast<double>(estimate.size()));
  const RpeResult rpe = rpe_kitti(estimate, reference);
  report.rpe_trans_percent = rpe.trans_percent;
  report.rpe_rot_deg_per_m = rpe.rot_deg_per_m;
  return report;
}

}  // namespace roadscale
