#include "roadscale/road_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace roadscale {

LabelMask::LabelMask(int width, int height, std::vector<std::uint8_t> labels, std::uint8_t road_label,
                     std::set<std::uint8_t> dynamic_labels)
    : width_(width), height_(height), labels_(std::move(labels)), road_label_(road_label),
      dynamic_labels_(std::move(dynamic_labels)) {
  if (width < 0 || height < 0) throw Error(ErrorCode::InvalidArgument, "negative mask size");
  if (labels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCode::DimensionMismatch, "label buffer does not match mask size");
  }
}

void LabelMask::set_semantics(std::uint8_t road_label, std::set<std::uint8_t> dynamic_labels) {
  road_label_ = road_label;
  dynamic_labels_ = std::move(dynamic_labels);
}

std::optional<std::uint8_t> LabelMask::lookup(const Pixeld& p) const {
  if (!p.finite()) return std::nullopt;
  const double x = std::floor(p.u + 0.5);
  const double y = std::floor(p.v + 0.5);
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return std::nullopt;
  return at(static_cast<int>(x), static_cast<int>(y));
}

bool LabelMask::is_road(const Pixeld& p) const {
  const auto l = lookup(p);
  return l && *l == road_label_;
}

bool LabelMask::is_dynamic(const Pixeld& p) const {
  const auto l = lookup(p);
  return l && dynamic_labels_.contains(*l);
}

std::vector<Pixeld> filter_dynamic(std::span<const Pixeld> features, const LabelMask& mask) {
  std::vector<Pixeld> out;
  out.reserve(features.size());
  for (const auto& f : features) {
    const auto l = mask.lookup(f);
    if (l && !mask.dynamic_labels().contains(*l)) out.push_back(f);
  }
  return out;
}

std::vector<Correspondence> filter_dynamic(std::span<const Correspondence> matches, const LabelMask& mask) {
  std::vector<Correspondence> out;
  out.reserve(matches.size());
  for (const auto& m : matches) {
    const auto l = mask.lookup(m.a);
    if (l && !mask.dynamic_labels().contains(*l)) out.push_back(m);
  }
  return out;
}

std::vector<TrackedPointd> filter_road(std::span<const TrackedPointd> points, const LabelMask& mask) {
  std::vector<TrackedPointd> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    if (mask.is_road(p.pixel)) out.push_back(p);
  }
  return out;
}

double depth_consistency_sigma(const TrackedPointd& p, const TrackedPointd& q) {
  return (p.pixel.v - q.pixel.v) * (p.depth() - q.depth());
}

std::vector<int> vote_ledger(std::span<const TrackedPointd> points, std::span<const Triangle> triangles) {
  std::vector<int> votes(points.size(), 0);
  for (const auto& tri : triangles) {
    for (int k = 0; k < 3; ++k) {
      const std::size_t i = tri[static_cast<std::size_t>(k)];
      const std::size_t j = tri[static_cast<std::size_t>((k + 1) % 3)];
      if (i >= points.size() || j >= points.size()) throw Error(ErrorCode::InvalidArgument, "triangle index out of range");
      const int delta = depth_consistency_sigma(points[i], points[j]) <= 0.0 ? 1 : -1;
      votes[i] += delta;
      votes[j] += delta;
    }
  }
  return votes;
}

std::vector<TrackedPointd> vote_select(std::span<const TrackedPointd> points, std::span<const Triangle> triangles,
                                       int beta_a) {
  const auto votes = vote_ledger(points, triangles);
  std::vector<TrackedPointd> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (votes[i] >= beta_a) out.push_back(points[i]);
  }
  return out;
}

namespace {

std::vector<Pixeld> pixels_of(std::span<const TrackedPointd> points) {
  std::vector<Pixeld> px;
  px.reserve(points.size());
  for (const auto& p : points) px.push_back(p.pixel);
  return px;
}

}  // namespace

std::vector<TrackedPointd> depth_consistency_select(std::span<const TrackedPointd> points, int beta_a) {
  const auto px = pixels_of(points);
  const auto triangles = delaunay(px);
  return vote_select(points, triangles, beta_a);
}

TrianglePlane triangle_plane(std::span<const TrackedPointd> points, const Triangle& tri) {
  const Vector3d& a = points[tri[0]].point3d;
  const Vector3d& b = points[tri[1]].point3d;
  const Vector3d& c = points[tri[2]].point3d;
  Vector3d n = (b - a).cross(c - a);
  const double norm = n.norm();
  if (!(norm >= 1e-12)) throw Error(ErrorCode::DegenerateTriangle, "vertices are collinear in 3D");
  n /= norm;
  if (n.y() < 0.0) n = -n;

  TrianglePlane plane;
  plane.n = n;
  plane.h = (n.dot(a) + n.dot(b) + n.dot(c)) / 3.0;
  // walls: normal lies in the image plane's horizontal, treat as zero pitch
  plane.theta = std::abs(n.y()) < 1e-9 ? 0.0 : std::asin(std::min(1.0, n.y()));
  return plane;
}

double motion_pitch(const Vector3d& t_dir) {
  const double norm = t_dir.norm();
  if (norm < 1e-12) return std::numeric_limits<double>::quiet_NaN();
  return std::asin(std::clamp(-t_dir.y() / norm, -1.0, 1.0));
}

double camera_pitch(const Matrix3d& R) {
  if (R(2, 2) == 0.0) return std::numbers::pi / 2;
  return std::abs(std::atan(-R(2, 1) / R(2, 2)));
}

double pitch_residual(double theta_road, double theta_triangle) {
  return std::abs(std::abs(theta_road) - std::abs(theta_triangle));
}

std::vector<TrackedPointd> road_model_select(std::span<const TrackedPointd> points, const Vector3d& t_dir,
                                             double theta0_rad) {
  if (points.size() < 3) throw Error(ErrorCode::TooFewPoints, "road model selection needs at least 3 points");
  const double theta_t = motion_pitch(t_dir);
  if (std::isnan(theta_t)) throw Error(ErrorCode::InvalidArgument, "zero motion vector has no pitch");
  const double theta_road = theta_t - std::numbers::pi / 2;

  const auto triangles = delaunay(pixels_of(points));
  std::vector<char> keep(points.size(), 0);
  for (const auto& tri : triangles) {
    TrianglePlane plane;
    try {
      plane = triangle_plane(points, tri);
    } catch (const Error&) {
      continue;
    }
    if (pitch_residual(theta_road, plane.theta) < theta0_rad) {
      for (const std::size_t i : tri.idx) keep[i] = 1;
    }
  }
  std::vector<TrackedPointd> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (keep[i]) out.push_back(points[i]);
  }
  return out;
}

}  // namespace roadscale
