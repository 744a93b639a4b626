#include "roadscale/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace roadscale {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr int kMaxAttemptsPerPoint = 200;
constexpr int kSlopeRampFrames = 10;
constexpr int kPointsPerVehicle = 25;

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

Matrix3d camera_rotation(double yaw, double pitch) {
  const Vector3d f(std::sin(yaw) * std::cos(pitch), -std::sin(pitch), std::cos(yaw) * std::cos(pitch));
  const Vector3d r(std::cos(yaw), 0.0, -std::sin(yaw));
  const Vector3d d = f.cross(r);
  Matrix3d R;
  R.col(0) = r;
  R.col(1) = d;
  R.col(2) = f;
  return R;
}

bool in_image(const SceneSpec& spec, const Pixeld& p) {
  return p.u >= 0.0 && p.v >= 0.0 && p.u <= spec.image_width - 1.0 && p.v <= spec.image_height - 1.0;
}

struct Vehicle {
  Vector3d center;  // bottom center, camera frame of the earlier view
  Vector3d size;    // width, height, length
  Vector3d displacement;
};

}  // namespace

std::string_view to_string(PointClass c) {
  switch (c) {
    case PointClass::Road: return "road";
    case PointClass::Clutter: return "clutter";
    case PointClass::Dynamic: return "dynamic";
  }
  return "unknown";
}

std::vector<TrajectorySegment> parse_trajectory(std::string_view text) {
  std::vector<TrajectorySegment> out;
  std::stringstream ss{std::string(text)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::vector<std::string> parts;
    std::stringstream is(item);
    std::string part;
    while (std::getline(is, part, ':')) parts.push_back(trim(part));
    TrajectorySegment seg;
    try {
      if (parts.size() == 2 && parts[0] == "straight") {
        seg.kind = SegmentKind::Straight;
      } else if (parts.size() == 3 && parts[0] == "arc") {
        seg.kind = SegmentKind::Arc;
        seg.value = std::stod(parts[2]);
      } else if (parts.size() == 3 && parts[0] == "slope") {
        seg.kind = SegmentKind::Slope;
        seg.value = std::stod(parts[2]);
      } else {
        throw Error(ErrorCode::ConfigError, "bad trajectory segment '" + item + "'");
      }
      seg.frames = std::stoi(parts[1]);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::ConfigError, "bad trajectory segment '" + item + "'");
    }
    if (seg.frames <= 0) throw Error(ErrorCode::ConfigError, "segment '" + item + "' must span at least one frame");
    out.push_back(seg);
  }
  if (out.empty()) throw Error(ErrorCode::ConfigError, "empty trajectory");
  return out;
}

std::string format_trajectory(const std::vector<TrajectorySegment>& segments) {
  std::ostringstream os;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (i) os << ", ";
    switch (s.kind) {
      case SegmentKind::Straight: os << "straight:" << s.frames; break;
      case SegmentKind::Arc: os << "arc:" << s.frames << ":" << s.value; break;
      case SegmentKind::Slope: os << "slope:" << s.frames << ":" << s.value; break;
    }
  }
  return os.str();
}

void SceneSpec::validate() const {
  camera();  // throws on bad intrinsics or height
  if (image_width <= 0 || image_height <= 0) throw Error(ErrorCode::InvalidArgument, "image size must be positive");
  if (n_road_points < 0 || n_clutter_points < 0 || n_dynamic_points < 0) {
    throw Error(ErrorCode::InvalidArgument, "point counts must be non-negative");
  }
  if (n_road_points + n_clutter_points + n_dynamic_points == 0) throw Error(ErrorCode::EmptyScene, "scene has no points");
  if (n_frames < 2) throw Error(ErrorCode::InvalidArgument, "need at least two frames");
  if (!(speed_mps > 0) || !(frame_rate_hz > 0)) throw Error(ErrorCode::InvalidArgument, "speed and frame rate must be positive");
  if (!(plane_extent_m > min_depth_m) || !(min_depth_m > 0) || !(road_half_width_m > 0)) {
    throw Error(ErrorCode::InvalidArgument, "bad road extent");
  }
  if (clutter_height_min_m > clutter_height_max_m || clutter_height_min_m < 0) {
    throw Error(ErrorCode::InvalidArgument, "bad clutter height range");
  }
  if (clutter_on_road_fraction < 0 || clutter_on_road_fraction > 1) {
    throw Error(ErrorCode::InvalidArgument, "clutter_on_road_fraction must be in [0, 1]");
  }
  if (pixel_noise_px < 0 || dynamic_velocity_mps < 0) throw Error(ErrorCode::InvalidArgument, "negative noise or velocity");
}

std::vector<Posed> generate_trajectory(const SceneSpec& spec) {
  const double step = spec.speed_mps / spec.frame_rate_hz;
  std::vector<Posed> poses;
  poses.reserve(static_cast<std::size_t>(spec.n_frames));
  double yaw = 0.0, pitch = 0.0;
  Vector3d c = Vector3d::Zero();
  poses.emplace_back(camera_rotation(yaw, pitch), c);

  std::size_t seg = 0;
  int seg_frame = 0;
  double pitch_start = 0.0;
  for (int k = 1; k < spec.n_frames; ++k) {
    double dyaw = 0.0, next_pitch = pitch;
    if (seg < spec.trajectory.size()) {
      const auto& s = spec.trajectory[seg];
      if (seg_frame == 0) pitch_start = pitch;
      if (s.kind == SegmentKind::Arc) {
        dyaw = s.value * kDeg / s.frames;
      } else if (s.kind == SegmentKind::Slope) {
        const int ramp = std::min(kSlopeRampFrames, s.frames);
        const double target = std::atan(s.value / 100.0);
        const double a = std::min(1.0, static_cast<double>(seg_frame + 1) / ramp);
        next_pitch = pitch_start + a * (target - pitch_start);
      }
      if (++seg_frame >= s.frames) {
        ++seg;
        seg_frame = 0;
      }
    }
    const double yaw_mid = yaw + 0.5 * dyaw, pitch_mid = 0.5 * (pitch + next_pitch);
    c += step * camera_rotation(yaw_mid, pitch_mid).col(2);
    yaw += dyaw;
    pitch = next_pitch;
    poses.emplace_back(camera_rotation(yaw, pitch), c);
  }
  return poses;
}

LabelMask rasterize_road(const SceneSpec& spec) {
  const int W = spec.image_width, H = spec.image_height;
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(W) * static_cast<std::size_t>(H), spec.background_label);
  for (int y = 0; y < H; ++y) {
    const double dv = y - spec.cy;
    if (dv < kHorizonGuardPx) continue;
    const double z = spec.camera_height_m * spec.fy / dv;
    if (z > spec.plane_extent_m) continue;
    for (int x = 0; x < W; ++x) {
      const double lateral = (x - spec.cx) * z / spec.fx;
      if (std::abs(lateral) <= spec.road_half_width_m) {
        labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(W) + static_cast<std::size_t>(x)] = spec.road_label;
      }
    }
  }
  return LabelMask(W, H, std::move(labels), spec.road_label, {spec.dynamic_label});
}

namespace {

class PairGenerator {
 public:
  PairGenerator(const SceneSpec& spec, const Posed& prev, const Posed& next, int index)
      : spec_(spec), cam_(spec.camera()), rng_(make_seed(spec.seed, index)), noise_(0.0, spec.pixel_noise_px),
        to_next_(compose(invert(next), prev)) {
    frame_.index = index;
    frame_.pose_prev_gt = prev;
    frame_.pose_gt = next;
  }

  FrameTruth run() {
    frame_.mask = rasterize_road(spec_);
    place_vehicles();
    add_dynamic_points();
    add_road_points();
    add_clutter_points();
    shuffle();
    return std::move(frame_);
  }

 private:
  static std::seed_seq::result_type fold(std::uint64_t v, int shift) {
    return static_cast<std::seed_seq::result_type>((v >> shift) & 0xffffffffu);
  }
  static std::mt19937_64 make_seed(std::uint64_t seed, int index) {
    std::seed_seq seq{fold(seed, 0), fold(seed, 32), static_cast<std::seed_seq::result_type>(index)};
    return std::mt19937_64(seq);
  }

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }

  Pixeld noisy(const Pixeld& p) {
    if (spec_.pixel_noise_px == 0.0) return p;
    return {p.u + noise_(rng_), p.v + noise_(rng_)};
  }

  // `x_prev_moved` is where the point sits at the later time, still expressed in the earlier camera frame.
  bool observe(const Vector3d& x_prev, const Vector3d& x_prev_moved, Correspondence& clean) const {
    const Vector3d x_next = to_next_ * x_prev_moved;
    if (x_prev.z() < spec_.min_depth_m * 0.5 || x_next.z() < spec_.min_depth_m * 0.5) return false;
    clean.a = project(cam_, x_prev);
    clean.b = project(cam_, x_next);
    return in_image(spec_, clean.a) && in_image(spec_, clean.b);
  }

  void push(const Correspondence& m, PointClass c, const Vector3d& x) {
    frame_.matches.push_back(m);
    frame_.classes.push_back(c);
    frame_.points_prev.push_back(x);
  }

  void place_vehicles() {
    if (spec_.n_dynamic_points == 0) return;
    const int count = std::max(1, (spec_.n_dynamic_points + kPointsPerVehicle - 1) / kPointsPerVehicle);
    const double dt = 1.0 / spec_.frame_rate_hz;
    for (int i = 0; i < count; ++i) {
      Vehicle v;
      v.size = Vector3d(1.8, 1.5, 4.0);
      const double half = std::max(0.0, spec_.road_half_width_m - 1.0);
      v.center = Vector3d(uniform(-half, half), spec_.camera_height_m,
                          uniform(spec_.min_depth_m + 5.0, std::max(spec_.min_depth_m + 6.0, spec_.plane_extent_m - 5.0)));
      const double heading = uniform(0.0, 2.0 * std::numbers::pi);
      v.displacement = spec_.dynamic_velocity_mps * dt * Vector3d(std::cos(heading), 0.0, std::sin(heading));
      vehicles_.push_back(v);

      // bounding rectangle of the projected box
      double u0 = 1e300, v0 = 1e300, u1 = -1e300, v1 = -1e300;
      bool visible = true;
      for (int corner = 0; corner < 8; ++corner) {
        const Vector3d off((corner & 1 ? 0.5 : -0.5) * v.size.x(), (corner & 2 ? -1.0 : 0.0) * v.size.y(),
                           (corner & 4 ? 0.5 : -0.5) * v.size.z());
        const Vector3d X = v.center + off;
        if (X.z() <= 0.5) {
          visible = false;
          break;
        }
        const Pixeld p = project(cam_, X);
        u0 = std::min(u0, p.u), v0 = std::min(v0, p.v), u1 = std::max(u1, p.u), v1 = std::max(v1, p.v);
      }
      if (!visible) continue;
      auto& mask = frame_.mask;
      const int x0 = std::max(0, static_cast<int>(std::floor(u0))), x1 = std::min(mask.width() - 1, static_cast<int>(std::ceil(u1)));
      const int y0 = std::max(0, static_cast<int>(std::floor(v0))), y1 = std::min(mask.height() - 1, static_cast<int>(std::ceil(v1)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) mask.at(x, y) = spec_.dynamic_label;
      }
    }
  }

  Vector3d sample_on_box(const Vehicle& v) {
    // faces weighted by area: sides (h×l), front/back (w×h), top (w×l)
    const double w = v.size.x(), h = v.size.y(), l = v.size.z();
    const double a_side = h * l, a_front = w * h, a_top = w * l;
    const double pick = uniform(0.0, 2 * a_side + 2 * a_front + a_top);
    Vector3d off;
    if (pick < 2 * a_side) {
      off = Vector3d(pick < a_side ? -0.5 * w : 0.5 * w, -uniform(0.0, h), uniform(-0.5 * l, 0.5 * l));
    } else if (pick < 2 * a_side + 2 * a_front) {
      off = Vector3d(uniform(-0.5 * w, 0.5 * w), -uniform(0.0, h), pick < 2 * a_side + a_front ? -0.5 * l : 0.5 * l);
    } else {
      off = Vector3d(uniform(-0.5 * w, 0.5 * w), -h, uniform(-0.5 * l, 0.5 * l));
    }
    return v.center + off;
  }

  void add_dynamic_points() {
    if (vehicles_.empty()) return;
    int added = 0;
    for (int attempt = 0; added < spec_.n_dynamic_points && attempt < spec_.n_dynamic_points * kMaxAttemptsPerPoint;
         ++attempt) {
      const Vehicle& v = vehicles_[static_cast<std::size_t>(added) % vehicles_.size()];
      const Vector3d X = sample_on_box(v);
      Correspondence clean;
      if (!observe(X, X + v.displacement, clean)) continue;
      const Correspondence m{noisy(clean.a), noisy(clean.b)};
      if (!frame_.mask.is_dynamic(m.a) || !in_image(spec_, m.b)) continue;
      push(m, PointClass::Dynamic, X);
      ++added;
    }
  }

  void add_road_points() {
    int added = 0;
    const double v_min = spec_.cy + kHorizonGuardPx;
    const double v_max = spec_.image_height - 1.0;
    if (v_min >= v_max) return;
    for (int attempt = 0; added < spec_.n_road_points && attempt < spec_.n_road_points * kMaxAttemptsPerPoint; ++attempt) {
      const Pixeld p(uniform(0.0, spec_.image_width - 1.0), uniform(v_min, v_max));
      if (!frame_.mask.is_road(p)) continue;
      const double z = ground_depth_from_row(cam_, spec_.camera_height_m, p.v);
      if (z < spec_.min_depth_m) continue;
      const Vector3d X = backproject(cam_, p, z);
      Correspondence clean;
      if (!observe(X, X, clean)) continue;
      const Correspondence m{noisy(clean.a), noisy(clean.b)};
      if (!frame_.mask.is_road(m.a) || !in_image(spec_, m.b)) continue;
      push(m, PointClass::Road, X);
      ++added;
    }
  }

  void add_clutter_points() {
    const int on_road = static_cast<int>(std::lround(spec_.n_clutter_points * spec_.clutter_on_road_fraction));
    int added = 0;
    const double w = spec_.road_half_width_m;
    for (int attempt = 0; added < spec_.n_clutter_points && attempt < spec_.n_clutter_points * kMaxAttemptsPerPoint;
         ++attempt) {
      const double height = uniform(spec_.clutter_height_min_m, spec_.clutter_height_max_m);
      Vector3d X;
      if (added < on_road) {
        X = Vector3d(uniform(-w, w), spec_.camera_height_m - height, uniform(spec_.min_depth_m, spec_.plane_extent_m));
      } else {
        const double side = uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0;
        X = Vector3d(side * (w + uniform(0.5, 10.0)), spec_.camera_height_m - height,
                     uniform(spec_.min_depth_m, spec_.plane_extent_m + 20.0));
      }
      Correspondence clean;
      if (!observe(X, X, clean)) continue;
      const Correspondence m{noisy(clean.a), noisy(clean.b)};
      const auto label = frame_.mask.lookup(m.a);
      if (!label || *label == spec_.dynamic_label || !in_image(spec_, m.b)) continue;
      push(m, PointClass::Clutter, X);
      ++added;
    }
  }

  void shuffle() {
    std::vector<std::size_t> order(frame_.matches.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng_);
    FrameTruth out;
    out.index = frame_.index;
    out.pose_prev_gt = frame_.pose_prev_gt;
    out.pose_gt = frame_.pose_gt;
    out.mask = std::move(frame_.mask);
    out.true_scale = frame_.true_scale;
    for (const std::size_t i : order) {
      out.matches.push_back(frame_.matches[i]);
      out.classes.push_back(frame_.classes[i]);
      out.points_prev.push_back(frame_.points_prev[i]);
    }
    frame_ = std::move(out);
  }

  const SceneSpec& spec_;
  CameraModeld cam_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> noise_;
  Posed to_next_;  // earlier camera frame -> later camera frame
  std::vector<Vehicle> vehicles_;
  FrameTruth frame_;
};

}  // namespace

SyntheticSequence generate_sequence(const SceneSpec& spec) {
  spec.validate();
  SyntheticSequence seq;
  seq.spec = spec;
  seq.poses_gt = generate_trajectory(spec);
  seq.frames.reserve(seq.poses_gt.size() - 1);
  for (std::size_t k = 0; k + 1 < seq.poses_gt.size(); ++k) {
    seq.frames.push_back(PairGenerator(spec, seq.poses_gt[k], seq.poses_gt[k + 1], static_cast<int>(k)).run());
  }
  return seq;
}

UnscaledReconstruction unscale(const SyntheticSequence& seq, double global_scale) {
  if (!(global_scale > 0) || !std::isfinite(global_scale)) {
    throw Error(ErrorCode::InvalidArgument, "global scale must be positive");
  }
  UnscaledReconstruction out;
  out.global_scale = global_scale;
  for (const auto& p : seq.poses_gt) out.vo_poses.emplace_back(p.R(), p.t() / global_scale);
  for (std::size_t k = 0; k + 1 < out.vo_poses.size(); ++k) {
    out.relative_motions.push_back(compose(invert(out.vo_poses[k]), out.vo_poses[k + 1]));
  }
  for (const auto& f : seq.frames) {
    std::vector<Vector3d> cloud;
    cloud.reserve(f.points_prev.size());
    for (const auto& X : f.points_prev) cloud.push_back(X / global_scale);
    out.clouds.push_back(std::move(cloud));
  }
  return out;
}

}  // namespace roadscale
