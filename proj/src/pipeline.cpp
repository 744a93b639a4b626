#include "roadscale/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <regex>
#include <sstream>

#include "json.hpp"
#include "roadscale/io.hpp"
#include "roadscale/synth.hpp"

namespace roadscale {

std::uint64_t frame_seed(std::uint64_t seed, int frame) {
  // splitmix64 finalizer over seed and frame index
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(frame) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

ScaleRecoveryPipeline::ScaleRecoveryPipeline(PipelineConfig config)
    : config_(std::move(config)),
      cam_(config_.camera()),
      state_(config_.min_points, config_.window_q, config_.filter_sigma) {
  config_.validate();
  state_.ransac = config_.plane;
}

namespace {

struct MotionEstimate {
  Posed motion = Posed::Identity();  // X_{k+1} = R·X_k + t, unit translation
  double baseline = 0.0;             // translation length in reconstruction units
  std::vector<std::size_t> inliers;  // indices into the static list
};

std::string error_note(std::string_view stage, const Error& e) {
  return std::string(stage) + ": " + std::string(to_string(e.code()));
}

}  // namespace

FrameReport ScaleRecoveryPipeline::process(const FrameInput& input) {
  FrameReport report;
  report.index = static_cast<int>(reports_.size());
  report.n_matches = input.matches.size();
  const std::uint64_t seed = frame_seed(config_.seed, report.index);
  std::vector<std::string> notes;

  // dynamic filter, keeping the original match indices
  std::vector<Correspondence> stat;
  std::vector<std::size_t> stat_ids;
  for (std::size_t i = 0; i < input.matches.size(); ++i) {
    const auto& m = input.matches[i];
    if (input.mask.lookup(m.a) && !input.mask.is_dynamic(m.a)) {
      stat.push_back(m);
      stat_ids.push_back(i);
    }
  }
  report.n_static = stat.size();

  // motion
  std::optional<MotionEstimate> est;
  if (config_.motion_source == MotionSource::Vo) {
    if (!input.vo_motion) throw Error(ErrorCode::InvalidArgument, "vo motion source without VO poses");
    report.relative_motion = *input.vo_motion;
    const Posed m = invert(*input.vo_motion);
    const double b = m.t().norm();
    if (b > 1e-12) {
      MotionEstimate e{Posed(m.R(), m.t() / b), b, {}};
      const Matrix3d F = fundamental_from_essential(essential_from_motion(e.motion.R(), e.motion.t()), cam_);
      const double tol = config_.essential.sampson_px * config_.essential.sampson_px;
      for (std::size_t i = 0; i < stat.size(); ++i) {
        if (sampson_distance_sq(F, stat[i].a, stat[i].b) <= tol) e.inliers.push_back(i);
      }
      est = std::move(e);
    } else {
      notes.push_back("motion: stationary");
    }
  } else {
    try {
      const EssentialModel model = estimate_essential(stat, cam_, seed, config_.essential);
      const RelativeMotion rel = decompose_essential(model, stat, cam_);
      MotionEstimate e{rel.pose(1.0), 1.0, {}};
      for (std::size_t i = 0; i < stat.size(); ++i) {
        if (model.inlier_mask[i]) e.inliers.push_back(i);
      }
      est = std::move(e);
    } catch (const Error& err) {
      notes.push_back(error_note("motion", err));
      if (err.code() == ErrorCode::DegenerateConfiguration || !last_motion_) {
        report.relative_motion = Posed::Identity();
      } else {
        // keep the previous motion (constant velocity)
        report.relative_motion = *last_motion_;
      }
    }
  }
  if (!est) {
    report.scale = reuse_frame_scale(state_);
    report.note = notes.empty() ? std::string() : notes.front();
    reports_.push_back(report);
    return reports_.back();
  }
  report.n_motion_inliers = est->inliers.size();

  std::vector<Correspondence> inl;
  inl.reserve(est->inliers.size());
  for (const auto i : est->inliers) inl.push_back(stat[i]);

  // triangulate, optionally polishing an estimated motion with PnP
  std::vector<TrackedPointd> points = triangulate(est->motion, inl, cam_);
  if (config_.motion_source == MotionSource::Essential && config_.pnp_refine && points.size() >= 6) {
    std::vector<Vector3d> xs;
    std::vector<Pixeld> obs;
    for (const auto& p : points) {
      xs.push_back(p.point3d);
      obs.push_back(p.pixel_next);
    }
    try {
      const PnPResult pnp = refine_pose_pnp(xs, obs, cam_, est->motion);
      const double n = pnp.pose.t().norm();
      if (n > 1e-12) {
        est->motion = Posed(pnp.pose.R(), pnp.pose.t() / n);
        points = triangulate(est->motion, inl, cam_);
      }
    } catch (const Error& err) {
      notes.push_back(error_note("pnp", err));
    }
  }
  if (config_.motion_source == MotionSource::Essential) report.relative_motion = invert(est->motion);
  last_motion_ = report.relative_motion;
  for (auto& p : points) p.id = stat_ids[est->inliers[p.id]];
  report.n_triangulated = points.size();

  // road selection
  const std::vector<TrackedPointd> road = filter_road(points, input.mask);
  report.n_road = road.size();
  for (const auto& p : road) report.candidate_ids.push_back(p.id);
  std::vector<TrackedPointd> voted;
  if (road.size() >= 3) {
    try {
      voted = depth_consistency_select(road, config_.beta_a);
    } catch (const Error& err) {
      notes.push_back(error_note("depth vote", err));
    }
  }
  report.n_voted = voted.size();
  std::vector<TrackedPointd> selected;
  if (voted.size() >= 3) {
    try {
      selected = road_model_select(voted, est->motion.t(), config_.theta0_rad());
    } catch (const Error& err) {
      notes.push_back(error_note("road model", err));
    }
  }
  report.n_selected = selected.size();
  for (const auto& p : selected) report.selected_ids.push_back(p.id);

  report.scale = recover_frame_scale(state_, selected, cam_, seed, est->baseline);
  for (std::size_t i = 0; i < notes.size(); ++i) report.note += (i ? "; " : "") + notes[i];
  reports_.push_back(report);
  return reports_.back();
}

Trajectory ScaleRecoveryPipeline::trajectory() const {
  std::vector<Posed> motions;
  std::vector<double> scales;
  for (const auto& r : reports_) {
    motions.push_back(r.relative_motion);
    scales.push_back(r.scale.filtered_scale);
  }
  return apply_scales(motions, scales);
}

std::string format_scales_csv(const std::vector<FrameReport>& reports) {
  std::string out = "frame_index,raw_scale,filtered_scale,mode\n";
  for (const auto& r : reports) {
    out += std::to_string(r.index) + ',' + io::format_number(r.scale.raw_scale) + ',' +
           io::format_number(r.scale.filtered_scale) + ',' + std::string(to_string(r.scale.mode)) + '\n';
  }
  return out;
}

std::string format_run_log(const PipelineConfig& config, const std::vector<FrameReport>& reports) {
  std::ostringstream os;
  os << "motion_source " << to_string(config.motion_source) << "\n";
  std::size_t fallbacks = 0;
  for (const auto& r : reports) {
    if (r.scale.mode != ScaleMode::Fit) ++fallbacks;
    os << "frame " << r.index << " mode=" << to_string(r.scale.mode) << " raw=" << io::format_number(r.scale.raw_scale)
       << " filtered=" << io::format_number(r.scale.filtered_scale) << " matches=" << r.n_matches
       << " static=" << r.n_static << " motion_inliers=" << r.n_motion_inliers << " triangulated=" << r.n_triangulated
       << " road=" << r.n_road << " voted=" << r.n_voted << " selected=" << r.n_selected
       << " plane_inliers=" << r.scale.plane_inliers;
    if (!r.note.empty()) os << " note=\"" << r.note << "\"";
    os << "\n";
  }
  os << "frames " << reports.size() << " fallbacks " << fallbacks << "\n";
  return os.str();
}

void run_synth(const PipelineConfig& config, const fs::path& out) {
  config.validate();
  const SyntheticSequence seq = generate_sequence(config.scene);
  const UnscaledReconstruction rec = unscale(seq, config.global_scale);
  io::write_poses_kitti(seq.poses_gt, out / "poses_gt.txt");
  io::write_poses_kitti(rec.vo_poses, out / "poses_vo.txt");
  for (const auto& f : seq.frames) {
    io::write_matches(f.matches, out / "matches" / io::pair_file_name(f.index));
    io::write_mask(f.mask, out / "masks" / io::mask_file_name(f.index));
    io::write_classes(f.classes, out / "classes" / io::pair_file_name(f.index));
  }
}

namespace {

/// Number of consecutive pair files 000000_000001.csv, 000001_000002.csv, ...
int count_pairs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, "missing directory " + dir.string());
  static const std::regex name(R"((\d{6})_(\d{6})\.csv)");
  std::vector<int> first;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string file = entry.path().filename().string();
    if (!std::regex_match(file, m, name)) continue;
    const int a = std::stoi(m[1]), b = std::stoi(m[2]);
    if (b != a + 1) throw Error(ErrorCode::ParseError, "pair file " + file + " does not name consecutive frames");
    first.push_back(a);
  }
  std::sort(first.begin(), first.end());
  for (std::size_t i = 0; i < first.size(); ++i) {
    if (first[i] != static_cast<int>(i)) {
      throw Error(ErrorCode::IoError, "missing " + (dir / io::pair_file_name(static_cast<int>(i))).string());
    }
  }
  if (first.empty()) throw Error(ErrorCode::IoError, "no correspondence files in " + dir.string());
  return static_cast<int>(first.size());
}

}  // namespace

RecoverResult run_recover(const PipelineConfig& config, const fs::path& in, const fs::path& out) {
  config.validate();
  const int n_pairs = count_pairs(in / "matches");

  Trajectory vo;
  if (config.motion_source == MotionSource::Vo) {
    vo = io::read_poses_kitti(in / "poses_vo.txt");
    if (vo.size() < static_cast<std::size_t>(n_pairs) + 1) {
      throw Error(ErrorCode::LengthMismatch, (in / "poses_vo.txt").string() + " has " + std::to_string(vo.size()) +
                                                 " poses for " + std::to_string(n_pairs) + " frame pairs");
    }
  }

  ScaleRecoveryPipeline pipeline(config);
  for (int k = 0; k < n_pairs; ++k) {
    FrameInput frame;
    frame.matches = io::read_matches(in / "matches" / io::pair_file_name(k));
    const fs::path mask_path = in / "masks" / io::mask_file_name(k);
    if (!fs::exists(mask_path)) throw Error(ErrorCode::IoError, "missing mask " + mask_path.string());
    frame.mask = io::read_mask(mask_path, config.scene.image_width, config.scene.image_height);
    frame.mask.set_semantics(config.scene.road_label, config.dynamic_labels);
    if (!vo.empty()) frame.vo_motion = compose(invert(vo[static_cast<std::size_t>(k)]), vo[static_cast<std::size_t>(k) + 1]);
    pipeline.process(frame);
  }

  RecoverResult result{pipeline.trajectory(), pipeline.reports()};
  io::write_poses_kitti(result.trajectory, out / "trajectory.txt");
  io::write_file_atomic(out / "scales.csv", format_scales_csv(result.frames));
  io::write_file_atomic(out / "run.log", format_run_log(config, result.frames));
  return result;
}

std::string format_report_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["ate_rmse_m"] = report.ate_rmse_m;
  j["rpe_trans_percent"] = report.rpe_trans_percent;
  j["rpe_rot_deg_per_m"] = report.rpe_rot_deg_per_m;
  j["aligned_scale"] = report.aligned_similarity.scale();
  j["n_frames"] = report.n_frames;
  return j.dump(2) + "\n";
}

MetricsReport run_eval(const fs::path& estimate, const fs::path& reference, const fs::path& out) {
  const Trajectory est = io::read_poses_kitti(estimate);
  const Trajectory ref = io::read_poses_kitti(reference);
  const MetricsReport report = evaluate(est, ref);
  io::write_file_atomic(out, format_report_json(report));
  return report;
}

std::string render_svg(const std::vector<Trajectory>& trajectories) {
  static constexpr std::array<const char*, 6> colors{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, zmin = xmin, zmax = -xmin;
  for (const auto& traj : trajectories) {
    for (const auto& p : traj) {
      xmin = std::min(xmin, p.t().x());
      xmax = std::max(xmax, p.t().x());
      zmin = std::min(zmin, p.t().z());
      zmax = std::max(zmax, p.t().z());
    }
  }
  if (!std::isfinite(xmin)) xmin = xmax = zmin = zmax = 0.0;
  const double size = 800.0, margin = 20.0;
  const double span = std::max({xmax - xmin, zmax - zmin, 1e-9});
  const double k = (size - 2 * margin) / span;

  std::ostringstream os;
  os << R"(<svg xmlns="http://www.w3.org/2000/svg" width="800" height="800" viewBox="0 0 800 800">)" << "\n";
  os << R"(<rect width="800" height="800" fill="white"/>)" << "\n";
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    os << R"(<polyline fill="none" stroke-width="1.5" stroke=")" << colors[i % colors.size()] << R"(" points=")";
    bool first = true;
    for (const auto& p : trajectories[i]) {
      // x to the right, z (forward) up the page
      const double px = margin + (p.t().x() - xmin) * k;
      const double py = size - margin - (p.t().z() - zmin) * k;
      os << (first ? "" : " ") << io::format_number(px) << ',' << io::format_number(py);
      first = false;
    }
    os << R"("/>)" << "\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string format_positions_csv(const std::vector<Trajectory>& trajectories) {
  std::string out = "trajectory,frame,x,y,z\n";
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    for (std::size_t f = 0; f < trajectories[i].size(); ++f) {
      const Vector3d& t = trajectories[i][f].t();
      out += std::to_string(i) + ',' + std::to_string(f) + ',' + io::format_number(t.x()) + ',' +
             io::format_number(t.y()) + ',' + io::format_number(t.z()) + '\n';
    }
  }
  return out;
}

void run_plot(const std::vector<fs::path>& trajectories, const fs::path& out_svg) {
  std::vector<Trajectory> trajs;
  for (const auto& p : trajectories) trajs.push_back(io::read_poses_kitti(p));
  fs::path csv = out_svg;
  csv.replace_extension(".csv");
  io::write_file_atomic(out_svg, render_svg(trajs));
  io::write_file_atomic(csv, format_positions_csv(trajs));
}

}  // namespace roadscale
