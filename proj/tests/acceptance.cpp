// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>

#include "oracles.hpp"
#include "roadscale/delaunay.hpp"
#include "roadscale/errors.hpp"
#include "roadscale/io.hpp"
#include "roadscale/pipeline.hpp"
#include "test_util.hpp"

using namespace roadscale;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 200 frames: straight, one arc, one 5% grade. Points split 60/30/10 road/clutter/dynamic.
std::string scene_config(double global_scale, double noise_px = 0.5) {
  return "trajectory = straight:70, arc:65:30, slope:64:5\n"
         "n_frames = 200\n"
         "n_road_points = 360\n"
         "n_clutter_points = 180\n"
         "n_dynamic_points = 60\n"
         "pixel_noise_px = " +
         io::format_number(noise_px) +
         "\n"
         "seed = 0\n"
         "global_scale = " +
         io::format_number(global_scale) + "\n";
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("roadscale_accept_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Outcome end_to_end(const fs::path& work) {
  Outcome out;
  for (const double s_true : {0.5, 2.0, 3.0}) {
    const PipelineConfig cfg = parse_config(scene_config(s_true));
    const fs::path data = work / ("s" + io::format_number(s_true));
    run_synth(cfg, data);
    const auto t0 = std::chrono::steady_clock::now();
    const RecoverResult r = run_recover(cfg, data, data / "out");
    const double secs = seconds_since(t0);

    std::size_t good = 0;
    for (const auto& f : r.frames) good += std::abs(f.scale.filtered_scale - s_true) <= 0.02 * s_true;
    const double frac = static_cast<double>(good) / static_cast<double>(r.frames.size());

    const Trajectory gt = io::read_poses_kitti(data / "poses_gt.txt");
    const double path = trajectory_distances(gt).back();
    // rigid alignment only, so a wrong scale is not absorbed
    const Similarityd rigid = umeyama_align(r.trajectory, gt, false);
    Trajectory aligned;
    for (const auto& p : r.trajectory) aligned.emplace_back(rigid.R() * p.R(), rigid * p.t());
    const double ate_m = oracle::ate(aligned, gt);

    const bool ok = frac >= 0.95 && ate_m <= 0.01 * path && secs <= 30.0;
    out.pass = out.pass && ok;
    out.detail += fmt("s*=%g: %.1f%% frames within 2%%, ATE %.3f m (%.3f%% of %.0f m), %.2f s; ", s_true, 100 * frac,
                      ate_m, 100 * ate_m / path, path, secs);
  }
  return out;
}

struct Selection {
  double recall;
  double contamination;
  std::size_t selected;
};

Selection measure_selection(double noise_px) {
  const PipelineConfig cfg = parse_config(scene_config(1.0, noise_px));
  const SyntheticSequence seq = generate_sequence(cfg.scene);
  const UnscaledReconstruction rec = unscale(seq, 1.0);
  ScaleRecoveryPipeline pipe(cfg);
  std::size_t road_total = 0, road_selected = 0, selected = 0;
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    const FrameTruth& f = seq.frames[k];
    FrameInput in;
    in.matches = f.matches;
    in.mask = f.mask;
    in.vo_motion = rec.relative_motions[k];
    const FrameReport rep = pipe.process(in);
    // recall counts only road points that reach the selection stage
    for (const std::size_t id : rep.candidate_ids) road_total += f.classes[id] == PointClass::Road;
    for (const std::size_t id : rep.selected_ids) road_selected += f.classes[id] == PointClass::Road;
    selected += rep.selected_ids.size();
  }
  return {static_cast<double>(road_selected) / static_cast<double>(road_total),
          1.0 - static_cast<double>(road_selected) / static_cast<double>(selected), selected};
}

Outcome selection_quality() {
  const Selection m = measure_selection(0.5);
  const bool ok = m.recall >= 0.90 && m.contamination <= 0.05;
  std::string detail = fmt("recall %.4f (>= 0.90), contamination %.4f (<= 0.05) over %zu selected at 0.5 px", m.recall,
                           m.contamination, m.selected);
  // the 5 degree tilt gate is noise-limited on small triangles, show where recall sits
  for (const double noise : {0.0, 0.25}) {
    const Selection q = measure_selection(noise);
    detail += fmt("; recall %.4f at %g px", q.recall, noise);
  }
  return {ok, detail};
}

Outcome plane_ransac() {
  std::mt19937_64 rng(3);
  double worst_ls = 0, worst_h = 0, worst_deg = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Vector3d n = Vector3d(0.05 * std::sin(trial), 1.0, 0.05 * std::cos(trial)).normalized();
    const double h = 1.0 + 0.02 * trial;
    std::uniform_real_distribution<double> x(-6, 6), z(3, 30);
    std::normal_distribution<double> g(0.0, 0.01);
    std::vector<Vector3d> inliers;
    for (int i = 0; i < 150; ++i) {
      const double xi = x(rng), zi = z(rng);
      inliers.emplace_back(xi, (h - n.x() * xi - n.z() * zi) / n.y() + g(rng), zi);
    }
    PlaneRansacParams all;
    all.dist_tol = 1.0;
    const PlaneFit clean = fit_plane_ransac(std::span<const Vector3d>(inliers), static_cast<std::uint64_t>(trial), all);
    const PlaneModel ref = oracle::plane(inliers);
    worst_ls = std::max({worst_ls, (clean.plane.n - ref.n).norm(), std::abs(clean.plane.h - ref.h)});

    // 100 outliers on top of 150 inliers is 40%
    std::vector<Vector3d> mixed = inliers;
    std::uniform_real_distribution<double> y(-3, h - 0.1);
    for (int i = 0; i < 100; ++i) mixed.emplace_back(x(rng), y(rng), z(rng));
    PlaneRansacParams params;
    params.dist_tol = 0.03;
    const PlaneFit fit = fit_plane_ransac(std::span<const Vector3d>(mixed), static_cast<std::uint64_t>(trial), params);
    worst_h = std::max(worst_h, std::abs(fit.plane.h - h) / h);
    worst_deg = std::max(worst_deg, testutil::angle_between(fit.plane.n, n) * 180 / std::numbers::pi);
  }
  return {worst_ls <= 1e-9 && worst_h <= 0.01 && worst_deg <= 0.5,
          fmt("least-squares gap %.2e (<= 1e-9); with 40%% outliers h error %.3f%% (<= 1%%), normal %.3f deg (<= 0.5)",
              worst_ls, 100 * worst_h, worst_deg)};
}

Outcome eight_point_decomposition() {
  const CameraModeld cam = testutil::default_camera();
  std::mt19937_64 rng(16);
  double worst_r = 0, worst_t = 0;
  for (int i = 0; i < 100; ++i) {
    const Posed motion = testutil::random_motion(rng);
    const auto matches = testutil::observe(cam, motion, testutil::points_in_view(rng, motion, 40));
    const EssentialModel model = estimate_essential(matches, cam, static_cast<std::uint64_t>(i));
    const RelativeMotion rel = decompose_essential(model, matches, cam);
    worst_r = std::max(worst_r, oracle::rotation_angle(rel.R.transpose() * motion.R()));
    worst_t = std::max(worst_t, testutil::angle_between(rel.t_dir, motion.t()));
  }
  return {worst_r <= 1e-6 && worst_t <= 1e-6,
          fmt("100 motions: rotation %.2e rad, translation direction %.2e rad (<= 1e-6)", worst_r, worst_t)};
}

Outcome triangulation() {
  const CameraModeld cam = testutil::default_camera();
  std::mt19937_64 rng(17);
  double worst = 0;
  std::size_t kept = 0, total = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Posed motion = testutil::random_motion(rng);
    const auto matches = testutil::observe(cam, motion, testutil::points_in_view(rng, motion, 50));
    const auto pts = triangulate(motion, matches, cam);
    total += matches.size();
    kept += pts.size();
    for (const auto& p : pts) {
      const double ra = (project(cam, p.point3d).vec() - matches[p.id].a.vec()).norm();
      const double rb = (project(cam, Vector3d(motion * p.point3d)).vec() - matches[p.id].b.vec()).norm();
      worst = std::max({worst, ra, rb});
    }
  }
  return {worst < 1e-6, fmt("max reprojection residual %.2e px (< 1e-6) over %zu of %zu points", worst, kept, total)};
}

Outcome pnp() {
  const CameraModeld cam = testutil::default_camera();
  std::mt19937_64 rng(19);
  std::normal_distribution<double> g(0, 1);
  bool monotone = true;
  double worst_pose = 0, worst_jac = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Posed truth = testutil::random_motion(rng);
    const auto points = testutil::points_in_view(rng, truth, 30);
    std::vector<Pixeld> obs;
    for (const auto& X : points) obs.push_back(project(cam, Vector3d(truth * X)));
    const Vector3d axis = Vector3d(g(rng), g(rng), g(rng)).normalized();
    const Vector3d dt = Vector3d(g(rng), g(rng), g(rng)).normalized() * 0.05;
    const Posed init(Eigen::AngleAxisd(std::numbers::pi / 180, axis).toRotationMatrix() * truth.R(), truth.t() + dt);
    const PnPResult r = refine_pose_pnp(points, obs, cam, init);
    for (std::size_t i = 1; i < r.cost_history.size(); ++i) monotone = monotone && r.cost_history[i] <= r.cost_history[i - 1];
    worst_pose = std::max({worst_pose, (r.pose.R() - truth.R()).cwiseAbs().maxCoeff(),
                           (r.pose.t() - truth.t()).cwiseAbs().maxCoeff()});

    const Eigen::MatrixXd J = pnp_jacobian(init, points, cam);
    Eigen::MatrixXd Jn(J.rows(), 6);
    const double h = 1e-6;
    for (int k = 0; k < 6; ++k) {
      const auto step = [&](double sign) {
        Vector3d w = Vector3d::Zero(), d = Vector3d::Zero();
        (k < 3 ? w : d)(k % 3) = sign * h;
        const Matrix3d dR = exp_so3(w);
        return Posed(dR * init.R(), dR * init.t() + d);
      };
      Jn.col(k) = (pnp_residuals(step(+1), points, obs, cam) - pnp_residuals(step(-1), points, obs, cam)) / (2 * h);
    }
    worst_jac = std::max(worst_jac, (J - Jn).norm() / J.norm());
  }
  return {monotone && worst_pose <= 1e-8 && worst_jac <= 1e-5,
          fmt("cost non-increasing: %s; pose error %.2e (<= 1e-8) from 1 deg / 0.05 starts; Jacobian rel. gap %.2e (<= 1e-5)",
              monotone ? "yes" : "no", worst_pose, worst_jac)};
}

Outcome delaunay_property() {
  std::mt19937_64 rng(30);
  std::uniform_real_distribution<double> U(0, 1280), V(360, 720);
  std::uniform_int_distribution<int> N(3, 60);
  std::size_t violations = 0, triangles = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Pixeld> p;
    const int n = N(rng);
    for (int i = 0; i < n; ++i) p.emplace_back(U(rng), V(rng));
    const auto tris = delaunay(p);
    triangles += tris.size();
    for (const auto& t : tris) {
      for (std::size_t d = 0; d < p.size(); ++d) {
        if (d == t[0] || d == t[1] || d == t[2]) continue;
        violations += oracle::strictly_inside_circumcircle(p[t[0]], p[t[1]], p[t[2]], p[d]);
      }
    }
  }
  return {violations == 0, fmt("%zu empty-circle violations over %zu triangles in 100 sets", violations, triangles)};
}

Outcome mixed_filter_checks() {
  std::mt19937_64 rng(44);
  std::uniform_int_distribution<int> len(1, 9);
  std::uniform_real_distribution<double> val(0.1, 5.0);
  bool constant = true, bounded = true;
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> q(static_cast<std::size_t>(len(rng)));
    for (auto& x : q) x = val(rng);
    const double out = mixed_filter(q, 5.0);
    const auto [lo, hi] = std::minmax_element(q.begin(), q.end());
    bounded = bounded && out >= *lo && out <= *hi;
    worst = std::max(worst, std::abs(out - oracle::mixed_filter(q, 5.0)));
    constant = constant && mixed_filter(std::vector<double>(q.size(), q[0]), 5.0) == q[0];
  }
  return {constant && bounded && worst <= 1e-12,
          fmt("constant queues exact: %s; within [min, max]: %s; oracle gap %.2e (<= 1e-12)", constant ? "yes" : "no",
              bounded ? "yes" : "no", worst)};
}

Trajectory winding(int n, double step, double rate) {
  Trajectory out;
  double yaw = 0, x = 0, z = 0;
  for (int i = 0; i < n; ++i) {
    out.emplace_back(Eigen::AngleAxisd(yaw, Vector3d::UnitY()).toRotationMatrix(), Vector3d(x, 0.02 * i, z));
    yaw += rate * std::sin(0.3 * i);
    x += step * std::sin(yaw);
    z += step * std::cos(yaw);
  }
  return out;
}

Outcome metrics() {
  std::mt19937_64 rng(53);
  std::normal_distribution<double> g(0.0, 1.0);
  double ate_gap = 0, rpe_gap = 0, sim_ate = 0;
  for (int n = 10; n <= 20; ++n) {
    const Trajectory ref = winding(n, 12.0, 0.1);
    Trajectory est{ref[0]};
    for (std::size_t i = 1; i < ref.size(); ++i) {
      const Posed rel = compose(invert(ref[i - 1]), ref[i]);
      const Matrix3d noise = exp_so3(Vector3d(0.01 * g(rng), 0.01 * g(rng), 0.01 * g(rng)));
      est.push_back(compose(est.back(), Posed(noise * rel.R(), rel.t() + 0.2 * Vector3d(g(rng), g(rng), g(rng)))));
    }
    ate_gap = std::max(ate_gap, std::abs(ate(est, ref, false) - oracle::ate(est, ref)));
    const RpeResult r = rpe_kitti(est, ref);
    const oracle::Rpe b = oracle::rpe(est, ref, r.lengths);
    rpe_gap = std::max({rpe_gap, std::abs(r.trans_percent - b.trans_percent) / b.trans_percent,
                        std::abs(r.rot_deg_per_m - b.rot_deg_per_m) / b.rot_deg_per_m});

    const Matrix3d R = testutil::random_rotation(rng);
    Trajectory moved;
    for (const auto& p : ref) moved.emplace_back(R * p.R(), 2.5 * (R * p.t()) + Vector3d(3, -1, 7));
    sim_ate = std::max(sim_ate, ate(moved, ref, true));
  }

  Trajectory line, stretched;
  for (int i = 0; i <= 900; ++i) {
    line.emplace_back(Matrix3d::Identity(), Vector3d(0, 0, i));
    stretched.emplace_back(Matrix3d::Identity(), Vector3d(0, 0, 1.05 * i));
  }
  const double trans = rpe_kitti(stretched, line).trans_percent;
  return {ate_gap <= 1e-12 && rpe_gap <= 1e-12 && sim_ate < 1e-9 && trans >= 4.9 && trans <= 5.1,
          fmt("ATE gap %.1e, RPE rel. gap %.1e vs brute force; similarity ATE %.1e (< 1e-9); x1.05 line RPE %.3f%%", ate_gap,
              rpe_gap, sim_ate, trans)};
}

std::string artifacts(const fs::path& root) {
  std::string all;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    all += fs::relative(e.path(), root).string() + "\n" + io::read_file(e.path());
  }
  return all;
}

Outcome determinism(const fs::path& work) {
  std::vector<std::string> runs;
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = work / ("run" + std::to_string(run));
    const PipelineConfig cfg = parse_config(scene_config(2.0));
    run_synth(cfg, dir / "data");
    run_recover(cfg, dir / "data", dir / "out");
    run_eval(dir / "out" / "trajectory.txt", dir / "data" / "poses_gt.txt", dir / "out" / "report.json");
    run_plot({dir / "out" / "trajectory.txt", dir / "data" / "poses_gt.txt"}, dir / "out" / "plot.svg");
    runs.push_back(artifacts(dir));
  }
  return {runs[0] == runs[1], fmt("two seed-0 runs, %zu bytes of artifacts each, %s", runs[0].size(),
                                  runs[0] == runs[1] ? "identical" : "different")};
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  TempDir work;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"end-to-end scale recovery", [&] { return end_to_end(work.path / "c1"); }},
      {"road selection quality", selection_quality},
      {"plane RANSAC", plane_ransac},
      {"eight-point and decomposition", eight_point_decomposition},
      {"triangulation", triangulation},
      {"PnP refinement", pnp},
      {"Delaunay empty circumcircle", delaunay_property},
      {"mixed filter", mixed_filter_checks},
      {"trajectory metrics", metrics},
      {"determinism", [&] { return determinism(work.path / "c10"); }},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("criterion %zu %s: %s (%s)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("total %.1f s\n", seconds_since(t0));
  return all ? 0 : 1;
}
