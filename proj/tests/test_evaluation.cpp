#include <cmath>
#include <random>

#include <Eigen/Geometry>

#include "doctest.h"
#include "roadscale/errors.hpp"
#include "roadscale/evaluation.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace roadscale;

namespace {

Trajectory winding_path(int n, double step, double yaw_rate = 0.03) {
  Trajectory out;
  double yaw = 0, x = 0, z = 0, y = 0;
  for (int i = 0; i < n; ++i) {
    out.emplace_back(Eigen::AngleAxisd(yaw, Vector3d::UnitY()).toRotationMatrix(), Vector3d(x, y, z));
    yaw += yaw_rate * std::sin(0.1 * i);
    x += step * std::sin(yaw);
    z += step * std::cos(yaw);
    y += 0.01 * step * std::sin(0.05 * i);
  }
  return out;
}

Trajectory transformed(const Trajectory& t, double s, const Matrix3d& R, const Vector3d& x) {
  Trajectory out;
  for (const auto& p : t) out.emplace_back(R * p.R(), s * R * p.t() + x);
  return out;
}

}  // namespace

TEST_CASE("identical trajectories score zero") {
  const Trajectory t = winding_path(150, 1.0);
  CHECK(ate(t, t, false) == 0.0);
  CHECK(ate(t, t, true) == 0.0);
  const RpeResult r = rpe_kitti(t, t);
  CHECK(r.trans_percent == 0.0);
  CHECK(r.rot_deg_per_m == 0.0);
  const Similarityd s = umeyama_align(t, t, true);
  CHECK(s.scale() == 1.0);
  CHECK(s.R() == Matrix3d::Identity());
  CHECK(s.t() == Vector3d::Zero());
}

TEST_CASE("handcrafted ate") {
  // alternate frames are off by a 3-4-5 triangle
  Trajectory ref, est;
  for (int i = 0; i < 10; ++i) {
    const Vector3d p(i, 0.5 * i * i, 0);
    ref.emplace_back(Matrix3d::Identity(), p);
    est.emplace_back(Matrix3d::Identity(), i % 2 ? Vector3d(p + Vector3d(3, 0, 4)) : p);
  }
  CHECK(ate(est, ref, false) == std::sqrt(12.5));

  // brute force over the same pair
  CHECK(ate(est, ref, false) == oracle::ate(est, ref));
}

TEST_CASE("alignment absorbs shifts and similarities") {
  Trajectory ref = winding_path(60, 2.0, 0.08);
  Trajectory shifted;
  for (const auto& p : ref) shifted.emplace_back(p.R(), p.t() + Vector3d(1, 0, 0));
  CHECK(ate(shifted, ref, true) < 1e-12);

  std::mt19937_64 rng(50);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix3d R = testutil::random_rotation(rng);
    const double s = 0.2 + 0.3 * trial;
    const Vector3d x(trial, -2.0 * trial, 0.5);
    const Trajectory est = transformed(ref, s, R, x);
    CHECK(ate(est, ref, true) < 1e-9);

    // forward construction is recovered
    const Similarityd sim = umeyama_align(ref, est, true);
    CHECK(std::abs(sim.scale() - s) < 1e-9);
    CHECK((sim.R() - R).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((sim.t() - x).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("umeyama matches the eigen implementation") {
  std::mt19937_64 rng(51);
  std::normal_distribution<double> g(0.0, 0.3);
  for (int trial = 0; trial < 50; ++trial) {
    const Trajectory ref = winding_path(40, 1.0 + trial * 0.1, 0.1);
    Trajectory est;
    for (const auto& p : ref) est.emplace_back(p.R(), 0.7 * p.t() + Vector3d(g(rng), g(rng), g(rng)));
    Eigen::Matrix3Xd src(3, ref.size()), dst(3, ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      src.col(static_cast<Eigen::Index>(i)) = est[i].t();
      dst.col(static_cast<Eigen::Index>(i)) = ref[i].t();
    }
    for (const bool scale : {true, false}) {
      const Matrix4d oracle = Eigen::umeyama(src, dst, scale);
      const Similarityd sim = umeyama_align(est, ref, scale);
      const double s = oracle.block<3, 1>(0, 0).norm();
      CHECK(std::abs(sim.scale() - s) < 1e-9);
      CHECK((sim.R() - oracle.block<3, 3>(0, 0) / s).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((sim.t() - oracle.block<3, 1>(0, 3)).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("alignment residual beats random similarities") {
  std::mt19937_64 rng(52);
  std::normal_distribution<double> g(0.0, 0.5);
  const Trajectory ref = winding_path(12, 1.5, 0.2);
  Trajectory est;
  for (const auto& p : ref) est.emplace_back(p.R(), 1.3 * p.t() + Vector3d(g(rng), g(rng), g(rng)));
  const Similarityd best = umeyama_align(est, ref, true);
  const auto residual = [&](const Similarityd& s) {
    double sum = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) sum += (s * est[i].t() - ref[i].t()).squaredNorm();
    return sum;
  };
  const double r0 = residual(best);
  std::uniform_real_distribution<double> ds(-0.05, 0.05);
  for (int i = 0; i < 1000; ++i) {
    // perturb around the optimum so the search is not trivially worse
    const double spread = (i % 2) ? 0.01 : 0.2;
    const Matrix3d dR = testutil::random_rotation(rng, spread);
    const Similarityd s(best.scale() * (1 + ds(rng) * spread * 10), dR * best.R(),
                        best.t() + spread * Vector3d(g(rng), g(rng), g(rng)));
    CHECK(residual(s) >= r0 - 1e-12);
  }
}

TEST_CASE("rpe on a uniformly stretched straight path") {
  Trajectory ref, est;
  for (int i = 0; i <= 900; ++i) {
    ref.emplace_back(Matrix3d::Identity(), Vector3d(0, 0, i));
    est.emplace_back(Matrix3d::Identity(), Vector3d(0, 0, 1.05 * i));
  }
  const RpeResult r = rpe_kitti(est, ref);
  CHECK(r.trans_percent >= 4.9);
  CHECK(r.trans_percent <= 5.1);
  CHECK(r.rot_deg_per_m == 0.0);
  CHECK(r.lengths.size() == 8);
  const oracle::Rpe b = oracle::rpe(est, ref, {100, 200, 300, 400, 500, 600, 700, 800});
  CHECK(r.trans_percent == doctest::Approx(b.trans_percent).epsilon(1e-12));
}

TEST_CASE("rpe matches the brute-force evaluator") {
  std::mt19937_64 rng(53);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    // 20 frames, 10 m apart, with injected relative errors
    const Trajectory ref = winding_path(20, 10.0, 0.05);
    Trajectory est{ref[0]};
    for (std::size_t i = 1; i < ref.size(); ++i) {
      const Posed rel = compose(invert(ref[i - 1]), ref[i]);
      const Matrix3d noise = Eigen::AngleAxisd(0.02 * g(rng), Vector3d(g(rng), g(rng), g(rng)).normalized()).toRotationMatrix();
      const Posed bumped(noise * rel.R(), rel.t() + 0.3 * Vector3d(g(rng), g(rng), g(rng)));
      est.push_back(compose(est.back(), bumped));
    }
    const RpeResult r = rpe_kitti(est, ref);
    const oracle::Rpe b = oracle::rpe(est, ref, r.lengths);
    CHECK(r.trans_percent == doctest::Approx(b.trans_percent).epsilon(1e-12));
    CHECK(r.rot_deg_per_m == doctest::Approx(b.rot_deg_per_m).epsilon(1e-12));
    CHECK(r.lengths == std::vector<double>{100});

    // a rigid motion of the whole estimate leaves the relative errors alone
    const Trajectory moved = transformed(est, 1.0, testutil::random_rotation(rng), Vector3d(5, 6, 7));
    const RpeResult m = rpe_kitti(moved, ref);
    CHECK(m.trans_percent == doctest::Approx(r.trans_percent).epsilon(1e-9));
    CHECK(m.rot_deg_per_m == doctest::Approx(r.rot_deg_per_m).epsilon(1e-9));
  }
}

TEST_CASE("rpe on short paths falls back to fractions of the length") {
  const Trajectory ref = winding_path(30, 1.0);
  Trajectory est;
  for (const auto& p : ref) est.emplace_back(p.R(), 1.1 * p.t());
  const RpeResult r = rpe_kitti(est, ref);
  CHECK(!r.lengths.empty());
  CHECK(r.lengths.front() < 100);
  CHECK(r.trans_percent > 0);
  const oracle::Rpe b = oracle::rpe(est, ref, r.lengths);
  CHECK(r.trans_percent == doctest::Approx(b.trans_percent).epsilon(1e-12));

  const Trajectory one{Posed::Identity()};
  try {
    rpe_kitti(one, one);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PathTooShort);
  }
}

TEST_CASE("evaluation errors") {
  const Trajectory a = winding_path(10, 1.0), b = winding_path(11, 1.0);
  try {
    ate(a, b, true);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
  }
  Trajectory line;
  for (int i = 0; i < 5; ++i) line.emplace_back(Matrix3d::Identity(), Vector3d(0, 0, i));
  try {
    umeyama_align(line, line, true);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateGeometry);
  }
  Trajectory line2 = line;
  line2[4] = Posed(Matrix3d::Identity(), Vector3d(0, 0, 5));
  try {
    umeyama_align(line2, line, true);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateGeometry);
  }
  const Trajectory two{Posed::Identity(), Posed::Identity()};
  CHECK_THROWS_AS(umeyama_align(two, two, true), Error);
}

TEST_CASE("evaluate fills the report") {
  const Trajectory ref = winding_path(120, 1.0, 0.1);
  Trajectory est;
  for (const auto& p : ref) est.emplace_back(p.R(), 0.5 * p.t());
  const MetricsReport m = evaluate(est, ref);
  CHECK(m.n_frames == 120);
  CHECK(m.ate_rmse_m < 1e-9);
  CHECK(m.aligned_similarity.scale() == doctest::Approx(2.0).epsilon(1e-9));
  const oracle::Rpe b = oracle::rpe(est, ref, {100});
  CHECK(m.rpe_trans_percent == doctest::Approx(b.trans_percent).epsilon(1e-12));
  CHECK(m.rpe_rot_deg_per_m >= 0.0);
}
