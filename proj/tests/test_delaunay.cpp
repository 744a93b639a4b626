#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "roadscale/delaunay.hpp"
#include "oracles.hpp"
#include "roadscale/errors.hpp"

using namespace roadscale;

namespace {

double hull_area(std::vector<Pixeld> p) {
  std::sort(p.begin(), p.end(), [](const Pixeld& a, const Pixeld& b) { return a.u < b.u || (a.u == b.u && a.v < b.v); });
  const auto cross = [](const Pixeld& o, const Pixeld& a, const Pixeld& b) {
    return (a.u - o.u) * (b.v - o.v) - (a.v - o.v) * (b.u - o.u);
  };
  std::vector<Pixeld> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  h.resize(k - 1);
  double area = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto& a = h[i];
    const auto& b = h[(i + 1) % h.size()];
    area += a.u * b.v - b.u * a.v;
  }
  return 0.5 * std::abs(area);
}

double signed_area(const std::vector<Pixeld>& p, const Triangle& t) {
  const auto& a = p[t[0]];
  const auto& b = p[t[1]];
  const auto& c = p[t[2]];
  return 0.5 * ((b.u - a.u) * (c.v - a.v) - (b.v - a.v) * (c.u - a.u));
}

}  // namespace

TEST_CASE("three points give one triangle") {
  const std::vector<Pixeld> p{{0, 0}, {10, 0}, {0, 10}};
  const auto tris = delaunay(p);
  REQUIRE(tris.size() == 1);
  CHECK(signed_area(p, tris[0]) > 0);
  std::set<std::size_t> ids(tris[0].idx.begin(), tris[0].idx.end());
  CHECK(ids == std::set<std::size_t>{0, 1, 2});
}

TEST_CASE("unit square splits along one diagonal") {
  const std::vector<Pixeld> p{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const auto tris = delaunay(p);
  REQUIRE(tris.size() == 2);
  // the shared edge is a diagonal: two vertices appear in both triangles
  std::set<std::size_t> a(tris[0].idx.begin(), tris[0].idx.end()), b(tris[1].idx.begin(), tris[1].idx.end());
  std::vector<std::size_t> shared;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(shared));
  REQUIRE(shared.size() == 2);
  CHECK((shared == std::vector<std::size_t>{0, 2} || shared == std::vector<std::size_t>{1, 3}));
  CHECK(signed_area(p, tris[0]) + signed_area(p, tris[1]) == doctest::Approx(1.0));
}

TEST_CASE("delaunay errors") {
  const auto code = [](const std::vector<Pixeld>& p) {
    try {
      delaunay(p);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code({{0, 0}, {1, 1}}) == ErrorCode::TooFewPoints);
  CHECK(code({{0, 0}, {1, 1}, {1, 1 + 1e-9}}) == ErrorCode::TooFewPoints);
  CHECK(code({{0, 0}, {1, 1}, {2, 2}, {3, 3}}) == ErrorCode::AllCollinear);
}

TEST_CASE("duplicates collapse onto the first occurrence") {
  const std::vector<Pixeld> p{{0, 0}, {10, 0}, {0, 10}, {10, 0}, {10, 10}};
  const auto tris = delaunay(p);
  CHECK(tris.size() == 2);
  for (const auto& t : tris) {
    for (const auto i : t.idx) CHECK(i != 3);
  }
}

TEST_CASE("empty circumcircle property on random sets") {
  std::mt19937_64 rng(30);
  std::uniform_real_distribution<double> U(0, 1280), V(360, 720);
  std::uniform_int_distribution<int> N(3, 60);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Pixeld> p;
    const int n = N(rng);
    for (int i = 0; i < n; ++i) p.emplace_back(U(rng), V(rng));
    const auto tris = delaunay(p);
    double area = 0;
    for (const auto& t : tris) {
      CHECK(signed_area(p, t) > 0);
      area += signed_area(p, t);
      for (std::size_t d = 0; d < p.size(); ++d) {
        if (d == t[0] || d == t[1] || d == t[2]) continue;
        CHECK_FALSE(oracle::strictly_inside_circumcircle(p[t[0]], p[t[1]], p[t[2]], p[d]));
      }
    }
    // the triangles tile the convex hull
    CHECK(area == doctest::Approx(hull_area(p)).epsilon(1e-9));
    // Euler: a triangulation of n points with k on the hull has 2n - 2 - k triangles
    CHECK(tris.size() <= static_cast<std::size_t>(2 * n - 5 > 1 ? 2 * n - 5 : 1));
  }
}

TEST_CASE("grid points with cocircular quadruples") {
  std::vector<Pixeld> p;
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) p.emplace_back(i * 10.0, j * 10.0);
  }
  const auto tris = delaunay(p);
  CHECK(tris.size() == 2 * 7 * 7);
  for (const auto& t : tris) {
    for (std::size_t d = 0; d < p.size(); ++d) {
      if (d == t[0] || d == t[1] || d == t[2]) continue;
      CHECK_FALSE(oracle::strictly_inside_circumcircle(p[t[0]], p[t[1]], p[t[2]], p[d]));
    }
  }
}

TEST_CASE("near-collinear rows keep every site") {
  // one point barely off a line used to be dropped from the far end of the hull
  const std::vector<Pixeld> p{{319.71574197338816, 501.25600558807685},
                              {1028.1424923741317, 500},
                              {345.52256532413503, 500},
                              {958.70820032639017, 500},
                              {391.91894622394443, 500}};
  const auto tris = delaunay(p);
  CHECK(tris.size() == 3);
  std::set<std::size_t> used;
  for (const auto& t : tris) used.insert(t.idx.begin(), t.idx.end());
  CHECK(used.size() == 5);

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> U(0, 1280), lift(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 4 + trial % 90;
    std::vector<Pixeld> q;
    for (int i = 0; i < n; ++i) q.emplace_back(U(rng), 500 + (i % 7 == 0 ? lift(rng) : 0.0));
    const auto tq = delaunay(q);
    double area = 0;
    for (const auto& t : tq) {
      CHECK(signed_area(q, t) > 0);
      area += signed_area(q, t);
    }
    CHECK(area == doctest::Approx(hull_area(q)).epsilon(1e-9));
  }
}

TEST_CASE("snapped grid never yields slivers of zero area") {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> U(0, 1280), V(360, 720);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Pixeld> q;
    for (int i = 0; i < 80; ++i) q.emplace_back(std::round(U(rng) / 40) * 40, std::round(V(rng) / 40) * 40);
    const auto tq = delaunay(q);
    for (const auto& t : tq) CHECK(signed_area(q, t) > 0);
  }
}
