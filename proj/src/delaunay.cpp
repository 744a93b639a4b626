#include "roadscale/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <unordered_map>

namespace roadscale {

double orient2d(const Vector2d& a, const Vector2d& b, const Vector2d& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

double incircle(const Vector2d& a, const Vector2d& b, const Vector2d& c, const Vector2d& d) {
  const double adx = a.x() - d.x(), ady = a.y() - d.y();
  const double bdx = b.x() - d.x(), bdy = b.y() - d.y();
  const double cdx = c.x() - d.x(), cdy = c.y() - d.y();
  const double alift = adx * adx + ady * ady;
  const double blift = bdx * bdx + bdy * bdy;
  const double clift = cdx * cdx + cdy * cdy;
  return alift * (bdx * cdy - cdx * bdy) + blift * (cdx * ady - adx * cdy) + clift * (adx * bdy - bdx * ady);
}

namespace {

constexpr double kDuplicateTol = 1e-6;
constexpr double kInCircleTol = 1e-12;

// Bowyer-Watson with a single ghost vertex closing every hull edge. A ghost
// triangle (a, b, ghost) stands for the open half-plane left of a->b plus the
// open segment ab, so points outside the hull need no super triangle.
struct Mesh {
  struct Tri {
    std::array<int, 3> v;
    bool alive;
  };

  std::vector<Vector2d> pts;
  int ghost = -1;
  std::vector<Tri> tris;
  std::unordered_map<std::uint64_t, int> edge_owner;  // directed edge -> triangle

  static std::uint64_t key(int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
  }

  const Vector2d& at(int i) const { return pts[static_cast<std::size_t>(i)]; }

  void add(int a, int b, int c) {
    const int id = static_cast<int>(tris.size());
    tris.push_back({{a, b, c}, true});
    edge_owner[key(a, b)] = id;
    edge_owner[key(b, c)] = id;
    edge_owner[key(c, a)] = id;
  }

  void remove(int id) {
    auto& t = tris[static_cast<std::size_t>(id)];
    t.alive = false;
    for (int k = 0; k < 3; ++k) {
      const auto it = edge_owner.find(key(t.v[k], t.v[(k + 1) % 3]));
      if (it != edge_owner.end() && it->second == id) edge_owner.erase(it);
    }
  }

  int neighbor(int a, int b) const {
    const auto it = edge_owner.find(key(b, a));
    return it == edge_owner.end() ? -1 : it->second;
  }

  /// Rotates a ghost triangle so the ghost comes last.
  std::array<int, 3> ghost_last(const std::array<int, 3>& v) const {
    if (v[0] == ghost) return {v[1], v[2], v[0]};
    if (v[1] == ghost) return {v[2], v[0], v[1]};
    return v;
  }

  bool is_ghost(const Tri& t) const { return t.v[0] == ghost || t.v[1] == ghost || t.v[2] == ghost; }

  bool in_circumcircle(int id, const Vector2d& p) const {
    const auto& t = tris[static_cast<std::size_t>(id)];
    if (!is_ghost(t)) return incircle(at(t.v[0]), at(t.v[1]), at(t.v[2]), p) > kInCircleTol;
    const auto v = ghost_last(t.v);
    const Vector2d& a = at(v[0]);
    const Vector2d& b = at(v[1]);
    const double o = orient2d(a, b, p);
    if (o != 0.0) return o > 0.0;
    // collinear with the hull edge: inside only on the open segment
    return (p - a).dot(b - a) > 0.0 && (p - b).dot(a - b) > 0.0;
  }

  int locate(const Vector2d& p) const {
    int outside = -1;
    for (int id = static_cast<int>(tris.size()) - 1; id >= 0; --id) {
      const auto& t = tris[static_cast<std::size_t>(id)];
      if (!t.alive) continue;
      if (is_ghost(t)) {
        if (outside < 0 && in_circumcircle(id, p)) outside = id;
        continue;
      }
      const Vector2d& a = at(t.v[0]);
      const Vector2d& b = at(t.v[1]);
      const Vector2d& c = at(t.v[2]);
      if (orient2d(a, b, p) >= 0 && orient2d(b, c, p) >= 0 && orient2d(c, a, p) >= 0) return id;
    }
    return outside;
  }

  void start(int a, int b, int c) {
    if (orient2d(at(a), at(b), at(c)) < 0) std::swap(b, c);
    add(a, b, c);
    add(b, a, ghost);
    add(c, b, ghost);
    add(a, c, ghost);
  }

  void insert(int pi) {
    const Vector2d& p = at(pi);
    const int seed = locate(p);
    if (seed < 0) return;

    std::vector<int> cavity{seed};
    std::vector<char> in_cavity(tris.size(), 0);
    in_cavity[static_cast<std::size_t>(seed)] = 1;
    for (std::size_t head = 0; head < cavity.size(); ++head) {
      const auto& t = tris[static_cast<std::size_t>(cavity[head])];
      for (int k = 0; k < 3; ++k) {
        const int n = neighbor(t.v[k], t.v[(k + 1) % 3]);
        if (n < 0 || in_cavity[static_cast<std::size_t>(n)]) continue;
        if (in_circumcircle(n, p)) {
          in_cavity[static_cast<std::size_t>(n)] = 1;
          cavity.push_back(n);
        }
      }
    }

    std::vector<std::array<int, 2>> boundary;
    for (const int id : cavity) {
      const auto& t = tris[static_cast<std::size_t>(id)];
      for (int k = 0; k < 3; ++k) {
        const int a = t.v[k], b = t.v[(k + 1) % 3];
        const int n = neighbor(a, b);
        if (n < 0 || !in_cavity[static_cast<std::size_t>(n)]) boundary.push_back({a, b});
      }
    }
    for (const int id : cavity) remove(id);
    for (const auto& e : boundary) {
      if (e[0] == ghost || e[1] == ghost || orient2d(at(e[0]), at(e[1]), p) > 0) add(e[0], e[1], pi);
    }
  }
};

}  // namespace

std::vector<Triangle> delaunay(std::span<const Pixeld> points) {
  // collapse duplicates onto their first occurrence
  const std::size_t n = points.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return points[a].u < points[b].u || (points[a].u == points[b].u && a < b);
  });
  std::vector<std::size_t> rep(n);
  std::iota(rep.begin(), rep.end(), std::size_t{0});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = order[i];
    for (std::size_t j = i + 1; j < n && points[order[j]].u - points[a].u <= kDuplicateTol; ++j) {
      const std::size_t b = order[j];
      if (std::abs(points[b].v - points[a].v) <= kDuplicateTol) {
        const std::size_t r = std::min(rep[a], rep[b]);
        rep[a] = rep[b] = r;
      }
    }
  }
  std::vector<std::size_t> sites;
  for (std::size_t i = 0; i < n; ++i) {
    if (!points[i].finite()) throw Error(ErrorCode::InvalidArgument, "non-finite pixel");
    if (rep[i] == i) sites.push_back(i);
  }
  if (sites.size() < 3) throw Error(ErrorCode::TooFewPoints, std::to_string(sites.size()) + " distinct sites");

  // normalize into the unit box
  Vector2d lo(points[sites[0]].u, points[sites[0]].v), hi = lo;
  for (const std::size_t s : sites) {
    lo = lo.cwiseMin(points[s].vec());
    hi = hi.cwiseMax(points[s].vec());
  }
  // power-of-two extent keeps the rescale exact, so collinear inputs stay collinear
  int exponent = 0;
  std::frexp(std::max((hi - lo).maxCoeff(), 1e-300), &exponent);
  const double extent = std::ldexp(1.0, exponent);

  Mesh mesh;
  mesh.pts.reserve(sites.size() + 3);
  for (const std::size_t s : sites) mesh.pts.push_back((points[s].vec() - lo) / extent);

  // all collinear?
  const Vector2d& p0 = mesh.pts[0];
  std::size_t far = 0;
  for (std::size_t i = 1; i < mesh.pts.size(); ++i) {
    if ((mesh.pts[i] - p0).squaredNorm() > (mesh.pts[far] - p0).squaredNorm()) far = i;
  }
  const double base = (mesh.pts[far] - p0).norm();
  bool collinear = true;
  for (const auto& p : mesh.pts) {
    if (std::abs(orient2d(p0, mesh.pts[far], p)) > 1e-10 * base) {
      collinear = false;
      break;
    }
  }
  if (collinear) throw Error(ErrorCode::AllCollinear, "all sites lie on a line");

  const int m = static_cast<int>(mesh.pts.size());
  mesh.ghost = m;
  std::size_t third = 0;
  for (std::size_t i = 1; i < mesh.pts.size(); ++i) {
    if (std::abs(orient2d(p0, mesh.pts[far], mesh.pts[i])) > std::abs(orient2d(p0, mesh.pts[far], mesh.pts[third]))) third = i;
  }
  mesh.start(0, static_cast<int>(far), static_cast<int>(third));
  for (int i = 0; i < m; ++i) {
    if (i != 0 && i != static_cast<int>(far) && i != static_cast<int>(third)) mesh.insert(i);
  }

  std::vector<Triangle> out;
  for (const auto& t : mesh.tris) {
    if (!t.alive || mesh.is_ghost(t)) continue;
    out.push_back({{sites[static_cast<std::size_t>(t.v[0])], sites[static_cast<std::size_t>(t.v[1])],
                    sites[static_cast<std::size_t>(t.v[2])]}});
  }
  return out;
}

}  // namespace roadscale
