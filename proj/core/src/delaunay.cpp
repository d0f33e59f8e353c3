// SPDX-License-Identifier: Apache-2.0
#include "gof/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <unordered_map>

#include "gof/errors.hpp"
#include "gof/predicates.hpp"

namespace gof {

double tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).dot((c - a).cross(d - a)) / 6.0;
}

namespace {

using predicates::insphere;
using predicates::orient3d;

uint64_t spread_bits(uint64_t v) {
  v &= 0x1fffff;
  v = (v | v << 32) & 0x1f00000000ffffULL;
  v = (v | v << 16) & 0x1f0000ff0000ffULL;
  v = (v | v << 8) & 0x100f00f00f00f00fULL;
  v = (v | v << 4) & 0x10c30c30c30c30c3ULL;
  v = (v | v << 2) & 0x1249249249249249ULL;
  return v;
}

struct Cell {
  Tet v{};
  std::array<int, 4> n{-1, -1, -1, -1};  // n[i] is across the face opposite v[i]
  bool alive = true;
};

class Triangulator {
 public:
  explicit Triangulator(std::vector<Vec3> pts) : pts_(std::move(pts)) {}

  void init_super(int s0) {
    super_begin_ = s0;
    Cell c;
    c.v = {s0, s0 + 1, s0 + 2, s0 + 3};
    if (orient3d(pts_[s0], pts_[s0 + 1], pts_[s0 + 2], pts_[s0 + 3]) < 0.0) std::swap(c.v[0], c.v[1]);
    cells_.push_back(c);
    last_ = 0;
  }

  void insert(int p) {
    const int start = locate(p);
    collect_cavity(p, start);
    retriangulate(p);
  }

  std::vector<Tet> real_tets() const {
    std::vector<Tet> out;
    for (const Cell& c : cells_) {
      if (!c.alive) continue;
      if (c.v[0] >= super_begin_ || c.v[1] >= super_begin_ || c.v[2] >= super_begin_ ||
          c.v[3] >= super_begin_) {
        continue;
      }
      out.push_back(c.v);
    }
    return out;
  }

 private:
  double orient_replaced(const Cell& c, int i, int p) const {
    std::array<const Vec3*, 4> q{&pts_[c.v[0]], &pts_[c.v[1]], &pts_[c.v[2]], &pts_[c.v[3]]};
    q[i] = &pts_[p];
    return orient3d(*q[0], *q[1], *q[2], *q[3]);
  }

  bool contains(const Cell& c, int p) const {
    for (int i = 0; i < 4; ++i) {
      if (orient_replaced(c, i, p) < 0.0) return false;
    }
    return true;
  }

  int locate(int p) {
    int cur = last_;
    if (!cells_[cur].alive) cur = first_alive();
    const size_t max_steps = 4 * cells_.size() + 64;
    unsigned rot = 0;
    for (size_t step = 0; step < max_steps; ++step) {
      const Cell& c = cells_[cur];
      int next = -1;
      for (int k = 0; k < 4; ++k) {
        const int i = static_cast<int>((k + rot) & 3u);
        if (orient_replaced(c, i, p) < 0.0) {
          next = c.n[i];
          break;
        }
      }
      ++rot;
      if (next < 0) {
        // Either inside this cell, or the walk tried to leave the hull.
        if (contains(c, p)) return cur;
        break;
      }
      cur = next;
    }
    for (size_t i = 0; i < cells_.size(); ++i) {
      if (cells_[i].alive && contains(cells_[i], p)) return static_cast<int>(i);
    }
    throw NumericalError("delaunay: point location failed");
  }

  int first_alive() const {
    for (size_t i = 0; i < cells_.size(); ++i) {
      if (cells_[i].alive) return static_cast<int>(i);
    }
    return 0;
  }

  bool conflicts(const Cell& c, int p) const {
    return insphere(pts_[c.v[0]], pts_[c.v[1]], pts_[c.v[2]], pts_[c.v[3]], pts_[p]) > 0.0;
  }

  void collect_cavity(int p, int start) {
    ++stamp_;
    if (mark_.size() < cells_.size()) mark_.resize(cells_.size(), 0);
    cavity_.clear();
    stack_.clear();
    // The located cell contains p and p is not one of its vertices, so its
    // open circumball contains p.
    mark_[start] = stamp_;
    cavity_.push_back(start);
    stack_.push_back(start);
    while (!stack_.empty()) {
      const int c = stack_.back();
      stack_.pop_back();
      for (const int nb : cells_[c].n) {
        if (nb < 0 || mark_[nb] == stamp_ || mark_[nb] == -stamp_) continue;
        if (conflicts(cells_[nb], p)) {
          mark_[nb] = stamp_;
          cavity_.push_back(nb);
          stack_.push_back(nb);
        } else {
          mark_[nb] = -stamp_;
        }
      }
    }
  }

  static uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) | static_cast<uint32_t>(b);
  }

  void retriangulate(int p) {
    boundary_.clear();
    for (const int c : cavity_) {
      const Cell& cell = cells_[c];
      for (int i = 0; i < 4; ++i) {
        const int nb = cell.n[i];
        if (nb >= 0 && mark_[nb] == stamp_) continue;
        boundary_.push_back({cell.v, i, nb, c});
      }
    }
    for (const int c : cavity_) cells_[c].alive = false;

    edges_.clear();
    int created = -1;
    for (const auto& [v, face, outside, old_cell] : boundary_) {
      Cell cell;
      cell.v = v;
      cell.v[face] = p;
      cell.n[face] = outside;
      int id;
      if (!free_.empty()) {
        id = free_.back();
        free_.pop_back();
        cells_[id] = cell;
      } else {
        id = static_cast<int>(cells_.size());
        cells_.push_back(cell);
        mark_.push_back(0);
      }
      if (outside >= 0) {
        for (int& back : cells_[outside].n) {
          if (back == old_cell) {
            back = id;
            break;
          }
        }
      }
      for (int j = 0; j < 4; ++j) {
        if (j == face) continue;
        int e[2];
        int m = 0;
        for (int k = 0; k < 4; ++k) {
          if (k != face && k != j) e[m++] = cell.v[k];
        }
        const uint64_t key = edge_key(e[0], e[1]);
        auto [it, inserted] = edges_.try_emplace(key, id, j);
        if (!inserted) {
          cells_[id].n[j] = it->second.first;
          cells_[it->second.first].n[it->second.second] = id;
          edges_.erase(it);
        }
      }
      created = id;
    }
    if (!edges_.empty()) throw NumericalError("delaunay: cavity boundary is not closed");
    free_.insert(free_.end(), cavity_.begin(), cavity_.end());
    last_ = created;
  }

  std::vector<Vec3> pts_;
  std::vector<Cell> cells_;
  std::vector<int> free_;
  std::vector<int> mark_;
  int stamp_ = 0;
  std::vector<int> cavity_;
  std::vector<int> stack_;
  struct BoundaryFace {
    Tet v;
    int face;
    int outside;
    int old_cell;
  };
  std::vector<BoundaryFace> boundary_;
  std::unordered_map<uint64_t, std::pair<int, int>> edges_;
  int super_begin_ = 0;
  int last_ = 0;
};

}  // namespace

std::vector<Tet> delaunay(std::span<const Vec3> points) {
  const int n = static_cast<int>(points.size());
  for (int i = 0; i < n; ++i) {
    if (!points[i].allFinite()) {
      throw InputError("delaunay: point " + std::to_string(i) + " is not finite");
    }
  }
  if (n < 4) throw InputError("delaunay: at least 4 points are required");

  Vec3 lo = points[0], hi = points[0];
  for (const Vec3& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec3 extent = hi - lo;
  const double size = std::max(extent.maxCoeff(), 1e-300);

  std::vector<uint64_t> morton(n);
  for (int i = 0; i < n; ++i) {
    uint64_t code = 0;
    for (int a = 0; a < 3; ++a) {
      const double f = extent[a] > 0.0 ? (points[i][a] - lo[a]) / extent[a] : 0.0;
      const auto q = static_cast<uint64_t>(std::clamp(f, 0.0, 1.0) * 2097151.0);
      code |= spread_bits(q) << a;
    }
    morton[i] = code;
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (morton[a] != morton[b]) return morton[a] < morton[b];
    for (int k = 0; k < 3; ++k) {
      if (points[a][k] != points[b][k]) return points[a][k] < points[b][k];
    }
    return a < b;
  });
  std::vector<int> unique;
  unique.reserve(n);
  for (const int i : order) {
    if (!unique.empty() && points[unique.back()] == points[i]) continue;
    unique.push_back(i);
  }
  if (unique.size() < 4) throw InputError("delaunay: fewer than 4 distinct points");

  // Reject flat input before building anything.
  const Vec3& p0 = points[unique[0]];
  const Vec3& p1 = points[unique[1]];
  int p2 = -1;
  for (size_t k = 2; k < unique.size() && p2 < 0; ++k) {
    if (!predicates::collinear(p0, p1, points[unique[k]])) p2 = unique[k];
  }
  bool solid = false;
  if (p2 >= 0) {
    for (size_t k = 2; k < unique.size() && !solid; ++k) {
      solid = orient3d(p0, p1, points[p2], points[unique[k]]) != 0.0;
    }
  }
  if (!solid) {
    throw InputError("delaunay: all points are coplanar; jitter the input to make it 3D");
  }

  std::vector<Vec3> pts;
  pts.reserve(unique.size() + 4);
  for (const int i : unique) pts.push_back(points[i]);
  const Vec3 center = 0.5 * (lo + hi);
  const double r = 1e4 * size;
  const int s0 = static_cast<int>(pts.size());
  pts.push_back(center + r * Vec3(1, 1, 1));
  pts.push_back(center + r * Vec3(1, -1, -1));
  pts.push_back(center + r * Vec3(-1, 1, -1));
  pts.push_back(center + r * Vec3(-1, -1, 1));

  Triangulator tri(std::move(pts));
  tri.init_super(s0);
  for (int i = 0; i < s0; ++i) tri.insert(i);

  std::vector<Tet> tets = tri.real_tets();
  for (Tet& t : tets) {
    for (int& v : t) v = unique[v];
  }
  return tets;
}

}  // namespace gof
