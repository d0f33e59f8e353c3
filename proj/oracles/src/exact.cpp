// SPDX-License-Identifier: Apache-2.0
#include "gof/oracles/exact.hpp"

#include <gmpxx.h>

namespace gof::oracle {

namespace {

struct Q3 {
  mpq_class x, y, z;
};

Q3 q(const Vec3& v) { return {mpq_class(v.x()), mpq_class(v.y()), mpq_class(v.z())}; }

Q3 sub(const Q3& a, const Q3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }

mpq_class dot(const Q3& a, const Q3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

mpq_class det3(const Q3& a, const Q3& b, const Q3& c) {
  return a.x * (b.y * c.z - b.z * c.y) - a.y * (b.x * c.z - b.z * c.x) + a.z * (b.x * c.y - b.y * c.x);
}

int sign(const mpq_class& v) { return sgn(v); }

// Solves 2 (p - a) . x = |p|^2 - |a|^2 for p = b, c, d by Cramer's rule.
Q3 circumcenter(const Q3& qa, const Q3& qb, const Q3& qc, const Q3& qd) {
  const Q3 r1 = sub(qb, qa), r2 = sub(qc, qa), r3 = sub(qd, qa);
  const mpq_class h1 = (dot(qb, qb) - dot(qa, qa)) / 2;
  const mpq_class h2 = (dot(qc, qc) - dot(qa, qa)) / 2;
  const mpq_class h3 = (dot(qd, qd) - dot(qa, qa)) / 2;
  const mpq_class det = det3(r1, r2, r3);
  const mpq_class X = det3({h1, r1.y, r1.z}, {h2, r2.y, r2.z}, {h3, r3.y, r3.z}) / det;
  const mpq_class Y = det3({r1.x, h1, r1.z}, {r2.x, h2, r2.z}, {r3.x, h3, r3.z}) / det;
  const mpq_class Z = det3({r1.x, r1.y, h1}, {r2.x, r2.y, h2}, {r3.x, r3.y, h3}) / det;
  return {X, Y, Z};
}

}  // namespace

int exact_orientation(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const Q3 qa = q(a);
  return sign(det3(sub(q(b), qa), sub(q(c), qa), sub(q(d), qa)));
}

int exact_in_circumsphere(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, const Vec3& e) {
  if (exact_orientation(a, b, c, d) == 0) return 0;
  const Q3 center = circumcenter(q(a), q(b), q(c), q(d));
  const Q3 ra = sub(q(a), center), re = sub(q(e), center);
  return sign(dot(ra, ra) - dot(re, re));
}

DelaunayAudit audit_delaunay(std::span<const Vec3> points, std::span<const Tet> tets) {
  DelaunayAudit audit;
  audit.tets = tets.size();
  std::vector<uint8_t> used(points.size(), 0);
  for (const Tet& t : tets) {
    for (int i : t) used[i] = 1;
    const Vec3& a = points[t[0]];
    const Vec3& b = points[t[1]];
    const Vec3& c = points[t[2]];
    const Vec3& d = points[t[3]];
    if (exact_orientation(a, b, c, d) <= 0) {
      ++audit.negative_or_flat;
      continue;
    }
    const Q3 qc = circumcenter(q(a), q(b), q(c), q(d));
    const Vec3 center(qc.x.get_d(), qc.y.get_d(), qc.z.get_d());
    const double r2d = (a - center).squaredNorm();
    const double band = 1e-7 * r2d + 1e-300;
    for (size_t p = 0; p < points.size(); ++p) {
      if (static_cast<int>(p) == t[0] || static_cast<int>(p) == t[1] || static_cast<int>(p) == t[2] ||
          static_cast<int>(p) == t[3]) {
        continue;
      }
      const double d2 = (points[p] - center).squaredNorm();
      if (d2 > r2d + band) continue;
      ++audit.exact_tests;
      if (exact_in_circumsphere(a, b, c, d, points[p]) > 0) ++audit.sphere_violations;
    }
  }
  for (uint8_t u : used) {
    if (!u) ++audit.unused_points;
  }
  return audit;
}

}  // namespace gof::oracle
