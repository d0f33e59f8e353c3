// SPDX-License-Identifier: Apache-2.0
#include "gof/predicates.hpp"

#include <atomic>
#include <cmath>
#include <vector>

namespace gof::predicates {

namespace {

std::atomic<unsigned long long> g_exact_calls{0};

constexpr double kEpsilon = 0x1p-53;
// Forward error bounds of the plain floating-point determinant, relative to
// its permanent. The doubled constants leave headroom over the tight values.
constexpr double kOrient3dBound = 2.0 * (7.0 + 56.0 * kEpsilon) * kEpsilon;
constexpr double kInsphereBound = 2.0 * (16.0 + 224.0 * kEpsilon) * kEpsilon;
constexpr double kOrient2dBound = 2.0 * (3.0 + 16.0 * kEpsilon) * kEpsilon;

// Nonoverlapping expansion, components in increasing magnitude, zeros removed.
class Expansion {
 public:
  Expansion() = default;
  explicit Expansion(double v) {
    if (v != 0.0) c_.push_back(v);
  }

  static Expansion difference(double a, double b) {
    const double x = a - b;
    const double bv = a - x;
    const double av = x + bv;
    const double br = bv - b;
    const double ar = a - av;
    Expansion e;
    const double y = ar + br;
    if (y != 0.0) e.c_.push_back(y);
    if (x != 0.0) e.c_.push_back(x);
    return e;
  }

  Expansion operator+(const Expansion& f) const {
    Expansion r = *this;
    for (const double b : f.c_) r.grow(b);
    return r;
  }
  Expansion operator-() const {
    Expansion r = *this;
    for (double& v : r.c_) v = -v;
    return r;
  }
  Expansion operator-(const Expansion& f) const { return *this + (-f); }

  Expansion operator*(const Expansion& f) const {
    Expansion r;
    for (const double b : f.c_) r = r + scale(b);
    return r;
  }

  double sign_value() const { return c_.empty() ? 0.0 : c_.back(); }

 private:
  static void two_sum(double a, double b, double& x, double& y) {
    x = a + b;
    const double bv = x - a;
    const double av = x - bv;
    y = (a - av) + (b - bv);
  }
  static void two_prod(double a, double b, double& x, double& y) {
    x = a * b;
    y = std::fma(a, b, -x);
  }
  static void fast_two_sum(double a, double b, double& x, double& y) {
    x = a + b;
    y = b - (x - a);
  }

  void grow(double b) {
    std::vector<double> h;
    h.reserve(c_.size() + 1);
    double q = b;
    for (const double e : c_) {
      double sum, err;
      two_sum(q, e, sum, err);
      if (err != 0.0) h.push_back(err);
      q = sum;
    }
    if (q != 0.0) h.push_back(q);
    c_.swap(h);
  }

  Expansion scale(double b) const {
    Expansion r;
    if (c_.empty() || b == 0.0) return r;
    double q, hh;
    two_prod(c_[0], b, q, hh);
    if (hh != 0.0) r.c_.push_back(hh);
    for (size_t i = 1; i < c_.size(); ++i) {
      double p1, p0, sum;
      two_prod(c_[i], b, p1, p0);
      two_sum(q, p0, sum, hh);
      if (hh != 0.0) r.c_.push_back(hh);
      fast_two_sum(p1, sum, q, hh);
      if (hh != 0.0) r.c_.push_back(hh);
    }
    if (q != 0.0) r.c_.push_back(q);
    return r;
  }

  std::vector<double> c_;
};

// Shewchuk's orientation: positive when d lies below the plane of a, b, c.
double orient3d_exact(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  ++g_exact_calls;
  const Expansion adx = Expansion::difference(a.x(), d.x());
  const Expansion ady = Expansion::difference(a.y(), d.y());
  const Expansion adz = Expansion::difference(a.z(), d.z());
  const Expansion bdx = Expansion::difference(b.x(), d.x());
  const Expansion bdy = Expansion::difference(b.y(), d.y());
  const Expansion bdz = Expansion::difference(b.z(), d.z());
  const Expansion cdx = Expansion::difference(c.x(), d.x());
  const Expansion cdy = Expansion::difference(c.y(), d.y());
  const Expansion cdz = Expansion::difference(c.z(), d.z());
  const Expansion det = adx * (bdy * cdz - bdz * cdy) + bdx * (cdy * adz - cdz * ady) +
                        cdx * (ady * bdz - adz * bdy);
  return det.sign_value();
}

double shewchuk_orient3d(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const double adx = a.x() - d.x(), ady = a.y() - d.y(), adz = a.z() - d.z();
  const double bdx = b.x() - d.x(), bdy = b.y() - d.y(), bdz = b.z() - d.z();
  const double cdx = c.x() - d.x(), cdy = c.y() - d.y(), cdz = c.z() - d.z();
  const double bdxcdy = bdx * cdy, cdxbdy = cdx * bdy;
  const double cdxady = cdx * ady, adxcdy = adx * cdy;
  const double adxbdy = adx * bdy, bdxady = bdx * ady;
  const double det = adz * (bdxcdy - cdxbdy) + bdz * (cdxady - adxcdy) + cdz * (adxbdy - bdxady);
  const double permanent = (std::abs(bdxcdy) + std::abs(cdxbdy)) * std::abs(adz) +
                           (std::abs(cdxady) + std::abs(adxcdy)) * std::abs(bdz) +
                           (std::abs(adxbdy) + std::abs(bdxady)) * std::abs(cdz);
  const double bound = kOrient3dBound * permanent;
  if (det > bound || -det > bound) return det;
  return orient3d_exact(a, b, c, d);
}

double insphere_exact(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, const Vec3& e) {
  ++g_exact_calls;
  const Expansion aex = Expansion::difference(a.x(), e.x());
  const Expansion aey = Expansion::difference(a.y(), e.y());
  const Expansion aez = Expansion::difference(a.z(), e.z());
  const Expansion bex = Expansion::difference(b.x(), e.x());
  const Expansion bey = Expansion::difference(b.y(), e.y());
  const Expansion bez = Expansion::difference(b.z(), e.z());
  const Expansion cex = Expansion::difference(c.x(), e.x());
  const Expansion cey = Expansion::difference(c.y(), e.y());
  const Expansion cez = Expansion::difference(c.z(), e.z());
  const Expansion dex = Expansion::difference(d.x(), e.x());
  const Expansion dey = Expansion::difference(d.y(), e.y());
  const Expansion dez = Expansion::difference(d.z(), e.z());

  const Expansion ab = aex * bey - bex * aey;
  const Expansion bc = bex * cey - cex * bey;
  const Expansion cd = cex * dey - dex * cey;
  const Expansion da = dex * aey - aex * dey;
  const Expansion ac = aex * cey - cex * aey;
  const Expansion bd = bex * dey - dex * bey;

  const Expansion abc = aez * bc - bez * ac + cez * ab;
  const Expansion bcd = bez * cd - cez * bd + dez * bc;
  const Expansion cda = cez * da + dez * ac + aez * cd;
  const Expansion dab = dez * ab + aez * bd + bez * da;

  const Expansion alift = aex * aex + aey * aey + aez * aez;
  const Expansion blift = bex * bex + bey * bey + bez * bez;
  const Expansion clift = cex * cex + cey * cey + cez * cez;
  const Expansion dlift = dex * dex + dey * dey + dez * dez;

  const Expansion det = (dlift * abc - clift * dab) + (blift * cda - alift * bcd);
  return det.sign_value();
}

// Shewchuk's insphere: positive when e is inside the sphere through a, b, c, d
// and shewchuk_orient3d(a, b, c, d) > 0.
double shewchuk_insphere(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d,
                         const Vec3& e) {
  const double aex = a.x() - e.x(), aey = a.y() - e.y(), aez = a.z() - e.z();
  const double bex = b.x() - e.x(), bey = b.y() - e.y(), bez = b.z() - e.z();
  const double cex = c.x() - e.x(), cey = c.y() - e.y(), cez = c.z() - e.z();
  const double dex = d.x() - e.x(), dey = d.y() - e.y(), dez = d.z() - e.z();

  const double aexbey = aex * bey, bexaey = bex * aey;
  const double bexcey = bex * cey, cexbey = cex * bey;
  const double cexdey = cex * dey, dexcey = dex * cey;
  const double dexaey = dex * aey, aexdey = aex * dey;
  const double aexcey = aex * cey, cexaey = cex * aey;
  const double bexdey = bex * dey, dexbey = dex * bey;
  const double ab = aexbey - bexaey;
  const double bc = bexcey - cexbey;
  const double cd = cexdey - dexcey;
  const double da = dexaey - aexdey;
  const double ac = aexcey - cexaey;
  const double bd = bexdey - dexbey;

  const double abc = aez * bc - bez * ac + cez * ab;
  const double bcd = bez * cd - cez * bd + dez * bc;
  const double cda = cez * da + dez * ac + aez * cd;
  const double dab = dez * ab + aez * bd + bez * da;

  const double alift = aex * aex + aey * aey + aez * aez;
  const double blift = bex * bex + bey * bey + bez * bez;
  const double clift = cex * cex + cey * cey + cez * cez;
  const double dlift = dex * dex + dey * dey + dez * dez;

  const double det = (dlift * abc - clift * dab) + (blift * cda - alift * bcd);

  const double aezp = std::abs(aez), bezp = std::abs(bez), cezp = std::abs(cez), dezp = std::abs(dez);
  const double aexbeyp = std::abs(aexbey), bexaeyp = std::abs(bexaey);
  const double bexceyp = std::abs(bexcey), cexbeyp = std::abs(cexbey);
  const double cexdeyp = std::abs(cexdey), dexceyp = std::abs(dexcey);
  const double dexaeyp = std::abs(dexaey), aexdeyp = std::abs(aexdey);
  const double aexceyp = std::abs(aexcey), cexaeyp = std::abs(cexaey);
  const double bexdeyp = std::abs(bexdey), dexbeyp = std::abs(dexbey);
  const double permanent =
      ((cexdeyp + dexceyp) * bezp + (dexbeyp + bexdeyp) * cezp + (bexceyp + cexbeyp) * dezp) * alift +
      ((dexaeyp + aexdeyp) * cezp + (aexceyp + cexaeyp) * dezp + (cexdeyp + dexceyp) * aezp) * blift +
      ((aexbeyp + bexaeyp) * dezp + (bexdeyp + dexbeyp) * aezp + (dexaeyp + aexdeyp) * bezp) * clift +
      ((bexceyp + cexbeyp) * aezp + (cexaeyp + aexceyp) * bezp + (aexbeyp + bexaeyp) * cezp) * dlift;
  const double bound = kInsphereBound * permanent;
  if (det > bound || -det > bound) return det;
  return insphere_exact(a, b, c, d, e);
}

}  // namespace

double orient3d(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return -shewchuk_orient3d(a, b, c, d);
}

double insphere(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, const Vec3& e) {
  // Right-handed (a, b, c, d) has negative Shewchuk orientation; swapping two
  // vertices flips both the orientation and the insphere sign.
  return shewchuk_insphere(b, a, c, d, e);
}

double orient2d(double ax, double ay, double bx, double by, double cx, double cy) {
  const double detleft = (ax - cx) * (by - cy);
  const double detright = (ay - cy) * (bx - cx);
  const double det = detleft - detright;
  const double bound = kOrient2dBound * (std::abs(detleft) + std::abs(detright));
  if (det > bound || -det > bound) return det;
  ++g_exact_calls;
  const Expansion acx = Expansion::difference(ax, cx);
  const Expansion bcy = Expansion::difference(by, cy);
  const Expansion acy = Expansion::difference(ay, cy);
  const Expansion bcx = Expansion::difference(bx, cx);
  return (acx * bcy - acy * bcx).sign_value();
}

bool collinear(const Vec3& a, const Vec3& b, const Vec3& c) {
  return orient2d(a.x(), a.y(), b.x(), b.y(), c.x(), c.y()) == 0.0 &&
         orient2d(a.y(), a.z(), b.y(), b.z(), c.y(), c.z()) == 0.0 &&
         orient2d(a.z(), a.x(), b.z(), b.x(), c.z(), c.x()) == 0.0;
}

unsigned long long exact_fallback_count() { return g_exact_calls.load(); }

}  // namespace gof::predicates
