#include "sepp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sepp/errors.hpp"

namespace sepp {

double ring_signed_area(const Ring& ring) {
  const std::size_t n = ring.size();
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = ring[i];
    const Vec2& b = ring[(i + 1) % n];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

namespace {

bool on_segment(Vec2 p, Vec2 a, Vec2 b) {
  const double c = cross(b - a, p - a);
  if (std::abs(c) > 1e-12 * (1.0 + squared_norm(b - a))) return false;
  return p.x >= std::min(a.x, b.x) - 1e-12 && p.x <= std::max(a.x, b.x) + 1e-12 &&
         p.y >= std::min(a.y, b.y) - 1e-12 && p.y <= std::max(a.y, b.y) + 1e-12;
}

bool segments_properly_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double d1 = cross(d - c, a - c);
  const double d2 = cross(d - c, b - c);
  const double d3 = cross(b - a, c - a);
  const double d4 = cross(b - a, d - a);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
         ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

}  // namespace

bool point_in_ring(Vec2 p, const Ring& ring) {
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (on_segment(p, ring[i], ring[(i + 1) % n])) return true;
  }
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = ring[i];
    const Vec2& b = ring[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

bool ring_is_simple(const Ring& ring) {
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      // Skip adjacent edges (they share a vertex).
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (segments_properly_intersect(ring[i], ring[(i + 1) % n], ring[j],
                                      ring[(j + 1) % n]))
        return false;
    }
  }
  return true;
}

Ring clip_halfplane(const Ring& ring, Vec2 anchor, Vec2 normal) {
  Ring out;
  const std::size_t n = ring.size();
  if (n == 0) return out;
  out.reserve(n + 2);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 cur = ring[i];
    const Vec2 nxt = ring[(i + 1) % n];
    const double dc = dot(cur - anchor, normal);
    const double dn = dot(nxt - anchor, normal);
    if (dc <= 0.0) {
      out.push_back(cur);
      if (dn > 0.0) {
        const double t = dc / (dc - dn);
        out.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
      }
    } else if (dn <= 0.0) {
      const double t = dc / (dc - dn);
      out.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
    }
  }
  return out;
}

SpatialRegion SpatialRegion::rectangle(Rect r) {
  if (!(r.x1 > r.x0) || !(r.y1 > r.y0))
    throw ValidationError("rectangle region must have positive area");
  SpatialRegion region;
  region.shape_ = r;
  return region;
}

SpatialRegion SpatialRegion::polygon(Ring ring) {
  if (ring.size() < 3) throw ValidationError("polygon needs at least 3 vertices");
  if (!ring_is_simple(ring))
    throw ValidationError("polygon ring is self-intersecting");
  if (std::abs(ring_signed_area(ring)) <= 0.0)
    throw ValidationError("polygon region has zero area");
  SpatialRegion region;
  region.shape_ = std::move(ring);
  return region;
}

double SpatialRegion::area() const {
  if (const Rect* r = std::get_if<Rect>(&shape_)) return r->area();
  return std::abs(ring_signed_area(std::get<Ring>(shape_)));
}

bool SpatialRegion::contains(Vec2 p) const {
  if (const Rect* r = std::get_if<Rect>(&shape_)) return r->contains(p);
  return point_in_ring(p, std::get<Ring>(shape_));
}

Rect SpatialRegion::bounding_box() const {
  if (const Rect* r = std::get_if<Rect>(&shape_)) return *r;
  const Ring& ring = std::get<Ring>(shape_);
  Rect box{std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity()};
  for (const Vec2& v : ring) {
    box.x0 = std::min(box.x0, v.x);
    box.x1 = std::max(box.x1, v.x);
    box.y0 = std::min(box.y0, v.y);
    box.y1 = std::max(box.y1, v.y);
  }
  return box;
}

Ring SpatialRegion::boundary_ring() const {
  if (const Rect* r = std::get_if<Rect>(&shape_)) {
    return {{r->x0, r->y0}, {r->x1, r->y0}, {r->x1, r->y1}, {r->x0, r->y1}};
  }
  return std::get<Ring>(shape_);
}

double domain_area(const ObservationDomain& domain) {
  const double a = domain.region.area();
  if (!(a > 0.0)) throw ValidationError("observation region has zero area");
  return a;
}

bool point_in_domain(Vec2 s, const ObservationDomain& domain) {
  return domain.region.contains(s);
}

}  // namespace sepp
