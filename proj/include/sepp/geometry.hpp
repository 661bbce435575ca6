#pragma once

#include <cstddef>
#include <variant>
#include <vector>

namespace sepp {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double squared_norm(Vec2 a) { return a.x * a.x + a.y * a.y; }

struct Rect {
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  double area() const { return (x1 - x0) * (y1 - y0); }
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  bool contains(Vec2 p) const {
    return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
  }
  Rect padded(double pad) const { return {x0 - pad, x1 + pad, y0 - pad, y1 + pad}; }
};

// Polygon ring; vertices in order, implicitly closed (no repeated endpoint).
using Ring = std::vector<Vec2>;

double ring_signed_area(const Ring& ring);

// Even-odd rule; points on the boundary count as inside.
bool point_in_ring(Vec2 p, const Ring& ring);

bool ring_is_simple(const Ring& ring);

// Clips a convex or simple ring against the half-plane
// { p : dot(p - anchor, normal) <= 0 } (Sutherland-Hodgman step).
Ring clip_halfplane(const Ring& ring, Vec2 anchor, Vec2 normal);

// Spatial observation region: axis-aligned rectangle or simple polygon.
class SpatialRegion {
 public:
  static SpatialRegion rectangle(Rect r);
  static SpatialRegion polygon(Ring ring);

  double area() const;
  bool contains(Vec2 p) const;
  Rect bounding_box() const;
  Ring boundary_ring() const;
  bool is_rectangle() const { return std::holds_alternative<Rect>(shape_); }
  const Rect* as_rect() const { return std::get_if<Rect>(&shape_); }
  const Ring* as_polygon() const { return std::get_if<Ring>(&shape_); }

 private:
  std::variant<Rect, Ring> shape_;
};

// Observation window: spatial region X plus time interval [0, T).
struct ObservationDomain {
  SpatialRegion region = SpatialRegion::rectangle({});
  double t_end = 1.0;

  double area() const { return region.area(); }
  bool contains(Vec2 p) const { return region.contains(p); }
  bool contains(Vec2 p, double t) const {
    return t >= 0.0 && t < t_end && region.contains(p);
  }
};

double domain_area(const ObservationDomain& domain);
bool point_in_domain(Vec2 s, const ObservationDomain& domain);

}  // namespace sepp
