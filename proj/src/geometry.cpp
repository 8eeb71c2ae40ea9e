#include "homstokes/geometry.hpp"

#include <algorithm>
#include <limits>

namespace homstokes {

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  Vec2 ab = b - a;
  double len2 = dot(ab, ab);
  if (len2 <= 0.0) return length(p - a);
  double t = dot(p - a, ab) / len2;
  if (t <= 0.0) return length(p - a);
  if (t >= 1.0) return length(p - b);
  // perpendicular distance; exact zero for points on the segment line
  return std::abs(cross(ab, p - a)) / std::sqrt(len2);
}

double polygon_signed_area(const std::vector<Vec2>& poly) {
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    s += cross(poly[i], poly[(i + 1) % poly.size()]);
  }
  return 0.5 * s;
}

bool point_in_polygon(const std::vector<Vec2>& poly, Vec2 p) {
  bool inside = false;
  std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    Vec2 a = poly[i], b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      double xc = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < xc) inside = !inside;
    }
  }
  return inside;
}

namespace {

int orient(Vec2 a, Vec2 b, Vec2 c) {
  double v = cross(b - a, c - a);
  double scale = std::max({length(b - a), length(c - a), 1e-300});
  if (std::abs(v) <= 1e-14 * scale * scale) return 0;
  return v > 0 ? 1 : -1;
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) - 1e-14 <= p.x && p.x <= std::max(a.x, b.x) + 1e-14 &&
         std::min(a.y, b.y) - 1e-14 <= p.y && p.y <= std::max(a.y, b.y) + 1e-14;
}

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  int o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  return o4 == 0 && on_segment(c, d, b);
}

}  // namespace

bool polygon_is_simple(const std::vector<Vec2>& poly) {
  std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (length(poly[(i + 1) % n] - poly[i]) == 0.0) return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 a = poly[i], b = poly[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      Vec2 c = poly[j], d = poly[(j + 1) % n];
      if (adjacent) {
        // adjacent edges may only share their common vertex; reject folding back
        Vec2 shared = (j == i + 1) ? b : a;
        Vec2 other1 = (j == i + 1) ? a : b;
        Vec2 other2 = (j == i + 1) ? d : c;
        if (orient(other1, shared, other2) == 0 && dot(other1 - shared, other2 - shared) > 0) return false;
        continue;
      }
      if (segments_intersect(a, b, c, d)) return false;
    }
  }
  return true;
}

double polygon_diameter(const std::vector<Vec2>& poly) {
  double d = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    for (std::size_t j = i + 1; j < poly.size(); ++j) d = std::max(d, length(poly[i] - poly[j]));
  }
  return d;
}

double polygon_boundary_distance(const std::vector<Vec2>& poly, Vec2 p) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    d = std::min(d, point_segment_distance(p, poly[i], poly[(i + 1) % poly.size()]));
  }
  return d;
}

Vec2 polygon_nearest_point(const std::vector<Vec2>& poly, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  Vec2 out = p;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    Vec2 a = poly[i], ab = poly[(i + 1) % poly.size()] - a;
    double len2 = dot(ab, ab);
    double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    Vec2 c = a + ab * t;
    double d = length(p - c);
    if (d < best) {
      best = d;
      out = c;
    }
  }
  return out;
}

}  // namespace homstokes
