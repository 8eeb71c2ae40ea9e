#pragma once

#include <cmath>
#include <vector>

namespace homstokes {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double operator[](int i) const { return i == 0 ? x : y; }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double length(Vec2 a) { return std::hypot(a.x, a.y); }

/// Distance from p to the closed segment [a, b].
double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

/// Signed area, positive for counter-clockwise vertex order.
double polygon_signed_area(const std::vector<Vec2>& poly);

/// Even-odd rule; points on the boundary may go either way.
bool point_in_polygon(const std::vector<Vec2>& poly, Vec2 p);

/// True when no two non-adjacent edges intersect and no edge is degenerate.
bool polygon_is_simple(const std::vector<Vec2>& poly);

double polygon_diameter(const std::vector<Vec2>& poly);

/// Minimum distance from p to the polygon boundary.
double polygon_boundary_distance(const std::vector<Vec2>& poly, Vec2 p);

/// Closest point of the polygon boundary to p.
Vec2 polygon_nearest_point(const std::vector<Vec2>& poly, Vec2 p);

}  // namespace homstokes
