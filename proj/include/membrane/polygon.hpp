#pragma once

#include <utility>
#include <vector>

#include "membrane/linalg.hpp"

// Convex-polygon toolbox for overlaying piecewise-affine decompositions:
// clipping, halfplane splitting and exact areas. Polygons are CCW vertex
// lists without a repeated closing vertex.

namespace membrane {

using Polygon = std::vector<Vec2>;

double polygon_area(const Polygon& p);          // signed (CCW positive)
Vec2 polygon_centroid(const Polygon& p);
double polygon_diameter(const Polygon& p);
void make_ccw(Polygon& p);

// Strict-interior/boundary-tolerant test for simple polygons (winding rule).
bool point_in_polygon(const Polygon& p, const Vec2& x, double tol = 1e-12);

// Halfplane {x : n . x <= c}.
struct Halfplane {
    Vec2 n;
    double c;
    double eval(const Vec2& x) const { return n.dot(x) - c; }
};

// Clip a convex CCW polygon against a halfplane (Sutherland-Hodgman step).
Polygon clip_halfplane(const Polygon& poly, const Halfplane& h);

// Both sides of the split: first = inside (n.x <= c), second = outside.
std::pair<Polygon, Polygon> split_halfplane(const Polygon& poly, const Halfplane& h);

// Intersection of two convex CCW polygons.
Polygon clip_convex(const Polygon& subject, const Polygon& clip);

// Subtract a convex polygon: returns a disjoint convex decomposition of
// subject \ clip (BSP-style successive halfplane splitting).
std::vector<Polygon> subtract_convex(const Polygon& subject, const Polygon& clip);

// Fan triangulation of a convex polygon; degenerate slivers are dropped.
std::vector<std::array<Vec2, 3>> fan_triangulate(const Polygon& p, double area_tol = 0.0);

// Affine image of a polygon.
Polygon map_polygon(const Polygon& p, const Mat22& j, const Vec2& offset);

// Distance from a point to a segment.
double segment_distance(const Vec2& a, const Vec2& b, const Vec2& x);

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);

}  // namespace membrane
