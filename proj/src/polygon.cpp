#include "membrane/polygon.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace membrane {

double polygon_area(const Polygon& p) {
    double a = 0.0;
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& u = p[i];
        const Vec2& v = p[(i + 1) % n];
        a += u.cross(v);
    }
    return 0.5 * a;
}

Vec2 polygon_centroid(const Polygon& p) {
    const std::size_t n = p.size();
    double a = 0.0;
    Vec2 c{0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& u = p[i];
        const Vec2& v = p[(i + 1) % n];
        const double w = u.cross(v);
        a += w;
        c = c + (u + v) * w;
    }
    if (std::abs(a) < 1e-300) {
        for (const Vec2& q : p) c = c + q;
        return c / static_cast<double>(n);
    }
    return c / (3.0 * a);
}

double polygon_diameter(const Polygon& p) {
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = i + 1; j < p.size(); ++j)
            d = std::max(d, (p[i] - p[j]).norm());
    return d;
}

void make_ccw(Polygon& p) {
    if (polygon_area(p) < 0.0) std::reverse(p.begin(), p.end());
}

bool point_in_polygon(const Polygon& p, const Vec2& x, double tol) {
    const std::size_t n = p.size();
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = p[j];
        const Vec2& b = p[i];
        if (segment_distance(a, b, x) <= tol) return true;
        const bool crosses = (b.y > x.y) != (a.y > x.y);
        if (crosses) {
            const double t = (x.y - b.y) / (a.y - b.y);
            if (b.x + t * (a.x - b.x) > x.x) inside = !inside;
        }
    }
    return inside;
}

Polygon clip_halfplane(const Polygon& poly, const Halfplane& h) {
    Polygon out;
    const std::size_t n = poly.size();
    if (n == 0) return out;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& cur = poly[i];
        const Vec2& nxt = poly[(i + 1) % n];
        const double dc = h.eval(cur), dn = h.eval(nxt);
        if (dc <= 0.0) {
            out.push_back(cur);
            if (dn > 0.0) out.push_back(cur + (nxt - cur) * (dc / (dc - dn)));
        } else if (dn <= 0.0) {
            out.push_back(cur + (nxt - cur) * (dc / (dc - dn)));
        }
    }
    return out;
}

std::pair<Polygon, Polygon> split_halfplane(const Polygon& poly, const Halfplane& h) {
    const Halfplane opposite{-h.n, -h.c};
    return {clip_halfplane(poly, h), clip_halfplane(poly, opposite)};
}

Polygon clip_convex(const Polygon& subject, const Polygon& clip) {
    Polygon out = subject;
    const std::size_t n = clip.size();
    for (std::size_t i = 0; i < n && !out.empty(); ++i) {
        const Vec2& a = clip[i];
        const Vec2& b = clip[(i + 1) % n];
        // Interior of a CCW polygon lies left of each edge: (b-a) x (x-a) >= 0.
        const Vec2 e = b - a;
        const Halfplane h{{e.y, -e.x}, e.y * a.x - e.x * a.y};
        out = clip_halfplane(out, h);
    }
    return out;
}

std::vector<Polygon> subtract_convex(const Polygon& subject, const Polygon& clip) {
    std::vector<Polygon> out;
    Polygon rest = subject;
    const std::size_t n = clip.size();
    for (std::size_t i = 0; i < n && !rest.empty(); ++i) {
        const Vec2& a = clip[i];
        const Vec2& b = clip[(i + 1) % n];
        const Vec2 e = b - a;
        const Halfplane inside{{e.y, -e.x}, e.y * a.x - e.x * a.y};
        auto [in_part, out_part] = split_halfplane(rest, inside);
        if (std::abs(polygon_area(out_part)) > 0.0) out.push_back(std::move(out_part));
        rest = std::move(in_part);
    }
    return out;
}

std::vector<std::array<Vec2, 3>> fan_triangulate(const Polygon& p, double area_tol) {
    std::vector<std::array<Vec2, 3>> tris;
    if (p.size() < 3) return tris;
    for (std::size_t i = 1; i + 1 < p.size(); ++i) {
        const std::array<Vec2, 3> t{p[0], p[i], p[i + 1]};
        const double a = 0.5 * std::abs((t[1] - t[0]).cross(t[2] - t[0]));
        if (a > area_tol) tris.push_back(t);
    }
    return tris;
}

Polygon map_polygon(const Polygon& p, const Mat22& j, const Vec2& offset) {
    Polygon out;
    out.reserve(p.size());
    for (const Vec2& v : p) out.push_back(j.apply(v) + offset);
    make_ccw(out);
    return out;
}

double segment_distance(const Vec2& a, const Vec2& b, const Vec2& x) {
    const Vec2 d = b - a;
    const double len2 = d.norm2();
    if (len2 == 0.0) return (x - a).norm();
    const double t = std::clamp((x - a).dot(d) / len2, 0.0, 1.0);
    return (x - (a + d * t)).norm();
}

namespace {
int orient(const Vec2& a, const Vec2& b, const Vec2& c) {
    const double v = (b - a).cross(c - a);
    if (v > 0) return 1;
    if (v < 0) return -1;
    return 0;
}
bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
           p.y <= std::max(a.y, b.y);
}
}  // namespace

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    const int o1 = orient(a, b, c), o2 = orient(a, b, d);
    const int o3 = orient(c, d, a), o4 = orient(c, d, b);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(a, b, c)) return true;
    if (o2 == 0 && on_segment(a, b, d)) return true;
    if (o3 == 0 && on_segment(c, d, a)) return true;
    if (o4 == 0 && on_segment(c, d, b)) return true;
    return false;
}

}  // namespace membrane
