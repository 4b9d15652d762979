#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

// Fixed-size kernel for the dimensions this project lives in: planar points,
// deformation values in R^3, 3x2 membrane gradients, 2x2 plane maps and 3x3
// space gradients. All types are plain immutable-by-convention value types.

namespace membrane {

struct Vec2 {
    double x = 0.0, y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2 operator-() const { return {-x, -y}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm2() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm2()); }
    Vec2 perp() const { return {-y, x}; }
    Vec2 normalized() const { return *this / norm(); }
};
inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm2() const { return x * x + y * y + z * z; }
    double norm() const { return std::sqrt(norm2()); }
    Vec3 normalized() const { return *this / norm(); }
};
inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline Vec3 cross(const Vec3& u, const Vec3& v) {
    return {u.y * v.z - u.z * v.y, u.z * v.x - u.x * v.z, u.x * v.y - u.y * v.x};
}

// 2x2 matrix, entries a(row, col).
struct Mat22 {
    double a11 = 0, a12 = 0, a21 = 0, a22 = 0;

    static Mat22 identity() { return {1, 0, 0, 1}; }

    Vec2 apply(const Vec2& v) const { return {a11 * v.x + a12 * v.y, a21 * v.x + a22 * v.y}; }
    Mat22 mul(const Mat22& o) const {
        return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
                a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
    }
    double det() const { return a11 * a22 - a12 * a21; }
    Mat22 inverse() const {
        const double d = det();
        if (d == 0.0) throw std::domain_error("Mat22::inverse: singular matrix");
        return {a22 / d, -a12 / d, -a21 / d, a11 / d};
    }
    Mat22 transpose() const { return {a11, a21, a12, a22}; }
    Mat22 operator+(const Mat22& o) const { return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22}; }
    Mat22 operator-(const Mat22& o) const { return {a11 - o.a11, a12 - o.a12, a21 - o.a21, a22 - o.a22}; }
    Mat22 operator*(double s) const { return {a11 * s, a12 * s, a21 * s, a22 * s}; }
    double frobenius2() const { return a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22; }
    double frobenius() const { return std::sqrt(frobenius2()); }
    // Largest singular value.
    double opnorm() const {
        const double f = frobenius2();
        const double d = det();
        const double disc = std::max(0.0, f * f - 4.0 * d * d);
        return std::sqrt(std::max(0.0, 0.5 * (f + std::sqrt(disc))));
    }
    double max_abs_entry() const {
        return std::max(std::max(std::abs(a11), std::abs(a12)), std::max(std::abs(a21), std::abs(a22)));
    }
};

// 3x2 matrix stored by columns: c1 and c2 are the columns of A = (A^1|A^2).
struct Mat32 {
    Vec3 c1, c2;

    Mat32() = default;
    Mat32(const Vec3& c1_, const Vec3& c2_) : c1(c1_), c2(c2_) {}

    Vec3 apply(const Vec2& v) const { return c1 * v.x + c2 * v.y; }
    Mat32 operator+(const Mat32& o) const { return {c1 + o.c1, c2 + o.c2}; }
    Mat32 operator-(const Mat32& o) const { return {c1 - o.c1, c2 - o.c2}; }
    Mat32 operator*(double s) const { return {c1 * s, c2 * s}; }
    double frobenius2() const { return c1.norm2() + c2.norm2(); }
    double frobenius() const { return std::sqrt(frobenius2()); }
    // A * M for a plane map M (result columns are combinations of c1, c2).
    Mat32 mul22(const Mat22& m) const {
        return {c1 * m.a11 + c2 * m.a21, c1 * m.a12 + c2 * m.a22};
    }
};
inline Mat32 outer(const Vec3& b, const Vec2& a) { return {b * a.x, b * a.y}; }

// 3x3 matrix stored by columns.
struct Mat33 {
    Vec3 f1, f2, f3;

    Mat33() = default;
    Mat33(const Vec3& f1_, const Vec3& f2_, const Vec3& f3_) : f1(f1_), f2(f2_), f3(f3_) {}
    static Mat33 identity() { return {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}; }
    static Mat33 from_planar(const Mat32& a, const Vec3& xi) { return {a.c1, a.c2, xi}; }

    Vec3 apply(const Vec3& v) const { return f1 * v.x + f2 * v.y + f3 * v.z; }
    Mat33 mul(const Mat33& o) const { return {apply(o.f1), apply(o.f2), apply(o.f3)}; }
    double frobenius2() const { return f1.norm2() + f2.norm2() + f3.norm2(); }
    double frobenius() const { return std::sqrt(frobenius2()); }
};

inline Vec3 wedge_columns(const Mat32& a) { return cross(a.c1, a.c2); }

// det(A^T A); by the Lagrange identity this equals |A^1 ^ A^2|^2.
inline double gram_det(const Mat32& a) {
    const double g11 = a.c1.norm2();
    const double g22 = a.c2.norm2();
    const double g12 = a.c1.dot(a.c2);
    return g11 * g22 - g12 * g12;
}

inline double det3(const Mat33& f) { return cross(f.f1, f.f2).dot(f.f3); }

// Rotation about a unit axis by angle (Rodrigues formula).
inline Mat33 rotation(const Vec3& axis, double angle) {
    const Vec3 u = axis.normalized();
    const double c = std::cos(angle), s = std::sin(angle);
    auto col = [&](const Vec3& e) { return e * c + cross(u, e) * s + u * (u.dot(e) * (1 - c)); };
    return {col({1, 0, 0}), col({0, 1, 0}), col({0, 0, 1})};
}

inline Mat32 rotate(const Mat33& r, const Mat32& a) { return {r.apply(a.c1), r.apply(a.c2)}; }

// Extended real in [0, +inf]. +inf absorbs addition and dominates comparison;
// NaN never enters; 0 * inf is a contract violation and throws.
struct ExtReal {
    double v = 0.0;

    ExtReal() = default;
    ExtReal(double x) : v(x) {
        if (std::isnan(x)) throw std::domain_error("ExtReal: NaN");
    }
    static ExtReal infinity() { return ExtReal(std::numeric_limits<double>::infinity()); }

    bool finite() const { return std::isfinite(v); }
    bool infinite() const { return std::isinf(v); }

    ExtReal operator+(const ExtReal& o) const { return ExtReal(v + o.v); }
    ExtReal operator*(double s) const {
        if (s == 0.0 && infinite()) throw std::domain_error("ExtReal: 0 * inf");
        if (infinite()) return *this;
        return ExtReal(v * s);
    }
    bool operator<(const ExtReal& o) const { return v < o.v; }
    bool operator<=(const ExtReal& o) const { return v <= o.v; }
    bool operator>(const ExtReal& o) const { return v > o.v; }
    bool operator>=(const ExtReal& o) const { return v >= o.v; }
};

// Convex combination (1-t) * a + t * b that drops zero-weight terms, so an
// infinite value with zero weight does not poison the result.
inline ExtReal convex_combine(const ExtReal& a, const ExtReal& b, double t) {
    if (t <= 0.0) return a;
    if (t >= 1.0) return b;
    return ExtReal(a.v * (1.0 - t) + b.v * t);
}

}  // namespace membrane
