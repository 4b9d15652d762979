#include "membrane/laminate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace membrane {

std::string region_name(RegionKind k) {
    switch (k) {
        case RegionKind::AMinus: return "A-";
        case RegionKind::APlus: return "A+";
        case RegionKind::B: return "B";
        case RegionKind::BMinus: return "B-";
        case RegionKind::BPlus: return "B+";
        case RegionKind::C: return "C";
        case RegionKind::CMinus: return "C-";
        case RegionKind::CPlus: return "C+";
    }
    return "?";
}

namespace {
std::int64_t gcd64(std::int64_t a, std::int64_t b) {
    a = std::abs(a);
    b = std::abs(b);
    while (b) {
        const std::int64_t t = a % b;
        a = b;
        b = t;
    }
    return a == 0 ? 1 : a;
}
}  // namespace

Fraction::Fraction(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (den == 0) throw std::invalid_argument("Fraction: zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const std::int64_t g = gcd64(num, den);
    num /= g;
    den /= g;
}
Fraction Fraction::operator+(const Fraction& o) const {
    return Fraction(num * o.den + o.num * den, den * o.den);
}
Fraction Fraction::operator-(const Fraction& o) const {
    return Fraction(num * o.den - o.num * den, den * o.den);
}
Fraction Fraction::operator*(const Fraction& o) const { return Fraction(num * o.num, den * o.den); }

bool to_fraction(double x, std::int64_t max_den, Fraction& out) {
    // Continued-fraction expansion.
    double v = x;
    std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    for (int i = 0; i < 64; ++i) {
        const double fl = std::floor(v);
        const auto a = static_cast<std::int64_t>(fl);
        const std::int64_t p2 = a * p1 + p0, q2 = a * q1 + q0;
        if (q2 > max_den) break;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        if (std::abs(x - static_cast<double>(p1) / static_cast<double>(q1)) < 1e-13) {
            out = Fraction(p1, q1);
            return true;
        }
        const double frac = v - fl;
        if (frac < 1e-15) break;
        v = 1.0 / frac;
    }
    return false;
}

LaminateParams::LaminateParams(const Mat32& A_, const Vec2& a_, const Vec3& b_, double lambda_,
                               int n_, int ell_, double tau_span)
    : A(A_), a(a_.normalized()), b(b_), lambda(lambda_), n(n_), ell(ell_) {
    if (n < 3) throw std::invalid_argument("LaminateParams: n >= 3");
    if (ell < 1) throw std::invalid_argument("LaminateParams: ell >= 1");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("LaminateParams: lambda in [0,1]");
    if (gram_det(A) <= 0.0) throw std::invalid_argument("LaminateParams: A must have rank 2");
    rotation = std::atan2(a.y, a.x);
    b_ell = perturbed_direction(A, b, ell, tau_span);
}

RegionLabel classify_region(const Vec2& x, int n, double lambda) {
    if (!(x.x >= 0.0 && x.x <= 1.0 && x.y >= 0.0 && x.y <= 1.0))
        throw std::invalid_argument("classify_region: point outside the unit square");
    const double h = 1.0 / n;
    int k = static_cast<int>(std::floor(x.x * n));
    k = std::clamp(k, 0, n - 1);
    const double right = (k + 1) * h;
    const double y = x.y;

    if (y < h) {
        // Lower band: B left of the diagonal, then B-, then B+.
        if (x.x < right - y) return {RegionKind::B, k};
        if (x.x < right - lambda * y) return {RegionKind::BMinus, k};
        return {RegionKind::BPlus, k};
    }
    if (y > 1.0 - h) {
        if (x.x < right + (y - 1.0)) return {RegionKind::C, k};
        if (x.x < right + lambda * (y - 1.0)) return {RegionKind::CMinus, k};
        return {RegionKind::CPlus, k};
    }
    if (x.x < k * h + (1.0 - lambda) * h) return {RegionKind::AMinus, k};
    return {RegionKind::APlus, k};
}

double sigma_eval(int n, double lambda, const Vec2& x) {
    const RegionLabel r = classify_region(x, n, lambda);
    const double h = 1.0 / n;
    const double right = (r.k + 1) * h;
    switch (r.kind) {
        case RegionKind::AMinus: return -lambda * (x.x - r.k * h);
        case RegionKind::APlus:
        case RegionKind::BPlus:
        case RegionKind::CPlus: return (1.0 - lambda) * (x.x - right);
        case RegionKind::BMinus: return -lambda * (x.x + x.y - right);
        case RegionKind::CMinus: return -lambda * (x.x - x.y + 1.0 - right);
        case RegionKind::B:
        case RegionKind::C: return 0.0;
    }
    return 0.0;
}

double sigma_sup(int n, double lambda) { return lambda * (1.0 - lambda) / n; }

double sigma_lp_norm_p(int n, double lambda, double p) {
    // Every region integrand is |c u|^p with u an affine coordinate, so the
    // power rule gives the integral exactly for any p.
    const double nn = n;
    const double core = std::pow(lambda * (1.0 - lambda), p);
    return core * ((1.0 - 2.0 / nn) / ((p + 1.0) * std::pow(nn, p)) +
                   2.0 / ((p + 1.0) * (p + 2.0) * std::pow(nn, p + 1.0)));
}

Vec3 perturbed_direction(const Mat32& A, const Vec3& b, int ell, double tau_span) {
    const Vec3 w = wedge_columns(A);
    const double wn = w.norm();
    if (wn == 0.0) throw std::invalid_argument("perturbed_direction: A must have rank 2");
    const Vec3 nu = w / wn;
    // Distance from b to span(A) is |<nu, b>|.
    if (std::abs(nu.dot(b)) > tau_span) return b;
    return b + nu / static_cast<double>(ell);
}

namespace {

// Map x to the canonical frame where the oscillation direction is e1,
// rotating about the square center.
Vec2 to_canonical(const LaminateParams& p, const Vec2& x) {
    const Vec2 c{0.5, 0.5};
    const Vec2 d = x - c;
    const Vec2 a = p.a;
    return {c.x + a.dot(d), c.y + a.perp().dot(d)};
}

}  // namespace

Vec3 theta_eval(const LaminateParams& params, const Vec2& x) {
    const Vec2 u = to_canonical(params, x);
    return params.b_ell * sigma_eval(params.n, params.lambda, u);
}

Mat32 theta_gradient(const LaminateParams& params, const Vec2& x) {
    const Vec2 u = to_canonical(params, x);
    const RegionLabel r = classify_region(u, params.n, params.lambda);
    // Reject points within rounding distance of a region boundary.
    const double eps = 1e-12;
    auto near_boundary = [&]() {
        for (const Vec2 d : {Vec2{eps, 0}, Vec2{-eps, 0}, Vec2{0, eps}, Vec2{0, -eps}}) {
            const Vec2 y = u + d;
            if (y.x < 0 || y.x > 1 || y.y < 0 || y.y > 1) return true;
            const RegionLabel r2 = classify_region(y, params.n, params.lambda);
            if (r2.kind != r.kind || r2.k != r.k) return true;
        }
        return false;
    };
    if (near_boundary())
        throw std::domain_error("theta_gradient: point on a region boundary (gradient undefined)");

    const Vec2 a = params.a;
    const Vec2 ap = a.perp();
    const double l = params.lambda;
    switch (r.kind) {
        case RegionKind::AMinus: return outer(params.b_ell * (-l), a);
        case RegionKind::APlus:
        case RegionKind::BPlus:
        case RegionKind::CPlus: return outer(params.b_ell * (1.0 - l), a);
        case RegionKind::BMinus: return outer(params.b_ell * (-l), a + ap);
        case RegionKind::CMinus: return outer(params.b_ell * (-l), a - ap);
        case RegionKind::B:
        case RegionKind::C: return Mat32{};
    }
    return Mat32{};
}

namespace {

Fraction lambda_fraction(double lambda) {
    Fraction f;
    if (!to_fraction(lambda, 1 << 20, f))
        throw std::invalid_argument("laminate areas: lambda is not a small rational");
    return f;
}

}  // namespace

std::vector<GradientCell> gradient_cells(const LaminateParams& params) {
    const Fraction l = lambda_fraction(params.lambda);
    const Fraction one(1, 1);
    const Fraction inv_n(1, params.n);
    const Fraction one_minus_l = one - l;
    const Fraction bulk = one - Fraction(2, params.n);  // 1 - 2/n

    const Vec2 a = params.a;
    const Vec2 ap = a.perp();
    const Vec3& b = params.b_ell;
    const double lv = params.lambda;

    std::vector<GradientCell> cells;
    cells.push_back({outer(b * (-lv), a), one_minus_l * bulk, "-lambda b(x)a"});
    cells.push_back({outer(b * (1.0 - lv), a), l * bulk + l * inv_n, "(1-lambda) b(x)a"});
    cells.push_back({outer(b * (-lv), a + ap), one_minus_l * Fraction(1, 2 * params.n),
                     "-lambda b(x)(a+a_perp)"});
    cells.push_back({outer(b * (-lv), a - ap), one_minus_l * Fraction(1, 2 * params.n),
                     "-lambda b(x)(a-a_perp)"});
    cells.push_back({Mat32{}, inv_n, "zero"});
    return cells;
}

std::vector<RegionArea> region_areas(int n, double lambda) {
    const Fraction l = lambda_fraction(lambda);
    const Fraction one(1, 1);
    const Fraction one_minus_l = one - l;
    const Fraction strip_h(1, n);
    const Fraction mid = one - Fraction(2, n);  // middle band height

    std::vector<RegionArea> out;
    for (int k = 0; k < n; ++k) {
        out.push_back({RegionKind::AMinus, k, one_minus_l * strip_h * mid, "-lambda b(x)a"});
        out.push_back({RegionKind::APlus, k, l * strip_h * mid, "(1-lambda) b(x)a"});
        out.push_back({RegionKind::B, k, Fraction(1, 2 * n * n), "zero"});
        out.push_back({RegionKind::BMinus, k, one_minus_l * Fraction(1, 2 * n * n),
                       "-lambda b(x)(a+a_perp)"});
        out.push_back({RegionKind::BPlus, k, l * Fraction(1, 2 * n * n), "(1-lambda) b(x)a"});
        out.push_back({RegionKind::C, k, Fraction(1, 2 * n * n), "zero"});
        out.push_back({RegionKind::CMinus, k, one_minus_l * Fraction(1, 2 * n * n),
                       "-lambda b(x)(a-a_perp)"});
        out.push_back({RegionKind::CPlus, k, l * Fraction(1, 2 * n * n), "(1-lambda) b(x)a"});
    }
    return out;
}

ExtReal laminate_energy(const DensityFn& f, const LaminateParams& params) {
    ExtReal total(0.0);
    for (const GradientCell& c : gradient_cells(params)) {
        const double area = c.area.value();
        if (area == 0.0) continue;
        const ExtReal v = f(params.A + c.gradient);
        if (v.infinite()) return ExtReal::infinity();
        total = total + v * area;
    }
    return total;
}

ExtReal laminate_energy_identity_form(const DensityFn& f, const LaminateParams& params) {
    const double l = params.lambda;
    const double n = params.n;
    const Vec2 a = params.a;
    const Vec2 ap = a.perp();
    const Vec3& b = params.b_ell;

    const ExtReal f_minus = f(params.A + outer(b * (-l), a));
    const ExtReal f_plus = f(params.A + outer(b * (1.0 - l), a));
    const ExtReal f_bm = f(params.A + outer(b * (-l), a + ap));
    const ExtReal f_cm = f(params.A + outer(b * (-l), a - ap));
    const ExtReal f_zero = f(params.A);
    if (f_minus.infinite() || f_plus.infinite() || f_bm.infinite() || f_cm.infinite() ||
        f_zero.infinite())
        return ExtReal::infinity();

    const double two_point = (1.0 - l) * f_minus.v + l * f_plus.v;
    const double corr = l * f_plus.v + 0.5 * (1.0 - l) * (f_bm.v + f_cm.v) + f_zero.v;
    return ExtReal((1.0 - 2.0 / n) * two_point + corr / n);
}

ExtReal laminate_two_point_limit(const DensityFn& f, const LaminateParams& params) {
    const double l = params.lambda;
    const ExtReal f_minus = f(params.A + outer(params.b_ell * (-l), params.a));
    const ExtReal f_plus = f(params.A + outer(params.b_ell * (1.0 - l), params.a));
    return convex_combine(f_minus, f_plus, l);
}

double Plurirectangle::covered_area() const {
    double a = 0.0;
    for (const Square& s : squares) a += s.side * s.side;
    return a;
}

Plurirectangle dyadic_pack(const Polygon& v, int q) {
    if (q < 0) throw std::invalid_argument("dyadic_pack: q >= 0");
    const double s = std::pow(2.0, -q);
    double xmin = v[0].x, xmax = v[0].x, ymin = v[0].y, ymax = v[0].y;
    for (const Vec2& p : v) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    const auto i0 = static_cast<std::int64_t>(std::floor(xmin / s)) - 1;
    const auto i1 = static_cast<std::int64_t>(std::ceil(xmax / s)) + 1;
    const auto j0 = static_cast<std::int64_t>(std::floor(ymin / s)) - 1;
    const auto j1 = static_cast<std::int64_t>(std::ceil(ymax / s)) + 1;

    Plurirectangle out;
    for (std::int64_t i = i0; i < i1; ++i) {
        for (std::int64_t j = j0; j < j1; ++j) {
            const Vec2 c{i * s, j * s};
            const Vec2 corners[4] = {c, c + Vec2{s, 0}, c + Vec2{s, s}, c + Vec2{0, s}};
            bool ok = true;
            for (const Vec2& p : corners)
                if (!point_in_polygon(v, p, 0.0)) ok = false;
            if (!ok) continue;
            if (!point_in_polygon(v, c + Vec2{0.5 * s, 0.5 * s}, 0.0)) continue;
            // No boundary edge may cross the square.
            for (std::size_t e = 0; e < v.size() && ok; ++e) {
                const Vec2& a = v[e];
                const Vec2& b = v[(e + 1) % v.size()];
                for (int side = 0; side < 4 && ok; ++side)
                    if (segments_intersect(a, b, corners[side], corners[(side + 1) % 4])) ok = false;
            }
            if (ok) out.squares.push_back({c, s});
        }
    }
    return out;
}

Vec3 plurirectangle_field_eval(const LaminateParams& params, const Plurirectangle& pk,
                               const Vec2& x) {
    for (const auto& sq : pk.squares) {
        const Vec2 local = (x - sq.corner) / sq.side;
        if (local.x >= 0.0 && local.x <= 1.0 && local.y >= 0.0 && local.y <= 1.0)
            return theta_eval(params, local) * sq.side;
    }
    return {0, 0, 0};
}

AssembledEnergy plurirectangle_energy(const DensityFn& f, const LaminateParams& params,
                                      const Plurirectangle& pk, const Polygon& v) {
    // Validate: squares pairwise disjoint and inside V.
    for (std::size_t i = 0; i < pk.squares.size(); ++i) {
        const auto& a = pk.squares[i];
        for (const Vec2& corner :
             {a.corner, a.corner + Vec2{a.side, 0}, a.corner + Vec2{a.side, a.side},
              a.corner + Vec2{0, a.side}})
            if (!point_in_polygon(v, corner, 1e-12))
                throw std::invalid_argument("plurirectangle_energy: square leaves V");
        for (std::size_t j = i + 1; j < pk.squares.size(); ++j) {
            const auto& b = pk.squares[j];
            const bool sep = a.corner.x + a.side <= b.corner.x + 1e-15 ||
                             b.corner.x + b.side <= a.corner.x + 1e-15 ||
                             a.corner.y + a.side <= b.corner.y + 1e-15 ||
                             b.corner.y + b.side <= a.corner.y + 1e-15;
            if (!sep) throw std::invalid_argument("plurirectangle_energy: overlapping squares");
        }
    }

    AssembledEnergy out;
    const ExtReal unit = laminate_energy(f, params);
    out.covered_area = pk.covered_area();
    out.remainder_area = std::abs(polygon_area(v)) - out.covered_area;
    const ExtReal fa = f(params.A);
    if (unit.infinite() || fa.infinite()) {
        out.total = ExtReal::infinity();
        return out;
    }
    out.total = ExtReal(out.covered_area * unit.v + out.remainder_area * fa.v);
    return out;
}

double plurirectangle_lp_bound(const LaminateParams& params, const Plurirectangle& pk, double p) {
    const double unit = std::pow(sigma_sup(params.n, params.lambda), p) *
                        std::pow(params.b_ell.norm(), p);
    double sum = 0.0;
    for (const auto& sq : pk.squares) sum += std::pow(sq.side, p + 2.0) * unit;
    return sum;
}

}  // namespace membrane
