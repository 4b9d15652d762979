#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "membrane/energy.hpp"
#include "membrane/linalg.hpp"
#include "membrane/polygon.hpp"

// The explicit oscillating laminate on the unit square: the scalar profile
// sigma_n, the vector field theta_{n,ell} = sigma_n b_ell, exact region
// classification and closed-form region areas, and the plurirectangle
// assembly that transports the construction onto an arbitrary open set.

namespace membrane {

enum class RegionKind : int { AMinus, APlus, B, BMinus, BPlus, C, CMinus, CPlus };

std::string region_name(RegionKind k);

struct RegionLabel {
    RegionKind kind;
    int k;  // strip index in 0..n-1
};

// Exact small-fraction arithmetic for region areas.
struct Fraction {
    std::int64_t num = 0;
    std::int64_t den = 1;
    Fraction() = default;
    Fraction(std::int64_t n, std::int64_t d);
    Fraction operator+(const Fraction& o) const;
    Fraction operator-(const Fraction& o) const;
    Fraction operator*(const Fraction& o) const;
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// Attempt to represent x as a fraction with denominator <= max_den.
bool to_fraction(double x, std::int64_t max_den, Fraction& out);

struct LaminateParams {
    Mat32 A;        // full-rank base matrix
    Vec2 a{1, 0};   // oscillation direction (unit); the square is rotated so
                    // sigma varies along a
    Vec3 b{0, 0, 1};
    double lambda = 0.5;
    int n = 8;
    int ell = 1;

    Vec3 b_ell;          // perturbed direction, off Im A
    double rotation = 0;  // recorded rotation angle taking a to (1,0)

    LaminateParams() = default;
    LaminateParams(const Mat32& A_, const Vec2& a_, const Vec3& b_, double lambda_, int n_,
                   int ell_, double tau_span = 1e-9);
};

// Classify a point of the closed unit square; regions are half-open
// (lower/left closed) so classification is single-valued, with the final
// strip closed at the outer boundary. Throws outside Q.
RegionLabel classify_region(const Vec2& x, int n, double lambda);

// Scalar profile on Q (canonical frame, oscillation along x).
double sigma_eval(int n, double lambda, const Vec2& x);

// sup_Q |sigma_n| = lambda (1 - lambda) / n.
double sigma_sup(int n, double lambda);

// Exact integral of |sigma_n|^p over Q (power rule per region), valid for
// any p > 0.
double sigma_lp_norm_p(int n, double lambda, double p);

// b if b is off Im A (distance > tau_span), else b + nu/ell with nu the unit
// wedge direction.
Vec3 perturbed_direction(const Mat32& A, const Vec3& b, int ell, double tau_span = 1e-9);

Vec3 theta_eval(const LaminateParams& params, const Vec2& x);

// Constant gradient on the region interior; throws on region boundaries
// where the pointwise gradient is undefined.
Mat32 theta_gradient(const LaminateParams& params, const Vec2& x);

// The five admissible gradients with their exact total areas.
struct GradientCell {
    Mat32 gradient;
    Fraction area;
    std::string tag;
};
std::vector<GradientCell> gradient_cells(const LaminateParams& params);

// Per-(region, strip) areas for reporting.
struct RegionArea {
    RegionKind kind;
    int k;
    Fraction area;
    std::string gradient_tag;
};
std::vector<RegionArea> region_areas(int n, double lambda);

using DensityFn = std::function<ExtReal(const Mat32&)>;

// Integral over Q of f(A + grad theta_{n,ell}) as an exact area-weighted sum
// over the five constant gradients. Infinite f at a positive-area gradient
// makes the result infinite.
ExtReal laminate_energy(const DensityFn& f, const LaminateParams& params);

// The same value assembled termwise as (1 - 2/n)[...] + (1/n)[...]; the two
// routes agree identically and tests pin that down.
ExtReal laminate_energy_identity_form(const DensityFn& f, const LaminateParams& params);

// Two-point limit (1-lambda) f(A - lambda b_ell o a) + lambda f(A + (1-lambda) b_ell o a).
ExtReal laminate_two_point_limit(const DensityFn& f, const LaminateParams& params);

struct Plurirectangle {
    struct Square {
        Vec2 corner;
        double side;
    };
    std::vector<Square> squares;
    double covered_area() const;
};

// Pack dyadic squares of side 2^{-q} fully inside the polygon V.
Plurirectangle dyadic_pack(const Polygon& v, int q);

// Rescaled copies of theta on each square, zero outside.
Vec3 plurirectangle_field_eval(const LaminateParams& params, const Plurirectangle& pk,
                               const Vec2& x);

struct AssembledEnergy {
    ExtReal total = ExtReal(0.0);
    double covered_area = 0.0;
    double remainder_area = 0.0;  // |V \ V_q|
};

// Energy of x -> A x + phi_{n,l,q}(x) over V: covered squares contribute the
// rescaled unit-square laminate energy, the remainder contributes f(A).
// Throws if squares overlap or leave V.
AssembledEnergy plurirectangle_energy(const DensityFn& f, const LaminateParams& params,
                                      const Plurirectangle& pk, const Polygon& v);

// Upper bound sum rho_m^{p+2} (lambda(1-lambda)/n)^p |b_ell|^p for the L^p
// norm of the assembled field.
double plurirectangle_lp_bound(const LaminateParams& params, const Plurirectangle& pk, double p);

}  // namespace membrane
