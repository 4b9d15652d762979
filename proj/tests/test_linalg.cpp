#include <doctest.h>

#include <cmath>

#include "membrane/linalg.hpp"
#include "membrane/rng.hpp"

using namespace membrane;

namespace {
const Vec3 e1{1, 0, 0}, e2{0, 1, 0}, e3{0, 0, 1};
}

TEST_CASE("wedge of the canonical frame") {
    CHECK((wedge_columns({e1, e2}) - e3).norm() == 0.0);
    CHECK(wedge_columns({e1, e1 * 2.0}).norm() == 0.0);
    const Vec3 w = wedge_columns({{1, 0, 1}, {0, 1, 0}});
    CHECK(w.x == doctest::Approx(-1.0));
    CHECK(w.y == doctest::Approx(0.0));
    CHECK(w.z == doctest::Approx(1.0));
}

TEST_CASE("gram determinant basics") {
    CHECK(gram_det({e1, e2}) == doctest::Approx(1.0));
    CHECK(gram_det({e1, e1 * 2.0}) == doctest::Approx(0.0));
}

TEST_CASE("Lagrange identity on random matrices") {
    Rng rng(101);
    for (int i = 0; i < 1000; ++i) {
        const Mat32 a = rng.mat32(-10.0, 10.0);
        const double lhs = gram_det(a);
        const double rhs = wedge_columns(a).norm2();
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs)));
    }
}

TEST_CASE("det3 on canonical data") {
    CHECK(det3(Mat33::identity()) == doctest::Approx(1.0));
    CHECK(det3({{0, 1, 0}, {1, 0, 0}, {0, 0, 1}}) == doctest::Approx(-1.0));
    for (double t : {-2.0, 0.5, 3.0})
        CHECK(det3(Mat33::from_planar({e1, e2}, {0, 0, t})) == doctest::Approx(t));
}

TEST_CASE("det3 is alternating and multilinear") {
    Rng rng(17);
    for (int i = 0; i < 200; ++i) {
        const Vec3 u = rng.vec3(-5, 5), v = rng.vec3(-5, 5), w = rng.vec3(-5, 5);
        const double d = det3({u, v, w});
        CHECK(det3({v, u, w}) == doctest::Approx(-d));
        CHECK(det3({u * 2.0, v, w}) == doctest::Approx(2.0 * d));
        const Vec3 up = rng.vec3(-5, 5);
        CHECK(det3({u + up, v, w}) == doctest::Approx(d + det3({up, v, w})));
    }
}

TEST_CASE("extended reals") {
    const ExtReal inf = ExtReal::infinity();
    CHECK((inf + ExtReal(3.0)).infinite());
    CHECK(inf > ExtReal(1e300));
    CHECK((inf * 2.0).infinite());
    CHECK_THROWS_AS(inf * 0.0, std::domain_error);
    CHECK_THROWS_AS(ExtReal(std::nan("")), std::domain_error);
    // Zero-weight terms are dropped before multiplying.
    CHECK(convex_combine(ExtReal(2.0), inf, 0.0).v == 2.0);
    CHECK(convex_combine(inf, ExtReal(2.0), 1.0).v == 2.0);
    CHECK(convex_combine(ExtReal(1.0), ExtReal(3.0), 0.5).v == doctest::Approx(2.0));
}

TEST_CASE("rotations are orthogonal") {
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        const Mat33 r = rng.so3();
        CHECK(det3(r) == doctest::Approx(1.0));
        CHECK(r.apply({1, 0, 0}).norm() == doctest::Approx(1.0));
        CHECK(r.apply({0, 1, 0}).dot(r.apply({0, 0, 1})) == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("Mat22 operator norm matches power iteration on samples") {
    Rng rng(7);
    for (int i = 0; i < 100; ++i) {
        Mat22 m{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
        Vec2 v{1.0, 0.7};
        for (int k = 0; k < 300; ++k) {
            const Vec2 mv = m.transpose().apply(m.apply(v));
            const double n = mv.norm();
            if (n == 0.0) break;
            v = mv / n;
        }
        const double sigma = m.apply(v).norm();
        CHECK(m.opnorm() == doctest::Approx(sigma).epsilon(1e-6));
    }
}
