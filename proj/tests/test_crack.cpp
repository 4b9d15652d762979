#include <doctest.h>

#include <cmath>

#include "membrane/crack.hpp"
#include "membrane/rng.hpp"

using namespace membrane;

TEST_CASE("tent map formula on the unit crack") {
    // Pi = [0,1] x {0}, apex 0.5, delta = 0.1: f_delta(0.5) = delta and
    // Phi(0.5, 0.05) = (0.5, 0.05/1.1 + 0.1*0.1/1.1) = (0.5, 0.06/1.1).
    const CrackDiffeo d = build_tent_map(CrackPath::straight({0, 0}, {1, 0}), 0.1);
    const Vec2 y = d.forward({0.5, 0.05});
    CHECK(y.x == doctest::Approx(0.5));
    CHECK(y.y == doctest::Approx(0.06 / 1.1).epsilon(1e-14));
}

TEST_CASE("identity outside the delta neighborhood") {
    const CrackPath crack = CrackPath::straight({0, 0}, {1, 0});
    const CrackDiffeo d = build_tent_map(crack, 0.1);
    Rng rng(3);
    for (int i = 0; i < 2000; ++i) {
        const Vec2 x = rng.vec2(-2.0, 3.0);
        const double dist = segment_distance({0, 0}, {1, 0}, x);
        if (dist <= 0.1) continue;
        CHECK((d.forward(x) - x).norm() == 0.0);
    }
}

TEST_CASE("round trips are exact to rounding") {
    const CrackPath straight = CrackPath::straight({0.2, 0.3}, {1.2, 0.5});
    const CrackPath bent = CrackPath::bent({0, 0}, {0.5, 0.3}, {1, 0});
    const CrackDiffeo ds = build_tent_map(straight, 0.07);
    const CrackDiffeo db = build_bent_map(bent, 0.01);
    Rng rng(5);
    double worst_s = 0.0, worst_b = 0.0;
    int n = 0;
    while (n < 10000) {
        const Vec2 x = rng.vec2(-0.5, 1.7);
        bool near = false;
        for (const auto& c : {straight, bent})
            for (std::size_t s = 0; s + 1 < c.vertices.size(); ++s)
                near |= segment_distance(c.vertices[s], c.vertices[s + 1], x) < 1e-9;
        if (near) continue;
        ++n;
        worst_s = std::max(worst_s, (ds.inverse(ds.forward(x)) - x).norm());
        worst_b = std::max(worst_b, (db.inverse(db.forward(x)) - x).norm());
    }
    CHECK(worst_s <= 1e-13);
    CHECK(worst_b <= 1e-12);
}

TEST_CASE("forward map never lands inside the opened polygon") {
    const CrackPath crack = CrackPath::straight({0.2, 0.3}, {1.2, 0.3});
    const CrackDiffeo d = build_tent_map(crack, 0.05);
    const Polygon& delta = d.opened_polygon();
    Rng rng(7);
    int n = 0;
    while (n < 100000) {
        const Vec2 x = rng.vec2(-0.5, 1.7);
        if (segment_distance({0.2, 0.3}, {1.2, 0.3}, x) < 1e-12) continue;
        ++n;
        const Vec2 y = d.forward(x);
        // Strictly interior test with a small negative tolerance.
        if (point_in_polygon(delta, y, 0.0)) {
            // On the boundary is fine; interior is not.
            bool strictly_inside = true;
            for (std::size_t e = 0; e < delta.size(); ++e) {
                if (segment_distance(delta[e], delta[(e + 1) % delta.size()], y) < 1e-12)
                    strictly_inside = false;
            }
            CHECK_FALSE(strictly_inside);
        }
    }
}

TEST_CASE("piecewise continuity across tent cell edges") {
    const CrackDiffeo d = build_tent_map(CrackPath::straight({0, 0}, {2, 0}), 0.08);
    const auto& pieces = d.forward_pieces();
    REQUIRE(pieces.size() == 2);
    // Shared vertical edge under the apex.
    for (double t : {0.0, 0.3, 0.7, 1.0}) {
        const Vec2 apex{1.0, 0.08};
        const Vec2 base{1.0, 0.0};
        const Vec2 x = base + (apex - base) * t;
        const Vec2 y0 = pieces[0].apply(x);
        const Vec2 y1 = pieces[1].apply(x);
        CHECK((y0 - y1).norm() <= 1e-13);
    }
}

TEST_CASE("bent construction maps the crack onto the base segment") {
    const CrackPath bent = CrackPath::bent({0, 0}, {0.5, 0.3}, {1, 0});
    const CrackDiffeo d = build_bent_map(bent, 0.02);
    REQUIRE(d.psi());
    const EightTriangleMap& psi = *d.psi();
    // The joint maps to its projection on gamma.
    Vec2 joint_image{0, 0};
    bool found = false;
    for (const PlanePiece& p : psi.cells) {
        if (point_in_polygon(p.domain, {0.5, 0.3}, 1e-12)) {
            joint_image = p.apply({0.5, 0.3});
            found = true;
            break;
        }
    }
    REQUIRE(found);
    CHECK(joint_image.x == doctest::Approx(0.5));
    CHECK(joint_image.y == doctest::Approx(0.0).epsilon(1e-12));

    // Points of Pi map onto gamma.
    for (double t : {0.2, 0.5, 0.8}) {
        const Vec2 on_crack = Vec2{0, 0} + (Vec2{0.5, 0.3} - Vec2{0, 0}) * t;
        for (const PlanePiece& p : psi.cells) {
            if (point_in_polygon(p.domain, on_crack, 1e-12)) {
                const Vec2 img = p.apply(on_crack);
                CHECK(std::abs(img.y) <= 1e-12);
            }
        }
    }
}

TEST_CASE("bent map far field and inverse Jacobian column constancy") {
    const CrackPath bent = CrackPath::bent({0, 0}, {0.5, 0.3}, {1, 0});
    const CrackDiffeo d = build_bent_map(bent, 0.01);
    CHECK((d.forward({2, 2}) - Vec2{2, 2}).norm() == 0.0);

    // Inside T the inverse Jacobian of Psi depends only on the first
    // coordinate: both image cells covering T split exactly at the joint
    // abscissa.
    REQUIRE(d.psi());
    const EightTriangleMap& psi = *d.psi();
    Rng rng(11);
    int n = 0;
    while (n < 200) {
        const Vec2 x{rng.uniform(0.05, 0.95), rng.uniform(0.005, 0.02)};
        if (!point_in_polygon(psi.T, x, 0.0)) continue;
        const Vec2 x2{x.x, x.y + 0.01};
        if (!point_in_polygon(psi.T, x2, 0.0)) continue;
        ++n;
        Mat22 j1, j2;
        bool f1 = false, f2 = false;
        for (const PlanePiece& p : psi.inverse_cells) {
            if (!f1 && point_in_polygon(p.domain, x, 1e-13)) {
                j1 = p.jac;
                f1 = true;
            }
            if (!f2 && point_in_polygon(p.domain, x2, 1e-13)) {
                j2 = p.jac;
                f2 = true;
            }
        }
        REQUIRE(f1);
        REQUIRE(f2);
        CHECK((j1 - j2).max_abs_entry() <= 1e-12);
    }
}

TEST_CASE("sup distance decreases strictly along halving deltas") {
    const CrackPath straight = CrackPath::straight({0.2, 0.3}, {1.2, 0.3});
    const CrackPath bent = CrackPath::bent({0, 0}, {0.5, 0.3}, {1, 0});
    for (int variant = 0; variant < 2; ++variant) {
        double pv = std::numeric_limits<double>::infinity();
        double pg = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= 8; ++k) {
            const double delta = std::pow(2.0, -k);
            const CrackDiffeo d =
                variant == 0 ? build_tent_map(straight, delta) : build_bent_map(bent, delta);
            const SupDistanceToIdentity s = sup_distance_to_identity(d);
            CHECK(s.value < pv);
            CHECK(s.grad < pg);
            pv = s.value;
            pg = s.grad;
        }
    }
}

TEST_CASE("tent sup distance closed forms") {
    // sup |Phi - Id| = delta^2/(1+delta) at the apex base; the Jacobian
    // deviation is [[0,0],[delta f_delta', delta/(1+delta)]] per cell.
    const double delta = 0.1;
    const double L = 1.0;
    const CrackDiffeo d = build_tent_map(CrackPath::straight({0, 0}, {L, 0}), delta);
    const SupDistanceToIdentity s = sup_distance_to_identity(d);
    CHECK(s.value == doctest::Approx(delta * delta / (1.0 + delta)).epsilon(1e-12));
    const double c = delta * (delta / 0.5) / (1.0 + delta);  // f' = 1/z1 = 2
    const double dd = delta / (1.0 + delta);
    const Mat22 dev{0, 0, c, -dd};
    CHECK(s.grad == doctest::Approx(dev.opnorm()).epsilon(1e-12));
}

TEST_CASE("certification chain pass and fail cases") {
    const CrackPath crack = CrackPath::straight({0, 0}, {1, 0});
    CHECK(certify_bounds(build_tent_map(crack, 0.05)).pass);
    const BoundsCertificate huge = certify_bounds(build_tent_map(crack, 10.0));
    CHECK_FALSE(huge.pass);
    CHECK(huge.min_det == doctest::Approx(1.0 / 11.0));
    CHECK(certify_bounds(CrackDiffeo{}).pass);  // identity map: sum 2, det 1
    CHECK(certify_bounds(CrackDiffeo{}).norm_sum == doctest::Approx(2.0));
}

TEST_CASE("validation of crack paths and delta neighborhoods") {
    CHECK_THROWS_AS(build_tent_map(CrackPath::straight({0, 0}, {0, 0}), 0.1),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_tent_map(CrackPath::straight({0, 0}, {1, 0}), -0.5),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_bent_map(CrackPath::bent({0, 0}, {0.5, 0.0}, {1, 0}), 0.01),
                    std::invalid_argument);
    // Bent delta too large for the containment: error names the limit.
    CHECK_THROWS_WITH_AS(build_bent_map(CrackPath::bent({0, 0}, {0.5, 0.001}, {1, 0}), 0.4),
                         doctest::Contains("maximal admissible delta"), std::invalid_argument);

    const std::vector<CrackPath> cracks{CrackPath::straight({0, 0}, {1, 0}),
                                        CrackPath::straight({0, 0.05}, {1, 0.05})};
    CHECK_THROWS_AS(require_disjoint_neighborhoods(cracks, 0.05), std::invalid_argument);
    require_disjoint_neighborhoods(cracks, 0.02);  // distance 0.05 > 2 * 0.02
}

TEST_CASE("rotated cracks behave like the canonical frame") {
    // Same crack rotated by 30 degrees: invariants carry over.
    const Vec2 a{0.0, 0.0};
    const Vec2 b{std::cos(0.5236), std::sin(0.5236)};
    const CrackDiffeo d = build_tent_map(CrackPath::straight(a, b), 0.1);
    const SupDistanceToIdentity s = sup_distance_to_identity(d);
    CHECK(s.value == doctest::Approx(0.01 / 1.1).epsilon(1e-12));
    CHECK(certify_bounds(d).min_det == doctest::Approx(1.0 / 1.1).epsilon(1e-12));
}
