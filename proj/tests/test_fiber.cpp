#include <doctest.h>

#include <cmath>

#include "membrane/fiber.hpp"
#include "membrane/rng.hpp"

using namespace membrane;

namespace {

const Mat32 kFrame{{1, 0, 0}, {0, 1, 0}};

PwAffineMap constant_field(const Mat32& g, int cells_per_side = 2) {
    std::vector<Vec2> verts;
    std::vector<std::array<int, 3>> cells;
    const int n = cells_per_side;
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) verts.push_back({static_cast<double>(i) / n,
                                                      static_cast<double>(j) / n});
    auto vid = [n](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
            cells.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
        }
    std::vector<Vec3> vals;
    for (const Vec2& v : verts) vals.push_back(g.apply(v));
    return PwAffineMap::from_nodal(std::move(verts), std::move(cells), vals);
}

}  // namespace

TEST_CASE("constant field with identity psi gives the exact minimizer") {
    const StoredEnergy w = make_ogden(2.0, 1.0);
    const PwAffineMap g = constant_field(kFrame);
    const std::vector<Mat22> psi(g.cell_count(), Mat22::identity());
    const FiberFieldResult r = fiber_field(w, g, psi, 0.05);
    REQUIRE(r.pass);
    CHECK(r.energy_excess <= 1e-9);
    CHECK(r.max_gradient <= 1e-9);

    // phi equals the 1-D closed-form minimizer everywhere.
    const double tstar = std::pow(0.5, 1.0 / 3.0);
    const Vec3 phi = r.phi.eval({0.4, 0.6});
    CHECK(phi.z == doctest::Approx(tstar).epsilon(1e-5));
    CHECK(std::abs(phi.x) <= 1e-5);
}

TEST_CASE("two-cell psi with det 1 +/- eps keeps the certified floor") {
    const StoredEnergy w = make_ogden(2.0, 1.0);
    const double eps = 0.1;
    std::vector<Vec2> verts{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    std::vector<Vec3> vals;
    for (const Vec2& v : verts) vals.push_back(kFrame.apply(v));
    const PwAffineMap g =
        PwAffineMap::from_nodal(verts, {{0, 1, 2}, {0, 2, 3}}, vals);
    const std::vector<Mat22> psi{Mat22{1.0 + eps, 0, 0, 1.0}, Mat22{1.0 - eps, 0, 0, 1.0}};
    const FiberFieldResult r = fiber_field(w, g, psi, eps);
    REQUIRE(r.pass);
    // The blend keeps det >= (1-eps)/((1+eps) beta) >= 1/(3 beta).
    CHECK(r.min_det >= (1.0 - eps) / ((1.0 + eps) * r.beta_tilde) - 1e-9);
    CHECK(r.min_det >= r.det_floor);
}

TEST_CASE("energy excess stays within budget on a varying field") {
    const StoredEnergy w = make_ogden(2.0, 1.0);
    // Mildly varying gradient field, still uniformly full rank.
    const int n = 3;
    std::vector<Vec2> verts;
    std::vector<std::array<int, 3>> cells;
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            verts.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
    auto vid = [n](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
            cells.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
        }
    std::vector<Vec3> vals;
    for (const Vec2& v : verts)
        vals.push_back(kFrame.apply(v) + Vec3{0, 0, 0.1 * std::sin(3.0 * v.x) * v.y});
    const PwAffineMap g = PwAffineMap::from_nodal(std::move(verts), std::move(cells), vals);
    const std::vector<Mat22> psi(g.cell_count(), Mat22::identity());
    const FiberFieldResult r = fiber_field(w, g, psi, 0.05);
    REQUIRE(r.pass);
    CHECK(r.energy_excess <= 0.05);
    CHECK(r.min_det >= r.det_floor);
    CHECK(r.phi.continuity_defect() <= 1e-12);
}

TEST_CASE("psi violating the determinant budget is rejected") {
    const StoredEnergy w = make_ogden(2.0, 1.0);
    const PwAffineMap g = constant_field(kFrame, 1);
    std::vector<Mat22> psi(g.cell_count(), Mat22{1.7, 0, 0, 1.0});
    CHECK_THROWS_AS(fiber_field(w, g, psi, 0.1), std::invalid_argument);
}
