#include <doctest.h>

#include <cmath>

#include "membrane/gamma.hpp"
#include "membrane/rng.hpp"

using namespace membrane;

TEST_CASE("surface weight formula") {
    CHECK(surface_weight({1, 0, 0}, 0.37) == doctest::Approx(1.0));
    CHECK(surface_weight({0, 0, 1}, 0.01) == doctest::Approx(100.0));
    CHECK(surface_weight({0.6, 0, 0.8}, 0.5) == doctest::Approx(std::sqrt(0.36 + 2.56)));
    CHECK_THROWS_AS(surface_weight({1, 1, 0}, 0.5), std::invalid_argument);

    // >= 1 always, equality exactly on horizontal normals, 1/rho scaling on
    // the vertical component.
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const Vec3 nu = rng.vec3(-1, 1).normalized();
        const double w = surface_weight(nu, 0.2);
        CHECK(w >= 1.0 - 1e-12);
        if (std::abs(nu.z) > 1e-9) {
            CHECK(surface_weight(nu, 0.02) > w);
            CHECK(surface_weight(nu, 0.002) >= std::abs(nu.z) / 0.002 - 1e-9);
        }
    }
}

TEST_CASE("membrane builders expose certificates and jump geometry") {
    MembraneBuilder b;
    b.mesh = 4;
    const MembraneDeformation flat = make_affine_membrane(b);
    CHECK(flat.eta == doctest::Approx(1.0));
    CHECK(flat.crack_length() == 0.0);
    CHECK(flat.u.continuity_defect() <= 1e-12);

    const CrackPath crack = CrackPath::straight({0.6, 1.0}, {1.4, 1.0});
    const MembraneDeformation m = make_cracked_membrane(b, crack);
    CHECK(m.crack_length() == doctest::Approx(0.8));
    // The out-of-plane opening keeps every hull at gram det >= 1.
    CHECK(m.eta == doctest::Approx(1.0));
    // The jump is real: traces differ across the seam midpoint.
    const Vec3 above = m.u.eval({1.0, 1.0 + 1e-9});
    const Vec3 below = m.u.eval({1.0, 1.0 - 1e-9});
    CHECK((above - below).norm() > 0.1);
    CHECK_THROWS_AS(make_cracked_membrane(b, CrackPath::straight({0.6, 1.0}, {2.5, 1.0})),
                    std::invalid_argument);
}

TEST_CASE("identity embedding film energy is exact") {
    // v = (x1, x2) + rho x3 e3: the integrand is W(I) everywhere.
    RecoveryDeformation v;
    RecoveryPiece piece;
    piece.poly = {{0, 0}, {2, 0}, {2, 2}, {0, 2}};
    piece.grad_base = {{1, 0, 0}, {0, 1, 0}};
    piece.offset_base = {0, 0, 0};
    piece.grad_fiber = {};
    piece.offset_fiber = {0, 0, 1};
    v.pieces.push_back(piece);
    const StoredEnergy w = make_ogden(2.0, 1.0);
    ThinFilmConfig cfg;
    const EnergyBreakdown e = thin_film_energy(v, 0.1, w, cfg);
    CHECK(e.bulk == doctest::Approx(4.0 * w.evaluate(Mat33::identity()).v).epsilon(1e-12));
    CHECK(e.surface == 0.0);
}

TEST_CASE("vertical crack facets carry unit weight") {
    RecoveryDeformation v;
    v.jump_set.push_back(CrackPath::straight({0.2, 0.5}, {1.4, 0.5}));
    const StoredEnergy w = make_ogden(2.0, 1.0);
    ThinFilmConfig cfg;
    const EnergyBreakdown e = thin_film_energy(v, 0.01, w, cfg);
    CHECK(e.surface == doctest::Approx(1.2).epsilon(1e-13));
    REQUIRE(e.facet_weights.size() == 1);
    CHECK(e.facet_weights[0] == doctest::Approx(1.0));
}

TEST_CASE("recovery of the crack-free membrane is exactly optimal") {
    MembraneBuilder b;
    b.mesh = 3;
    const MembraneDeformation m = make_affine_membrane(b);
    const StoredEnergy w = make_ogden(2.0, 1.0);
    ThinFilmConfig cfg;
    const RecoveryDeformation rec = build_recovery(m, cfg, w);
    CHECK(rec.fiber_excess <= 1e-10);
    const double w0 = reduced_density(w, m.u.gradient(0)).value.v;
    for (double rho : {0.1, 0.01}) {
        const EnergyBreakdown e = thin_film_energy(rec, rho, w, cfg);
        CHECK(e.bulk == doctest::Approx(4.0 * w0).epsilon(1e-10));
        CHECK(e.surface == 0.0);
    }
}

TEST_CASE("recovery jump set containment and composed certificate") {
    MembraneBuilder b;
    b.mesh = 4;
    const CrackPath crack = CrackPath::straight({0.6, 1.0}, {1.4, 1.0});
    const MembraneDeformation m = make_cracked_membrane(b, crack);
    const StoredEnergy w = make_ogden(2.0, 1.0);
    ThinFilmConfig cfg;
    const RecoveryDeformation rec = build_recovery(m, cfg, w);
    REQUIRE(rec.jump_set.size() == 1);
    CHECK(rec.jump_set[0].length() == doctest::Approx(0.8));
    CHECK(rec.composed_eta > 0.0);
    CHECK(rec.fiber_min_det > 0.0);

    // Total piece area covers Sigma.
    double area = 0.0;
    for (const RecoveryPiece& p : rec.pieces) area += std::abs(polygon_area(p.poly));
    CHECK(area == doctest::Approx(4.0).epsilon(1e-9));

    // The recovery agrees with u at rho -> 0 sample points away from the
    // crack: v(Phi(x)) = u(x).
    Rng rng(9);
    int n = 0;
    while (n < 100) {
        const Vec2 x = rng.vec2(0.05, 1.95);
        if (segment_distance({0.6, 1.0}, {1.4, 1.0}, x) < 0.05) continue;
        ++n;
        bool found = false;
        for (const RecoveryPiece& p : rec.pieces) {
            if (point_in_polygon(p.poly, x, 1e-12)) {
                const Vec3 val = p.grad_base.apply(x) + p.offset_base;
                CHECK((val - m.u.eval(x)).norm() <= 1e-9);
                found = true;
                break;
            }
        }
        CHECK(found);
    }
}

TEST_CASE("limit bracket is ordered and the crack term is additive") {
    MembraneBuilder b;
    b.mesh = 3;
    const StoredEnergy w = make_ogden(2.0, 1.0);
    ThinFilmConfig cfg;
    const MembraneDeformation flat = make_affine_membrane(b);
    const LimitBracket lb = limit_energy(flat, w, cfg);
    CHECK(lb.low <= lb.high + 1e-12);
    CHECK(lb.surface == 0.0);
    // Constant-gradient convex point: the bracket is tight.
    CHECK(lb.low == doctest::Approx(lb.high).epsilon(1e-2));

    const CrackPath c1 = CrackPath::straight({0.8, 1.0}, {1.2, 1.0});
    const CrackPath c2 = CrackPath::straight({0.6, 1.0}, {1.4, 1.0});
    const LimitBracket l1 = limit_energy(make_cracked_membrane(b, c1), w, cfg);
    const LimitBracket l2 = limit_energy(make_cracked_membrane(b, c2), w, cfg);
    CHECK(l1.surface == doctest::Approx(0.4));
    CHECK(l2.surface == doctest::Approx(0.8));
}

TEST_CASE("convergence experiment rows and the limsup bound") {
    MembraneBuilder b;
    b.mesh = 4;
    const CrackPath crack = CrackPath::straight({0.6, 1.0}, {1.4, 1.0});
    const MembraneDeformation m = make_cracked_membrane(b, crack);
    const StoredEnergy w = make_ogden(2.0, 1.0);
    ThinFilmConfig cfg;
    const SweepReport rep = run_convergence_experiment(m, w, {1e-1, 1e-2, 1e-3}, cfg);
    REQUIRE(rep.rows.size() == 3);
    for (const SweepRow& r : rep.rows) {
        CHECK(r.error.empty());
        CHECK(r.bound_pass);
        CHECK(std::abs(r.surface - 0.8) <= 1e-12);
        CHECK(r.total <= (1.0 + cfg.epsilon) * (1.0 + cfg.epsilon) * rep.g0w + 2.0 * cfg.epsilon +
                             1e-3);
        CHECK(r.limit_low <= r.limit_high + 1e-12);
    }
    // Bulk is nonincreasing along the decreasing sweep for this construction.
    CHECK(rep.rows[1].bulk <= rep.rows[0].bulk + 1e-9);
    CHECK(rep.rows[2].bulk <= rep.rows[1].bulk + 1e-9);

    CHECK_THROWS_AS(run_convergence_experiment(m, w, {1e-2, 1e-1}, cfg), std::invalid_argument);
}

TEST_CASE("two cracks: additive surface, disjointness enforcement") {
    MembraneBuilder b;
    b.mesh = 4;
    const std::vector<CrackPath> cracks{CrackPath::straight({0.5, 0.5}, {1.0, 0.5}),
                                        CrackPath::straight({0.5, 1.5}, {1.5, 1.5})};
    const MembraneDeformation m = make_cracked_membrane(b, cracks);
    CHECK(m.crack_length() == doctest::Approx(1.5));
    CHECK(m.eta == doctest::Approx(1.0));

    const StoredEnergy w = make_ogden(2.0, 1.0);
    ThinFilmConfig cfg;
    const SweepReport rep = run_convergence_experiment(m, w, {1e-1, 1e-2}, cfg);
    for (const SweepRow& r : rep.rows) {
        CHECK(r.error.empty());
        CHECK(std::abs(r.surface - 1.5) <= 1e-12);
        CHECK(r.bound_pass);
    }

    // Neighborhoods overlap when delta exceeds half the separation.
    ThinFilmConfig tight = cfg;
    tight.delta = 0.6;
    CHECK_THROWS_AS(build_recovery(m, tight, w), std::invalid_argument);
}

TEST_CASE("sweep csv is deterministic across thread counts") {
    MembraneBuilder b;
    b.mesh = 3;
    const CrackPath crack = CrackPath::straight({0.6, 1.0}, {1.4, 1.0});
    const MembraneDeformation m = make_cracked_membrane(b, crack);
    const StoredEnergy w = make_ogden(2.0, 1.0);
    ThinFilmConfig cfg1;
    cfg1.threads = 1;
    ThinFilmConfig cfg2;
    cfg2.threads = 2;
    const std::string csv1 = sweep_csv(run_convergence_experiment(m, w, {1e-1, 1e-2}, cfg1), 42);
    const std::string csv2 = sweep_csv(run_convergence_experiment(m, w, {1e-1, 1e-2}, cfg2), 42);
    CHECK(csv1 == csv2);
    CHECK(csv1.find("# seed=42") == 0);
    CHECK(csv1.find("rho,epsilon,delta,bulk,surface,total,limit_low,limit_high,bound_rhs,"
                    "bound_pass") != std::string::npos);
}
