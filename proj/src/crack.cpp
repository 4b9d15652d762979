#include "membrane/crack.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace membrane {

double CrackPath::length() const {
    double l = 0.0;
    for (std::size_t i = 0; i + 1 < vertices.size(); ++i) l += (vertices[i + 1] - vertices[i]).norm();
    return l;
}

void CrackPath::validate() const {
    if (kind == Kind::straight) {
        if (vertices.size() != 2) throw std::invalid_argument("straight crack needs 2 vertices");
        if ((vertices[1] - vertices[0]).norm() == 0.0)
            throw std::invalid_argument("crack has zero length");
    } else {
        if (vertices.size() != 3) throw std::invalid_argument("bent crack needs 3 vertices");
        const Vec2 u = vertices[1] - vertices[0];
        const Vec2 v = vertices[2] - vertices[1];
        if (u.norm() == 0.0 || v.norm() == 0.0)
            throw std::invalid_argument("crack segment has zero length");
        const Vec2 gamma = vertices[2] - vertices[0];
        const double h = std::abs(gamma.normalized().cross(vertices[1] - vertices[0]));
        if (h <= 1e-12 * gamma.norm())
            throw std::invalid_argument("bent crack is degenerate (joint on the base segment)");
    }
}

namespace {

// Rigid (orthogonal) normalization x_hat = R (x - t0). R may be a reflection
// when the bent joint must be flipped above the base.
struct Rigid {
    Mat22 r = Mat22::identity();
    Vec2 t0{0, 0};
    Vec2 to_local(const Vec2& x) const { return r.apply(x - t0); }
    Vec2 to_world(const Vec2& x) const { return r.transpose().apply(x) + t0; }
};

Rigid normalize_to_x_axis(const Vec2& a, const Vec2& b) {
    const Vec2 d = (b - a).normalized();
    Rigid rg;
    rg.t0 = a;
    rg.r = Mat22{d.x, d.y, -d.y, d.x};  // rotates d onto e1
    return rg;
}

// Conjugate a local affine piece back to world coordinates.
PlanePiece to_world(const PlanePiece& local, const Rigid& rg) {
    PlanePiece out;
    out.domain.reserve(local.domain.size());
    for (const Vec2& v : local.domain) out.domain.push_back(rg.to_world(v));
    make_ccw(out.domain);
    const Mat22 rt = rg.r.transpose();
    out.jac = rt.mul(local.jac).mul(rg.r);
    // world(x) = R^T (J R (x - t0) + o) + t0
    out.offset = rt.apply(local.offset) + rg.t0 - out.jac.apply(rg.t0);
    return out;
}

PlanePiece invert_piece(const PlanePiece& p) {
    PlanePiece out;
    out.jac = p.jac.inverse();
    out.offset = -out.jac.apply(p.offset);
    out.domain.reserve(p.domain.size());
    for (const Vec2& v : p.domain) out.domain.push_back(p.apply(v));
    make_ccw(out.domain);
    return out;
}

// Affine map sending x[i] -> y[i].
PlanePiece affine_from_triangle(const Vec2 x[3], const Vec2 y[3]) {
    const Mat22 xm{x[1].x - x[0].x, x[2].x - x[0].x, x[1].y - x[0].y, x[2].y - x[0].y};
    const Mat22 ym{y[1].x - y[0].x, y[2].x - y[0].x, y[1].y - y[0].y, y[2].y - y[0].y};
    PlanePiece p;
    p.jac = ym.mul(xm.inverse());
    p.offset = y[0] - p.jac.apply(x[0]);
    p.domain = {x[0], x[1], x[2]};
    make_ccw(p.domain);
    return p;
}

// Tent pieces in the normalized frame: crack [0, L] x {0}, apex at z1.
struct LocalTent {
    std::vector<PlanePiece> fwd, inv;
    Polygon delta_polygon;
};

LocalTent local_tent(double L, double z1, double delta) {
    LocalTent t;
    const double apex_img = delta * delta / (1.0 + delta);

    PlanePiece left;
    left.domain = {{0, 0}, {z1, 0}, {z1, delta}};
    left.jac = Mat22{1, 0, delta * delta / (z1 * (1.0 + delta)), 1.0 / (1.0 + delta)};
    left.offset = {0, 0};
    PlanePiece right;
    right.domain = {{z1, 0}, {L, 0}, {z1, delta}};
    right.jac = Mat22{1, 0, -delta * delta / ((L - z1) * (1.0 + delta)), 1.0 / (1.0 + delta)};
    right.offset = {0, delta * delta * L / ((L - z1) * (1.0 + delta))};
    t.fwd = {left, right};
    t.inv = {invert_piece(left), invert_piece(right)};
    t.delta_polygon = {{0, 0}, {L, 0}, {z1, apex_img}};
    return t;
}

}  // namespace

CrackDiffeo build_tent_map(const CrackPath& crack, double delta, double apex_rel) {
    crack.validate();
    if (crack.kind != CrackPath::Kind::straight)
        throw std::invalid_argument("build_tent_map: crack must be straight");
    if (!(delta > 0.0)) throw std::invalid_argument("build_tent_map: delta must be positive");
    if (!(apex_rel > 0.0 && apex_rel < 1.0))
        throw std::invalid_argument("build_tent_map: apex must be interior to the crack");

    const Rigid rg = normalize_to_x_axis(crack.vertices.front(), crack.vertices.back());
    const double L = crack.length();
    const LocalTent lt = local_tent(L, apex_rel * L, delta);

    CrackDiffeo d;
    d.crack_ = crack;
    d.delta_ = delta;
    for (const PlanePiece& p : lt.fwd) d.fwd_.push_back(to_world(p, rg));
    for (const PlanePiece& p : lt.inv) d.inv_.push_back(to_world(p, rg));
    d.delta_polygon_.reserve(lt.delta_polygon.size());
    for (const Vec2& v : lt.delta_polygon) d.delta_polygon_.push_back(rg.to_world(v));
    make_ccw(d.delta_polygon_);
    d.delta_convex_ = {d.delta_polygon_};

    TentMap tm;
    tm.delta = delta;
    tm.apex_abscissa = apex_rel * L;
    tm.cells = d.fwd_;
    tm.inverse_cells = d.inv_;
    tm.delta_polygon = d.delta_polygon_;
    d.tent_ = tm;
    return d;
}

CrackDiffeo build_bent_map(const CrackPath& crack, double delta, double margin,
                           double tminus_ratio) {
    crack.validate();
    if (crack.kind != CrackPath::Kind::bent)
        throw std::invalid_argument("build_bent_map: crack must be bent");
    if (!(delta > 0.0)) throw std::invalid_argument("build_bent_map: delta must be positive");

    Rigid rg = normalize_to_x_axis(crack.vertices.front(), crack.vertices.back());
    Vec2 joint = rg.to_local(crack.vertices[1]);
    if (joint.y < 0.0) {
        // Flip so the joint sits above gamma.
        rg.r = Mat22{1, 0, 0, -1}.mul(rg.r);
        joint = rg.to_local(crack.vertices[1]);
    }
    const double L = (crack.vertices.back() - crack.vertices.front()).norm();
    const double j1 = joint.x, h = joint.y;
    if (!(j1 > 0.0 && j1 < L))
        throw std::invalid_argument("build_bent_map: joint must project inside gamma");

    // Eight-triangle homeomorphism. All free vertices sit on the vertical
    // line through the joint.
    const Vec2 P0{0, 0}, P1{L, 0};
    const Vec2 C{j1, (1.0 + margin) * h};
    const Vec2 D{j1, h};
    const Vec2 E{j1, 0};
    const Vec2 F{j1, -tminus_ratio * h};
    const Vec2 G{j1, -(1.0 + margin) * h};
    const Vec2 Fp{j1, 0.5 * (F.y + G.y)};

    EightTriangleMap psi;
    auto add = [&psi](const Vec2& a, const Vec2& b0, const Vec2& c0, const Vec2& ia, const Vec2& ib,
                      const Vec2& ic) {
        const Vec2 xs[3] = {a, b0, c0};
        const Vec2 ys[3] = {ia, ib, ic};
        psi.cells.push_back(affine_from_triangle(xs, ys));
    };
    for (const Vec2& P : {P0, P1}) {
        add(P, C, D, P, C, E);
        add(P, D, E, P, E, F);
        add(P, E, F, P, F, Fp);
        add(P, F, G, P, Fp, G);
    }
    psi.M = 1.0;
    for (const PlanePiece& p : psi.cells) {
        psi.inverse_cells.push_back(invert_piece(p));
        psi.M = std::max(psi.M, std::max(p.jac.opnorm(), p.jac.inverse().opnorm()));
    }

    const double delta_theta = delta / psi.M;
    const double max_delta = psi.M * std::min(h, 0.5) * (1.0 - 1e-9);
    if (delta_theta >= std::min(h, 0.5)) {
        std::ostringstream os;
        os << "build_bent_map: delta too large; {Theta != Id} must fit inside T "
           << "(maximal admissible delta ~= " << max_delta << ")";
        throw std::invalid_argument(os.str());
    }

    // Theta's tent over gamma with apex under the joint, nested inside T.
    const LocalTent theta = local_tent(L, j1, delta_theta);

    // Phi = Psi^{-1} o Theta o Psi differs from the identity exactly on the
    // Psi-preimages of the two tent cells, which lie inside the upper-hat
    // cells (P0,C,D) and (P1,C,D). Compose the three affine maps there.
    const PlanePiece& l1 = psi.cells[0];
    const PlanePiece& r1 = psi.cells[4];
    auto compose_piece = [](const PlanePiece& theta_piece, const PlanePiece& psi_piece) {
        const PlanePiece psi_inv = invert_piece(psi_piece);
        PlanePiece out;
        // x in Psi^{-1}(theta domain)
        const PlanePiece pre = invert_piece(psi_piece);
        out.domain.reserve(theta_piece.domain.size());
        for (const Vec2& v : theta_piece.domain) out.domain.push_back(pre.apply(v));
        make_ccw(out.domain);
        const Mat22 j1m = psi_piece.jac;
        const Mat22 j2 = theta_piece.jac;
        const Mat22 j3 = psi_inv.jac;
        out.jac = j3.mul(j2).mul(j1m);
        out.offset = j3.apply(j2.apply(psi_piece.offset) + theta_piece.offset) + psi_inv.offset;
        return out;
    };

    CrackDiffeo d;
    d.crack_ = crack;
    d.delta_ = delta;
    const PlanePiece pa = compose_piece(theta.fwd[0], l1);
    const PlanePiece pb = compose_piece(theta.fwd[1], r1);
    d.fwd_ = {to_world(pa, rg), to_world(pb, rg)};
    d.inv_ = {to_world(invert_piece(pa), rg), to_world(invert_piece(pb), rg)};

    // Delta = Psi^{-1}(theta triangle): quad (P0, D, P1, A*) with A* just
    // above the joint.
    const Vec2 apex_theta{j1, delta_theta * delta_theta / (1.0 + delta_theta)};
    const Vec2 a_star = invert_piece(l1).apply(apex_theta);
    Polygon delta_local{P0, D, P1, a_star};
    make_ccw(delta_local);
    d.delta_polygon_.reserve(delta_local.size());
    for (const Vec2& v : delta_local) d.delta_polygon_.push_back(rg.to_world(v));
    make_ccw(d.delta_polygon_);
    // The crescent between the crack and the A* chains splits at the chord
    // joint-A* into two triangles.
    for (auto tri : {Polygon{P0, D, a_star}, Polygon{D, P1, a_star}}) {
        Polygon wtri;
        for (const Vec2& v : tri) wtri.push_back(rg.to_world(v));
        make_ccw(wtri);
        d.delta_convex_.push_back(wtri);
    }

    // Expose the auxiliary map in world coordinates for inspection.
    EightTriangleMap psi_world;
    psi_world.M = psi.M;
    for (const PlanePiece& p : psi.cells) psi_world.cells.push_back(to_world(p, rg));
    for (const PlanePiece& p : psi.inverse_cells) psi_world.inverse_cells.push_back(to_world(p, rg));
    auto world_poly = [&rg](std::initializer_list<Vec2> vs) {
        Polygon out;
        for (const Vec2& v : vs) out.push_back(rg.to_world(v));
        make_ccw(out);
        return out;
    };
    psi_world.T = world_poly({P0, D, P1});
    psi_world.That = world_poly({P0, C, P1});
    psi_world.Tminus = world_poly({P0, F, P1});
    psi_world.ThatMinus = world_poly({P0, G, P1});
    d.psi_ = psi_world;
    return d;
}

namespace {

const PlanePiece* find_piece(const std::vector<PlanePiece>& pieces, const Vec2& x) {
    for (const PlanePiece& p : pieces)
        if (point_in_polygon(p.domain, x, 1e-13)) return &p;
    return nullptr;
}

}  // namespace

Vec2 CrackDiffeo::forward(const Vec2& x) const {
    const PlanePiece* p = find_piece(fwd_, x);
    return p ? p->apply(x) : x;
}

Vec2 CrackDiffeo::inverse(const Vec2& y) const {
    const PlanePiece* p = find_piece(inv_, y);
    return p ? p->apply(y) : y;
}

Mat22 CrackDiffeo::forward_jacobian(const Vec2& x) const {
    const PlanePiece* p = find_piece(fwd_, x);
    return p ? p->jac : Mat22::identity();
}

SupDistanceToIdentity sup_distance_to_identity(const CrackDiffeo& map) {
    SupDistanceToIdentity out;
    for (const PlanePiece& p : map.forward_pieces()) {
        for (const Vec2& v : p.domain) out.value = std::max(out.value, (p.apply(v) - v).norm());
        out.grad = std::max(out.grad, (p.jac - Mat22::identity()).opnorm());
    }
    return out;
}

BoundsCertificate certify_bounds(const CrackDiffeo& map) {
    BoundsCertificate cert;
    double fwd_norm = 1.0, inv_norm = 1.0, min_det = 1.0;  // identity cells included
    for (const PlanePiece& p : map.forward_pieces()) {
        fwd_norm = std::max(fwd_norm, p.jac.opnorm());
        inv_norm = std::max(inv_norm, p.jac.inverse().opnorm());
        min_det = std::min(min_det, p.jac.det());
    }
    cert.norm_sum = fwd_norm + inv_norm;
    cert.min_det = min_det;
    cert.pass = cert.norm_sum <= 3.0 && cert.min_det >= 0.5;
    std::ostringstream os;
    os << "norm_sum=" << cert.norm_sum << " min_det=" << cert.min_det
       << (cert.pass ? " pass" : " fail");
    cert.detail = os.str();
    return cert;
}

double segment_segment_distance(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    if (segments_intersect(a, b, c, d)) return 0.0;
    return std::min(std::min(segment_distance(a, b, c), segment_distance(a, b, d)),
                    std::min(segment_distance(c, d, a), segment_distance(c, d, b)));
}

void require_disjoint_neighborhoods(const std::vector<CrackPath>& cracks, double delta) {
    for (std::size_t i = 0; i < cracks.size(); ++i) {
        for (std::size_t j = i + 1; j < cracks.size(); ++j) {
            double dist = std::numeric_limits<double>::infinity();
            const auto& vi = cracks[i].vertices;
            const auto& vj = cracks[j].vertices;
            for (std::size_t s = 0; s + 1 < vi.size(); ++s)
                for (std::size_t t = 0; t + 1 < vj.size(); ++t)
                    dist = std::min(dist,
                                    segment_segment_distance(vi[s], vi[s + 1], vj[t], vj[t + 1]));
            if (dist <= 2.0 * delta)
                throw std::invalid_argument(
                    "crack delta-neighborhoods overlap; reduce delta or separate the cracks");
        }
    }
}

}  // namespace membrane
