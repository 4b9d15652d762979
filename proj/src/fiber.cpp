#include "membrane/fiber.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>
#include <stdexcept>

namespace membrane {

namespace {

// Bit-exact key so cells with identical effective matrices share the same
// minimizer and the blend has nothing to interpolate between them.
std::array<std::uint64_t, 6> exact_key(const Mat32& m) {
    std::array<std::uint64_t, 6> k{};
    std::memcpy(k.data(), &m.c1.x, 6 * sizeof(double));
    return k;
}

}  // namespace

FiberFieldResult fiber_field(const StoredEnergy& w, const PwAffineMap& g_field,
                             const std::vector<Mat22>& psi, double eps, const FiberOptions& opts) {
    const Triangulation& tri = g_field.tri();
    const std::size_t nc = tri.cells.size();
    if (psi.size() != nc) throw std::invalid_argument("fiber_field: one psi per cell required");
    if (!(eps > 0.0)) throw std::invalid_argument("fiber_field: eps must be positive");
    for (const Mat22& m : psi)
        if (std::abs(m.det() - 1.0) > eps + 1e-12)
            throw std::invalid_argument("fiber_field: ||det psi - 1|| exceeds eps");

    // Effective per-cell matrices and the box covering all of them.
    std::vector<Mat32> eff(nc);
    double alpha = std::numeric_limits<double>::infinity(), K = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
        eff[c] = tri.cells[c].grad.mul22(psi[c]);
        alpha = std::min(alpha, wedge_columns(eff[c]).norm());
        K = std::max(K, eff[c].frobenius());
    }
    if (!(alpha > 0.0))
        throw std::invalid_argument("fiber_field: G Psi degenerates on some cell");
    const BetaBox box = beta_box(w, alpha, std::max(K, std::sqrt(2.0 * alpha)), opts.box_opts);

    // Per-cell minimizers, deduplicated on the exact matrix bits so equal
    // cells carry bitwise-equal fibers.
    std::vector<Vec3> xi(nc);
    std::vector<double> w0(nc);
    std::map<std::array<std::uint64_t, 6>, std::pair<Vec3, double>> cache;
    for (std::size_t c = 0; c < nc; ++c) {
        const auto key = exact_key(eff[c]);
        auto it = cache.find(key);
        if (it == cache.end()) {
            const ReducedValue rv = reduced_density(w, eff[c], box);
            if (!rv.value.finite())
                throw std::runtime_error("fiber_field: reduced density not finite on a cell");
            it = cache.emplace(key, std::make_pair(rv.argmin, rv.value.v)).first;
        }
        xi[c] = it->second.first;
        w0[c] = it->second.second;
    }

    // Kernel geometry. With radius >= the largest cell diameter each node's
    // incident cells always vote, and the averaged field is Lipschitz with
    // constant ~ (minimizer spread)/radius independently of how thin the
    // clipped cells are.
    std::vector<Vec2> centroids(nc);
    std::vector<double> areas(nc);
    double max_diam = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
        centroids[c] = tri.cell_centroid(c);
        areas[c] = tri.cell_area(c);
        const auto& cv = tri.cells[c].v;
        for (int i = 0; i < 3; ++i)
            max_diam = std::max(
                max_diam, (tri.vertices[cv[i]] - tri.vertices[cv[(i + 1) % 3]]).norm());
    }
    const double base_radius =
        opts.blend_radius > 0.0 ? opts.blend_radius : 1.5 * max_diam;

    FiberFieldResult out;
    out.beta_tilde = box.beta;
    out.det_floor = 1.0 / (3.0 * box.beta);

    // Widest radius first (smoothest field, smallest gradient); shrink while
    // the excess budget is violated.
    double radius = 2.0 * base_radius;
    for (int attempt = 0; attempt <= opts.max_shrink; ++attempt, radius *= 0.5) {
        std::vector<Vec3> nodal(tri.vertices.size(), Vec3{});
        std::vector<double> wsum(tri.vertices.size(), 0.0);
        for (std::size_t c = 0; c < nc; ++c) {
            for (std::size_t v = 0; v < tri.vertices.size(); ++v) {
                const double d = (tri.vertices[v] - centroids[c]).norm();
                if (d >= radius) continue;
                const double wt = areas[c] * (1.0 - d / radius);
                nodal[v] = nodal[v] + xi[c] * wt;
                wsum[v] += wt;
            }
        }
        bool orphan = false;
        for (std::size_t v = 0; v < tri.vertices.size(); ++v) {
            if (wsum[v] > 0.0) {
                nodal[v] = nodal[v] / wsum[v];
            } else {
                orphan = true;
            }
        }
        if (orphan) break;  // radius shrank below the mesh scale

        std::vector<std::array<int, 3>> cells;
        cells.reserve(nc);
        for (const auto& c : tri.cells) cells.push_back(c.v);
        PwAffineMap phi = PwAffineMap::from_nodal(tri.vertices, cells, nodal, tri.on_crack);

        // Exact determinant floor: det(eff_c | phi) is affine on each cell,
        // so the minimum sits at a vertex.
        double min_det = std::numeric_limits<double>::infinity();
        double max_grad = 0.0;
        const auto& rtri = phi.tri();
        for (std::size_t c = 0; c < nc; ++c) {
            const Vec3 wv = wedge_columns(eff[c]);
            max_grad = std::max(max_grad, rtri.cells[c].grad.frobenius());
            for (int i = 0; i < 3; ++i) {
                const Vec2& p = rtri.vertices[rtri.cells[c].v[i]];
                const Vec3 val = rtri.cells[c].grad.apply(p) + rtri.cells[c].offset;
                min_det = std::min(min_det, wv.dot(val));
            }
        }

        // Energy excess against the per-cell reduced density (midpoint-edge
        // rule; the integrand is smooth on each cell).
        double excess = 0.0;
        for (std::size_t c = 0; c < nc; ++c) {
            const auto& cell = rtri.cells[c];
            const Vec2 p0 = rtri.vertices[cell.v[0]];
            const Vec2 p1 = rtri.vertices[cell.v[1]];
            const Vec2 p2 = rtri.vertices[cell.v[2]];
            double avg = 0.0;
            for (const Vec2& q : {(p0 + p1) * 0.5, (p1 + p2) * 0.5, (p2 + p0) * 0.5}) {
                const Vec3 val = cell.grad.apply(q) + cell.offset;
                const ExtReal e = w.evaluate(Mat33::from_planar(eff[c], val));
                if (!e.finite()) {
                    avg = std::numeric_limits<double>::infinity();
                    break;
                }
                avg += e.v / 3.0;
            }
            excess += areas[c] * (avg - w0[c]);
        }

        out.min_det = min_det;
        out.energy_excess = excess;
        out.max_gradient = max_grad;
        out.pass = min_det >= out.det_floor && excess <= eps && max_grad <= opts.grad_cap;
        std::ostringstream os;
        os << "min_det=" << min_det << " floor=" << out.det_floor << " excess=" << excess
           << " max_grad=" << max_grad << " radius=" << radius
           << (out.pass ? " pass" : " fail");
        out.detail = os.str();
        out.phi = std::move(phi);
        if (out.pass) return out;
    }
    return out;
}

}  // namespace membrane
