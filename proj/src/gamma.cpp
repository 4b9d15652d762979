#include "membrane/gamma.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <atomic>
#include <thread>

#include "membrane/csv.hpp"
#include "membrane/minimize.hpp"

namespace membrane {

const std::vector<std::string> kSweepColumns = {
    "rho",       "epsilon",    "delta",     "bulk",      "surface",
    "total",     "limit_low",  "limit_high", "bound_rhs", "bound_pass"};

double surface_weight(const Vec3& nu, double rho) {
    if (std::abs(nu.norm() - 1.0) > 1e-12)
        throw std::invalid_argument("surface_weight: normal must be unit length");
    if (!(rho > 0.0)) throw std::invalid_argument("surface_weight: rho > 0");
    const double z = nu.z / rho;
    return std::sqrt(nu.x * nu.x + nu.y * nu.y + z * z);
}

double MembraneDeformation::crack_length() const {
    double l = 0.0;
    for (const CrackPath& c : cracks) l += c.length();
    return l;
}

namespace {

Polygon rect_polygon(const Vec2& lo, const Vec2& hi) {
    return {{lo.x, lo.y}, {hi.x, lo.y}, {hi.x, hi.y}, {lo.x, hi.y}};
}

std::vector<double> grid_coords(double a, double b, int n, const std::vector<double>& required) {
    std::vector<double> xs;
    for (int i = 0; i <= n; ++i) xs.push_back(a + (b - a) * i / n);
    for (double r : required) xs.push_back(r);
    std::sort(xs.begin(), xs.end());
    std::vector<double> out;
    for (double x : xs)
        if (out.empty() || x - out.back() > 1e-9 * (b - a)) out.push_back(x);
    return out;
}

struct GridMembrane {
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> cells;
    std::vector<Vec3> values;
    std::vector<bool> on_crack;
};

struct SeamSpec {
    int jc, ia, ib;  // grid row, tip columns
};

// Structured rectangle mesh with horizontal seams: interior seam nodes are
// duplicated (lower copy first, upper copy appended) and the upper copies
// carry the e3 opening. The opening tapers to zero at the tips within one
// cell, which keeps the jump supported exactly on the open cracks.
GridMembrane build_grid(const MembraneBuilder& b, const std::vector<CrackPath>& cracks) {
    std::vector<double> req_x, req_y;
    for (const CrackPath& crack : cracks) {
        if (crack.kind != CrackPath::Kind::straight)
            throw std::invalid_argument("membrane builder: only straight cracks are meshed");
        const Vec2 p = crack.vertices.front(), q = crack.vertices.back();
        if (std::abs(p.y - q.y) > 1e-12)
            throw std::invalid_argument("membrane builder: crack must be horizontal");
        const double x0 = std::min(p.x, q.x), x1 = std::max(p.x, q.x);
        if (!(x0 > b.lo.x && x1 < b.hi.x && p.y > b.lo.y && p.y < b.hi.y))
            throw std::invalid_argument("membrane builder: crack must be strictly inside");
        req_x.push_back(x0);
        req_x.push_back(x1);
        req_y.push_back(p.y);
    }

    const std::vector<double> xs = grid_coords(b.lo.x, b.hi.x, b.mesh, req_x);
    const std::vector<double> ys = grid_coords(b.lo.y, b.hi.y, b.mesh, req_y);
    const int nx = static_cast<int>(xs.size()), ny = static_cast<int>(ys.size());

    auto near = [](double a, double c) { return std::abs(a - c) < 1e-9; };
    std::vector<SeamSpec> seams;
    for (const CrackPath& crack : cracks) {
        SeamSpec s{-1, -1, -1};
        const double y = crack.vertices.front().y;
        const double x0 = std::min(crack.vertices.front().x, crack.vertices.back().x);
        const double x1 = std::max(crack.vertices.front().x, crack.vertices.back().x);
        for (int j = 0; j < ny; ++j)
            if (near(ys[j], y)) s.jc = j;
        for (int i = 0; i < nx; ++i) {
            if (near(xs[i], x0)) s.ia = i;
            if (near(xs[i], x1)) s.ib = i;
        }
        if (s.jc < 0 || s.ia < 0 || s.ib < 0)
            throw std::invalid_argument("membrane builder: crack misses the grid");
        seams.push_back(s);
    }

    GridMembrane g;
    std::vector<int> base_id(nx * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            base_id[j * nx + i] = static_cast<int>(g.vertices.size());
            g.vertices.push_back({xs[i], ys[j]});
            g.on_crack.push_back(false);
        }
    // Upper copies of interior seam nodes, keyed by grid node.
    std::map<std::pair<int, int>, int> upper_copy;
    for (const SeamSpec& s : seams) {
        for (int i = s.ia; i <= s.ib; ++i) {
            const int id = base_id[s.jc * nx + i];
            g.on_crack[id] = true;  // lower copy and tips
            if (i > s.ia && i < s.ib) {
                upper_copy[{s.jc, i}] = static_cast<int>(g.vertices.size());
                g.vertices.push_back({xs[i], ys[s.jc]});
                g.on_crack.push_back(true);
            }
        }
    }

    g.values.resize(g.vertices.size());
    for (std::size_t v = 0; v < g.vertices.size(); ++v)
        g.values[v] = b.base.apply(g.vertices[v]);
    for (const auto& [key, id] : upper_copy)
        g.values[id] = g.values[id] + Vec3{0, 0, b.opening};

    auto vertex_for = [&](int i, int j, bool upper_side) {
        if (upper_side) {
            auto it = upper_copy.find({j, i});
            if (it != upper_copy.end()) return it->second;
        }
        return base_id[j * nx + i];
    };
    auto row_has_seam = [&](int j) {
        for (const SeamSpec& s : seams)
            if (s.jc == j) return true;
        return false;
    };

    for (int j = 0; j + 1 < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            // Quad (i,j)-(i+1,j+1); its bottom edge sits above a seam when
            // row j carries one.
            const bool bottom_upper = row_has_seam(j);
            const int v00 = vertex_for(i, j, bottom_upper);
            const int v10 = vertex_for(i + 1, j, bottom_upper);
            const int v11 = vertex_for(i + 1, j + 1, false);
            const int v01 = vertex_for(i, j + 1, false);
            g.cells.push_back({v00, v10, v11});
            g.cells.push_back({v00, v11, v01});
        }
    }
    return g;
}

MembraneDeformation finish_membrane(const MembraneBuilder& b,
                                    const std::vector<CrackPath>& cracks) {
    GridMembrane g = build_grid(b, cracks);
    MembraneDeformation m;
    m.sigma = rect_polygon(b.lo, b.hi);
    m.cracks = cracks;
    m.u = PwAffineMap::from_nodal(std::move(g.vertices), std::move(g.cells), g.values,
                                  std::move(g.on_crack));
    const AffStarCertificate cert = aff_star_test(m.u, 0.0);
    m.eta = cert.min_gram;
    return m;
}

}  // namespace

MembraneDeformation make_affine_membrane(const MembraneBuilder& b) {
    return finish_membrane(b, {});
}

MembraneDeformation make_cracked_membrane(const MembraneBuilder& b, const CrackPath& crack) {
    crack.validate();
    return finish_membrane(b, {crack});
}

MembraneDeformation make_cracked_membrane(const MembraneBuilder& b,
                                          const std::vector<CrackPath>& cracks) {
    for (const CrackPath& c : cracks) c.validate();
    return finish_membrane(b, cracks);
}

namespace {

double crack_to_boundary_distance(const Polygon& sigma, const CrackPath& crack) {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < sigma.size(); ++e) {
        const Vec2& a = sigma[e];
        const Vec2& b = sigma[(e + 1) % sigma.size()];
        for (std::size_t s = 0; s + 1 < crack.vertices.size(); ++s)
            d = std::min(d, segment_segment_distance(a, b, crack.vertices[s], crack.vertices[s + 1]));
    }
    return d;
}

}  // namespace

RecoveryDeformation build_recovery(const MembraneDeformation& u, const ThinFilmConfig& cfg,
                                   const StoredEnergy& w) {
    if (!(cfg.epsilon > 0.0 && cfg.epsilon < 0.5))
        throw std::invalid_argument("build_recovery: epsilon in (0, 1/2)");
    require_disjoint_neighborhoods(u.cracks, cfg.delta);
    for (const CrackPath& c : u.cracks) {
        if (crack_to_boundary_distance(u.sigma, c) <= cfg.delta)
            throw std::invalid_argument("build_recovery: crack delta-neighborhood leaves Sigma");
    }

    // Crack-opening diffeomorphisms, one per component.
    std::vector<CrackDiffeo> diffeos;
    for (const CrackPath& c : u.cracks) {
        diffeos.push_back(c.kind == CrackPath::Kind::straight ? build_tent_map(c, cfg.delta)
                                                              : build_bent_map(c, cfg.delta));
    }

    PlaneMap fwd, inv;
    for (const CrackDiffeo& d : diffeos) {
        const PlaneMap df = PlaneMap::forward_of(d);
        const PlaneMap di = PlaneMap::inverse_of(d);
        fwd.pieces.insert(fwd.pieces.end(), df.pieces.begin(), df.pieces.end());
        inv.pieces.insert(inv.pieces.end(), di.pieces.begin(), di.pieces.end());
        fwd.crack_segments.insert(fwd.crack_segments.end(), df.crack_segments.begin(),
                                  df.crack_segments.end());
        inv.crack_segments.insert(inv.crack_segments.end(), di.crack_segments.begin(),
                                  di.crack_segments.end());
    }

    // Smallness checks on the opening: |det DPhi - 1| <= eps both
    // ways.
    for (const PlanePiece& p : fwd.pieces)
        if (std::abs(p.jac.det() - 1.0) > cfg.epsilon)
            throw std::invalid_argument(
                "build_recovery: |det DPhi - 1| exceeds epsilon; reduce delta");
    for (const PlanePiece& p : inv.pieces)
        if (std::abs(p.jac.det() - 1.0) > cfg.epsilon)
            throw std::invalid_argument(
                "build_recovery: |det DPhi^{-1} - 1| exceeds epsilon; reduce delta");

    // v = u o Phi^{-1} on Sigma minus the opened polygons.
    ComposeOptions copts;
    for (const CrackDiffeo& d : diffeos)
        copts.exclude.insert(copts.exclude.end(), d.opened_convex_parts().begin(),
                             d.opened_convex_parts().end());
    const PwAffineMap v = compose_with_diffeo(u.u, inv, u.sigma, copts);

    // Psi = DPhi(Phi^{-1}) is constant on each v-cell: the inverse of the
    // inverse-piece Jacobian where one applies, identity elsewhere.
    const auto& vtri = v.tri();
    std::vector<Mat22> psi(vtri.cells.size(), Mat22::identity());
    for (std::size_t c = 0; c < vtri.cells.size(); ++c) {
        const Vec2 centroid = vtri.cell_centroid(c);
        for (const PlanePiece& p : inv.pieces) {
            if (point_in_polygon(p.domain, centroid, 1e-13)) {
                psi[c] = p.jac.inverse();
                break;
            }
        }
    }
    const double psi_eps = std::max(cfg.fiber_eps, cfg.epsilon);
    FiberOptions fopts;
    fopts.box_opts.seed = cfg.seed;
    const FiberFieldResult fiber = fiber_field(w, v, psi, psi_eps, fopts);
    if (!fiber.pass)
        throw std::runtime_error("build_recovery: fiber certificate failed: " + fiber.detail);

    // Compose the fiber field with Phi; its refinement of v's triangulation
    // makes every composed cell lie inside a single v-cell.
    ComposeOptions fwd_opts;
    const PwAffineMap fiber_composed = compose_with_diffeo(fiber.phi, fwd, u.sigma, fwd_opts);

    RecoveryDeformation out;
    out.jump_set = u.cracks;
    out.fiber_excess = fiber.energy_excess;
    out.fiber_min_det = fiber.min_det;

    const auto& ftri = fiber_composed.tri();
    Triangulation base_tri;
    base_tri.vertices = ftri.vertices;
    base_tri.on_crack = ftri.on_crack;
    out.pieces.reserve(ftri.cells.size());
    for (std::size_t c = 0; c < ftri.cells.size(); ++c) {
        const auto& cell = ftri.cells[c];
        const Vec2 centroid =
            (ftri.vertices[cell.v[0]] + ftri.vertices[cell.v[1]] + ftri.vertices[cell.v[2]]) / 3.0;

        Mat22 j = Mat22::identity();
        Vec2 off{0, 0};
        for (const PlanePiece& p : fwd.pieces) {
            if (point_in_polygon(p.domain, centroid, 1e-13)) {
                j = p.jac;
                off = p.offset;
                break;
            }
        }
        const Vec2 y = j.apply(centroid) + off;
        const auto vc = v.find_cell(y);
        if (!vc) throw std::runtime_error("build_recovery: composed cell escapes the image domain");
        const auto& vcell = v.tri().cells[*vc];

        RecoveryPiece piece;
        piece.poly = {ftri.vertices[cell.v[0]], ftri.vertices[cell.v[1]], ftri.vertices[cell.v[2]]};
        make_ccw(piece.poly);
        piece.grad_base = vcell.grad.mul22(j);
        piece.offset_base = vcell.grad.apply(off) + vcell.offset;
        piece.grad_fiber = cell.grad;
        piece.offset_fiber = cell.offset;
        out.pieces.push_back(piece);

        Triangulation::Cell bc = cell;
        bc.grad = piece.grad_base;
        bc.offset = piece.offset_base;
        base_tri.cells.push_back(bc);
    }

    const PwAffineMap base_map(std::move(base_tri));
    const AffStarCertificate composed = aff_star_test(base_map, 0.0);
    out.composed_eta = composed.min_gram;
    if (composed.min_gram <= 0.0)
        throw std::runtime_error("build_recovery: composed map lost maximal rank at " +
                                 composed.witness);
    std::ostringstream os;
    os << "fiber(" << fiber.detail << ") composed_eta=" << composed.min_gram;
    out.detail = os.str();
    return out;
}

EnergyBreakdown thin_film_energy(const RecoveryDeformation& v, double rho, const StoredEnergy& w,
                                 const ThinFilmConfig& cfg) {
    if (!(rho > 0.0)) throw std::invalid_argument("thin_film_energy: rho > 0");
    EnergyBreakdown out;

    const int refine = std::max(0, cfg.planar_refine);
    std::vector<double> partial(v.pieces.size(), 0.0);
    std::atomic<int> offending{-1};

    auto piece_integral = [&](std::size_t pi) {
        const RecoveryPiece& piece = v.pieces[pi];
        double acc = 0.0;
        for (const auto& tri : fan_triangulate(piece.poly, 0.0)) {
            // Uniform refinement.
            std::vector<std::array<Vec2, 3>> stack{tri};
            for (int l = 0; l < refine; ++l) {
                std::vector<std::array<Vec2, 3>> next;
                next.reserve(stack.size() * 4);
                for (const auto& t : stack) {
                    const Vec2 m01 = (t[0] + t[1]) * 0.5;
                    const Vec2 m12 = (t[1] + t[2]) * 0.5;
                    const Vec2 m20 = (t[2] + t[0]) * 0.5;
                    next.push_back({t[0], m01, m20});
                    next.push_back({m01, t[1], m12});
                    next.push_back({m20, m12, t[2]});
                    next.push_back({m01, m12, m20});
                }
                stack = std::move(next);
            }
            for (const auto& t : stack) {
                const double area = 0.5 * std::abs((t[1] - t[0]).cross(t[2] - t[0]));
                if (area <= 0.0) continue;
                double avg = 0.0;
                for (const Vec2& q : {(t[0] + t[1]) * 0.5, (t[1] + t[2]) * 0.5, (t[2] + t[0]) * 0.5}) {
                    const Vec3 fiber = piece.grad_fiber.apply(q) + piece.offset_fiber;
                    auto integrand = [&](double x3) {
                        const Mat32 planar = piece.grad_base + piece.grad_fiber * (rho * x3);
                        return w.evaluate(Mat33::from_planar(planar, fiber)).v;
                    };
                    double val;
                    if (cfg.transverse_nodes == 2) {
                        const double g = 0.5 / std::sqrt(3.0);
                        val = 0.5 * (integrand(-g) + integrand(g));
                    } else {
                        val = adaptive_simpson(integrand, -0.5, 0.5, cfg.x3_tol);
                    }
                    if (!std::isfinite(val)) {
                        offending.store(static_cast<int>(pi));
                        return;
                    }
                    avg += val / 3.0;
                }
                acc += area * avg;
            }
        }
        partial[pi] = acc;
    };

    const int threads = std::max(1, cfg.threads);
    if (threads == 1 || v.pieces.size() < 8) {
        for (std::size_t i = 0; i < v.pieces.size(); ++i) piece_integral(i);
    } else {
        std::vector<std::thread> pool;
        std::size_t chunk = (v.pieces.size() + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const std::size_t b = t * chunk, e = std::min(v.pieces.size(), b + chunk);
            pool.emplace_back([&, b, e]() {
                for (std::size_t i = b; i < e; ++i) piece_integral(i);
            });
        }
        for (auto& th : pool) th.join();
    }

    out.offending_piece = offending.load();
    if (out.offending_piece >= 0) {
        out.bulk = std::numeric_limits<double>::infinity();
    } else {
        // Fixed reduction order keeps the result thread-count independent.
        for (double p : partial) out.bulk += p;
    }

    for (const CrackPath& c : v.jump_set) {
        for (std::size_t s = 0; s + 1 < c.vertices.size(); ++s) {
            const Vec2 d = c.vertices[s + 1] - c.vertices[s];
            const Vec2 n = d.perp().normalized();
            const double weight = surface_weight({n.x, n.y, 0.0}, rho);
            out.facet_weights.push_back(weight);
            out.surface += d.norm() * weight;
        }
    }
    out.total = out.bulk + out.surface;
    return out;
}

namespace {

std::uint64_t grad_key(const Mat32& a) {
    const double* vals = &a.c1.x;
    std::uint64_t h = 1469598103934665603ULL;
    for (int i = 0; i < 6; ++i) {
        const auto q = static_cast<std::int64_t>(std::llround(vals[i] * 1e9));
        h ^= static_cast<std::uint64_t>(q);
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

LimitBracket limit_energy(const MembraneDeformation& u, const StoredEnergy& w,
                          const ThinFilmConfig& cfg) {
    LimitBracket out;
    out.surface = u.crack_length();

    const ReducedDensityFn f(w);
    DensityFn density = [&f](const Mat32& m) { return f(m); };

    EnvelopeOptions eopts;
    eopts.C1 = w.C1;
    eopts.p = w.p;
    eopts.budget.threads = cfg.threads;

    struct CellValues {
        double w0, high, low;
    };
    std::map<std::uint64_t, CellValues> memo;

    const auto& tri = u.u.tri();
    for (std::size_t c = 0; c < tri.cells.size(); ++c) {
        const Mat32& g = tri.cells[c].grad;
        const double area = tri.cell_area(c);
        const std::uint64_t key = grad_key(g);
        auto it = memo.find(key);
        if (it == memo.end()) {
            CellValues cv{};
            const ExtReal w0 = density(g);
            if (!w0.finite())
                throw std::runtime_error("limit_energy: W0 infinite on a cell (u leaves Aff*)");
            cv.w0 = w0.v;
            const EnvelopeResult env =
                rank_one_envelope(density, g, cfg.envelope_depth, cfg.envelope_tol, eopts);
            cv.high = env.value.v;
            // Cloud around g for the convex lower estimate.
            std::vector<Mat32> cloud{g};
            const double r = 0.5;
            for (int k = 0; k < 6; ++k) {
                for (double s : {-r, r, -2.0 * r, 2.0 * r}) {
                    Mat32 m = g;
                    (&m.c1.x)[k] += s;
                    cloud.push_back(m);
                }
            }
            double low;
            try {
                low = convex_minorant(density, g, cloud);
            } catch (const std::exception&) {
                low = std::max(0.0, w.C1 * std::pow(g.frobenius2(), 0.5 * w.p) - 1.0 / w.C1);
            }
            cv.low = std::min(low, cv.high);
            it = memo.emplace(key, cv).first;
        }
        out.bulk_w0 += area * it->second.w0;
        out.high += area * it->second.high;
        out.low += area * it->second.low;
    }
    out.low += out.surface;
    out.high += out.surface;
    return out;
}

SweepReport run_convergence_experiment(const MembraneDeformation& u, const StoredEnergy& w,
                                       const std::vector<double>& rhos,
                                       const ThinFilmConfig& cfg) {
    for (std::size_t i = 0; i + 1 < rhos.size(); ++i)
        if (!(rhos[i] > rhos[i + 1]))
            throw std::invalid_argument("run_convergence_experiment: sweep must decrease");
    for (double r : rhos)
        if (!(r > 0.0)) throw std::invalid_argument("run_convergence_experiment: rho > 0");

    SweepReport rep;
    rep.limit = limit_energy(u, w, cfg);
    rep.g0w = rep.limit.g0w();

    RecoveryDeformation recovery;
    std::string build_error;
    try {
        recovery = build_recovery(u, cfg, w);
    } catch (const std::exception& e) {
        build_error = e.what();
    }

    const double bound_rhs =
        (1.0 + cfg.epsilon) * (1.0 + cfg.epsilon) * rep.g0w + 2.0 * cfg.epsilon;
    for (double rho : rhos) {
        SweepRow row{};
        row.rho = rho;
        row.epsilon = cfg.epsilon;
        row.delta = cfg.delta;
        row.limit_low = rep.limit.low;
        row.limit_high = rep.limit.high;
        row.bound_rhs = bound_rhs;
        if (!build_error.empty()) {
            row.error = build_error;
            row.bound_pass = false;
        } else {
            try {
                const EnergyBreakdown e = thin_film_energy(recovery, rho, w, cfg);
                row.bulk = e.bulk;
                row.surface = e.surface;
                row.total = e.total;
                row.bound_pass = e.total <= bound_rhs + 1e-3;
            } catch (const std::exception& e) {
                row.error = e.what();
                row.bound_pass = false;
            }
        }
        rep.rows.push_back(row);
    }
    return rep;
}

std::string sweep_csv(const SweepReport& rep, std::uint64_t seed) {
    CsvWriter csv(kSweepColumns, seed);
    for (const SweepRow& r : rep.rows) {
        csv.add_row({format_number(r.rho), format_number(r.epsilon), format_number(r.delta),
                     format_number(r.bulk), format_number(r.surface), format_number(r.total),
                     format_number(r.limit_low), format_number(r.limit_high),
                     format_number(r.bound_rhs), r.bound_pass ? "1" : "0"});
    }
    return csv.str();
}

}  // namespace membrane
