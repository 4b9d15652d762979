#include "membrane/pw_affine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "membrane/minimize.hpp"

namespace membrane {

double Triangulation::cell_area(std::size_t c) const {
    const auto& t = cells[c].v;
    return 0.5 * std::abs((vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]));
}

Vec2 Triangulation::cell_centroid(std::size_t c) const {
    const auto& t = cells[c].v;
    return (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0;
}

double Triangulation::diameter() const {
    double d = 0.0;
    for (const Cell& c : cells)
        for (int i = 0; i < 3; ++i)
            d = std::max(d, (vertices[c.v[i]] - vertices[c.v[(i + 1) % 3]]).norm());
    return d;
}

PwAffineMap::PwAffineMap(Triangulation tri) : tri_(std::move(tri)) {
    if (tri_.on_crack.size() != tri_.vertices.size()) tri_.on_crack.assign(tri_.vertices.size(), false);
    for (std::size_t c = 0; c < tri_.cells.size(); ++c)
        if (tri_.cell_area(c) <= 0.0)
            throw std::invalid_argument("PwAffineMap: degenerate cell");
}

PwAffineMap PwAffineMap::from_nodal(std::vector<Vec2> vertices,
                                    std::vector<std::array<int, 3>> cells,
                                    const std::vector<Vec3>& values, std::vector<bool> on_crack) {
    if (values.size() != vertices.size())
        throw std::invalid_argument("from_nodal: one value per vertex required");
    Triangulation tri;
    tri.vertices = std::move(vertices);
    tri.on_crack = std::move(on_crack);
    tri.cells.reserve(cells.size());
    for (const auto& cv : cells) {
        const Vec2& p0 = tri.vertices[cv[0]];
        const Vec2& p1 = tri.vertices[cv[1]];
        const Vec2& p2 = tri.vertices[cv[2]];
        const Mat22 xm{p1.x - p0.x, p2.x - p0.x, p1.y - p0.y, p2.y - p0.y};
        const Mat22 xi = xm.inverse();
        const Vec3 d1 = values[cv[1]] - values[cv[0]];
        const Vec3 d2 = values[cv[2]] - values[cv[0]];
        Triangulation::Cell c;
        c.v = cv;
        // grad = [d1 d2] * xm^{-1}: columns combine the value differences.
        c.grad = Mat32{d1 * xi.a11 + d2 * xi.a21, d1 * xi.a12 + d2 * xi.a22};
        c.offset = values[cv[0]] - c.grad.apply(p0);
        tri.cells.push_back(c);
    }
    return PwAffineMap(std::move(tri));
}

double PwAffineMap::total_area() const {
    double a = 0.0;
    for (std::size_t c = 0; c < tri_.cells.size(); ++c) a += tri_.cell_area(c);
    return a;
}

std::optional<std::size_t> PwAffineMap::find_cell(const Vec2& x, double tol) const {
    for (std::size_t c = 0; c < tri_.cells.size(); ++c) {
        const auto& t = tri_.cells[c].v;
        const Polygon poly{tri_.vertices[t[0]], tri_.vertices[t[1]], tri_.vertices[t[2]]};
        if (point_in_polygon(poly, x, tol)) return c;
    }
    return std::nullopt;
}

Vec3 PwAffineMap::eval(const Vec2& x) const {
    const auto c = find_cell(x);
    if (!c) throw std::domain_error("PwAffineMap::eval: point outside the domain");
    const auto& cell = tri_.cells[*c];
    return cell.grad.apply(x) + cell.offset;
}

std::vector<PwAffineMap::EdgeAdjacency> PwAffineMap::interior_edges() const {
    std::map<std::pair<int, int>, std::vector<int>> edge_cells;
    for (std::size_t c = 0; c < tri_.cells.size(); ++c) {
        const auto& t = tri_.cells[c].v;
        for (int i = 0; i < 3; ++i) {
            int a = t[i], b = t[(i + 1) % 3];
            if (a > b) std::swap(a, b);
            edge_cells[{a, b}].push_back(static_cast<int>(c));
        }
    }
    std::vector<EdgeAdjacency> out;
    for (const auto& [e, cs] : edge_cells)
        if (cs.size() == 2) out.push_back({e.first, e.second, cs[0], cs[1]});
    return out;
}

std::vector<std::vector<int>> PwAffineMap::vertex_stars() const {
    std::vector<std::vector<int>> stars(tri_.vertices.size());
    for (std::size_t c = 0; c < tri_.cells.size(); ++c)
        for (int i = 0; i < 3; ++i) stars[tri_.cells[c].v[i]].push_back(static_cast<int>(c));
    return stars;
}

double PwAffineMap::continuity_defect() const {
    double defect = 0.0;
    for (const EdgeAdjacency& e : interior_edges()) {
        for (int v : {e.a, e.b}) {
            const Vec2& p = tri_.vertices[v];
            const auto& c1 = tri_.cells[e.cell1];
            const auto& c2 = tri_.cells[e.cell2];
            const Vec3 y1 = c1.grad.apply(p) + c1.offset;
            const Vec3 y2 = c2.grad.apply(p) + c2.offset;
            defect = std::max(defect, (y1 - y2).norm());
        }
    }
    return defect;
}

SubdifferentialHull clarke_hull(const PwAffineMap& map, const Vec2& x, double tol) {
    SubdifferentialHull hull;
    hull.point = x;
    const auto& tri = map.tri();
    for (std::size_t c = 0; c < tri.cells.size(); ++c) {
        const auto& t = tri.cells[c].v;
        const Polygon poly{tri.vertices[t[0]], tri.vertices[t[1]], tri.vertices[t[2]]};
        if (point_in_polygon(poly, x, tol)) hull.generators.push_back(tri.cells[c].grad);
    }
    if (hull.generators.empty())
        throw std::domain_error("clarke_hull: point outside the domain");
    return hull;
}

namespace {

Mat32 hull_point(const std::vector<Mat32>& gens, const std::vector<double>& w) {
    Mat32 m;
    for (std::size_t i = 0; i < gens.size(); ++i) m = m + gens[i] * w[i];
    return m;
}

// Enumerate barycentric grid points (compositions of `res` into k parts).
void enumerate_simplex(int k, int res, std::vector<double>& w, int idx, int left,
                       const std::function<void(const std::vector<double>&)>& visit) {
    if (idx == k - 1) {
        w[idx] = static_cast<double>(left) / res;
        visit(w);
        return;
    }
    for (int v = 0; v <= left; ++v) {
        w[idx] = static_cast<double>(v) / res;
        enumerate_simplex(k, res, w, idx + 1, left - v, visit);
    }
}

}  // namespace

double hull_min_gram(const std::vector<Mat32>& gens, int resolution) {
    const int k = static_cast<int>(gens.size());
    if (k == 1) return gram_det(gens[0]);
    if (k == 2) {
        auto f = [&](double t) { return gram_det(gens[0] * (1.0 - t) + gens[1] * t); };
        double best = std::min(f(0.0), f(1.0));
        for (int i = 1; i < resolution; ++i) best = std::min(best, f(static_cast<double>(i) / resolution));
        const Min1DResult r = golden_section(f, 0.0, 1.0, 1e-12);
        return std::min(best, r.value);
    }

    int res = resolution;
    if (k >= 6) res = std::min(res, 8);  // keeps the grid size manageable
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_w;
    std::vector<double> w(k, 0.0);
    enumerate_simplex(k, res, w, 0, res, [&](const std::vector<double>& ww) {
        const double g = gram_det(hull_point(gens, ww));
        if (g < best) {
            best = g;
            best_w = ww;
        }
    });

    // Simplex polish: Nelder-Mead over k-1 free weights, clamped and
    // renormalized.
    auto objective = [&](const std::vector<double>& x) {
        std::vector<double> ww(k, 0.0);
        double sum = 0.0;
        for (int i = 0; i < k - 1; ++i) {
            ww[i] = std::max(0.0, x[i]);
            sum += ww[i];
        }
        if (sum > 1.0) {
            for (int i = 0; i < k - 1; ++i) ww[i] /= sum;
            sum = 1.0;
        }
        ww[k - 1] = 1.0 - sum;
        return gram_det(hull_point(gens, ww));
    };
    NelderMeadOptions opts;
    opts.max_iter = 200;
    opts.initial_step = 0.5 / res;
    const NelderMeadResult r =
        nelder_mead(objective, std::vector<double>(best_w.begin(), best_w.end() - 1), opts);
    return std::min(best, r.value);
}

AffStarCertificate aff_star_test(const PwAffineMap& map, double eta, int resolution) {
    if (eta < 0.0) throw std::invalid_argument("aff_star_test: eta >= 0");
    AffStarCertificate cert;
    cert.resolution = 1.0 / resolution;
    double best = std::numeric_limits<double>::infinity();
    std::string witness = "none";
    const auto& tri = map.tri();

    for (std::size_t c = 0; c < tri.cells.size(); ++c) {
        const double g = gram_det(tri.cells[c].grad);
        if (g < best) {
            best = g;
            witness = "cell " + std::to_string(c);
        }
    }

    for (const auto& e : map.interior_edges()) {
        // Skip edges lying on the crack (both endpoints tagged); those points
        // are outside the open domain.
        if (!tri.on_crack.empty() && tri.on_crack[e.a] && tri.on_crack[e.b]) continue;
        const double g =
            hull_min_gram({tri.cells[e.cell1].grad, tri.cells[e.cell2].grad}, resolution);
        if (g < best) {
            best = g;
            witness = "edge " + std::to_string(e.a) + "-" + std::to_string(e.b);
        }
    }

    const auto stars = map.vertex_stars();
    for (std::size_t v = 0; v < stars.size(); ++v) {
        if (stars[v].size() < 3) continue;  // covered by cell/edge loci
        // Hulls at crack vertices are evaluated per stored copy; duplicated
        // seam vertices carry one side each, which keeps sides separate.
        std::vector<Mat32> gens;
        gens.reserve(stars[v].size());
        for (int c : stars[v]) gens.push_back(tri.cells[c].grad);
        const double g = hull_min_gram(gens, resolution);
        if (g < best) {
            best = g;
            witness = "vertex " + std::to_string(v);
        }
    }

    cert.min_gram = best;
    cert.pass = best >= eta;
    cert.witness = witness;
    return cert;
}

PwAffineMap discretize_c1(const SmoothMap& u, const Vec2& lo, const Vec2& hi, double sigma,
                          DiscretizeReport* report, int max_retries) {
    if (!(sigma > 0.0)) throw std::invalid_argument("discretize_c1: sigma > 0");
    const double wx = hi.x - lo.x, wy = hi.y - lo.y;
    if (!(wx > 0.0 && wy > 0.0)) throw std::invalid_argument("discretize_c1: empty rectangle");

    // Estimate the gradient's modulus of continuity on a coarse grid and pick
    // an initial mesh so that the estimated oscillation per cell is below
    // sigma / 2.
    const int probe = 24;
    double worst_osc = 0.0;
    for (int i = 0; i < probe; ++i) {
        for (int j = 0; j < probe; ++j) {
            const Vec2 p{lo.x + wx * i / probe, lo.y + wy * j / probe};
            const Vec2 q{lo.x + wx * (i + 1) / probe, lo.y + wy * (j + 1) / probe};
            worst_osc = std::max(worst_osc, (u.grad(q) - u.grad(p)).frobenius());
        }
    }
    int grid = std::max(2, static_cast<int>(std::ceil(probe * worst_osc / (0.5 * sigma))));
    grid = std::min(grid, 512);

    DiscretizeReport rep;
    for (int attempt = 0; attempt <= max_retries; ++attempt, grid *= 2) {
        rep.grid = grid;
        rep.retries = attempt;
        std::vector<Vec2> vertices;
        std::vector<Vec3> values;
        vertices.reserve((grid + 1) * (grid + 1));
        for (int j = 0; j <= grid; ++j)
            for (int i = 0; i <= grid; ++i) {
                const Vec2 p{lo.x + wx * i / grid, lo.y + wy * j / grid};
                vertices.push_back(p);
                values.push_back(u.value(p));
            }
        auto vid = [grid](int i, int j) { return j * (grid + 1) + i; };
        std::vector<std::array<int, 3>> cells;
        cells.reserve(2 * grid * grid);
        for (int j = 0; j < grid; ++j)
            for (int i = 0; i < grid; ++i) {
                cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
                cells.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
            }
        PwAffineMap map = PwAffineMap::from_nodal(std::move(vertices), std::move(cells), values);

        // A-posteriori verification on per-cell samples: value gap and the
        // containment of the cell gradient in B_sigma(grad u(x)).
        double vgap = 0.0, ggap = 0.0;
        const auto& tri = map.tri();
        bool ok = true;
        for (std::size_t c = 0; c < tri.cells.size() && ok; ++c) {
            const auto& t = tri.cells[c].v;
            const Vec2 p0 = tri.vertices[t[0]], p1 = tri.vertices[t[1]], p2 = tri.vertices[t[2]];
            for (const auto& bary :
                 {std::array<double, 3>{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1.0 / 3, 1.0 / 3, 1.0 / 3},
                  {0.5, 0.5, 0.0}, {0.5, 0.0, 0.5}, {0.0, 0.5, 0.5}}) {
                const Vec2 x = p0 * bary[0] + p1 * bary[1] + p2 * bary[2];
                const auto& cell = tri.cells[c];
                vgap = std::max(vgap, (cell.grad.apply(x) + cell.offset - u.value(x)).norm());
                ggap = std::max(ggap, (cell.grad - u.grad(x)).frobenius());
                if (vgap > sigma || ggap > sigma) {
                    ok = false;
                    break;
                }
            }
        }
        rep.value_gap = vgap;
        rep.grad_gap = ggap;
        if (ok) {
            if (report) *report = rep;
            return map;
        }
    }
    std::ostringstream os;
    os << "discretize_c1: sigma bounds not reached after " << max_retries
       << " refinements (value_gap=" << rep.value_gap << ", grad_gap=" << rep.grad_gap << ")";
    throw std::runtime_error(os.str());
}

PlaneMap PlaneMap::forward_of(const CrackDiffeo& d) {
    PlaneMap m;
    m.pieces = d.forward_pieces();
    const auto& v = d.crack().vertices;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) m.crack_segments.push_back({v[i], v[i + 1]});
    return m;
}

PlaneMap PlaneMap::inverse_of(const CrackDiffeo& d) {
    PlaneMap m;
    m.pieces = d.inverse_pieces();
    const auto& v = d.crack().vertices;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) m.crack_segments.push_back({v[i], v[i + 1]});
    return m;
}

Vec2 PlaneMap::apply(const Vec2& x) const {
    for (const PlanePiece& p : pieces)
        if (point_in_polygon(p.domain, x, 1e-13)) return p.apply(x);
    return x;
}

Mat22 PlaneMap::jacobian(const Vec2& x) const {
    for (const PlanePiece& p : pieces)
        if (point_in_polygon(p.domain, x, 1e-13)) return p.jac;
    return Mat22::identity();
}

namespace {

struct RawCell {
    Polygon poly;
    Mat32 grad;
    Vec3 offset;
};

struct BBox {
    double xmin, xmax, ymin, ymax;
    static BBox of(const Polygon& p) {
        BBox b{p[0].x, p[0].x, p[0].y, p[0].y};
        for (const Vec2& v : p) {
            b.xmin = std::min(b.xmin, v.x);
            b.xmax = std::max(b.xmax, v.x);
            b.ymin = std::min(b.ymin, v.y);
            b.ymax = std::max(b.ymax, v.y);
        }
        return b;
    }
    // Strict interior overlap: touching boxes do not count, which keeps
    // extended clip lines from shredding neighbors into slivers.
    bool overlaps(const BBox& o, double tol) const {
        return xmin < o.xmax - tol && o.xmin < xmax - tol && ymin < o.ymax - tol &&
               o.ymin < ymax - tol;
    }
};

// Vertex dedup with crack-side separation: vertices on a crack segment are
// keyed by the side of the generating cell's centroid so upper and lower
// seam copies stay distinct.
struct VertexPool {
    std::vector<Vec2> coords;
    std::vector<bool> on_crack;
    std::vector<int> side;
    double tol;
    const std::vector<std::array<Vec2, 2>>* cracks;

    int crack_side(const Vec2& x, const Vec2& centroid, bool& on) const {
        on = false;
        for (const auto& seg : *cracks) {
            if (segment_distance(seg[0], seg[1], x) <= tol) {
                on = true;
                const Vec2 d = seg[1] - seg[0];
                const double s = d.cross(centroid - seg[0]);
                return s >= 0.0 ? 1 : -1;
            }
        }
        return 0;
    }

    int intern(const Vec2& x, const Vec2& centroid) {
        bool on = false;
        const int sd = crack_side(x, centroid, on);
        for (std::size_t i = 0; i < coords.size(); ++i) {
            if ((coords[i] - x).norm() <= tol && side[i] == sd && on_crack[i] == on)
                return static_cast<int>(i);
        }
        coords.push_back(x);
        on_crack.push_back(on);
        side.push_back(sd);
        return static_cast<int>(coords.size()) - 1;
    }
};

}  // namespace

PwAffineMap compose_with_diffeo(const PwAffineMap& w, const PlaneMap& phi, const Polygon& domain,
                                const ComposeOptions& opts) {
    const double domain_area = std::abs(polygon_area(domain));
    const double area_tol = opts.sliver_rel * domain_area;
    std::vector<RawCell> raw;

    const auto& tri = w.tri();
    for (std::size_t c = 0; c < tri.cells.size(); ++c) {
        const auto& cell = tri.cells[c];
        Polygon t{tri.vertices[cell.v[0]], tri.vertices[cell.v[1]], tri.vertices[cell.v[2]]};
        make_ccw(t);

        // Identity region: the part of T (clipped to the domain) not covered
        // by any phi piece or excluded hole maps to itself. Holes whose
        // bounding box only touches a part are skipped so their extended
        // edge lines cannot shred it.
        std::vector<Polygon> identity_parts{clip_convex(t, domain)};
        auto subtract_all = [&identity_parts](const Polygon& hole) {
            const BBox hb = BBox::of(hole);
            std::vector<Polygon> next;
            for (Polygon& part : identity_parts) {
                if (part.empty()) continue;
                if (!hb.overlaps(BBox::of(part), 1e-13)) {
                    next.push_back(std::move(part));
                    continue;
                }
                auto chunks = subtract_convex(part, hole);
                for (Polygon& q : chunks)
                    if (std::abs(polygon_area(q)) > 0.0) next.push_back(std::move(q));
            }
            identity_parts = std::move(next);
        };
        for (const PlanePiece& p : phi.pieces) subtract_all(p.domain);
        for (const Polygon& hole : opts.exclude) subtract_all(hole);
        for (Polygon& q : identity_parts) {
            if (std::abs(polygon_area(q)) <= area_tol) continue;
            make_ccw(q);
            raw.push_back({std::move(q), cell.grad, cell.offset});
        }

        // Non-identity pieces: x in P with L_P(x) in T.
        for (const PlanePiece& p : phi.pieces) {
            const PlanePiece pre = [&] {
                PlanePiece inv;
                inv.jac = p.jac.inverse();
                inv.offset = -inv.jac.apply(p.offset);
                return inv;
            }();
            Polygon pullback;
            pullback.reserve(t.size());
            for (const Vec2& v : t) pullback.push_back(pre.apply(v));
            make_ccw(pullback);
            Polygon piece = clip_convex(p.domain, pullback);
            if (piece.empty()) continue;
            piece = clip_convex(piece, domain);
            if (piece.empty() || std::abs(polygon_area(piece)) <= area_tol) continue;
            RawCell rc;
            rc.poly = std::move(piece);
            rc.grad = cell.grad.mul22(p.jac);
            rc.offset = cell.grad.apply(p.offset) + cell.offset;
            raw.push_back(std::move(rc));
        }
    }

    // Re-triangulate and intern vertices.
    VertexPool pool;
    pool.tol = opts.snap_tol;
    pool.cracks = &phi.crack_segments;
    Triangulation out;
    for (const RawCell& rc : raw) {
        const Vec2 centroid = polygon_centroid(rc.poly);
        for (const auto& tr : fan_triangulate(rc.poly, area_tol)) {
            Triangulation::Cell cell;
            for (int i = 0; i < 3; ++i) cell.v[i] = pool.intern(tr[i], centroid);
            if (cell.v[0] == cell.v[1] || cell.v[1] == cell.v[2] || cell.v[0] == cell.v[2]) continue;
            cell.grad = rc.grad;
            cell.offset = rc.offset;
            out.cells.push_back(cell);
        }
    }
    out.vertices = pool.coords;
    out.on_crack = pool.on_crack;
    return PwAffineMap(std::move(out));
}

void save_mesh(const PwAffineMap& map, std::ostream& os) {
    os << "pwa 1\n";
    char buf[512];
    const auto& tri = map.tri();
    for (const Vec2& v : tri.vertices) {
        std::snprintf(buf, sizeof(buf), "v %.17g %.17g\n", v.x, v.y);
        os << buf;
    }
    for (const auto& c : tri.cells) {
        const Mat32& g = c.grad;
        std::snprintf(buf, sizeof(buf),
                      "c %d %d %d %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", c.v[0],
                      c.v[1], c.v[2], g.c1.x, g.c1.y, g.c1.z, g.c2.x, g.c2.y, g.c2.z, c.offset.x,
                      c.offset.y, c.offset.z);
        os << buf;
    }
}

PwAffineMap load_mesh(std::istream& is) {
    std::string header;
    std::getline(is, header);
    if (header != "pwa 1") throw std::runtime_error("load_mesh: bad header, expected 'pwa 1'");
    Triangulation tri;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        char tag;
        ls >> tag;
        if (tag == 'v') {
            Vec2 v;
            ls >> v.x >> v.y;
            if (!ls) throw std::runtime_error("load_mesh: bad vertex line");
            tri.vertices.push_back(v);
        } else if (tag == 'c') {
            Triangulation::Cell c;
            ls >> c.v[0] >> c.v[1] >> c.v[2] >> c.grad.c1.x >> c.grad.c1.y >> c.grad.c1.z >>
                c.grad.c2.x >> c.grad.c2.y >> c.grad.c2.z >> c.offset.x >> c.offset.y >> c.offset.z;
            if (!ls) throw std::runtime_error("load_mesh: bad cell line");
            for (int i = 0; i < 3; ++i)
                if (c.v[i] < 0) throw std::runtime_error("load_mesh: negative vertex index");
            tri.cells.push_back(c);
        } else {
            throw std::runtime_error("load_mesh: unknown line tag");
        }
    }
    for (const auto& c : tri.cells)
        for (int i = 0; i < 3; ++i)
            if (static_cast<std::size_t>(c.v[i]) >= tri.vertices.size())
                throw std::runtime_error("load_mesh: vertex index out of range");
    // Coincident vertices mark a crack seam.
    tri.on_crack.assign(tri.vertices.size(), false);
    for (std::size_t i = 0; i < tri.vertices.size(); ++i)
        for (std::size_t j = i + 1; j < tri.vertices.size(); ++j)
            if ((tri.vertices[i] - tri.vertices[j]).norm() < 1e-14) {
                tri.on_crack[i] = tri.on_crack[j] = true;
            }
    return PwAffineMap(std::move(tri));
}

void save_mesh_file(const PwAffineMap& map, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_mesh_file: cannot open " + path);
    save_mesh(map, os);
}

PwAffineMap load_mesh_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_mesh_file: cannot open " + path);
    return load_mesh(is);
}

}  // namespace membrane
