#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "membrane/crack.hpp"
#include "membrane/polygon.hpp"

// Piecewise-affine maps R^2 -> R^3 on triangulations: Clarke subdifferential
// queries, maximal-rank (Aff*) certification, C^1 discretization and
// composition with crack-opening diffeomorphisms.

namespace membrane {

struct Triangulation {
    struct Cell {
        std::array<int, 3> v;
        Mat32 grad;
        Vec3 offset;  // map(x) = grad x + offset on the cell
    };
    std::vector<Vec2> vertices;
    std::vector<Cell> cells;
    // Vertices lying on a crack seam; duplicated per side, never merged.
    std::vector<bool> on_crack;

    double cell_area(std::size_t c) const;
    double diameter() const;            // max cell diameter
    Vec2 cell_centroid(std::size_t c) const;
};

class PwAffineMap {
  public:
    PwAffineMap() = default;
    explicit PwAffineMap(Triangulation tri);

    // Nodal construction: per-cell affine data interpolating values at the
    // vertices.
    static PwAffineMap from_nodal(std::vector<Vec2> vertices,
                                  std::vector<std::array<int, 3>> cells,
                                  const std::vector<Vec3>& values,
                                  std::vector<bool> on_crack = {});

    const Triangulation& tri() const { return tri_; }
    std::size_t cell_count() const { return tri_.cells.size(); }
    double total_area() const;

    // Evaluation at a point of the closed domain (first containing cell).
    Vec3 eval(const Vec2& x) const;
    std::optional<std::size_t> find_cell(const Vec2& x, double tol = 1e-12) const;
    const Mat32& gradient(std::size_t cell) const { return tri_.cells[cell].grad; }

    // Max mismatch of adjacent cells' affine data at shared edge endpoints.
    double continuity_defect() const;

    // Interior edges as (cell, cell) pairs and interior vertex stars.
    struct EdgeAdjacency {
        int a, b;          // vertex indices
        int cell1, cell2;  // incident cells
    };
    std::vector<EdgeAdjacency> interior_edges() const;
    std::vector<std::vector<int>> vertex_stars() const;  // cells incident to each vertex

  private:
    Triangulation tri_;
};

// Clarke subdifferential generators at a point: gradients of every cell
// whose closure contains it.
struct SubdifferentialHull {
    Vec2 point;
    std::vector<Mat32> generators;
};
SubdifferentialHull clarke_hull(const PwAffineMap& map, const Vec2& x, double tol = 1e-12);

// Certification that min det(M^T M) over all Clarke hulls stays above eta.
// Hull minima are searched on a barycentric grid (default resolution 1/16)
// plus simplex polish; the achieved minimum and resolution are reported.
struct AffStarCertificate {
    double min_gram = 0.0;
    double resolution = 1.0 / 16.0;
    bool pass = false;
    std::string witness;  // where the minimum was found
};
AffStarCertificate aff_star_test(const PwAffineMap& map, double eta, int resolution = 16);

// Minimum of gram_det over the convex hull of the given generators.
double hull_min_gram(const std::vector<Mat32>& gens, int resolution);

struct SmoothMap {
    std::function<Vec3(const Vec2&)> value;
    std::function<Mat32(const Vec2&)> grad;
};

struct DiscretizeReport {
    double value_gap = 0.0;  // sup |u - u_sigma| on verification samples
    double grad_gap = 0.0;   // sup |grad u(x) - grad u_sigma| over cells
    int grid = 0;
    int retries = 0;
};

// C^1 discretization on an axis-aligned rectangle [lo, hi]: uniform grid
// interpolation with mesh chosen from the sampled modulus of continuity of
// the gradient, verified a posteriori against both sigma bounds and refined
// on failure. Throws when retries are exhausted.
PwAffineMap discretize_c1(const SmoothMap& u, const Vec2& lo, const Vec2& hi, double sigma,
                          DiscretizeReport* report = nullptr, int max_retries = 6);

// Piecewise-affine plane map, identity off the listed pieces.
struct PlaneMap {
    std::vector<PlanePiece> pieces;
    std::vector<std::array<Vec2, 2>> crack_segments;  // seam geometry for vertex tagging

    static PlaneMap forward_of(const CrackDiffeo& d);
    static PlaneMap inverse_of(const CrackDiffeo& d);
    Vec2 apply(const Vec2& x) const;
    Mat22 jacobian(const Vec2& x) const;
};

struct ComposeOptions {
    double sliver_rel = 1e-12;  // pieces below this fraction of the domain area are absorbed
    double snap_tol = 1e-9;     // vertex dedup radius
    std::vector<Polygon> exclude;  // holes removed from the identity region
};

// Compose x -> w(phi(x)) on `domain` (minus the crack segments): overlays
// phi's pieces with the pullbacks of w's triangulation by exact convex
// clipping, chain-rules the gradients and re-triangulates.
PwAffineMap compose_with_diffeo(const PwAffineMap& w, const PlaneMap& phi, const Polygon& domain,
                                const ComposeOptions& opts = {});

// Plain-text mesh format: header "pwa 1", vertex lines "v x y", cell lines
// "c i j k g11 g21 g31 g12 g22 g32 o1 o2 o3" (gradient column-major).
void save_mesh(const PwAffineMap& map, std::ostream& os);
PwAffineMap load_mesh(std::istream& is);
void save_mesh_file(const PwAffineMap& map, const std::string& path);
PwAffineMap load_mesh_file(const std::string& path);

}  // namespace membrane
