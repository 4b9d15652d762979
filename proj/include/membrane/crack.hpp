#pragma once

#include <optional>
#include <string>
#include <vector>

#include "membrane/polygon.hpp"

// Crack-opening piecewise-affine homeomorphisms: the complement of a segment
// (or bent two-segment) crack is mapped onto the complement of a polygon,
// identity away from the crack, with explicit inverse and cellwise Jacobians.

namespace membrane {

struct CrackPath {
    enum class Kind { straight, bent };
    Kind kind = Kind::straight;
    std::vector<Vec2> vertices;  // endpoints, with the joint in the middle when bent

    static CrackPath straight(const Vec2& a, const Vec2& b) {
        return {Kind::straight, {a, b}};
    }
    static CrackPath bent(const Vec2& a, const Vec2& joint, const Vec2& b) {
        return {Kind::bent, {a, joint, b}};
    }
    double length() const;
    void validate() const;
};

// Affine map y = jac * x + offset on a convex polygon.
struct PlanePiece {
    Polygon domain;
    Mat22 jac = Mat22::identity();
    Vec2 offset{0, 0};
    Vec2 apply(const Vec2& x) const { return jac.apply(x) + offset; }
};

// Straight-crack tent construction: the map squeezes the open tent
// {0 < x2 < delta f(x1)} over the (normalized) crack down by 1/(1+delta),
// opening the triangle Delta under the tent graph.
struct TentMap {
    double delta = 0.0;
    double apex_abscissa = 0.0;        // z1 in the normalized frame
    std::vector<PlanePiece> cells;     // non-identity cells, world coordinates
    std::vector<PlanePiece> inverse_cells;
    Polygon delta_polygon;             // opened crack (world coordinates)
};

// Bent-crack auxiliary homeomorphism on the eight triangles: Psi maps the
// crack onto the base segment gamma, identity outside That u ThatMinus.
struct EightTriangleMap {
    std::vector<PlanePiece> cells;
    std::vector<PlanePiece> inverse_cells;
    double M = 1.0;  // bi-Lipschitz constant, max cell operator norm both ways
    Polygon T, That, Tminus, ThatMinus;  // world coordinates
};

struct SupDistanceToIdentity {
    double value = 0.0;  // sup |Phi - Id|, attained at cell vertices
    double grad = 0.0;   // sup ||DPhi - I|| (spectral norm), constant per cell
};

struct BoundsCertificate {
    double norm_sum = 0.0;  // ||DPhi||_inf + ||DPhi^-1||_inf over all cells
    double min_det = 1.0;
    bool pass = false;
    std::string detail;
};

class CrackDiffeo {
  public:
    // Identity map on the plane (no crack).
    CrackDiffeo() = default;

    Vec2 forward(const Vec2& x) const;
    Vec2 inverse(const Vec2& y) const;
    Mat22 forward_jacobian(const Vec2& x) const;

    const std::vector<PlanePiece>& forward_pieces() const { return fwd_; }
    const std::vector<PlanePiece>& inverse_pieces() const { return inv_; }
    const Polygon& opened_polygon() const { return delta_polygon_; }
    // Convex decomposition of the opened polygon (the bent-case Delta is a
    // non-convex crescent).
    const std::vector<Polygon>& opened_convex_parts() const { return delta_convex_; }
    const CrackPath& crack() const { return crack_; }
    double delta() const { return delta_; }

    const std::optional<TentMap>& tent() const { return tent_; }
    const std::optional<EightTriangleMap>& psi() const { return psi_; }

    friend CrackDiffeo build_tent_map(const CrackPath& crack, double delta, double apex_rel);
    friend CrackDiffeo build_bent_map(const CrackPath& crack, double delta, double margin,
                                      double tminus_ratio);

  private:
    std::vector<PlanePiece> fwd_;  // non-identity pieces; identity elsewhere
    std::vector<PlanePiece> inv_;
    Polygon delta_polygon_;
    std::vector<Polygon> delta_convex_;
    CrackPath crack_;
    double delta_ = 0.0;
    std::optional<TentMap> tent_;
    std::optional<EightTriangleMap> psi_;
};

// Case 1 of the construction; apex_rel in (0,1) places the tent apex along
// the crack (midpoint by default, which minimizes the tent's Lipschitz
// constant).
CrackDiffeo build_tent_map(const CrackPath& crack, double delta, double apex_rel = 0.5);

// Case 2: Phi = Psi^{-1} o Theta_delta o Psi with Theta a tent on gamma with
// parameter delta / M. Fails when delta is too large for {Theta != Id} to fit
// inside T; the error reports the maximal admissible delta.
CrackDiffeo build_bent_map(const CrackPath& crack, double delta, double margin = 0.1,
                           double tminus_ratio = 0.25);

SupDistanceToIdentity sup_distance_to_identity(const CrackDiffeo& map);

// Pass iff ||DPhi|| + ||DPhi^-1|| <= 3 and det >= 1/2 on every cell.
BoundsCertificate certify_bounds(const CrackDiffeo& map);

// Pairwise-disjoint delta-neighborhood check for multi-component cracks.
void require_disjoint_neighborhoods(const std::vector<CrackPath>& cracks, double delta);

double segment_segment_distance(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);

}  // namespace membrane
