#pragma once

#include <string>
#include <vector>

#include "membrane/energy.hpp"
#include "membrane/pw_affine.hpp"

// Near-optimal fiber fields: per-cell minimizers of xi -> W(G Psi | xi)
// blended into a globally continuous piecewise-affine field. Because
// det(.|.) is affine in the fiber column, the determinant certificate is
// exact vertex arithmetic, no quadrature.

namespace membrane {

struct FiberOptions {
    double blend_radius = 0.0;  // kernel radius; 0 picks the median cell diameter
    double grad_cap = 8.0;      // acceptance bound on |grad phi|
    int max_shrink = 4;         // radius halvings when the excess is too large
    BetaBoxOptions box_opts;
};

struct FiberFieldResult {
    PwAffineMap phi;          // fiber field on the refined triangulation
    double beta_tilde = 0.0;  // certified box used per cell
    double det_floor = 0.0;   // 1/(3 beta_tilde)
    double min_det = 0.0;     // exact min over pieces of det(G Psi | phi)
    double energy_excess = 0.0;
    double max_gradient = 0.0;  // max |grad phi| over the refined cells
    bool pass = false;
    std::string detail;
};

// g_field supplies the triangulation and the per-cell G gradients; psi is a
// per-cell plane matrix with ||det psi - 1||_inf <= eps. The fiber is the P1
// interpolant of kernel-averaged per-cell minimizers: continuous, piecewise
// affine, with gradient controlled by the blend radius rather than by the
// thinnest clipped cell. The certificate reports the exact determinant
// floor (det is affine in the fiber column, so vertex arithmetic suffices)
// and the measured energy excess against the per-cell reduced density.
FiberFieldResult fiber_field(const StoredEnergy& w, const PwAffineMap& g_field,
                             const std::vector<Mat22>& psi, double eps,
                             const FiberOptions& opts = {});

}  // namespace membrane
