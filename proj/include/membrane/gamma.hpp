#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "membrane/energy.hpp"
#include "membrane/envelope.hpp"
#include "membrane/fiber.hpp"
#include "membrane/pw_affine.hpp"

// Desk-scale harness for the thin-film convergence statement: recovery
// deformations u_rho = v o Phi_delta + rho x3 phi o Phi_delta, the rescaled
// film energy, and the two-dimensional limit bracket.

namespace membrane {

// psi_rho(nu) = |(nu1, nu2, nu3 / rho)| for a unit normal.
double surface_weight(const Vec3& nu, double rho);

struct MembraneDeformation {
    Polygon sigma;                  // reference midsurface
    std::vector<CrackPath> cracks;  // polygonal jump set
    PwAffineMap u;                  // trace; seam-duplicated along the cracks
    double eta = 0.0;               // recorded Aff* certificate of u

    double crack_length() const;
};

// Canonical test membranes on an axis-aligned rectangle: u = A x + opening *
// e3 * taper across the crack. The out-of-plane opening keeps every Clarke
// hull at gram determinant >= 1.
struct MembraneBuilder {
    Vec2 lo{0, 0}, hi{2, 2};
    Mat32 base{Vec3{1, 0, 0}, Vec3{0, 1, 0}};
    int mesh = 8;               // grid cells per side
    double opening = 0.25;     // e3 jump amplitude across the crack
};
MembraneDeformation make_affine_membrane(const MembraneBuilder& b);
MembraneDeformation make_cracked_membrane(const MembraneBuilder& b, const CrackPath& crack);
MembraneDeformation make_cracked_membrane(const MembraneBuilder& b,
                                          const std::vector<CrackPath>& cracks);

struct ThinFilmConfig {
    double epsilon = 0.1;      // recovery slack
    double delta = 0.02;       // crack-opening parameter
    double fiber_eps = 0.05;   // fiber selection budget (the j-index surrogate)
    int transverse_nodes = 0;  // 0 => adaptive in x3 to x3_tol
    double x3_tol = 1e-8;
    int planar_refine = 1;     // quadrature subdivisions per piece
    int envelope_depth = 1;
    double envelope_tol = 1e-6;
    std::uint64_t seed = 1;
    int threads = 1;
};

// Planar description of a recovery deformation: on each convex piece both
// the base map v o Phi and the fiber phi o Phi are affine.
struct RecoveryPiece {
    Polygon poly;
    Mat32 grad_base;
    Vec3 offset_base;
    Mat32 grad_fiber;
    Vec3 offset_fiber;
};

struct RecoveryDeformation {
    std::vector<RecoveryPiece> pieces;
    std::vector<CrackPath> jump_set;   // contained in the membrane's cracks
    double fiber_excess = 0.0;         // measured selection excess
    double fiber_min_det = 0.0;
    double composed_eta = 0.0;         // Aff* certificate of v o Phi's planar part
    std::string detail;
};

// Builds Phi_delta per crack component, pulls back v = u o Phi^{-1}, selects
// the fiber field with Psi = DPhi(Phi^{-1}) and assembles the recovery.
// Sub-certificate failures throw with their diagnostic.
RecoveryDeformation build_recovery(const MembraneDeformation& u, const ThinFilmConfig& cfg,
                                   const StoredEnergy& w);

struct EnergyBreakdown {
    double bulk = 0.0;
    double surface = 0.0;
    double total = 0.0;
    std::vector<double> facet_weights;  // psi_rho per crack facet
    int offending_piece = -1;           // piece where W hit +inf, if any
};

// rho^{-1} G_rho of the recovery: bulk by planar quadrature with the exact
// linear-in-x3 structure, surface as exact facet length times psi_rho
// (vertical facets only).
EnergyBreakdown thin_film_energy(const RecoveryDeformation& v, double rho, const StoredEnergy& w,
                                 const ThinFilmConfig& cfg);

struct LimitBracket {
    double low = 0.0;        // sum area * convex minorant (clamped at high)
    double high = 0.0;       // sum area * rank-one envelope value
    double surface = 0.0;    // H^1 of the jump set
    double bulk_w0 = 0.0;    // sum area * W0, the G_0^w bulk
    double g0w() const { return bulk_w0 + surface; }
};

LimitBracket limit_energy(const MembraneDeformation& u, const StoredEnergy& w,
                          const ThinFilmConfig& cfg);

struct SweepRow {
    double rho, epsilon, delta;
    double bulk, surface, total;
    double limit_low, limit_high;
    double bound_rhs;  // (1+eps)^2 G_0^w + 2 eps
    bool bound_pass;   // total <= bound_rhs + 1e-3
    std::string error;
};

struct SweepReport {
    std::vector<SweepRow> rows;
    LimitBracket limit;
    double g0w = 0.0;
};

// Builds the recovery once (it does not depend on rho) and evaluates the
// film energy along the sweep; per-rho failures are recorded and the sweep
// continues.
SweepReport run_convergence_experiment(const MembraneDeformation& u, const StoredEnergy& w,
                                       const std::vector<double>& rhos, const ThinFilmConfig& cfg);

// CSV text with the documented schema
// rho,epsilon,delta,bulk,surface,total,limit_low,limit_high,bound_rhs,bound_pass.
std::string sweep_csv(const SweepReport& rep, std::uint64_t seed);
extern const std::vector<std::string> kSweepColumns;

}  // namespace membrane
