#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "membrane/energy.hpp"
#include "membrane/linalg.hpp"

// Pointwise rank-one convexification by iterated two-point lamination, with
// a convex lower bracket for the quasiconvex envelope. The quasiconvex
// envelope itself is never claimed: results carry [lower_bound, value].

namespace membrane {

using DensityFn = std::function<ExtReal(const Mat32&)>;

struct LaminationSplit {
    Vec2 a{1, 0};  // unit lamination normal; |b| carries the magnitude
    double lambda = 0.0;
    Vec3 b{0, 0, 0};
};

struct KsBudget {
    int angles = 32;       // a on the half circle
    int directions = 64;   // b directions (spherical Fibonacci)
    int radii = 8;         // geometric radii max_radius * 2^{-j}
    double max_radius = 8.0;
    int lambdas = 17;      // includes the trivial endpoints
    bool polish = true;
    int threads = 1;
};

struct KsStepResult {
    ExtReal value = ExtReal::infinity();
    std::optional<LaminationSplit> split;  // empty when no split beats f(A)
    ExtReal base = ExtReal::infinity();    // f(A)
};

// One lamination step: min over searched (a, b, lambda) of
// (1-lambda) f(A - lambda b(x)a) + lambda f(A + (1-lambda) b(x)a), never
// above f(A) (lambda = 0 is admissible).
KsStepResult ks_step(const DensityFn& f, const Mat32& a, const KsBudget& budget = {});

struct LaminationTree {
    Mat32 matrix;
    ExtReal w0 = ExtReal::infinity();     // leaf density value
    ExtReal value = ExtReal::infinity();  // envelope value at this node
    int depth = 0;
    std::optional<LaminationSplit> split;
    std::shared_ptr<LaminationTree> left, right;
};

struct EnvelopeResult {
    ExtReal value = ExtReal::infinity();
    int depth_used = 0;
    double lower_bound = 0.0;  // p-coercive quasiconvex minorant C1|A|^p - 1/C1
    std::shared_ptr<LaminationTree> tree;
};

struct EnvelopeOptions {
    KsBudget budget;
    double tol = 1e-7;        // stop refining when one level improves less than this
    double C1 = 1.0;          // coercivity data for the default lower bound
    double p = 2.0;
};

// Nested lamination: the best split is refined recursively, children valued
// by the density; memoized on a 1e-4-quantized matrix key per depth. The
// value is an upper bound for the rank-one convex envelope and is
// nonincreasing in max_depth.
EnvelopeResult rank_one_envelope(const DensityFn& w0, const Mat32& a, int max_depth, double tol,
                                 const EnvelopeOptions& opts = {});

// Value at `a` of the convex hull of sampled (matrix, density) pairs, by
// linear programming over the cloud. Lies above the convex envelope of the
// density and is used as the lower end of the quasiconvex bracket; the
// sampling bias is the caller's to report. Throws when the cloud does not
// affinely span a neighborhood of `a`.
double convex_minorant(const DensityFn& w0, const Mat32& a, const std::vector<Mat32>& cloud);

// Dense simplex solver for minimize c.x, Ax = b, x >= 0 (used by the
// minorant LP; exposed for tests).
struct LpResult {
    bool feasible = false;
    double value = 0.0;
    std::vector<double> x;
};
LpResult solve_lp(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
                  const std::vector<double>& c);

}  // namespace membrane
