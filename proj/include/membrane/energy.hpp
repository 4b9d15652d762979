#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "membrane/linalg.hpp"

namespace membrane {

// Stored elastic density W on 3x3 matrices, extended-real valued. The
// evaluator must be +inf whenever det F <= 0; p and C1 are the coercivity
// data W(F) >= C1 |F|^p - 1/C1, and growth_constant(delta) = c_delta bounds
// W(F) <= c_delta (1 + |F|^p) on {det F >= delta}.
struct StoredEnergy {
    std::string name;
    double p = 2.0;
    double C1 = 1.0;
    std::function<ExtReal(const Mat33&)> evaluate;
    std::function<double(double)> growth_constant;

    // Exact reduction of xi -> W(A|xi) to a 1-D problem along the wedge
    // direction, available for families where that reduction is valid.
    // Returns false when unavailable or the matrix is degenerate.
    std::function<bool(const Mat32&, double& value, Vec3& argmin)> fiber_reduction;
};

// W(F) = |F|^p + (det F)^{-s} for det F > 0, +inf otherwise.
// Satisfies (H1)-(H5) with C1 = 1 and c_delta = 1 + delta^{-s}.
StoredEnergy make_ogden(double p, double s);

// W(F) = |F|^p with no determinant barrier. Violates (H3); used to confirm
// the hypothesis checker notices.
StoredEnergy make_frobenius_power(double p);

struct HypothesisReport {
    int samples = 0;
    double frame_residual_max = 0.0;   // max |W(RF) - W(F)| over finite pairs
    int frame_mismatches = 0;          // one side finite, the other not
    int coercivity_violations = 0;     // H4 failures
    int h3_violations = 0;             // finite value at det F <= 0
    int h5_violations = 0;             // growth failures on {det F >= delta}
    std::string summary() const;
    bool clean(double frame_tol = 1e-9) const {
        return frame_mismatches == 0 && coercivity_violations == 0 && h3_violations == 0 &&
               h5_violations == 0 && frame_residual_max <= frame_tol;
    }
};

// Monte-Carlo verification of (H1)-(H5); reports violations, never throws on
// a bad energy. H5 is tested on {det F >= delta} for delta in {1e-2, 1e-1, 1}.
HypothesisReport check_hypotheses(const StoredEnergy& w, int sample_count, std::uint64_t seed);

// Certified search box for the fiber minimization: any near-minimizer of
// W(A|.) over Lambda(alpha, K) satisfies |zeta| <= beta and
// det(A|zeta) >= 1/beta. beta1 carries the closed-form component
// (c_alpha K^p + 2 c_alpha + C1 + 1)^{1/p}; beta2 the sampled calibration.
struct BetaBox {
    double beta = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double alpha = 0.0;
    double K = 0.0;
    int samples_used = 0;
};

struct BetaBoxOptions {
    int pool = 256;           // candidate draws with |A| <= K
    int min_accepted = 8;     // below this, rotated orthonormal frames are added
    std::uint64_t seed = 1;
};

BetaBox beta_box(const StoredEnergy& w, double alpha, double K, const BetaBoxOptions& opts = {});

struct ReducedOptions {
    int restarts = 8;
    double tau_wedge = 1e-10;  // degeneracy threshold when no box is given
    int nm_iters = 300;
};

struct ReducedValue {
    ExtReal value = ExtReal::infinity();
    Vec3 argmin{};
    bool degenerate = false;       // wedge below tolerance, no box supplied
    bool box_infeasible = false;   // the box constraints admit no fiber
};

// W0(A) = inf over xi of W(A|xi). With a box, the minimization is restricted
// to {|xi| <= beta, det(A|xi) >= 1/beta}; on Lambda(alpha, K) that restricted
// minimum equals W0. Multi-start simplex search seeded along the wedge
// direction.
ReducedValue reduced_density(const StoredEnergy& w, const Mat32& a,
                             const std::optional<BetaBox>& box = std::nullopt,
                             const ReducedOptions& opts = {});

// Pointwise W0 as a fast callable for envelope searches: uses the family's
// exact fiber reduction when present, otherwise memoized multi-start
// minimization (keys quantized to 1e-4).
class ReducedDensityFn {
  public:
    explicit ReducedDensityFn(StoredEnergy w, ReducedOptions opts = {});
    ExtReal operator()(const Mat32& a) const;
    const StoredEnergy& energy() const { return w_; }

  private:
    StoredEnergy w_;
    ReducedOptions opts_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<std::uint64_t, double> memo_;
};

}  // namespace membrane
