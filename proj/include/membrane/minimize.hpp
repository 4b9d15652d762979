#pragma once

#include <functional>
#include <vector>

#include "membrane/linalg.hpp"

// Derivative-free minimizers. Densities here are non-smooth near the
// determinant barrier, so everything is bracketing or simplex based.

namespace membrane {

struct Min1DResult {
    double x = 0.0;
    double value = 0.0;
};

// Golden-section search on [lo, hi]; f must be unimodal-ish there. The
// bracket is first refined by a coarse scan so a bad initial interval does
// not trap the search in a monotone tail.
Min1DResult golden_section(const std::function<double(double)>& f, double lo, double hi,
                           double xtol = 1e-12, int max_iter = 200);

// Scan a log-spaced grid on [lo, hi] (lo > 0) and polish the best cell with
// golden section. Robust for barrier-shaped objectives on (0, inf).
Min1DResult log_grid_then_golden(const std::function<double(double)>& f, double lo, double hi,
                                 int grid = 48, double xtol = 1e-12);

struct NelderMeadOptions {
    int max_iter = 400;
    double xtol = 1e-10;
    double ftol = 1e-12;
    double initial_step = 0.25;
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
};

// Standard Nelder-Mead on R^n; the objective may return +inf (infeasible),
// which the simplex contracts away from. Deterministic for fixed input.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& x0, const NelderMeadOptions& opts = {});

// Adaptive Simpson quadrature on [a, b].
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10, int max_depth = 30);

}  // namespace membrane
