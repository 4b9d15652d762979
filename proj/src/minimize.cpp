#include "membrane/minimize.hpp"

#include <algorithm>
#include <cmath>

namespace membrane {

Min1DResult golden_section(const std::function<double(double)>& f, double lo, double hi,
                           double xtol, int max_iter) {
    constexpr double phi = 0.6180339887498949;  // (sqrt(5)-1)/2
    double a = lo, b = hi;
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < max_iter && (b - a) > xtol * (1.0 + std::abs(a) + std::abs(b)); ++i) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
    }
    return (f1 <= f2) ? Min1DResult{x1, f1} : Min1DResult{x2, f2};
}

Min1DResult log_grid_then_golden(const std::function<double(double)>& f, double lo, double hi,
                                 int grid, double xtol) {
    const double llo = std::log(lo), lhi = std::log(hi);
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> xs(grid), vs(grid);
    for (int i = 0; i < grid; ++i) {
        xs[i] = std::exp(llo + (lhi - llo) * i / (grid - 1));
        vs[i] = f(xs[i]);
        if (vs[i] < best_val) {
            best_val = vs[i];
            best = i;
        }
    }
    const double a = xs[std::max(0, best - 1)];
    const double b = xs[std::min(grid - 1, best + 1)];
    Min1DResult r = golden_section(f, a, b, xtol);
    if (best_val < r.value) return {xs[best], best_val};
    return r;
}

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& x0, const NelderMeadOptions& opts) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> pts(n + 1, x0);
    std::vector<double> vals(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        double step = opts.initial_step * std::max(1.0, std::abs(x0[i]));
        pts[i + 1][i] += step;
    }
    for (std::size_t i = 0; i <= n; ++i) vals[i] = f(pts[i]);

    std::vector<std::size_t> order(n + 1);
    auto sort_simplex = [&]() {
        for (std::size_t i = 0; i <= n; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    };

    int it = 0;
    for (; it < opts.max_iter; ++it) {
        sort_simplex();
        const std::size_t best = order[0], worst = order[n], second = order[n - 1];

        double diam = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            diam = std::max(diam, std::abs(pts[worst][i] - pts[best][i]));
        const bool fdone = std::isfinite(vals[worst]) &&
                           std::abs(vals[worst] - vals[best]) <=
                               opts.ftol * (1.0 + std::abs(vals[best]));
        if (diam <= opts.xtol * (1.0 + std::abs(pts[best][0])) || fdone) break;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t k = 0; k <= n; ++k) {
            if (k == worst) continue;
            for (std::size_t i = 0; i < n; ++i) centroid[i] += pts[k][i];
        }
        for (std::size_t i = 0; i < n; ++i) centroid[i] /= static_cast<double>(n);

        auto affine = [&](double t) {
            std::vector<double> p(n);
            for (std::size_t i = 0; i < n; ++i) p[i] = centroid[i] + t * (centroid[i] - pts[worst][i]);
            return p;
        };

        std::vector<double> xr = affine(1.0);
        const double fr = f(xr);
        if (fr < vals[order[0]]) {
            std::vector<double> xe = affine(2.0);
            const double fe = f(xe);
            if (fe < fr) {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr;
                vals[worst] = fr;
            }
        } else if (fr < vals[second]) {
            pts[worst] = xr;
            vals[worst] = fr;
        } else {
            std::vector<double> xc = affine(fr < vals[worst] ? 0.5 : -0.5);
            const double fc = f(xc);
            if (fc < std::min(fr, vals[worst])) {
                pts[worst] = xc;
                vals[worst] = fc;
            } else {
                for (std::size_t k = 0; k <= n; ++k) {
                    if (k == best) continue;
                    for (std::size_t i = 0; i < n; ++i)
                        pts[k][i] = pts[best][i] + 0.5 * (pts[k][i] - pts[best][i]);
                    vals[k] = f(pts[k]);
                }
            }
        }
    }
    sort_simplex();
    return {pts[order[0]], vals[order[0]], it};
}

namespace {

double simpson(const std::function<double(double)>& f, double a, double fa, double b, double fb,
               double m, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double fa, double b,
                            double fb, double m, double fm, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    if (!std::isfinite(flm) || !std::isfinite(frm))
        return std::numeric_limits<double>::infinity();
    const double left = simpson(f, a, fa, m, fm, lm, flm);
    const double right = simpson(f, m, fm, b, fb, rm, frm);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1) +
           adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fm = f(m);
    if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fm))
        return std::numeric_limits<double>::infinity();
    const double whole = simpson(f, a, fa, b, fb, m, fm);
    return adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

}  // namespace membrane
