#include "membrane/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "membrane/minimize.hpp"

namespace membrane {

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec3 fibonacci_dir(int i, int n) {
    // Spherical Fibonacci points: reasonably uniform, deterministic.
    const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = 2.0 * kPi * std::fmod(i / golden, 1.0);
    return {r * std::cos(phi), r * std::sin(phi), z};
}

struct Candidate {
    double value = std::numeric_limits<double>::infinity();
    std::uint64_t index = ~0ULL;
    LaminationSplit split;

    bool better_than(const Candidate& o) const {
        if (value != o.value) return value < o.value;
        return index < o.index;
    }
};

ExtReal split_value(const DensityFn& f, const Mat32& a, const LaminationSplit& s) {
    const Mat32 rank_one = outer(s.b, s.a);
    if (s.lambda <= 0.0) return f(a);
    if (s.lambda >= 1.0) return f(a);
    const ExtReal left = f(a - rank_one * s.lambda);
    if (left.infinite()) return ExtReal::infinity();
    const ExtReal right = f(a + rank_one * (1.0 - s.lambda));
    return convex_combine(left, right, s.lambda);
}

}  // namespace

KsStepResult ks_step(const DensityFn& f, const Mat32& a, const KsBudget& budget) {
    KsStepResult out;
    out.base = f(a);
    out.value = out.base;

    const int na = std::max(1, budget.angles);
    const int nd = std::max(1, budget.directions);
    const int nr = std::max(1, budget.radii);
    const int nl = std::max(3, budget.lambdas);
    const int interior = nl - 2;  // endpoints reduce to f(a)

    auto scan_range = [&](int a_begin, int a_end, Candidate& best) {
        for (int ai = a_begin; ai < a_end; ++ai) {
            const double theta = kPi * ai / na;
            const Vec2 av{std::cos(theta), std::sin(theta)};
            for (int di = 0; di < nd; ++di) {
                const Vec3 dir = fibonacci_dir(di, nd);
                for (int ri = 0; ri < nr; ++ri) {
                    const double radius = budget.max_radius * std::pow(2.0, -ri);
                    const Mat32 rank_one = outer(dir * radius, av);
                    for (int li = 1; li <= interior; ++li) {
                        const double lambda = static_cast<double>(li) / (interior + 1);
                        const ExtReal left = f(a - rank_one * lambda);
                        if (left.infinite()) continue;
                        const ExtReal right = f(a + rank_one * (1.0 - lambda));
                        if (right.infinite()) continue;
                        const double v = left.v * (1.0 - lambda) + right.v * lambda;
                        if (v < best.value) {
                            const std::uint64_t idx =
                                ((static_cast<std::uint64_t>(ai) * nd + di) * nr + ri) * nl + li;
                            best = Candidate{v, idx, {av, lambda, dir * radius}};
                        }
                    }
                }
            }
        }
    };

    Candidate best;
    const int threads = std::max(1, budget.threads);
    if (threads == 1 || na < 2 * threads) {
        scan_range(0, na, best);
    } else {
        std::vector<Candidate> partial(threads);
        std::vector<std::thread> pool;
        const int chunk = (na + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int b = t * chunk, e = std::min(na, b + chunk);
            pool.emplace_back([&, b, e, t]() { scan_range(b, e, partial[t]); });
        }
        for (auto& th : pool) th.join();
        for (const Candidate& c : partial)
            if (c.better_than(best)) best = c;
    }

    if (!std::isfinite(best.value) || best.value >= out.base.v) return out;

    LaminationSplit s = best.split;
    double value = best.value;
    if (budget.polish) {
        auto objective = [&](const std::vector<double>& x) {
            LaminationSplit cand;
            cand.a = {std::cos(x[0]), std::sin(x[0])};
            cand.b = {x[1], x[2], x[3]};
            cand.lambda = std::clamp(x[4], 1e-9, 1.0 - 1e-9);
            return split_value(f, a, cand).v;
        };
        const double theta0 = std::atan2(s.a.y, s.a.x);
        NelderMeadOptions opts;
        opts.max_iter = 250;
        opts.initial_step = 0.08;
        const NelderMeadResult r =
            nelder_mead(objective, {theta0, s.b.x, s.b.y, s.b.z, s.lambda}, opts);
        if (r.value < value) {
            value = r.value;
            s.a = {std::cos(r.x[0]), std::sin(r.x[0])};
            s.b = {r.x[1], r.x[2], r.x[3]};
            s.lambda = std::clamp(r.x[4], 1e-9, 1.0 - 1e-9);
        }
    }

    if (value < out.base.v) {
        out.value = ExtReal(value);
        out.split = s;
    }
    return out;
}

namespace {

std::uint64_t matrix_key(const Mat32& a, int depth) {
    const double* vals = &a.c1.x;
    std::uint64_t h = 1469598103934665603ULL ^ static_cast<std::uint64_t>(depth);
    for (int i = 0; i < 6; ++i) {
        const auto q = static_cast<std::int64_t>(std::llround(vals[i] * 1e4));
        h ^= static_cast<std::uint64_t>(q);
        h *= 1099511628211ULL;
    }
    return h;
}

struct EnvelopeBuilder {
    const DensityFn& f;
    const EnvelopeOptions& opts;
    double tol;
    std::unordered_map<std::uint64_t, std::shared_ptr<LaminationTree>> memo;

    std::shared_ptr<LaminationTree> build(const Mat32& a, int depth) {
        const std::uint64_t key = matrix_key(a, depth);
        if (auto it = memo.find(key); it != memo.end()) return it->second;

        auto node = std::make_shared<LaminationTree>();
        node->matrix = a;
        node->w0 = f(a);
        node->value = node->w0;
        node->depth = depth;
        if (depth > 0) {
            const KsStepResult ks = ks_step(f, a, opts.budget);
            if (ks.split && ks.value.v < node->w0.v - tol) {
                const LaminationSplit& s = *ks.split;
                const Mat32 rank_one = outer(s.b, s.a);
                node->left = build(a - rank_one * s.lambda, depth - 1);
                node->right = build(a + rank_one * (1.0 - s.lambda), depth - 1);
                const ExtReal combined =
                    convex_combine(node->left->value, node->right->value, s.lambda);
                if (combined.v < node->w0.v) {
                    node->value = combined;
                    node->split = s;
                } else {
                    node->left.reset();
                    node->right.reset();
                }
            }
        }
        memo.emplace(key, node);
        return node;
    }
};

int tree_depth(const LaminationTree& t) {
    if (!t.left) return 0;
    return 1 + std::max(tree_depth(*t.left), tree_depth(*t.right));
}

}  // namespace

EnvelopeResult rank_one_envelope(const DensityFn& w0, const Mat32& a, int max_depth, double tol,
                                 const EnvelopeOptions& opts) {
    if (max_depth < 1) throw std::invalid_argument("rank_one_envelope: max_depth >= 1");
    EnvelopeBuilder builder{w0, opts, tol, {}};
    EnvelopeResult res;
    res.tree = builder.build(a, max_depth);
    res.value = res.tree->value;
    res.depth_used = tree_depth(*res.tree);
    res.lower_bound =
        std::max(0.0, opts.C1 * std::pow(a.frobenius2(), 0.5 * opts.p) - 1.0 / opts.C1);
    return res;
}

LpResult solve_lp(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
                  const std::vector<double>& c) {
    // Two-phase dense simplex with Bland's rule.
    const std::size_t m = a.size();
    const std::size_t n = c.size();
    const std::size_t total = n + m;  // artificials appended
    std::vector<std::vector<double>> t(m + 1, std::vector<double>(total + 1, 0.0));
    std::vector<std::size_t> basis(m);

    for (std::size_t i = 0; i < m; ++i) {
        const double sign = (b[i] < 0.0) ? -1.0 : 1.0;
        for (std::size_t j = 0; j < n; ++j) t[i][j] = sign * a[i][j];
        t[i][n + i] = 1.0;
        t[i][total] = sign * b[i];
        basis[i] = n + i;
    }
    // Phase-1 objective: sum of artificials, eliminated over the initial
    // artificial basis (their own columns keep reduced cost zero).
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += t[i][j];
        t[m][j] = -s;
    }
    for (std::size_t j = n; j < total; ++j) t[m][j] = 0.0;
    {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += t[i][total];
        t[m][total] = -s;
    }

    auto pivot = [&](std::size_t pr, std::size_t pc) {
        const double pv = t[pr][pc];
        for (double& v : t[pr]) v /= pv;
        for (std::size_t i = 0; i <= m; ++i) {
            if (i == pr) continue;
            const double factor = t[i][pc];
            if (factor == 0.0) continue;
            for (std::size_t j = 0; j <= total; ++j) t[i][j] -= factor * t[pr][j];
        }
        basis[pr] = pc;
    };

    auto run_simplex = [&](std::size_t allowed_cols) {
        for (int iter = 0; iter < 5000; ++iter) {
            std::size_t pc = allowed_cols;
            for (std::size_t j = 0; j < allowed_cols; ++j) {
                if (t[m][j] < -1e-11) {
                    pc = j;
                    break;  // Bland: first improving column
                }
            }
            if (pc == allowed_cols) return true;  // optimal
            std::size_t pr = m;
            double best_ratio = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                if (t[i][pc] > 1e-12) {
                    const double ratio = t[i][total] / t[i][pc];
                    if (pr == m || ratio < best_ratio - 1e-15 ||
                        (std::abs(ratio - best_ratio) <= 1e-15 && basis[i] < basis[pr])) {
                        pr = i;
                        best_ratio = ratio;
                    }
                }
            }
            if (pr == m) return false;  // unbounded
            pivot(pr, pc);
        }
        return false;
    };

    LpResult out;
    if (!run_simplex(total)) return out;
    if (t[m][total] < -1e-8) return out;  // phase-1 optimum > 0: infeasible

    // Drive any artificial still in the basis out, or confirm its row is null.
    for (std::size_t i = 0; i < m; ++i) {
        if (basis[i] >= n) {
            std::size_t pc = n;
            for (std::size_t j = 0; j < n; ++j)
                if (std::abs(t[i][j]) > 1e-10) {
                    pc = j;
                    break;
                }
            if (pc < n) pivot(i, pc);
        }
    }

    // Phase-2 objective.
    for (std::size_t j = 0; j <= total; ++j) t[m][j] = 0.0;
    for (std::size_t j = 0; j < n; ++j) t[m][j] = c[j];
    for (std::size_t i = 0; i < m; ++i) {
        if (basis[i] < n && t[m][basis[i]] != 0.0) {
            const double factor = t[m][basis[i]];
            for (std::size_t j = 0; j <= total; ++j) t[m][j] -= factor * t[i][j];
        }
    }
    if (!run_simplex(n)) return out;

    out.feasible = true;
    out.x.assign(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        if (basis[i] < n) out.x[basis[i]] = t[i][total];
    out.value = 0.0;
    for (std::size_t j = 0; j < n; ++j) out.value += c[j] * out.x[j];
    return out;
}

double convex_minorant(const DensityFn& w0, const Mat32& a, const std::vector<Mat32>& cloud) {
    // The cloud must affinely span matrix space around `a`.
    if (cloud.size() < 7)
        throw std::invalid_argument("convex_minorant: degenerate cloud (need >= 7 points)");
    {
        std::vector<std::array<double, 6>> dirs;
        for (std::size_t i = 1; i < cloud.size(); ++i) {
            const Mat32 d = cloud[i] - cloud[0];
            dirs.push_back({d.c1.x, d.c1.y, d.c1.z, d.c2.x, d.c2.y, d.c2.z});
        }
        // Gram-Schmidt rank.
        std::vector<std::array<double, 6>> basis;
        for (auto v : dirs) {
            for (const auto& b : basis) {
                double dot = 0.0;
                for (int k = 0; k < 6; ++k) dot += v[k] * b[k];
                for (int k = 0; k < 6; ++k) v[k] -= dot * b[k];
            }
            double norm = 0.0;
            for (double x : v) norm += x * x;
            if (norm > 1e-16) {
                norm = std::sqrt(norm);
                for (double& x : v) x /= norm;
                basis.push_back(v);
            }
            if (basis.size() == 6) break;
        }
        if (basis.size() < 6)
            throw std::invalid_argument("convex_minorant: degenerate cloud (affinely dependent)");
    }

    std::vector<Mat32> pts;
    std::vector<double> values;
    for (const Mat32& m : cloud) {
        const ExtReal v = w0(m);
        if (v.finite()) {
            pts.push_back(m);
            values.push_back(v.v);
        }
    }
    if (pts.size() < 7) throw std::invalid_argument("convex_minorant: too few finite samples");

    const std::size_t n = pts.size();
    std::vector<std::vector<double>> rows(7, std::vector<double>(n, 0.0));
    std::vector<double> rhs(7, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double* e = &pts[j].c1.x;
        for (int k = 0; k < 6; ++k) rows[k][j] = e[k];
        rows[6][j] = 1.0;
    }
    const double* ea = &a.c1.x;
    for (int k = 0; k < 6; ++k) rhs[k] = ea[k];
    rhs[6] = 1.0;

    const LpResult lp = solve_lp(rows, rhs, values);
    if (!lp.feasible)
        throw std::invalid_argument("convex_minorant: query matrix outside the cloud's hull");
    return lp.value;
}

}  // namespace membrane
