// Command-line front end: reduced densities, envelopes, laminates, crack
// diffeomorphisms, C^1 discretization, the thin-film convergence experiment
// and the acceptance battery.
//
// Exit codes: 0 success, 1 validation error, 2 numerical-certificate failure.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "membrane/acceptance.hpp"
#include "membrane/config.hpp"
#include "membrane/csv.hpp"
#include "membrane/envelope.hpp"
#include "membrane/gamma.hpp"
#include "membrane/laminate.hpp"
#include "membrane/pw_affine.hpp"

namespace {

using namespace membrane;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitCertificate = 2;

StoredEnergy parse_energy_spec(const std::string& spec) {
    // "ogden:p=2,s=1" or just "ogden".
    std::string family = spec;
    double p = 2.0, s = 1.0;
    const auto colon = spec.find(':');
    if (colon != std::string::npos) {
        family = spec.substr(0, colon);
        std::stringstream rest(spec.substr(colon + 1));
        std::string kv;
        while (std::getline(rest, kv, ',')) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw std::invalid_argument("bad energy spec: " + spec);
            const std::string key = kv.substr(0, eq);
            const double val = std::stod(kv.substr(eq + 1));
            if (key == "p") p = val;
            else if (key == "s") s = val;
            else throw std::invalid_argument("unknown energy parameter: " + key);
        }
    }
    if (family != "ogden") throw std::invalid_argument("unknown energy family: " + family);
    return make_ogden(p, s);
}

// --matrix takes row-major a11,a12,a21,a22,a31,a32.
Mat32 parse_matrix_rowmajor(const std::string& text) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    if (vals.size() != 6) throw std::invalid_argument("--matrix needs 6 entries (row-major)");
    return Mat32{{vals[0], vals[2], vals[4]}, {vals[1], vals[3], vals[5]}};
}

std::vector<Mat32> read_matrix_csv(const std::string& path) {
    // Columns A11,A21,A31,A12,A22,A32 (column-major), header optional.
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open " + path);
    std::vector<Mat32> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'A') continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> vals;
        while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
        if (vals.size() < 6) throw std::invalid_argument("matrix CSV row needs 6 columns");
        out.push_back(Mat32{{vals[0], vals[1], vals[2]}, {vals[3], vals[4], vals[5]}});
    }
    return out;
}

CrackPath parse_crack_flag(const std::string& text) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    if (vals.size() == 4)
        return CrackPath::straight({vals[0], vals[1]}, {vals[2], vals[3]});
    if (vals.size() == 6)
        return CrackPath::bent({vals[0], vals[1]}, {vals[2], vals[3]}, {vals[4], vals[5]});
    throw std::invalid_argument("--crack needs 4 (straight) or 6 (bent) numbers");
}

void maybe_emit_plot(const std::string& emit, const std::string& csv_path,
                     const std::vector<std::string>& columns) {
    if (emit.empty()) return;
    if (emit != "gnuplot") throw std::invalid_argument("--emit-plot supports only 'gnuplot'");
    const std::string gp = csv_path.substr(0, csv_path.find_last_of('.')) + ".gp";
    std::ofstream os(gp);
    os << gnuplot_script(csv_path, columns);
    std::cout << "wrote " << gp << "\n";
}

int cmd_w0(const std::string& energy_spec, const std::string& matrix, const std::string& in,
           const std::string& out, double alpha, double bigk, std::uint64_t seed) {
    const StoredEnergy w = parse_energy_spec(energy_spec);
    std::optional<BetaBox> box;
    if (alpha > 0.0) box = beta_box(w, alpha, bigk, {256, 8, seed});

    if (!matrix.empty()) {
        const Mat32 a = parse_matrix_rowmajor(matrix);
        const ReducedValue rv = reduced_density(w, a, box);
        if (rv.value.infinite()) {
            std::cout << "inf" << (rv.degenerate ? " (degenerate: A1^A2 = 0)" : "") << "\n";
        } else {
            std::printf("%.6f\n", rv.value.v);
        }
        return kExitOk;
    }
    if (in.empty()) throw std::invalid_argument("w0: need --matrix or --in");

    CsvWriter csv({"A11", "A21", "A31", "A12", "A22", "A32", "W0"}, seed);
    for (const Mat32& a : read_matrix_csv(in)) {
        const ReducedValue rv = reduced_density(w, a, box);
        csv.add_row({format_number(a.c1.x), format_number(a.c1.y), format_number(a.c1.z),
                     format_number(a.c2.x), format_number(a.c2.y), format_number(a.c2.z),
                     format_number(rv.value.v)});
    }
    if (out.empty()) {
        std::cout << csv.str();
    } else {
        csv.write_file(out);
    }
    return kExitOk;
}

int cmd_envelope(const std::string& energy_spec, const std::string& matrix, const std::string& in,
                 const std::string& out, int depth, double tol, int threads, std::uint64_t seed,
                 const std::string& emit_plot) {
    const StoredEnergy w = parse_energy_spec(energy_spec);
    const ReducedDensityFn f(w);
    DensityFn density = [&f](const Mat32& m) { return f(m); };
    EnvelopeOptions opts;
    opts.budget.threads = threads;
    opts.C1 = w.C1;
    opts.p = w.p;

    std::vector<Mat32> mats;
    if (!matrix.empty()) mats.push_back(parse_matrix_rowmajor(matrix));
    if (!in.empty()) {
        auto more = read_matrix_csv(in);
        mats.insert(mats.end(), more.begin(), more.end());
    }
    if (mats.empty()) throw std::invalid_argument("envelope: need --matrix or --in");

    const std::vector<std::string> columns{"A11", "A21", "A31", "A12",    "A22",
                                           "A32", "W0",  "R_value", "depth", "lower_bound"};
    CsvWriter csv(columns, seed);
    for (const Mat32& a : mats) {
        const ExtReal w0 = density(a);
        const EnvelopeResult env = rank_one_envelope(density, a, depth, tol, opts);
        csv.add_row({format_number(a.c1.x), format_number(a.c1.y), format_number(a.c1.z),
                     format_number(a.c2.x), format_number(a.c2.y), format_number(a.c2.z),
                     format_number(w0.v), format_number(env.value.v),
                     format_number(env.depth_used), format_number(env.lower_bound)});
    }
    if (out.empty()) {
        std::cout << csv.str();
    } else {
        csv.write_file(out);
        maybe_emit_plot(emit_plot, out, columns);
    }
    return kExitOk;
}

int cmd_laminate(const std::string& energy_spec, int n, double lambda, int ell, int depth,
                 const std::string& out, int threads, std::uint64_t seed) {
    const StoredEnergy w = parse_energy_spec(energy_spec);
    const ReducedDensityFn f(w);
    DensityFn density = [&f](const Mat32& m) { return f(m); };
    if (depth > 0) {
        EnvelopeOptions opts;
        opts.budget.threads = threads;
        opts.C1 = w.C1;
        opts.p = w.p;
        auto base = std::make_shared<ReducedDensityFn>(w);
        density = [base, depth, opts](const Mat32& m) {
            DensityFn inner = [&base](const Mat32& x) { return (*base)(x); };
            return rank_one_envelope(inner, m, depth, 1e-7, opts).value;
        };
    }

    const Mat32 base_matrix{{1, 0, 0}, {0, 1, 0}};
    const LaminateParams params(base_matrix, {1, 0}, {1, 0, 0}, lambda, n, ell);

    const std::vector<std::string> columns{"region", "k", "area", "gradient_tag", "f_value"};
    CsvWriter csv(columns, seed);
    const auto cells = gradient_cells(params);
    for (const RegionArea& ra : region_areas(n, lambda)) {
        Mat32 grad;
        for (const GradientCell& c : cells)
            if (c.tag == ra.gradient_tag) grad = c.gradient;
        const ExtReal v = density(params.A + grad);
        csv.add_row({region_name(ra.kind), format_number(ra.k), format_number(ra.area.value()),
                     ra.gradient_tag, format_number(v.v)});
    }
    const ExtReal total = laminate_energy(density, params);
    if (out.empty()) {
        std::cout << csv.str();
        std::cout << "# laminate_energy=" << format_number(total.v) << "\n";
    } else {
        csv.write_file(out);
        std::cout << "laminate_energy=" << format_number(total.v) << "\n";
    }
    return kExitOk;
}

int cmd_diffeo(const std::string& crack_flag, double delta, const std::string& dump_cells) {
    const CrackPath crack = parse_crack_flag(crack_flag);
    if (!(delta > 0.0)) throw std::invalid_argument("--delta must be positive");
    const CrackDiffeo d = crack.kind == CrackPath::Kind::straight ? build_tent_map(crack, delta)
                                                                  : build_bent_map(crack, delta);
    const SupDistanceToIdentity s = sup_distance_to_identity(d);
    const BoundsCertificate cert = certify_bounds(d);
    std::cout << "pieces=" << d.forward_pieces().size() << " sup|Phi-Id|=" << format_number(s.value)
              << " sup|DPhi-I|=" << format_number(s.grad) << "\n"
              << "certificate: " << cert.detail << "\n";

    if (!dump_cells.empty()) {
        CsvWriter csv({"cell_id", "v0x", "v0y", "v1x", "v1y", "v2x", "v2y", "J11", "J12", "J21",
                       "J22"},
                      0);
        int id = 0;
        for (const PlanePiece& p : d.forward_pieces()) {
            for (const auto& tri : fan_triangulate(p.domain, 0.0)) {
                csv.add_numeric_row({static_cast<double>(id++), tri[0].x, tri[0].y, tri[1].x,
                                     tri[1].y, tri[2].x, tri[2].y, p.jac.a11, p.jac.a12, p.jac.a21,
                                     p.jac.a22});
            }
        }
        csv.write_file(dump_cells);
        std::cout << "wrote " << dump_cells << "\n";
    }
    return cert.pass ? kExitOk : kExitCertificate;
}

int cmd_discretize(const std::string& map_name, double sigma, double lo, double hi,
                   const std::string& out) {
    SmoothMap u;
    if (map_name == "affine") {
        u.value = [](const Vec2& x) { return Vec3{x.x, x.y, 0.3 * x.x + 0.1 * x.y}; };
        u.grad = [](const Vec2&) { return Mat32{{1, 0, 0.3}, {0, 1, 0.1}}; };
    } else if (map_name == "paraboloid") {
        u.value = [](const Vec2& x) { return Vec3{x.x, x.y, x.x * x.x}; };
        u.grad = [](const Vec2& x) { return Mat32{{1, 0, 2.0 * x.x}, {0, 1, 0}}; };
    } else if (map_name == "saddle") {
        u.value = [](const Vec2& x) { return Vec3{x.x, x.y, x.x * x.x - x.y * x.y}; };
        u.grad = [](const Vec2& x) { return Mat32{{1, 0, 2.0 * x.x}, {0, 1, -2.0 * x.y}}; };
    } else {
        throw std::invalid_argument("unknown map (use affine | paraboloid | saddle)");
    }
    DiscretizeReport rep;
    const PwAffineMap m = discretize_c1(u, {lo, lo}, {hi, hi}, sigma, &rep);
    const AffStarCertificate cert = aff_star_test(m, 0.0);
    std::cout << "grid=" << rep.grid << " retries=" << rep.retries
              << " value_gap=" << format_number(rep.value_gap)
              << " grad_gap=" << format_number(rep.grad_gap)
              << " min_gram=" << format_number(cert.min_gram) << "\n";
    if (!out.empty()) {
        save_mesh_file(m, out);
        std::cout << "wrote " << out << "\n";
    }
    return kExitOk;
}

int cmd_gamma(const std::string& config_path, const std::string& out_override,
              const std::string& emit_plot, int threads_override) {
    RunConfig rc = load_run_config_file(config_path);
    if (threads_override > 0) rc.threads = threads_override;
    MembraneDeformation m = rc.cracks.empty() ? make_affine_membrane(rc.builder())
                                              : make_cracked_membrane(rc.builder(), rc.cracks);
    const SweepReport rep = run_convergence_experiment(m, rc.energy, rc.rho, rc.film());
    const std::string csv = sweep_csv(rep, rc.seed);
    const std::string out = out_override.empty() ? rc.out : out_override;
    if (out.empty()) {
        std::cout << csv;
    } else {
        std::ofstream f(out, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open " + out);
        f << csv;
        std::cout << "wrote " << out << "\n";
        maybe_emit_plot(emit_plot, out, kSweepColumns);
    }
    for (const SweepRow& r : rep.rows)
        if (!r.error.empty() || !r.bound_pass) return kExitCertificate;
    return kExitOk;
}

int cmd_check(int threads, std::uint64_t seed) {
    AcceptanceOptions opts;
    opts.threads = threads;
    opts.seed = seed;
    const auto results = run_acceptance(opts, std::cout);
    int passed = 0;
    for (const auto& r : results) passed += r.pass ? 1 : 0;
    std::cout << passed << "/" << results.size() << " criteria passed\n";
    return all_passed(results) ? kExitOk : kExitCertificate;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"brittle-membrane relaxation toolkit"};
    app.require_subcommand(1);

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    int threads = static_cast<int>(hw);
    std::uint64_t seed = 1;
    app.add_option("--threads", threads, "worker threads (default: hardware count)");
    app.add_option("--seed", seed, "seed for every random draw");

    // w0
    auto* w0 = app.add_subcommand("w0", "reduced membrane density W0");
    std::string w0_energy = "ogden:p=2,s=1", w0_matrix, w0_in, w0_out;
    double w0_alpha = 0.0, w0_bigk = 0.0;
    w0->add_option("--energy", w0_energy, "energy family, e.g. ogden:p=2,s=1");
    w0->add_option("--matrix", w0_matrix, "row-major a11,a12,a21,a22,a31,a32");
    w0->add_option("--in", w0_in, "CSV of matrices (A11,A21,A31,A12,A22,A32)");
    w0->add_option("--out", w0_out, "output CSV path");
    w0->add_option("--alpha", w0_alpha, "wedge lower bound for a certified search box");
    w0->add_option("--bigk", w0_bigk, "norm upper bound for the search box");

    // envelope
    auto* env = app.add_subcommand("envelope", "rank-one envelope bracket");
    std::string env_energy = "ogden:p=2,s=1", env_matrix, env_in, env_out, env_plot;
    int env_depth = 2;
    double env_tol = 1e-7;
    env->add_option("--energy", env_energy, "energy family");
    env->add_option("--matrix", env_matrix, "row-major a11,a12,a21,a22,a31,a32");
    env->add_option("--in", env_in, "CSV of matrices");
    env->add_option("--out", env_out, "output CSV path");
    env->add_option("--depth", env_depth, "lamination depth");
    env->add_option("--tol", env_tol, "refinement stopping tolerance");
    env->add_option("--emit-plot", env_plot, "emit a plot script (gnuplot)");

    // laminate
    auto* lam = app.add_subcommand("laminate", "oscillating laminate field report");
    std::string lam_energy = "ogden:p=2,s=1", lam_out;
    int lam_n = 8, lam_ell = 1, lam_depth = 0;
    double lam_lambda = 0.5;
    lam->add_option("--energy", lam_energy, "energy family");
    lam->add_option("--n", lam_n, "strips per side (n >= 3)");
    lam->add_option("--lambda", lam_lambda, "volume fraction in [0,1]");
    lam->add_option("--ell", lam_ell, "perturbation index (b_ell = b + nu/ell)");
    lam->add_option("--depth", lam_depth, "density = depth-d rank-one envelope of W0");
    lam->add_option("--out", lam_out, "output CSV path");

    // diffeo
    auto* dif = app.add_subcommand("diffeo", "crack-opening homeomorphism");
    std::string dif_crack, dif_dump;
    double dif_delta = 0.05;
    dif->add_option("--crack", dif_crack, "x0,y0,x1,y1 (straight) or x0,y0,xj,yj,x1,y1 (bent)")
        ->required();
    dif->add_option("--delta", dif_delta, "opening parameter");
    dif->add_option("--dump-cells", dif_dump, "CSV path for the cell decomposition");

    // discretize
    auto* dis = app.add_subcommand("discretize", "C1 -> piecewise-affine interpolation");
    std::string dis_map = "paraboloid", dis_out;
    double dis_sigma = 0.1, dis_lo = 0.0, dis_hi = 1.0;
    dis->add_option("--map", dis_map, "affine | paraboloid | saddle");
    dis->add_option("--sigma", dis_sigma, "W^{1,inf} tolerance");
    dis->add_option("--lo", dis_lo, "rectangle lower corner (both coordinates)");
    dis->add_option("--hi", dis_hi, "rectangle upper corner");
    dis->add_option("--out", dis_out, "mesh output path (pwa format)");

    // gamma
    auto* gam = app.add_subcommand("gamma", "thin-film convergence experiment");
    std::string gam_config, gam_out, gam_plot;
    gam->add_option("--config", gam_config, "run configuration file")->required();
    gam->add_option("--out", gam_out, "output CSV (overrides config)");
    gam->add_option("--emit-plot", gam_plot, "emit a plot script (gnuplot)");

    // check
    auto* chk = app.add_subcommand("check", "hypothesis and acceptance battery");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? kExitValidation : kExitOk;
    }

    try {
        if (w0->parsed())
            return cmd_w0(w0_energy, w0_matrix, w0_in, w0_out, w0_alpha, w0_bigk, seed);
        if (env->parsed())
            return cmd_envelope(env_energy, env_matrix, env_in, env_out, env_depth, env_tol,
                                threads, seed, env_plot);
        if (lam->parsed())
            return cmd_laminate(lam_energy, lam_n, lam_lambda, lam_ell, lam_depth, lam_out,
                                threads, seed);
        if (dif->parsed()) return cmd_diffeo(dif_crack, dif_delta, dif_dump);
        if (dis->parsed()) return cmd_discretize(dis_map, dis_sigma, dis_lo, dis_hi, dis_out);
        if (gam->parsed()) return cmd_gamma(gam_config, gam_out, gam_plot, threads);
        if (chk->parsed()) return cmd_check(threads, seed);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCertificate;
    }
    return kExitValidation;
}
