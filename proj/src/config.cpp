#include "membrane/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace membrane {

double ConfigValue::number() const {
    if (!std::holds_alternative<double>(v)) throw std::runtime_error("config: expected a number");
    return std::get<double>(v);
}
const std::string& ConfigValue::str() const {
    if (!std::holds_alternative<std::string>(v)) throw std::runtime_error("config: expected a string");
    return std::get<std::string>(v);
}
const ConfigArray& ConfigValue::array() const {
    if (!std::holds_alternative<ConfigArray>(v)) throw std::runtime_error("config: expected an array");
    return std::get<ConfigArray>(v);
}
const ConfigTable& ConfigValue::table() const {
    if (!std::holds_alternative<ConfigTable>(v)) throw std::runtime_error("config: expected a table");
    return std::get<ConfigTable>(v);
}

namespace {

struct Lexer {
    const std::string& s;
    std::size_t i = 0;

    void skip_ws(bool newlines) {
        while (i < s.size()) {
            if (s[i] == '#') {
                while (i < s.size() && s[i] != '\n') ++i;
            } else if (s[i] == ' ' || s[i] == '\t' || s[i] == '\r' ||
                       (newlines && s[i] == '\n')) {
                ++i;
            } else {
                break;
            }
        }
    }
    bool eof() {
        skip_ws(true);
        return i >= s.size();
    }
    char peek() { return i < s.size() ? s[i] : '\0'; }
    void expect(char c) {
        skip_ws(true);
        if (peek() != c) throw std::runtime_error(std::string("config: expected '") + c + "'");
        ++i;
    }
    bool accept(char c) {
        skip_ws(true);
        if (peek() == c) {
            ++i;
            return true;
        }
        return false;
    }

    std::string ident() {
        skip_ws(true);
        std::string out;
        while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_'))
            out.push_back(s[i++]);
        if (out.empty()) throw std::runtime_error("config: expected an identifier");
        return out;
    }

    ConfigValue value() {
        skip_ws(true);
        const char c = peek();
        if (c == '"') {
            ++i;
            std::string out;
            while (i < s.size() && s[i] != '"') out.push_back(s[i++]);
            if (i >= s.size()) throw std::runtime_error("config: unterminated string");
            ++i;
            return {out};
        }
        if (c == '[') {
            ++i;
            ConfigArray arr;
            if (!accept(']')) {
                while (true) {
                    arr.push_back(value());
                    if (accept(']')) break;
                    expect(',');
                    if (accept(']')) break;  // trailing comma
                }
            }
            return {arr};
        }
        if (c == '{') {
            ++i;
            ConfigTable t;
            if (!accept('}')) {
                while (true) {
                    const std::string key = ident();
                    expect('=');
                    t.emplace(key, value());
                    if (accept('}')) break;
                    expect(',');
                    if (accept('}')) break;
                }
            }
            return {t};
        }
        // Number.
        std::size_t start = i;
        while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '+' ||
                                s[i] == '-' || s[i] == '.' || s[i] == 'e' || s[i] == 'E'))
            ++i;
        if (i == start) throw std::runtime_error("config: expected a value");
        const std::string tok = s.substr(start, i - start);
        try {
            std::size_t used = 0;
            const double d = std::stod(tok, &used);
            if (used != tok.size()) throw std::runtime_error("");
            return {d};
        } catch (...) {
            throw std::runtime_error("config: bad number '" + tok + "'");
        }
    }
};

}  // namespace

ConfigTable parse_config_text(const std::string& text) {
    Lexer lx{text};
    ConfigTable out;
    while (!lx.eof()) {
        const std::string key = lx.ident();
        lx.expect('=');
        ConfigValue val = lx.value();
        auto it = out.find(key);
        if (it == out.end()) {
            out.emplace(key, std::move(val));
        } else {
            // Repeated key accumulates (used for multiple cracks).
            if (!std::holds_alternative<ConfigArray>(it->second.v) ||
                key != "crack")
                throw std::runtime_error("config: duplicate key '" + key + "'");
            ConfigArray wrapper;
            wrapper.push_back(it->second);
            wrapper.push_back(std::move(val));
            it->second = ConfigValue{wrapper};
        }
    }
    return out;
}

ConfigTable parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config_text(ss.str());
}

ThinFilmConfig RunConfig::film() const {
    ThinFilmConfig f;
    f.epsilon = epsilon;
    f.delta = delta;
    f.fiber_eps = fiber_eps;
    f.envelope_depth = envelope_depth;
    f.envelope_tol = envelope_tol;
    f.planar_refine = planar_refine;
    f.transverse_nodes = transverse_nodes;
    f.seed = seed;
    f.threads = threads;
    return f;
}

MembraneBuilder RunConfig::builder() const {
    MembraneBuilder b;
    b.lo = domain_lo;
    b.hi = domain_hi;
    b.mesh = mesh;
    b.opening = opening;
    return b;
}

namespace {

Vec2 parse_point(const ConfigValue& v) {
    const ConfigArray& a = v.array();
    if (a.size() != 2) throw std::runtime_error("config: point must be [x, y]");
    return {a[0].number(), a[1].number()};
}

CrackPath parse_crack(const ConfigValue& v) {
    const ConfigArray& a = v.array();
    if (a.size() == 2) return CrackPath::straight(parse_point(a[0]), parse_point(a[1]));
    if (a.size() == 3)
        return CrackPath::bent(parse_point(a[0]), parse_point(a[1]), parse_point(a[2]));
    throw std::runtime_error("config: crack needs 2 or 3 vertices");
}

}  // namespace

RunConfig load_run_config(const ConfigTable& table) {
    RunConfig cfg;
    for (const auto& [key, val] : table) {
        if (key == "energy") {
            const ConfigTable& t = val.table();
            for (const auto& [k2, v2] : t) {
                if (k2 == "family") cfg.energy_family = v2.str();
                else if (k2 == "p") cfg.energy_p = v2.number();
                else if (k2 == "s") cfg.energy_s = v2.number();
                else throw std::runtime_error("config: unknown energy key '" + k2 + "'");
            }
        } else if (key == "domain") {
            const ConfigArray& pts = val.array();
            if (pts.size() == 2) {
                cfg.domain_lo = parse_point(pts[0]);
                cfg.domain_hi = parse_point(pts[1]);
            } else if (pts.size() == 4) {
                // Axis-aligned rectangle given by its four corners.
                Vec2 lo = parse_point(pts[0]), hi = lo;
                for (const auto& p : pts) {
                    const Vec2 q = parse_point(p);
                    lo.x = std::min(lo.x, q.x);
                    lo.y = std::min(lo.y, q.y);
                    hi.x = std::max(hi.x, q.x);
                    hi.y = std::max(hi.y, q.y);
                }
                cfg.domain_lo = lo;
                cfg.domain_hi = hi;
            } else {
                throw std::runtime_error("config: domain must have 2 or 4 points");
            }
        } else if (key == "crack") {
            const ConfigArray& a = val.array();
            const bool multiple = !a.empty() && std::holds_alternative<ConfigArray>(a[0].v) &&
                                  !a[0].array().empty() &&
                                  std::holds_alternative<ConfigArray>(a[0].array()[0].v);
            if (multiple) {
                for (const auto& c : a) cfg.cracks.push_back(parse_crack(c));
            } else {
                cfg.cracks.push_back(parse_crack(val));
            }
        } else if (key == "rho") {
            cfg.rho.clear();
            for (const auto& r : val.array()) cfg.rho.push_back(r.number());
        } else if (key == "epsilon") cfg.epsilon = val.number();
        else if (key == "delta") cfg.delta = val.number();
        else if (key == "fiber_eps") cfg.fiber_eps = val.number();
        else if (key == "mesh") cfg.mesh = static_cast<int>(val.number());
        else if (key == "opening") cfg.opening = val.number();
        else if (key == "envelope_depth") cfg.envelope_depth = static_cast<int>(val.number());
        else if (key == "envelope_tol") cfg.envelope_tol = val.number();
        else if (key == "planar_refine") cfg.planar_refine = static_cast<int>(val.number());
        else if (key == "transverse_nodes") cfg.transverse_nodes = static_cast<int>(val.number());
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(val.number());
        else if (key == "threads") cfg.threads = static_cast<int>(val.number());
        else if (key == "out") cfg.out = val.str();
        else throw std::runtime_error("config: unknown key '" + key + "'");
    }

    if (cfg.energy_family == "ogden") {
        cfg.energy = make_ogden(cfg.energy_p, cfg.energy_s);
    } else {
        throw std::runtime_error("config: unknown energy family '" + cfg.energy_family + "'");
    }
    if (!(cfg.epsilon > 0.0 && cfg.epsilon < 0.5))
        throw std::runtime_error("config: epsilon must lie in (0, 1/2)");
    if (!(cfg.delta > 0.0)) throw std::runtime_error("config: delta must be positive");
    if (cfg.mesh < 1) throw std::runtime_error("config: mesh >= 1");
    if (cfg.threads < 1) throw std::runtime_error("config: threads >= 1");
    for (double r : cfg.rho)
        if (!(r > 0.0)) throw std::runtime_error("config: rho values must be positive");
    for (std::size_t i = 0; i + 1 < cfg.rho.size(); ++i)
        if (!(cfg.rho[i] > cfg.rho[i + 1]))
            throw std::runtime_error("config: rho sweep must be strictly decreasing");
    for (const CrackPath& c : cfg.cracks) c.validate();
    return cfg;
}

RunConfig load_run_config_file(const std::string& path) {
    return load_run_config(parse_config_file(path));
}

}  // namespace membrane
